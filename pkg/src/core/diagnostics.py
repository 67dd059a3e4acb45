"""
Post-processing of chain traces.

Turns a trace into the serial chain (one record per proposed update), the
graph chain (the graph after every step), acceptance-rate series,
autocorrelations, edge posteriors and the MAP graph, and writes them as CSV
and JSON files.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from src.core.errors import CorruptTrace, DomainError, GraphError, SeriesTooShort
from src.core.graph_core import Graph
from src.core.junction_tree import g_of
from src.core.perturbation import MoveKind, apply_move, partition_sets, propose_move
from src.core.samplers import ChainTrace, StepRecord
from src.utils.file_utils import graph_to_dict, write_csv, write_json, write_matrix_csv

logger = logging.getLogger(__name__)


class UpdateMode(enum.Enum):
    GRAPH = "graph"
    JUNCTION = "junction"


@dataclass(frozen=True)
class SerialRecord:
    """One proposed update of the serial chain; null steps have node None."""

    step: int
    node: Optional[int]
    accepted: bool
    edges_changed: int

    def is_accepted(self, mode: UpdateMode) -> bool:
        if mode is UpdateMode.GRAPH:
            return self.accepted and self.edges_changed > 0
        return self.accepted


def to_serial_chain(trace: Union[ChainTrace, Sequence[StepRecord]]) -> List[SerialRecord]:
    """
    A step with k candidates becomes k records in node order.

    A null step becomes one rejected record.
    """
    records = trace.records if isinstance(trace, ChainTrace) else trace
    out: List[SerialRecord] = []
    for r in records:
        if not r.candidates:
            out.append(SerialRecord(r.step, None, False, 0))
            continue
        for c in r.candidates:
            out.append(SerialRecord(r.step, c.node, c.accepted, c.edges_changed))
    return out


@dataclass
class GraphChain:
    """Graph after every step; `changed[k]` tells whether step k altered the edge set."""

    graphs: List[Graph] = field(default_factory=list)
    changed: List[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.graphs)

    def edge_counts(self) -> np.ndarray:
        return np.array([g.edge_count for g in self.graphs], dtype=float)


def to_graph_chain(trace: ChainTrace) -> GraphChain:
    """
    Replay the trace from its initial tree.

    Accepted updates are re-applied through the partition sets of the
    replayed tree and skeleton redraws are taken from the records. Unchanged
    graphs share one Graph object.

    Raises:
        CorruptTrace: if a record does not fit the replayed state or a
            snapshot disagrees with it
    """
    tree = trace.initial.copy()
    g = g_of(tree)
    snapshots = {s.step: s for s in trace.snapshots}
    chain = GraphChain()
    for r in trace.records:
        accepted = [c for c in r.candidates if c.accepted]
        if accepted:
            members = {m.node: m for m in partition_sets(tree, r.vertex).for_kind(r.kind)}
            added: List = []
            removed: List = []
            for c in accepted:
                member = members.get(c.node)
                if member is None:
                    raise CorruptTrace(
                        f"step {r.step}: node {c.node} is not a candidate for vertex {r.vertex}"
                    )
                m = propose_move(tree, r.vertex, r.kind, member)
                if len(m.edges_changed) != c.edges_changed:
                    raise CorruptTrace(
                        f"step {r.step}: edge change count mismatch at node {c.node}"
                    )
                try:
                    apply_move(tree, m)
                except GraphError as exc:
                    raise CorruptTrace(f"step {r.step}: {exc}") from exc
                (added if m.kind is MoveKind.ADD else removed).extend(m.edges_changed)
            if added or removed:
                g = g.with_edges(added).without_edges(removed)
        chain.graphs.append(g)
        chain.changed.append(r.graph_changed)
        if g.edge_count != r.n_edges:
            raise CorruptTrace(
                f"step {r.step}: replay has {g.edge_count} edges, record says {r.n_edges}"
            )
        if r.skeleton is not None:
            try:
                tree.set_edges(r.skeleton)
            except GraphError as exc:
                raise CorruptTrace(f"step {r.step}: invalid skeleton ({exc})") from exc
        snap = snapshots.get(r.step + 1)
        if snap is not None and snap.tree != tree:
            raise CorruptTrace(f"replayed tree disagrees with snapshot at step {snap.step}")
    return chain


def _is_accepted(item: Union[SerialRecord, StepRecord], mode: UpdateMode) -> bool:
    if isinstance(item, SerialRecord):
        return item.is_accepted(mode)
    if mode is UpdateMode.GRAPH:
        return item.graph_changed
    return item.n_accepted > 0


def cumulative_acceptance(
    series: Sequence[Union[SerialRecord, StepRecord]], mode: UpdateMode
) -> np.ndarray:
    """rate[k-1] = accepted-in-mode count among the first k items divided by k."""
    if not series:
        return np.zeros(0)
    hits = np.fromiter((_is_accepted(x, mode) for x in series), dtype=float, count=len(series))
    return np.cumsum(hits) / np.arange(1, len(series) + 1)


@dataclass(frozen=True)
class Autocorrelation:
    values: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, lag: int) -> float:
        return float(self.values[lag])


def autocorrelation(x: Iterable[float], max_lag: int) -> Autocorrelation:
    """
    Sample autocorrelation for lags 0..max_lag, computed with an FFT.

    A constant series has no variance: its ACF is 1 at lag 0 and 0 beyond,
    flagged as degenerate.

    Raises:
        SeriesTooShort: unless len(x) > max_lag
    """
    arr = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
    if max_lag < 0:
        raise DomainError(f"max_lag must be non-negative, got {max_lag}")
    n = arr.size
    if n <= max_lag:
        raise SeriesTooShort(f"series of length {n} is too short for lag {max_lag}")
    centred = arr - arr.mean()
    if np.allclose(centred, 0.0):
        values = np.zeros(max_lag + 1)
        values[0] = 1.0
        return Autocorrelation(values, degenerate=True)
    spectrum = np.fft.rfft(centred, n=2 * n)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), n=2 * n)[: max_lag + 1]
    return Autocorrelation(acov / acov[0])


def _post_burn_in(chain: GraphChain, burn_in: int) -> List[Graph]:
    if burn_in < 0 or burn_in >= len(chain):
        raise DomainError(f"burn-in {burn_in} must lie in [0, {len(chain)})")
    return chain.graphs[burn_in:]


def edge_posterior_matrix(chain: GraphChain, burn_in: int = 0) -> np.ndarray:
    """Fraction of post-burn-in states containing each edge; symmetric with zero diagonal."""
    graphs = _post_burn_in(chain, burn_in)
    p = graphs[0].p
    counts = np.zeros((p, p))
    weights: Counter = Counter(id(g) for g in graphs)
    seen: Dict[int, Graph] = {id(g): g for g in graphs}
    for key, w in weights.items():
        for i, j in seen[key].edges():
            counts[i, j] += w
            counts[j, i] += w
    return counts / len(graphs)


@dataclass(frozen=True)
class MapEstimate:
    graph: Graph
    count: int
    total: int

    @property
    def frequency(self) -> float:
        return self.count / self.total


def map_estimate(chain: GraphChain, burn_in: int = 0) -> MapEstimate:
    """Most frequent post-burn-in graph; ties go to the one visited first."""
    graphs = _post_burn_in(chain, burn_in)
    counts: Counter = Counter()
    first: Dict[str, int] = {}
    digests: Dict[int, str] = {}
    for k, g in enumerate(graphs):
        d = digests.get(id(g))
        if d is None:
            d = g.digest()
            digests[id(g)] = d
        counts[d] += 1
        first.setdefault(d, k)
    best = min(counts, key=lambda d: (-counts[d], first[d]))
    return MapEstimate(graphs[first[best]], counts[best], len(graphs))


def map_graph(chain: GraphChain, burn_in: int = 0) -> Graph:
    return map_estimate(chain, burn_in).graph


def edge_auc(posterior: np.ndarray, truth: Graph) -> float:
    """
    Area under the ROC curve of upper-triangle edge probabilities against the true graph.

    Raises:
        DomainError: if the truth has no edges or no non-edges
    """
    p = truth.p
    iu = np.triu_indices(p, k=1)
    scores = np.asarray(posterior, dtype=float)[iu]
    labels = truth.to_matrix()[iu].astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DomainError("AUC needs both edges and non-edges in the true graph")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def write_trace_summary(path: Union[str, Path], trace: ChainTrace) -> Path:
    rows = (
        (
            r.step,
            r.log_score,
            r.n_edges,
            r.n_cliques,
            len(r.candidates),
            r.n_accepted,
            int(_is_accepted(r, UpdateMode.GRAPH)),
            int(_is_accepted(r, UpdateMode.JUNCTION)),
        )
        for r in trace.records
    )
    header = [
        "step",
        "log_score",
        "n_edges",
        "n_cliques",
        "n_candidates",
        "n_accepted",
        "graph_update",
        "junction_update",
    ]
    return write_csv(path, header, rows)


def write_acf(path: Union[str, Path], acf: Autocorrelation) -> Path:
    rows = ((lag, float(v)) for lag, v in enumerate(acf.values))
    return write_csv(path, ["lag", "acf"], rows)


def write_acceptance(
    path: Union[str, Path], series: Sequence[Union[SerialRecord, StepRecord]]
) -> Path:
    graph = cumulative_acceptance(series, UpdateMode.GRAPH)
    junction = cumulative_acceptance(series, UpdateMode.JUNCTION)
    rows = ((k + 1, float(a), float(b)) for k, (a, b) in enumerate(zip(graph, junction)))
    return write_csv(path, ["index", "graph_rate", "junction_rate"], rows)


def write_edge_posterior(path: Union[str, Path], posterior: np.ndarray) -> Path:
    return write_matrix_csv(path, posterior)


def write_map_graph(path: Union[str, Path], estimate: MapEstimate) -> Path:
    data = graph_to_dict(estimate.graph)
    data.update({"count": estimate.count, "total": estimate.total})
    return write_json(path, data)
