"""
Markov chains on expanded junction trees.

Two kernels move the clique contents of a fixed-size junction tree:

- the single-move sampler proposes one Add or Remove of a vertex to one
  clique and corrects with the ratio of partition-set sizes;
- the parallel sampler evaluates every clique of the chosen partition set
  against the pre-step tree and applies all accepted updates at once.

Between steps the tree skeleton is periodically redrawn uniformly among the
junction trees of the current cliques. Runs emit one StepRecord per step
plus periodic snapshots from which a run can be resumed exactly.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from src.config.settings import (
    DEFAULT_BURN_IN,
    DEFAULT_ITERATIONS,
    DEFAULT_SAMPLER,
    DEFAULT_SEED,
    DEFAULT_SKELETON_PERIOD,
    MANIFEST_FILE,
    SNAPSHOT_DIR,
    SNAPSHOT_FACTOR,
    TRACE_FILE,
)
from src.core.errors import (
    ConfigError,
    CorruptTrace,
    DataError,
    DomainError,
    InvariantViolation,
    JunctionWalkError,
    NumericalError,
)
from src.core.ggm import GaussianEvidence, log_likelihood_ratio, total_log_score
from src.core.graph_core import Edge, is_chordal
from src.core.junction_tree import (
    JunctionTree,
    count_maximal_cliques,
    g_of,
    init_no_edge,
    validate_junction_property,
)
from src.core.perturbation import (
    MoveKind,
    MoveProposal,
    PartitionMember,
    PartitionSets,
    apply_move,
    partition_sets,
    propose_move,
    reverse_count_add,
    reverse_count_remove,
)
from src.core.priors import CliqueSeparatorLaw, law_from_dict, log_prior_ratio
from src.core.tree_gen import random_tree, resample_skeleton
from src.utils.file_utils import ensure_dir, iter_ndjson, read_json, write_json, write_ndjson

logger = logging.getLogger(__name__)

SAMPLER_NAMES = ("single", "parallel")


class SamplerKind(str, enum.Enum):
    SINGLE = "single"
    PARALLEL = "parallel"


@dataclass
class ChainConfig:
    """
    Settings of one chain.

    `snapshot_every` defaults to SNAPSHOT_FACTOR * skeleton_period. `burn_in`
    is only used when post-processing the trace.
    """

    iterations: int = DEFAULT_ITERATIONS
    sampler: str = DEFAULT_SAMPLER
    skeleton_period: int = DEFAULT_SKELETON_PERIOD
    prior: CliqueSeparatorLaw = field(default_factory=CliqueSeparatorLaw.uniform)
    seed: int = DEFAULT_SEED
    burn_in: int = DEFAULT_BURN_IN
    snapshot_every: Optional[int] = None
    debug: bool = False

    @property
    def snapshot_period(self) -> int:
        if self.snapshot_every is not None:
            return self.snapshot_every
        return SNAPSHOT_FACTOR * self.skeleton_period

    @property
    def kind(self) -> SamplerKind:
        return SamplerKind(self.sampler)

    def validate(self) -> None:
        """
        Raises:
            ConfigError: on any out-of-range setting
        """
        if not isinstance(self.iterations, int) or self.iterations <= 0:
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if self.sampler not in SAMPLER_NAMES:
            raise ConfigError(f"unknown sampler '{self.sampler}', expected one of {SAMPLER_NAMES}")
        if self.skeleton_period < 1:
            raise ConfigError(f"skeleton period must be >= 1, got {self.skeleton_period}")
        if self.snapshot_period < 1:
            raise ConfigError(f"snapshot period must be >= 1, got {self.snapshot_period}")
        if self.burn_in < 0:
            raise ConfigError(f"burn-in must be >= 0, got {self.burn_in}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "sampler": self.sampler,
            "skeleton_period": self.skeleton_period,
            "prior": self.prior.to_dict(),
            "seed": self.seed,
            "burn_in": self.burn_in,
            "snapshot_every": self.snapshot_period,
            "debug": self.debug,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChainConfig":
        return cls(
            iterations=int(data["iterations"]),
            sampler=str(data["sampler"]),
            skeleton_period=int(data["skeleton_period"]),
            prior=law_from_dict(data.get("prior", {})),
            seed=int(data["seed"]),
            burn_in=int(data.get("burn_in", 0)),
            snapshot_every=data.get("snapshot_every"),
            debug=bool(data.get("debug", False)),
        )


class CandidateOutcome(NamedTuple):
    node: int
    accepted: bool
    log_alpha: Optional[float]
    edges_changed: int


@dataclass
class StepRecord:
    """
    One chain step.

    Single-move records carry one candidate, parallel records one per member
    of the relevant partition set; null steps carry none. `skeleton` holds
    the tree edges when the skeleton was redrawn right after this step.
    """

    step: int
    vertex: int
    kind: MoveKind
    candidates: Tuple[CandidateOutcome, ...]
    log_score: float
    n_edges: int
    n_cliques: int
    skeleton: Optional[List[Edge]] = None

    @property
    def n_accepted(self) -> int:
        return sum(1 for c in self.candidates if c.accepted)

    @property
    def graph_changed(self) -> bool:
        return any(c.accepted and c.edges_changed > 0 for c in self.candidates)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "step": self.step,
            "v": self.vertex,
            "kind": self.kind.value,
            "cand": [
                [c.node, int(c.accepted), c.log_alpha, c.edges_changed] for c in self.candidates
            ],
            "score": self.log_score,
            "edges": self.n_edges,
            "cliques": self.n_cliques,
        }
        if self.skeleton is not None:
            out["skeleton"] = [list(e) for e in self.skeleton]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepRecord":
        skeleton = data.get("skeleton")
        return cls(
            step=int(data["step"]),
            vertex=int(data["v"]),
            kind=MoveKind(data["kind"]),
            candidates=tuple(
                CandidateOutcome(int(n), bool(a), None if la is None else float(la), int(e))
                for n, a, la, e in data["cand"]
            ),
            log_score=float(data["score"]),
            n_edges=int(data["edges"]),
            n_cliques=int(data["cliques"]),
            skeleton=None if skeleton is None else [(int(i), int(j)) for i, j in skeleton],
        )


@dataclass
class ChainState:
    tree: JunctionTree
    log_score: float
    n_edges: int
    n_cliques: int
    step: int = 0
    numerical_rejections: int = 0

    @classmethod
    def start(
        cls, tree: JunctionTree, ev: Optional[GaussianEvidence], law: CliqueSeparatorLaw
    ) -> "ChainState":
        return cls(
            tree=tree,
            log_score=total_log_score(ev, law, tree),
            n_edges=g_of(tree).edge_count,
            n_cliques=count_maximal_cliques(tree),
        )


@dataclass
class Snapshot:
    """Full chain state after `step` steps, including the master rng state."""

    step: int
    tree: JunctionTree
    rng_state: Dict[str, Any]
    log_score: float
    n_edges: int
    n_cliques: int
    numerical_rejections: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "tree": self.tree.to_dict(),
            "rng_state": self.rng_state,
            "log_score": self.log_score,
            "n_edges": self.n_edges,
            "n_cliques": self.n_cliques,
            "numerical_rejections": self.numerical_rejections,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Snapshot":
        return cls(
            step=int(data["step"]),
            tree=JunctionTree.from_dict(data["tree"]),
            rng_state=data["rng_state"],
            log_score=float(data["log_score"]),
            n_edges=int(data["n_edges"]),
            n_cliques=int(data["n_cliques"]),
            numerical_rejections=int(data["numerical_rejections"]),
        )


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _log_target_ratio(
    ev: Optional[GaussianEvidence], law: CliqueSeparatorLaw, m: MoveProposal
) -> float:
    llr = 0.0 if ev is None else log_likelihood_ratio(ev, m)
    return llr + log_prior_ratio(law, m)


def _accepts(log_alpha: float, u: float) -> bool:
    return log_alpha >= 0.0 or u < math.exp(log_alpha)


def _draw_vertex_and_kind(p: int, rng: np.random.Generator) -> Tuple[int, MoveKind]:
    v = int(rng.integers(p))
    kind = MoveKind.ADD if rng.random() < 0.5 else MoveKind.REMOVE
    return v, kind


def _apply(state: ChainState, m: MoveProposal, delta: float) -> None:
    apply_move(state.tree, m)
    state.log_score += delta
    if m.is_graph_update:
        sign = 1 if m.kind is MoveKind.ADD else -1
        state.n_edges += sign * len(m.edges_changed)


def _check_state(state: ChainState) -> None:
    if not validate_junction_property(state.tree):
        raise InvariantViolation(f"junction property broken after step {state.step}")
    if not is_chordal(g_of(state.tree)):
        raise InvariantViolation(f"graph is not chordal after step {state.step}")


def proposal_log_ratio(
    tree: JunctionTree, m: MoveProposal, sets: Optional[PartitionSets] = None
) -> Optional[float]:
    """
    log |T*_v(T)| - log |T*_v(T')| for a single-move proposal on `tree`.

    Returns None when the move has no reverse, which rejects it.
    """
    sets = sets if sets is not None else partition_sets(tree, m.vertex)
    forward = len(sets.for_kind(m.kind))
    if m.kind is MoveKind.ADD:
        reverse = reverse_count_add(tree, m, sets)
    else:
        reverse = reverse_count_remove(tree, m, sets)
    if forward == 0 or reverse <= 0:
        return None
    return math.log(forward) - math.log(reverse)


def single_move_step(
    state: ChainState,
    ev: Optional[GaussianEvidence],
    law: CliqueSeparatorLaw,
    rng: np.random.Generator,
) -> StepRecord:
    """
    One reversible Metropolis-Hastings step.

    Draws v and Add/Remove uniformly, then one clique uniformly from the
    relevant partition set. The acceptance ratio adds log |T*_v(T)| - log
    |T*_v(T')| to the target ratio, the reverse size coming from the closed
    form counts. An empty partition set gives a null step.
    """
    tree = state.tree
    v, kind = _draw_vertex_and_kind(tree.p, rng)
    sets = partition_sets(tree, v)
    members = sets.for_kind(kind)
    step = state.step
    if not members:
        return StepRecord(step, v, kind, (), state.log_score, state.n_edges, state.n_cliques)
    member = members[int(rng.integers(len(members)))]
    m = propose_move(tree, v, kind, member)
    proposal_ratio = proposal_log_ratio(tree, m, sets)
    u = rng.random()
    log_alpha: Optional[float] = None
    accepted = False
    delta = 0.0
    if proposal_ratio is not None:
        try:
            delta = _log_target_ratio(ev, law, m)
        except (NumericalError, DomainError) as exc:
            state.numerical_rejections += 1
            logger.debug("Step %d: scoring failed for node %d (%s)", step, member.node, exc)
        else:
            if math.isfinite(delta):
                log_alpha = delta + proposal_ratio
                accepted = _accepts(log_alpha, u)
            else:
                state.numerical_rejections += 1
    if accepted:
        _apply(state, m, delta)
        if m.is_graph_update:
            state.n_cliques = count_maximal_cliques(tree)
    outcome = CandidateOutcome(member.node, accepted, log_alpha, len(m.edges_changed))
    return StepRecord(step, v, kind, (outcome,), state.log_score, state.n_edges, state.n_cliques)


def candidate_uniform(seed: int, step: int, node: int) -> float:
    """Uniform draw of a parallel candidate, keyed by (seed, step, node) on a Philox stream."""
    bitgen = np.random.Philox(key=seed, counter=[0, 0, node, step])
    return float(np.random.Generator(bitgen).random())


class _Evaluated(NamedTuple):
    move: MoveProposal
    delta: Optional[float]
    accepted: bool
    failed: bool


def _evaluate_candidate(
    tree: JunctionTree,
    ev: Optional[GaussianEvidence],
    law: CliqueSeparatorLaw,
    v: int,
    kind: MoveKind,
    member: PartitionMember,
    seed: int,
    step: int,
) -> _Evaluated:
    m = propose_move(tree, v, kind, member)
    u = candidate_uniform(seed, step, member.node)
    try:
        delta = _log_target_ratio(ev, law, m)
    except (NumericalError, DomainError):
        return _Evaluated(m, None, False, True)
    if not math.isfinite(delta):
        return _Evaluated(m, None, False, True)
    return _Evaluated(m, delta, _accepts(delta, u), False)


def parallel_step(
    state: ChainState,
    ev: Optional[GaussianEvidence],
    law: CliqueSeparatorLaw,
    rng: np.random.Generator,
    seed: int,
    executor: Optional[Executor] = None,
) -> StepRecord:
    """
    One step of the parallel sampler.

    Draws v and Add/Remove from `rng`, then evaluates every member of the
    relevant partition set against the pre-step tree with its own uniform
    from `candidate_uniform`, so results do not depend on evaluation order.
    Accepted updates are applied in node order. When v sits in exactly two
    cliques and both Remove updates are accepted, only the lower node is
    applied so that v stays housed.

    Args:
        executor: optional executor sharing the tree read-only across
            candidate evaluations (threads; the tree is not pickled)
    """
    tree = state.tree
    v, kind = _draw_vertex_and_kind(tree.p, rng)
    members = partition_sets(tree, v).for_kind(kind)
    step = state.step
    args = (tree, ev, law, v, kind)
    if executor is not None and len(members) > 1:
        futures = [executor.submit(_evaluate_candidate, *args, mb, seed, step) for mb in members]
        results = [f.result() for f in futures]
    else:
        results = [_evaluate_candidate(*args, mb, seed, step) for mb in members]

    accepted = [r.accepted for r in results]
    if kind is MoveKind.REMOVE and len(tree.nodes_containing(v)) == 2 and all(accepted):
        accepted[1] = False

    graph_changed = False
    outcomes = []
    for member, r, ok in zip(members, results, accepted):
        if r.failed:
            state.numerical_rejections += 1
        if ok:
            _apply(state, r.move, r.delta or 0.0)
            graph_changed = graph_changed or r.move.is_graph_update
        outcomes.append(CandidateOutcome(member.node, ok, r.delta, len(r.move.edges_changed)))
    if graph_changed:
        state.n_cliques = count_maximal_cliques(tree)
    return StepRecord(
        step, v, kind, tuple(outcomes), state.log_score, state.n_edges, state.n_cliques
    )


# ---------------------------------------------------------------------------
# Runs and traces
# ---------------------------------------------------------------------------


@dataclass
class ChainTrace:
    """
    Records, snapshots and start state of a run.

    `run` carries caller metadata such as the data path.
    """

    config: ChainConfig
    p: int
    initial: JunctionTree
    records: List[StepRecord] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    final: Optional[JunctionTree] = None
    numerical_rejections: int = 0
    initial_drawn: bool = False
    run: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def latest_snapshot(self) -> Optional[Snapshot]:
        return self.snapshots[-1] if self.snapshots else None

    def save(self, directory: Union[str, Path]) -> Path:
        """Write manifest, records and snapshots under `directory`."""
        out = ensure_dir(directory)
        write_ndjson(out / TRACE_FILE, (r.to_dict() for r in self.records))
        snap_dir = ensure_dir(out / SNAPSHOT_DIR)
        for old in snap_dir.glob("step_*.json"):
            old.unlink()
        for snap in self.snapshots:
            write_json(snap_dir / f"step_{snap.step:010d}.json", snap.to_dict())
        write_json(
            out / MANIFEST_FILE,
            {
                "config": self.config.to_dict(),
                "p": self.p,
                "initial": self.initial.to_dict(),
                "final": None if self.final is None else self.final.to_dict(),
                "initial_drawn": self.initial_drawn,
                "n_records": len(self.records),
                "numerical_rejections": self.numerical_rejections,
                "run": self.run,
            },
        )
        logger.info("Wrote trace with %d steps to %s", len(self.records), out)
        return out

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "ChainTrace":
        """
        Raises:
            CorruptTrace: if any file is missing or inconsistent
        """
        src = Path(directory)
        try:
            manifest = read_json(src / MANIFEST_FILE)
            records = [StepRecord.from_dict(d) for d in iter_ndjson(src / TRACE_FILE)]
            snapshots = [
                Snapshot.from_dict(read_json(f))
                for f in sorted((src / SNAPSHOT_DIR).glob("step_*.json"))
            ]
            final = manifest.get("final")
            trace = cls(
                config=ChainConfig.from_dict(manifest["config"]),
                p=int(manifest["p"]),
                initial=JunctionTree.from_dict(manifest["initial"]),
                records=records,
                snapshots=snapshots,
                final=None if final is None else JunctionTree.from_dict(final),
                numerical_rejections=int(manifest.get("numerical_rejections", 0)),
                initial_drawn=bool(manifest.get("initial_drawn", False)),
                run=dict(manifest.get("run") or {}),
            )
        except CorruptTrace:
            raise
        except (DataError, JunctionWalkError, KeyError, TypeError, ValueError) as exc:
            raise CorruptTrace(f"cannot load trace from {src}: {exc}") from exc
        if len(records) != int(manifest.get("n_records", len(records))):
            raise CorruptTrace(
                f"{src}: manifest lists {manifest['n_records']} steps, found {len(records)}"
            )
        for k, r in enumerate(records):
            if r.step != k:
                raise CorruptTrace(f"{src}: record {k} has step index {r.step}")
        return trace


def _initial_tree(p: int, rng: np.random.Generator) -> JunctionTree:
    return init_no_edge(p, random_tree(p, rng))


def run_chain(
    cfg: ChainConfig,
    ev: Optional[GaussianEvidence],
    initial: Optional[JunctionTree] = None,
    p: Optional[int] = None,
    resume: Optional[ChainTrace] = None,
    progress: bool = False,
    executor: Optional[Executor] = None,
) -> ChainTrace:
    """
    Run a chain for cfg.iterations steps.

    Args:
        cfg: chain settings
        ev: Gaussian evidence; None samples from the prior alone
        initial: starting tree; defaults to the edgeless graph on a random skeleton
        p: vertex count when `ev` is None
        resume: earlier trace of the same chain; the run restarts from its
            latest snapshot and reproduces the uninterrupted run
        progress: show a tqdm progress bar

    Raises:
        ConfigError: on invalid settings or mismatched inputs
    """
    cfg.validate()
    if ev is not None:
        if p is not None and p != ev.p:
            raise ConfigError(f"p={p} does not match data dimension {ev.p}")
        p = ev.p
    if p is None or p < 1:
        raise ConfigError("vertex count is unknown: pass evidence or a positive p")
    law = cfg.prior

    snap = resume.latest_snapshot() if resume is not None else None
    if resume is not None:
        if resume.p != p:
            raise ConfigError(f"cannot resume a p={resume.p} trace with p={p}")
        if resume.config.seed != cfg.seed or resume.config.sampler != cfg.sampler:
            raise ConfigError("resumed runs must keep the seed and the sampler")
        if snap is not None and snap.step > cfg.iterations:
            raise ConfigError(f"trace already has {snap.step} steps, more than {cfg.iterations}")

    rng = np.random.default_rng(cfg.seed)
    if resume is not None and snap is not None:
        rng.bit_generator.state = snap.rng_state
        tree = snap.tree.copy()
        state = ChainState(
            tree=tree,
            log_score=snap.log_score,
            n_edges=snap.n_edges,
            n_cliques=snap.n_cliques,
            step=snap.step,
            numerical_rejections=snap.numerical_rejections,
        )
        trace = ChainTrace(
            config=cfg,
            p=p,
            initial=resume.initial,
            records=resume.records[: snap.step],
            snapshots=[s for s in resume.snapshots if s.step <= snap.step],
            initial_drawn=resume.initial_drawn,
            run=dict(resume.run),
        )
        logger.info("Resuming chain from step %d", snap.step)
    else:
        drawn = False
        if resume is not None:
            initial = resume.initial
            drawn = resume.initial_drawn
            if drawn:
                # advance the stream exactly as the original run did
                _initial_tree(p, rng)
        elif initial is None:
            initial = _initial_tree(p, rng)
            drawn = True
        if initial.p != p:
            raise ConfigError(f"initial tree has p={initial.p}, expected {p}")
        if not validate_junction_property(initial):
            raise ConfigError("initial tree violates the junction property")
        tree = initial.copy()
        state = ChainState.start(tree, ev, law)
        trace = ChainTrace(config=cfg, p=p, initial=initial.copy(), initial_drawn=drawn)
        if resume is not None:
            trace.run = dict(resume.run)

    kind = cfg.kind
    period = cfg.skeleton_period
    snap_period = cfg.snapshot_period
    logger.info(
        "Running %s sampler: p=%d, %d iterations, prior=%s, seed=%d",
        kind.value,
        p,
        cfg.iterations,
        law.name,
        cfg.seed,
    )
    with tqdm(total=cfg.iterations, initial=state.step, disable=not progress, unit="step") as bar:
        while state.step < cfg.iterations:
            if kind is SamplerKind.PARALLEL:
                record = parallel_step(state, ev, law, rng, cfg.seed, executor)
            else:
                record = single_move_step(state, ev, law, rng)
            state.step += 1
            if state.step % period == 0:
                record.skeleton = resample_skeleton(tree, rng)
            trace.records.append(record)
            if cfg.debug:
                _check_state(state)
            if state.step % snap_period == 0:
                _check_state(state)
                trace.snapshots.append(
                    Snapshot(
                        step=state.step,
                        tree=tree.copy(),
                        rng_state=rng.bit_generator.state,
                        log_score=state.log_score,
                        n_edges=state.n_edges,
                        n_cliques=state.n_cliques,
                        numerical_rejections=state.numerical_rejections,
                    )
                )
                logger.debug("Snapshot at step %d (%d edges)", state.step, state.n_edges)
            bar.update(1)

    trace.final = tree.copy()
    trace.numerical_rejections = state.numerical_rejections
    accepted = sum(r.n_accepted for r in trace.records)
    logger.info(
        "Chain finished: %d steps, %d accepted updates, %d numerical rejections, %d edges",
        len(trace.records),
        accepted,
        state.numerical_rejections,
        state.n_edges,
    )
    return trace
