"""Tests for trace post-processing."""

import csv
import dataclasses
import json

import numpy as np
import pytest

from src.core.diagnostics import (
    GraphChain,
    SerialRecord,
    UpdateMode,
    autocorrelation,
    cumulative_acceptance,
    edge_auc,
    edge_posterior_matrix,
    map_estimate,
    map_graph,
    to_graph_chain,
    to_serial_chain,
    write_acceptance,
    write_acf,
    write_edge_posterior,
    write_map_graph,
    write_trace_summary,
)
from src.core.errors import CorruptTrace, DomainError, SeriesTooShort
from src.core.graph_core import Graph
from src.core.junction_tree import g_of
from src.core.perturbation import MoveKind
from src.core.samplers import CandidateOutcome, ChainConfig, StepRecord, run_chain


@pytest.fixture(scope="module")
def short_trace():
    cfg = ChainConfig(iterations=400, sampler="parallel", skeleton_period=10, seed=4)
    return run_chain(cfg, None, p=5)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


class TestAutocorrelation:
    def test_constant_series_is_degenerate(self):
        acf = autocorrelation([3.0] * 10, 4)
        assert acf.degenerate
        assert list(acf.values) == [1.0, 0.0, 0.0, 0.0, 0.0]

    def test_ar1_decay(self):
        rng = np.random.default_rng(0)
        x = np.zeros(20_000)
        for t in range(1, x.size):
            x[t] = 0.7 * x[t - 1] + rng.standard_normal()
        acf = autocorrelation(x, 3)
        assert len(acf) == 4
        assert acf[0] == pytest.approx(1.0)
        assert acf[1] == pytest.approx(0.7, abs=0.03)
        assert acf[2] == pytest.approx(0.49, abs=0.04)

    def test_alternating_series(self):
        acf = autocorrelation([1.0, -1.0] * 50, 2)
        assert not acf.degenerate
        assert acf[1] == pytest.approx(-99 / 100)
        assert acf[2] == pytest.approx(98 / 100)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            autocorrelation([1.0, 2.0, 3.0, 4.0, 5.0], 5)

    def test_negative_lag(self):
        with pytest.raises(DomainError):
            autocorrelation([1.0, 2.0], -1)


class TestAcceptance:
    series = [
        SerialRecord(0, 1, True, 1),
        SerialRecord(0, 2, True, 0),
        SerialRecord(1, None, False, 0),
        SerialRecord(2, 0, True, 2),
    ]

    def test_graph_rate(self):
        np.testing.assert_allclose(cumulative_acceptance(self.series, UpdateMode.GRAPH), [1, 0.5, 1 / 3, 0.5])

    def test_junction_rate(self):
        np.testing.assert_allclose(cumulative_acceptance(self.series, UpdateMode.JUNCTION), [1, 1, 2 / 3, 0.75])

    def test_empty(self):
        assert cumulative_acceptance([], UpdateMode.GRAPH).size == 0

    def test_step_records(self):
        records = [
            StepRecord(0, 1, MoveKind.ADD, (CandidateOutcome(2, True, 0.1, 0),), 0.0, 0, 3),
            StepRecord(1, 1, MoveKind.ADD, (CandidateOutcome(2, True, 0.1, 1),), 0.0, 1, 2),
        ]
        np.testing.assert_allclose(cumulative_acceptance(records, UpdateMode.GRAPH), [0, 0.5])
        np.testing.assert_allclose(cumulative_acceptance(records, UpdateMode.JUNCTION), [1, 1])


class TestSerialChain:
    def test_expands_candidates(self):
        records = [
            StepRecord(
                0,
                3,
                MoveKind.ADD,
                (CandidateOutcome(1, True, 0.0, 1), CandidateOutcome(4, False, -2.0, 0)),
                0.0,
                1,
                3,
            ),
            StepRecord(1, 0, MoveKind.REMOVE, (), 0.0, 1, 3),
        ]
        assert to_serial_chain(records) == [
            SerialRecord(0, 1, True, 1),
            SerialRecord(0, 4, False, 0),
            SerialRecord(1, None, False, 0),
        ]

    def test_covers_every_candidate(self, short_trace):
        serial = to_serial_chain(short_trace)
        assert len(serial) == sum(max(1, len(r.candidates)) for r in short_trace.records)


class TestGraphChain:
    def test_replay_matches_records(self, short_trace):
        chain = to_graph_chain(short_trace)
        assert len(chain) == len(short_trace)
        np.testing.assert_array_equal(chain.edge_counts(), [r.n_edges for r in short_trace.records])
        assert chain.graphs[-1] == g_of(short_trace.final)
        previous = g_of(short_trace.initial)
        for g, changed in zip(chain.graphs, chain.changed):
            assert changed == (g != previous)
            previous = g

    def test_tampered_edge_count(self, short_trace):
        k = next(i for i, r in enumerate(short_trace.records) if r.graph_changed)
        records = list(short_trace.records)
        records[k] = dataclasses.replace(records[k], n_edges=records[k].n_edges + 1)
        with pytest.raises(CorruptTrace):
            to_graph_chain(dataclasses.replace(short_trace, records=records))

    def test_tampered_candidate(self, short_trace):
        k = next(i for i, r in enumerate(short_trace.records) if r.n_accepted)
        records = list(short_trace.records)
        bogus = CandidateOutcome(node=10_000, accepted=True, log_alpha=0.0, edges_changed=0)
        records[k] = dataclasses.replace(records[k], candidates=(bogus,))
        with pytest.raises(CorruptTrace):
            to_graph_chain(dataclasses.replace(short_trace, records=records))


def _chain(*graphs):
    return GraphChain(graphs=list(graphs), changed=[False] * len(graphs))


class TestEdgePosterior:
    one = Graph.from_edges(3, [(0, 1)])
    two = Graph.from_edges(3, [(0, 1), (1, 2)])

    def test_frequencies(self):
        post = edge_posterior_matrix(_chain(self.one, self.one, self.two, self.two))
        expected = np.array([[0, 1, 0], [1, 0, 0.5], [0, 0.5, 0]])
        np.testing.assert_allclose(post, expected)

    def test_burn_in(self):
        post = edge_posterior_matrix(_chain(self.one, self.one, self.two, self.two), burn_in=2)
        assert post[1, 2] == 1.0

    def test_burn_in_range(self):
        with pytest.raises(DomainError):
            edge_posterior_matrix(_chain(self.one, self.two), burn_in=2)
        with pytest.raises(DomainError):
            edge_posterior_matrix(_chain(self.one), burn_in=-1)


class TestMap:
    a = Graph.from_edges(3, [(0, 1)])
    b = Graph.from_edges(3, [(1, 2)])

    def test_ties_go_to_first_visit(self):
        assert map_graph(_chain(self.b, self.a, self.a, self.b)) == self.b

    def test_frequency(self):
        est = map_estimate(_chain(self.a, self.b, Graph.from_edges(3, [(1, 2)])))
        assert est.graph == self.b
        assert (est.count, est.total) == (2, 3)
        assert est.frequency == pytest.approx(2 / 3)


class TestEdgeAuc:
    truth = Graph.from_edges(3, [(0, 1)])

    def _posterior(self, on, off):
        post = np.full((3, 3), off)
        post[0, 1] = post[1, 0] = on
        return post

    def test_perfect_and_inverted(self):
        assert edge_auc(self._posterior(0.9, 0.1), self.truth) == pytest.approx(1.0)
        assert edge_auc(self._posterior(0.1, 0.9), self.truth) == pytest.approx(0.0)

    def test_ties_score_half(self):
        assert edge_auc(self._posterior(0.5, 0.5), self.truth) == pytest.approx(0.5)

    def test_degenerate_truth(self):
        with pytest.raises(DomainError):
            edge_auc(np.zeros((3, 3)), Graph(3))
        with pytest.raises(DomainError):
            edge_auc(np.zeros((3, 3)), Graph.complete(3))


class TestWriters:
    def test_trace_summary(self, short_trace, tmp_path):
        rows = _read_csv(write_trace_summary(tmp_path / "summary.csv", short_trace))
        assert rows[0][:3] == ["step", "log_score", "n_edges"]
        assert len(rows) == len(short_trace) + 1

    def test_acf(self, tmp_path):
        rows = _read_csv(write_acf(tmp_path / "acf.csv", autocorrelation([1.0, -1.0] * 5, 1)))
        assert rows[0] == ["lag", "acf"]
        assert [r[0] for r in rows[1:]] == ["0", "1"]
        assert float(rows[1][1]) == 1.0

    def test_acceptance(self, tmp_path):
        series = [SerialRecord(0, 1, True, 1), SerialRecord(1, 2, False, 0)]
        rows = _read_csv(write_acceptance(tmp_path / "acc.csv", series))
        assert rows == [["index", "graph_rate", "junction_rate"], ["1", "1.0", "1.0"], ["2", "0.5", "0.5"]]

    def test_edge_posterior(self, tmp_path):
        path = write_edge_posterior(tmp_path / "post.csv", np.array([[0.0, 0.25], [0.25, 0.0]]))
        assert np.loadtxt(path, delimiter=",").tolist() == [[0.0, 0.25], [0.25, 0.0]]

    def test_map_graph(self, tmp_path):
        est = map_estimate(_chain(Graph.from_edges(3, [(0, 2)])))
        data = json.loads(write_map_graph(tmp_path / "map.json", est).read_text(encoding="utf-8"))
        assert data == {"p": 3, "edges": [[0, 2]], "count": 1, "total": 1}
