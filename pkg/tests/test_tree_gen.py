"""Tests for random trees, random junction trees and skeleton resampling."""

import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from conftest import PROPERTY_SETTINGS, junction_trees
from src.core.errors import NotATree
from src.core.graph_core import Graph, VertexSet, is_chordal
from src.core.junction_tree import JunctionTree, check_tree, g_of, validate_junction_property
from src.core.tree_gen import (
    attempt_once_walk,
    prufer_decode,
    random_ar_graph,
    random_tree,
    resample_skeleton,
)


class TestPrufer:
    def test_star(self):
        assert prufer_decode([3, 3, 3], 5) == [(0, 3), (1, 3), (2, 3), (3, 4)]

    def test_path(self):
        assert prufer_decode([1, 2], 4) == [(0, 1), (1, 2), (2, 3)]

    def test_small_trees(self):
        assert prufer_decode([], 1) == []
        assert prufer_decode([], 2) == [(0, 1)]

    def test_bad_sequences(self):
        with pytest.raises(NotATree):
            prufer_decode([0], 4)
        with pytest.raises(NotATree):
            prufer_decode([5, 0], 4)
        with pytest.raises(NotATree):
            prufer_decode([], 0)

    def test_all_sequences_give_all_trees(self):
        n = 5
        trees = {tuple(prufer_decode(list(seq), n)) for seq in itertools.product(range(n), repeat=n - 2)}
        assert len(trees) == n ** (n - 2)
        for edges in trees:
            check_tree(n, list(edges))


class TestRandomTree:
    @pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
    def test_is_spanning_tree(self, n, rng):
        check_tree(n, random_tree(n, rng))

    def test_uniform_over_labeled_trees(self):
        rng = np.random.default_rng(7)
        draws = 16_000
        counts = Counter(tuple(random_tree(4, rng)) for _ in range(draws))
        assert len(counts) == 16
        assert chisquare(list(counts.values())).pvalue > 1e-3


class TestAttemptOnceWalk:
    @PROPERTY_SETTINGS
    @given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
    def test_output_is_junction_tree(self, n, seed):
        rng = np.random.default_rng(seed)
        skeleton = random_tree(n, rng)
        tree = attempt_once_walk(skeleton, rng)
        assert tree.p == n
        assert tree.edges() == sorted(skeleton)
        assert validate_junction_property(tree)
        assert is_chordal(g_of(tree))
        assert all(tree.nodes_containing(v) for v in range(n))

    def test_seeded_runs_repeat(self):
        skeleton = [(0, 1), (1, 2), (1, 3)]
        a = attempt_once_walk(skeleton, np.random.default_rng(3))
        b = attempt_once_walk(skeleton, np.random.default_rng(3))
        assert a == b

    def test_rejected_coins_keep_walks_at_their_start(self, mocker):
        def scripted_walk(start):
            walk = mocker.Mock()
            draws = iter([start] + [0] * 10)
            walk.integers.side_effect = lambda *args, **kwargs: next(draws)
            walk.random.return_value = 0.0
            return walk

        rng = mocker.Mock()
        rng.spawn.return_value = [scripted_walk(2), scripted_walk(0), scripted_walk(1)]
        tree = attempt_once_walk([(0, 1), (1, 2)], rng)
        assert tree.cliques == (VertexSet([1]), VertexSet([2]), VertexSet([0]))
        assert all(len(tree.nodes_containing(v)) == 1 for v in range(3))

    def test_every_three_vertex_graph_is_reachable(self):
        rng = np.random.default_rng(11)
        seen = {g_of(attempt_once_walk([(0, 1), (1, 2)], rng)) for _ in range(3000)}
        assert len(seen) == 8

    def test_invalid_skeleton(self, rng):
        with pytest.raises(NotATree):
            attempt_once_walk([(0, 1), (2, 3)], rng)


def _valid_skeletons(cliques):
    n = len(cliques)
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for edges in itertools.combinations(pairs, n - 1):
        try:
            tree = JunctionTree(4, cliques, edges)
        except NotATree:
            continue
        if validate_junction_property(tree):
            out.append(tuple(tree.edges()))
    return out


class TestResampleSkeleton:
    def test_uniform_over_junction_trees(self):
        cliques = [[0, 1], [1], [2], [3]]
        valid = _valid_skeletons(cliques)
        assert len(valid) == 8
        tree = JunctionTree(4, cliques, [(0, 1), (1, 2), (2, 3)])
        rng = np.random.default_rng(5)
        draws = 8_000
        counts = Counter(tuple(resample_skeleton(tree, rng)) for _ in range(draws))
        assert set(counts) == set(valid)
        assert chisquare([counts[t] for t in valid]).pvalue > 1e-3

    def test_edgeless_cliques_give_any_tree(self):
        tree = JunctionTree(4, [[0], [1], [2], [3]], [(0, 1), (1, 2), (2, 3)])
        rng = np.random.default_rng(9)
        counts = Counter(tuple(resample_skeleton(tree, rng)) for _ in range(4000))
        assert len(counts) == 16

    def test_unique_junction_tree_is_kept(self):
        tree = JunctionTree(3, [[0, 1], [1, 2]], [(0, 1)])
        assert resample_skeleton(tree, np.random.default_rng(1)) == [(0, 1)]

    @PROPERTY_SETTINGS
    @given(tree=junction_trees(), seed=st.integers(0, 2**32 - 1))
    def test_cliques_and_graph_unchanged(self, tree, seed):
        cliques = tree.cliques
        g = g_of(tree)
        separators = sorted(tree.separator(i, j).bits for i, j in tree.edges())
        resample_skeleton(tree, np.random.default_rng(seed))
        assert tree.cliques == cliques
        assert g_of(tree) == g
        assert validate_junction_property(tree)
        assert sorted(tree.separator(i, j).bits for i, j in tree.edges()) == separators


class TestRandomARGraph:
    def test_lag_one_is_a_path(self, rng):
        g = random_ar_graph(6, 1, rng)
        assert g == Graph.from_edges(6, [(i, i + 1) for i in range(5)])

    @pytest.mark.parametrize("seed", range(20))
    def test_chordal_and_banded(self, seed):
        rng = np.random.default_rng(seed)
        g = random_ar_graph(30, 5, rng)
        assert is_chordal(g)
        assert all(j - i <= 5 for i, j in g.edges())
        assert all(g.has_edge(i, i + 1) for i in range(29))

    def test_single_vertex(self, rng):
        assert random_ar_graph(1, 5, rng) == Graph(1)

    def test_invalid_arguments(self, rng):
        with pytest.raises(ValueError):
            random_ar_graph(0, 3, rng)
        with pytest.raises(ValueError):
            random_ar_graph(5, 0, rng)
