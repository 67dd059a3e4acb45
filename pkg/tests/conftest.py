"""
Shared fixtures, oracles and hypothesis strategies.
"""

import itertools
import os
import sys
from typing import List, Tuple

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.graph_core import Graph, VertexSet  # noqa: E402
from src.core.junction_tree import JunctionTree  # noqa: E402
from src.core.perturbation import (  # noqa: E402
    MoveKind,
    PartitionMember,
    apply_move,
    partition_sets,
    propose_move,
)
from src.core.tree_gen import attempt_once_walk, random_tree  # noqa: E402

PROPERTY_SETTINGS = settings(
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def has_chordless_cycle(g: Graph) -> bool:
    """Brute force: some vertex subset of size >= 4 induces a cycle."""
    for size in range(4, g.p + 1):
        for subset in itertools.combinations(range(g.p), size):
            members = set(subset)
            degrees = [sum(1 for u in members if g.has_edge(v, u)) for v in subset]
            if any(d != 2 for d in degrees):
                continue
            # an induced 2-regular subgraph is a cycle iff it is connected
            seen = {subset[0]}
            stack = [subset[0]]
            while stack:
                x = stack.pop()
                for u in members:
                    if u not in seen and g.has_edge(x, u):
                        seen.add(u)
                        stack.append(u)
            if seen == members:
                return True
    return False


def brute_partition_sets(tree: JunctionTree, v: int) -> Tuple[List[PartitionMember], List[PartitionMember]]:
    """Neighbour and boundary sets straight from their definition, scanning every node."""
    tv = {node for node in range(tree.num_nodes) if v in tree.clique(node)}
    neighbours = []
    boundary = []
    for node in range(tree.num_nodes):
        adjacent_in = [d for d in tree.neighbours(node) if d in tv]
        if node not in tv and adjacent_in:
            assert len(adjacent_in) == 1
            neighbours.append(PartitionMember(node, adjacent_in[0]))
        if node in tv and len(tv) > 1 and len(adjacent_in) == 1:
            boundary.append(PartitionMember(node, adjacent_in[0]))
    return sorted(neighbours), sorted(boundary)


def random_state(p: int, seed: int, moves: int = 0) -> JunctionTree:
    """A junction tree from random walks on a random skeleton, then `moves` random updates."""
    rng = np.random.default_rng(seed)
    tree = attempt_once_walk(random_tree(p, rng), rng)
    for _ in range(moves):
        v = int(rng.integers(p))
        kind = MoveKind.ADD if rng.random() < 0.5 else MoveKind.REMOVE
        members = partition_sets(tree, v).for_kind(kind)
        if members:
            member = members[int(rng.integers(len(members)))]
            apply_move(tree, propose_move(tree, v, kind, member))
    return tree


@st.composite
def junction_trees(draw, min_p: int = 1, max_p: int = 8, max_moves: int = 30) -> JunctionTree:
    p = draw(st.integers(min_p, max_p))
    seed = draw(st.integers(0, 2**32 - 1))
    moves = draw(st.integers(0, max_moves))
    return random_state(p, seed, moves)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def diamond_graph() -> Graph:
    """Two triangles sharing the edge 1-2."""
    return Graph.from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])


@pytest.fixture
def diamond_expanded() -> JunctionTree:
    """Expanded tree of the two-triangle graph with non-maximal cliques {1,2} and {2}."""
    return JunctionTree(4, [[0, 1, 2], [1, 2], [1, 2, 3], [2]], [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def branching_tree() -> JunctionTree:
    """
    Vertex 6 lives on the path 1-2-3; node 3 is a leaf of that path touching
    three outside nodes (one of them empty), so it splits both partition sets.
    """
    cliques = [
        VertexSet([0, 1]),
        VertexSet([1, 6]),
        VertexSet([2, 6]),
        VertexSet([3, 6, 7]),
        VertexSet(),
        VertexSet([3, 4]),
        VertexSet([5, 7]),
        VertexSet([2]),
    ]
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (3, 5), (3, 6), (2, 7)]
    return JunctionTree(8, cliques, edges)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian_data() -> np.ndarray:
    return np.random.default_rng(2024).standard_normal((20, 6))
