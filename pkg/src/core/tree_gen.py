"""
Random trees and random junction trees.

Skeletons are plain edge lists over nodes 0..n-1. Every function takes an
explicit numpy Generator; nothing here touches global random state.
"""

from __future__ import annotations

import heapq
import logging
from typing import Dict, List, Sequence, Set

import numpy as np

from src.core.errors import InvariantViolation, NotATree
from src.core.graph_core import Edge, Graph, VertexSet, is_chordal
from src.core.junction_tree import JunctionTree, check_tree, normalize_edges

logger = logging.getLogger(__name__)


def prufer_decode(seq: Sequence[int], n: int) -> List[Edge]:
    """
    Labeled tree on n nodes encoded by a Prufer sequence of length n - 2.

    Raises:
        NotATree: if the sequence length or labels do not fit n
    """
    if n < 1:
        raise NotATree("a tree needs at least one node")
    if n == 1:
        if seq:
            raise NotATree("a single node has an empty Prufer sequence")
        return []
    if len(seq) != n - 2:
        raise NotATree(f"Prufer sequence for {n} nodes must have length {n - 2}, got {len(seq)}")
    degree = [1] * n
    for x in seq:
        if not 0 <= x < n:
            raise NotATree(f"Prufer label {x} outside 0..{n - 1}")
        degree[x] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(u, w), max(u, w)))
    return normalize_edges(edges)


def random_tree(n: int, rng: np.random.Generator) -> List[Edge]:
    """Uniform labeled tree on n nodes (decode of a uniform Prufer sequence)."""
    if n <= 2:
        return prufer_decode([], n)
    seq = rng.integers(0, n, size=n - 2).tolist()
    return prufer_decode(seq, n)


def _adjacency(n: int, edges: Sequence[Edge]) -> List[List[int]]:
    adj: List[List[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    return adj


def _walk(adj: List[List[int]], rng: np.random.Generator) -> Set[int]:
    n = len(adj)
    start = int(rng.integers(n))
    visited = {start}
    attempted: Set[int] = set()
    frontier = set(adj[start])
    while frontier:
        choices = sorted(frontier)
        k = choices[int(rng.integers(len(choices)))]
        frontier.discard(k)
        if rng.random() >= 0.5:
            visited.add(k)
            frontier.update(x for x in adj[k] if x not in visited and x not in attempted)
        else:
            attempted.add(k)
    return visited


def attempt_once_walk(skeleton: Sequence[Edge], rng: np.random.Generator) -> JunctionTree:
    """
    Random junction tree on the topology of `skeleton`.

    Walk i starts at a uniform node and repeatedly tries each unattempted
    node adjacent to its visited set once, keeping it with probability 1/2.
    Node j of the result carries {i : walk i visited j}. Each walk draws from
    its own child stream of `rng`.

    Raises:
        NotATree: if `skeleton` is not a tree
    """
    n = len(skeleton) + 1
    edges = normalize_edges(skeleton)
    check_tree(n, edges)
    adj = _adjacency(n, edges)
    bits = [0] * n
    for i, walk_rng in enumerate(rng.spawn(n)):
        for node in _walk(adj, walk_rng):
            bits[node] |= 1 << i
    return JunctionTree(n, [VertexSet.from_bits(b) for b in bits], edges)


def _wilson_tree(ports: Sequence[int], rng: np.random.Generator) -> List[Edge]:
    """
    Random spanning tree of the complete graph on len(ports) components.

    Edge (i, j) has weight ports[i] * ports[j]; loop-erased random walks
    with steps proportional to ports[j] sample trees with probability
    proportional to the product of their edge weights.
    """
    m = len(ports)
    weights = np.asarray(ports, dtype=float)
    in_tree = [False] * m
    in_tree[0] = True
    nxt = [-1] * m
    for start in range(1, m):
        u = start
        while not in_tree[u]:
            p = weights.copy()
            p[u] = 0.0
            p /= p.sum()
            nxt[u] = int(rng.choice(m, p=p))
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return [(i, nxt[i]) for i in range(1, m)]


def resample_skeleton(tree: JunctionTree, rng: np.random.Generator) -> List[Edge]:
    """
    Redraw the tree edges of `tree` uniformly among the junction trees of its cliques.

    For each distinct separator value S in turn, the edges carrying S are cut
    and the resulting components reconnected by a random tree over
    components whose edges land on uniformly chosen nodes containing S.
    Cliques and the represented graph are unchanged. Returns the new edges.
    """
    n = tree.num_nodes
    separators = sorted(
        {tree.separator(i, j) for i, j in tree.edges()}, key=lambda s: (len(s), s.sorted())
    )
    for sep in separators:
        edges = tree.edges()
        kept = [(i, j) for i, j in edges if tree.separator(i, j) != sep]
        if len(kept) == len(edges):
            continue
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in kept:
            parent[find(i)] = find(j)
        members: Dict[int, List[int]] = {}
        for node in range(n):
            if sep <= tree.clique(node):
                members.setdefault(find(node), []).append(node)
        components = [members[r] for r in sorted(members)]
        joins = _wilson_tree([len(c) for c in components], rng)
        new_edges = list(kept)
        for a, b in joins:
            x = components[a][int(rng.integers(len(components[a])))]
            y = components[b][int(rng.integers(len(components[b])))]
            new_edges.append((x, y))
        tree.set_edges(new_edges)
    logger.debug("Resampled skeleton over %d separator classes", len(separators))
    return tree.edges()


def random_ar_graph(p: int, max_lag: int, rng: np.random.Generator) -> Graph:
    """
    Banded decomposable graph of an auto-regressive process with random lags.

    Vertex i joins its l_i predecessors, l_i uniform on 1..max_lag and
    clamped to min(l_i, l_{i-1} + 1, i) so that the predecessors of every
    vertex form a clique.

    Raises:
        ValueError: if p < 1 or max_lag < 1
    """
    if p < 1 or max_lag < 1:
        raise ValueError(f"p and max_lag must be positive, got p={p}, max_lag={max_lag}")
    edges = []
    prev = 0
    for i in range(1, p):
        lag = min(int(rng.integers(1, max_lag + 1)), prev + 1, i)
        edges.extend((i - k, i) for k in range(1, lag + 1))
        prev = lag
    g = Graph.from_edges(p, edges)
    if not is_chordal(g):
        raise InvariantViolation("simulated auto-regressive graph is not chordal")
    return g
