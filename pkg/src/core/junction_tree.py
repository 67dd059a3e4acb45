"""
Expanded junction trees.

A junction tree here is a labeled tree whose nodes carry vertex sets that
may be empty or non-maximal. Node indices are stable handles: sampler moves
replace the clique stored at a node and never add or delete nodes.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Set, Tuple, Union

from src.core.errors import NotATree, VertexUnhoused
from src.core.graph_core import Edge, Graph, VertexSet

logger = logging.getLogger(__name__)

CliqueLike = Union[VertexSet, Iterable[int]]


def _as_vertex_set(c: CliqueLike) -> VertexSet:
    return c if isinstance(c, VertexSet) else VertexSet(c)


def normalize_edges(edges: Iterable[Sequence[int]]) -> List[Edge]:
    return sorted((min(i, j), max(i, j)) for i, j in edges)


def check_tree(n: int, edges: Sequence[Edge]) -> None:
    """
    Raises:
        NotATree: unless `edges` form a spanning tree on nodes 0..n-1
    """
    if n < 1:
        raise NotATree("a tree needs at least one node")
    if len(edges) != n - 1:
        raise NotATree(f"{n} nodes need {n - 1} edges, got {len(edges)}")
    adj: List[List[int]] = [[] for _ in range(n)]
    for i, j in edges:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise NotATree(f"invalid tree edge ({i}, {j}) for {n} nodes")
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    if len(seen) != n:
        raise NotATree(f"edges leave {n - len(seen)} of {n} nodes disconnected")


class JunctionTree:
    """
    Junction tree T = (cliques, tree edges) over graph vertices 0..p-1.

    Separators are implicit: the separator of tree edge (i, j) is
    cliques[i] & cliques[j]. `vertex_index[v]` holds the nodes whose clique
    contains v and is kept in step with every clique update.
    """

    def __init__(self, p: int, cliques: Sequence[CliqueLike], edges: Iterable[Sequence[int]]):
        self.p = p
        self._cliques: List[VertexSet] = [_as_vertex_set(c) for c in cliques]
        for c in self._cliques:
            if c.bits >> p:
                raise ValueError(f"clique {c} has vertices outside 0..{p - 1}")
        self._adj: List[Set[int]] = []
        self.set_edges(edges)
        self._index: List[Set[int]] = [set() for _ in range(p)]
        for node, c in enumerate(self._cliques):
            for v in c:
                self._index[v].add(node)

    @property
    def num_nodes(self) -> int:
        return len(self._cliques)

    @property
    def cliques(self) -> Tuple[VertexSet, ...]:
        return tuple(self._cliques)

    def clique(self, node: int) -> VertexSet:
        return self._cliques[node]

    def neighbours(self, node: int) -> Set[int]:
        """Tree neighbours of `node`; the returned set must not be mutated."""
        return self._adj[node]

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def nodes_containing(self, v: int) -> Set[int]:
        """Nodes of T_v; the returned set must not be mutated."""
        return self._index[v]

    @property
    def vertex_index(self) -> List[FrozenSet[int]]:
        return [frozenset(s) for s in self._index]

    def edges(self) -> List[Edge]:
        return sorted((i, j) for i in range(self.num_nodes) for j in self._adj[i] if i < j)

    def separator(self, i: int, j: int) -> VertexSet:
        return self._cliques[i] & self._cliques[j]

    def set_clique(self, node: int, clique: VertexSet) -> None:
        old = self._cliques[node]
        for v in old - clique:
            self._index[v].discard(node)
        for v in clique - old:
            self._index[v].add(node)
        self._cliques[node] = clique

    def set_edges(self, edges: Iterable[Sequence[int]]) -> None:
        """
        Replace the tree topology, keeping the cliques.

        Raises:
            NotATree: if `edges` do not form a spanning tree
        """
        normalized = normalize_edges(edges)
        check_tree(len(self._cliques), normalized)
        adj: List[Set[int]] = [set() for _ in range(len(self._cliques))]
        for i, j in normalized:
            adj[i].add(j)
            adj[j].add(i)
        self._adj = adj

    def copy(self) -> "JunctionTree":
        return JunctionTree(self.p, list(self._cliques), self.edges())

    def to_dict(self) -> Dict[str, object]:
        return {
            "p": self.p,
            "cliques": [c.sorted() for c in self._cliques],
            "tree_edges": [list(e) for e in self.edges()],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "JunctionTree":
        try:
            return cls(int(data["p"]), data["cliques"], data["tree_edges"])  # type: ignore[arg-type]
        except KeyError as exc:
            raise ValueError(f"junction tree JSON is missing key {exc}") from exc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JunctionTree):
            return NotImplemented
        return (
            self.p == other.p
            and self._cliques == other._cliques
            and self.edges() == other.edges()
        )

    def __repr__(self) -> str:
        cliques = [c.sorted() for c in self._cliques]
        return f"JunctionTree(p={self.p}, cliques={cliques}, edges={self.edges()})"


@dataclass(frozen=True)
class InducedSubtree:
    """T_v: the nodes of T containing v and their degrees inside T_v."""

    vertex: int
    root: int
    nodes: FrozenSet[int]
    degrees: Mapping[int, int]


def init_no_edge(p: int, skeleton: Iterable[Sequence[int]]) -> JunctionTree:
    """
    Junction tree of the edgeless graph: node i carries {i}.

    Raises:
        NotATree: if `skeleton` is not a tree on p nodes
    """
    return JunctionTree(p, [VertexSet([i]) for i in range(p)], skeleton)


def g_of(tree: JunctionTree) -> Graph:
    """The decomposable graph represented by `tree`."""
    rows = [0] * tree.p
    for c in tree.cliques:
        bits = c.bits
        for v in c:
            rows[v] |= bits
    return Graph(tree.p, [r & ~(1 << v) for v, r in enumerate(rows)])


def press(tree: JunctionTree) -> JunctionTree:
    """
    Compress to the reduced junction tree.

    Repeatedly absorbs a node whose clique is a subset of an adjacent
    clique, reattaching its other neighbours to the absorbing node. The
    input is not modified.
    """
    cliques = list(tree.cliques)
    adj = {i: set(tree.neighbours(i)) for i in range(tree.num_nodes)}
    changed = True
    while changed:
        changed = False
        for i in sorted(adj):
            target = next((j for j in sorted(adj[i]) if cliques[i] <= cliques[j]), None)
            if target is None:
                continue
            for k in adj[i]:
                adj[k].discard(i)
                if k != target:
                    adj[k].add(target)
                    adj[target].add(k)
            del adj[i]
            changed = True
            break
    survivors = sorted(adj)
    renumber = {old: new for new, old in enumerate(survivors)}
    edges = {(renumber[i], renumber[j]) for i in survivors for j in adj[i] if i < j}
    return JunctionTree(tree.p, [cliques[i] for i in survivors], edges)


def induced_subtree(tree: JunctionTree, v: int) -> InducedSubtree:
    """
    Raises:
        VertexUnhoused: if no clique of `tree` contains `v`
    """
    nodes = tree.nodes_containing(v)
    if not nodes:
        raise VertexUnhoused(f"vertex {v} is not contained in any clique")
    degrees = {c: sum(1 for d in tree.neighbours(c) if d in nodes) for c in nodes}
    return InducedSubtree(vertex=v, root=min(nodes), nodes=frozenset(nodes), degrees=degrees)


def _connected_within(tree: JunctionTree, nodes: Set[int]) -> bool:
    if len(nodes) <= 1:
        return True
    start = next(iter(nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in tree.neighbours(x):
            if y in nodes and y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(nodes)


def validate_junction_property(tree: JunctionTree) -> bool:
    """True iff, for every vertex, the nodes containing it are connected in the tree."""
    index: List[Set[int]] = [set() for _ in range(tree.p)]
    for node, c in enumerate(tree.cliques):
        for v in c:
            index[v].add(node)
    return all(_connected_within(tree, nodes) for nodes in index)


def count_maximal_cliques(tree: JunctionTree) -> int:
    """
    Number of maximal cliques of g_of(tree), computed on the tree.

    Adjacent nodes with equal cliques are grouped; a group is maximal when it
    is non-empty and no member has a neighbour whose clique strictly contains
    it.
    """
    n = tree.num_nodes
    group = list(range(n))

    def find(x: int) -> int:
        while group[x] != x:
            group[x] = group[group[x]]
            x = group[x]
        return x

    for i, j in tree.edges():
        if tree.clique(i) == tree.clique(j):
            group[find(i)] = find(j)
    dominated = set()
    roots = set()
    for i in range(n):
        c = tree.clique(i)
        if not c:
            continue
        root = find(i)
        roots.add(root)
        if any(c < tree.clique(j) for j in tree.neighbours(i)):
            dominated.add(root)
    return len(roots - dominated)
