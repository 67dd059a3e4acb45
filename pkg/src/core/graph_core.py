"""
Undirected graphs, vertex sets and chordality.

Vertex sets and adjacency rows are integer bitmasks so that clique
intersections, unions and subset tests are single machine-word operations
for moderate p.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from collections.abc import Set as AbstractSet
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.config.settings import MAX_ENUMERATION_P
from src.core.errors import NotChordal, TooLarge

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


def _popcount(bits: int) -> int:
    return bin(bits).count("1")


class VertexSet(AbstractSet):
    """An immutable set of graph vertices backed by a bitmask."""

    __slots__ = ("bits",)

    def __init__(self, members: Iterable[int] = ()) -> None:
        bits = 0
        for v in members:
            if v < 0:
                raise ValueError(f"vertex index must be non-negative, got {v}")
            bits |= 1 << v
        self.bits = bits

    @classmethod
    def from_bits(cls, bits: int) -> "VertexSet":
        vs = cls.__new__(cls)
        vs.bits = bits
        return vs

    def __contains__(self, v: object) -> bool:
        return isinstance(v, int) and v >= 0 and (self.bits >> v) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def __len__(self) -> int:
        return _popcount(self.bits)

    def __bool__(self) -> bool:
        return self.bits != 0

    def __hash__(self) -> int:
        return hash(self.bits)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, VertexSet):
            return self.bits == other.bits
        if isinstance(other, AbstractSet):
            return set(self) == set(other)
        return NotImplemented

    def __le__(self, other: "VertexSet") -> bool:
        return self.bits & ~other.bits == 0

    def __lt__(self, other: "VertexSet") -> bool:
        return self.bits != other.bits and self <= other

    def __and__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet.from_bits(self.bits & other.bits)

    def __or__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet.from_bits(self.bits | other.bits)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet.from_bits(self.bits & ~other.bits)

    def isdisjoint(self, other: Iterable[int]) -> bool:
        if isinstance(other, VertexSet):
            return self.bits & other.bits == 0
        return all(v not in self for v in other)

    def with_vertex(self, v: int) -> "VertexSet":
        return VertexSet.from_bits(self.bits | (1 << v))

    def without_vertex(self, v: int) -> "VertexSet":
        return VertexSet.from_bits(self.bits & ~(1 << v))

    def sorted(self) -> List[int]:
        return list(self)

    def __repr__(self) -> str:
        return f"VertexSet({self.sorted()})"


EMPTY = VertexSet()


class Graph:
    """
    Undirected simple graph on vertices 0..p-1.

    Adjacency is stored as one neighbour bitmask per vertex; instances are
    immutable and hashable so they can be shared across chains and used as
    dictionary keys.
    """

    __slots__ = ("p", "rows")

    def __init__(self, p: int, rows: Optional[Sequence[int]] = None) -> None:
        if p < 0:
            raise ValueError(f"vertex count must be non-negative, got {p}")
        self.p = p
        self.rows: Tuple[int, ...] = tuple(rows) if rows is not None else (0,) * p
        if len(self.rows) != p:
            raise ValueError(f"expected {p} adjacency rows, got {len(self.rows)}")

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[Edge]) -> "Graph":
        rows = [0] * p
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < p and 0 <= j < p):
                raise ValueError(f"edge ({i}, {j}) outside 0..{p - 1}")
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        return cls(p, rows)

    @classmethod
    def complete(cls, p: int) -> "Graph":
        full = (1 << p) - 1
        return cls(p, [full & ~(1 << i) for i in range(p)])

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Graph":
        """Build a graph from a symmetric 0/1 adjacency matrix."""
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {a.shape}")
        if not np.array_equal(a != 0, (a != 0).T):
            raise ValueError("adjacency matrix is not symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency matrix has self-loops")
        p = a.shape[0]
        ii, jj = np.nonzero(np.triu(a != 0, k=1))
        return cls.from_edges(p, zip(ii.tolist(), jj.tolist()))

    def to_matrix(self) -> np.ndarray:
        m = np.zeros((self.p, self.p), dtype=np.int8)
        for i, j in self.edges():
            m[i, j] = m[j, i] = 1
        return m

    def has_edge(self, i: int, j: int) -> bool:
        return (self.rows[i] >> j) & 1 == 1

    def neighbours(self, v: int) -> VertexSet:
        return VertexSet.from_bits(self.rows[v])

    def degree(self, v: int) -> int:
        return _popcount(self.rows[v])

    def edges(self) -> List[Edge]:
        """Edges (i, j) with i < j in lexicographic order."""
        out = []
        for i in range(self.p):
            for j in VertexSet.from_bits(self.rows[i] >> (i + 1) << (i + 1)):
                out.append((i, j))
        return out

    @property
    def edge_count(self) -> int:
        return sum(_popcount(r) for r in self.rows) // 2

    def with_edges(self, edges: Iterable[Edge]) -> "Graph":
        rows = list(self.rows)
        for i, j in edges:
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        return Graph(self.p, rows)

    def without_edges(self, edges: Iterable[Edge]) -> "Graph":
        rows = list(self.rows)
        for i, j in edges:
            rows[i] &= ~(1 << j)
            rows[j] &= ~(1 << i)
        return Graph(self.p, rows)

    def digest(self) -> str:
        """Stable hash of the canonical edge list."""
        text = f"{self.p}:" + ";".join(f"{i},{j}" for i, j in self.edges())
        return hashlib.sha1(text.encode("ascii")).hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.p == other.p and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.p, self.rows))

    def __repr__(self) -> str:
        return f"Graph(p={self.p}, edges={self.edges()})"


def is_clique(g: Graph, vertices: VertexSet) -> bool:
    """True if every pair of `vertices` is adjacent in `g`."""
    for v in vertices:
        rest = vertices.bits & ~(1 << v)
        if rest & ~g.rows[v]:
            return False
    return True


def hamming_distance(g1: Graph, g2: Graph) -> int:
    """Number of vertex pairs on which the two graphs disagree."""
    if g1.p != g2.p:
        raise ValueError(f"graphs have different vertex counts: {g1.p} vs {g2.p}")
    return sum(_popcount(a ^ b) for a, b in zip(g1.rows, g2.rows)) // 2


def mcs_order(g: Graph) -> List[int]:
    """
    Maximum cardinality search ordering.

    Among unnumbered vertices with the largest number of numbered
    neighbours, the lowest index is chosen.
    """
    p = g.p
    weight = [0] * p
    numbered = 0
    order = []
    for _ in range(p):
        best = -1
        best_w = -1
        for v in range(p):
            if not (numbered >> v) & 1 and weight[v] > best_w:
                best, best_w = v, weight[v]
        order.append(best)
        numbered |= 1 << best
        for u in VertexSet.from_bits(g.rows[best] & ~numbered):
            weight[u] += 1
    return order


def _prior_neighbours(g: Graph, order: Sequence[int]) -> List[Tuple[int, int, Optional[int]]]:
    """For each vertex in MCS order: (vertex, earlier-neighbour bits, last earlier neighbour)."""
    position = {v: k for k, v in enumerate(order)}
    seen = 0
    out = []
    for v in order:
        prior = g.rows[v] & seen
        last = None
        if prior:
            last = max(VertexSet.from_bits(prior), key=position.__getitem__)
        out.append((v, prior, last))
        seen |= 1 << v
    return out


def is_chordal(g: Graph) -> bool:
    """
    Decide chordality with maximum cardinality search and a zero fill-in test.

    In the MCS order, the earlier neighbours of every vertex must form a
    clique; it is enough to check that they are all adjacent to the most
    recently numbered one.
    """
    for v, prior, last in _prior_neighbours(g, mcs_order(g)):
        if last is None:
            continue
        rest = prior & ~(1 << last)
        if rest & ~g.rows[last]:
            return False
    return True


def maximal_cliques(g: Graph) -> List[VertexSet]:
    """
    Maximal cliques of a chordal graph, in MCS discovery order.

    Raises:
        NotChordal: if `g` is not chordal
    """
    if not is_chordal(g):
        raise NotChordal(f"graph with {g.edge_count} edges on {g.p} vertices is not chordal")
    candidates = [prior | (1 << v) for v, prior, _ in _prior_neighbours(g, mcs_order(g))]
    cliques = []
    for k, c in enumerate(candidates):
        dominated = any(
            j != k and (c & ~d) == 0 and (c != d or j < k) for j, d in enumerate(candidates)
        )
        if not dominated:
            cliques.append(VertexSet.from_bits(c))
    return cliques


def mcs_clique_tree(g: Graph) -> "JunctionTree":
    """
    Reduced junction tree of a chordal graph.

    Nodes are the maximal cliques; the tree is a maximum-weight spanning
    tree of the clique intersection graph (Kruskal, ties broken by node
    index), which realises the running intersection property. Disconnected
    components are joined through empty separators.

    Raises:
        NotChordal: if `g` is not chordal
    """
    from src.core.junction_tree import JunctionTree

    cliques = maximal_cliques(g)
    k = len(cliques)
    pairs = sorted(
        ((-len(cliques[i] & cliques[j]), i, j) for i in range(k) for j in range(i + 1, k)),
    )
    parent = list(range(k))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
            if len(edges) == k - 1:
                break
    return JunctionTree(g.p, cliques, edges)


def all_graphs(p: int) -> Iterator[Graph]:
    """Every labeled graph on p vertices, in order of the upper-triangle bitmask."""
    pairs = list(itertools.combinations(range(p), 2))
    for mask in range(1 << len(pairs)):
        yield Graph.from_edges(p, (pairs[k] for k in range(len(pairs)) if (mask >> k) & 1))


def enumerate_decomposable_graphs(p: int) -> List[Graph]:
    """
    All labeled chordal graphs on p vertices.

    Raises:
        TooLarge: if p exceeds MAX_ENUMERATION_P
    """
    if p > MAX_ENUMERATION_P:
        raise TooLarge(f"enumeration is limited to p <= {MAX_ENUMERATION_P}, got p={p}")
    graphs = [g for g in all_graphs(p) if is_chordal(g)]
    logger.debug("Enumerated %d decomposable graphs on %d vertices", len(graphs), p)
    return graphs
