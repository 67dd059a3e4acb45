"""
Single-vertex perturbations of junction trees.

For a vertex v the cliques of T split into the neighbour set (cliques v can
be added to) and the boundary set (leaf cliques of T_v that v can be removed
from). Both sets, the reverse-proposal counts and the graph edges touched by
a move are read off T_v and its tree neighbours without modifying T.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import FrozenSet, Iterator, List, NamedTuple, Optional, Set, Tuple

from src.config.settings import MAX_THEOREM_P
from src.core.errors import GraphError, StaleProposal, TooLarge
from src.core.graph_core import Edge, Graph, VertexSet, is_clique, maximal_cliques
from src.core.junction_tree import JunctionTree, validate_junction_property

logger = logging.getLogger(__name__)


class MoveKind(enum.Enum):
    ADD = "add"
    REMOVE = "remove"


class PartitionMember(NamedTuple):
    node: int
    anchor: int


@dataclass(frozen=True)
class PartitionSets:
    vertex: int
    neighbours: Tuple[PartitionMember, ...]
    boundary: Tuple[PartitionMember, ...]

    def for_kind(self, kind: MoveKind) -> Tuple[PartitionMember, ...]:
        return self.neighbours if kind is MoveKind.ADD else self.boundary

    def reverse_for_kind(self, kind: MoveKind) -> Tuple[PartitionMember, ...]:
        return self.boundary if kind is MoveKind.ADD else self.neighbours


@dataclass(frozen=True)
class MoveProposal:
    """Add v to, or remove v from, the clique at `target`; `anchor` is its T_v neighbour."""

    vertex: int
    kind: MoveKind
    target: int
    anchor: int
    clique: VertexSet
    new_clique: VertexSet
    anchor_clique: VertexSet
    edges_changed: Tuple[Edge, ...]

    @property
    def is_graph_update(self) -> bool:
        return bool(self.edges_changed)

    def inverse(self) -> "MoveProposal":
        kind = MoveKind.REMOVE if self.kind is MoveKind.ADD else MoveKind.ADD
        return MoveProposal(
            vertex=self.vertex,
            kind=kind,
            target=self.target,
            anchor=self.anchor,
            clique=self.new_clique,
            new_clique=self.clique,
            anchor_clique=self.anchor_clique,
            edges_changed=self.edges_changed,
        )


def partition_sets(tree: JunctionTree, v: int) -> PartitionSets:
    """Neighbour and boundary sets of v with their anchors, sorted by node."""
    tv = tree.nodes_containing(v)
    neighbours = []
    boundary = []
    multi = len(tv) > 1
    for c in tv:
        inside = []
        for d in tree.neighbours(c):
            if d in tv:
                inside.append(d)
            else:
                neighbours.append(PartitionMember(d, c))
        if multi and len(inside) == 1:
            boundary.append(PartitionMember(c, inside[0]))
    neighbours.sort()
    boundary.sort()
    return PartitionSets(vertex=v, neighbours=tuple(neighbours), boundary=tuple(boundary))


def propose_move(
    tree: JunctionTree, v: int, kind: MoveKind, member: PartitionMember
) -> MoveProposal:
    """Build the move for a partition-set member against the current tree."""
    clique = tree.clique(member.node)
    anchor_clique = tree.clique(member.anchor)
    if kind is MoveKind.ADD:
        new_clique = clique.with_vertex(v)
    else:
        new_clique = clique.without_vertex(v)
    touched = (clique - anchor_clique).without_vertex(v)
    edges = tuple(sorted((min(v, u), max(v, u)) for u in touched))
    return MoveProposal(
        vertex=v,
        kind=kind,
        target=member.node,
        anchor=member.anchor,
        clique=clique,
        new_clique=new_clique,
        anchor_clique=anchor_clique,
        edges_changed=edges,
    )


def _check_move(tree: JunctionTree, m: MoveProposal) -> None:
    tv = tree.nodes_containing(m.vertex)
    if tree.clique(m.target) != m.clique:
        raise StaleProposal(f"clique at node {m.target} changed since the move was proposed")
    if m.anchor not in tree.neighbours(m.target) or m.anchor not in tv:
        raise StaleProposal(
            f"node {m.anchor} no longer anchors node {m.target} for vertex {m.vertex}"
        )
    if m.kind is MoveKind.ADD:
        if m.target in tv:
            raise StaleProposal(f"vertex {m.vertex} already in node {m.target}")
    else:
        if m.target not in tv or len(tv) < 2:
            raise StaleProposal(f"node {m.target} is not a boundary clique of vertex {m.vertex}")
        inside = [d for d in tree.neighbours(m.target) if d in tv]
        if inside != [m.anchor]:
            raise StaleProposal(
                f"node {m.target} is not a leaf of the subtree of vertex {m.vertex}"
            )


def apply_move(tree: JunctionTree, m: MoveProposal) -> None:
    """
    Apply `m` in place.

    Raises:
        StaleProposal: if `m` does not match the current tree
    """
    _check_move(tree, m)
    tree.set_clique(m.target, m.new_clique)


def revert_move(tree: JunctionTree, m: MoveProposal) -> None:
    """Undo a previously applied `m`."""
    apply_move(tree, m.inverse())


def reverse_count_add(
    tree: JunctionTree, m: MoveProposal, sets: Optional[PartitionSets] = None
) -> int:
    """
    Size of the boundary set of v after the Add `m`, without applying it.

    The new clique becomes a leaf; the anchor stops being one if it was.
    When T_v is a single node both nodes of the new two-node subtree are leaves.
    """
    if m.kind is not MoveKind.ADD:
        raise ValueError("reverse_count_add needs an Add move")
    if sets is None:
        sets = partition_sets(tree, m.vertex)
    if len(tree.nodes_containing(m.vertex)) == 1:
        return 2
    anchor_is_leaf = any(b.node == m.anchor for b in sets.boundary)
    return len(sets.boundary) + (0 if anchor_is_leaf else 1)


def reverse_count_remove(
    tree: JunctionTree, m: MoveProposal, sets: Optional[PartitionSets] = None
) -> int:
    """
    Size of the neighbour set of v after the Remove `m`, without applying it.

    The emptied clique joins the neighbour set and its other tree neighbours
    leave it: |T+(T')| = |T+(T)| + 2 - deg(C, T).
    """
    if m.kind is not MoveKind.REMOVE:
        raise ValueError("reverse_count_remove needs a Remove move")
    if sets is None:
        sets = partition_sets(tree, m.vertex)
    return len(sets.neighbours) + 2 - tree.degree(m.target)


class UpdateCase(enum.Enum):
    """Maximal status of the updated clique before and after a move."""

    BOTH_MAXIMAL = "a"
    BECOMES_NON_MAXIMAL = "b"
    BECOMES_MAXIMAL = "c"
    BOTH_NON_MAXIMAL = "d"


def _non_maximal_in(tree: JunctionTree, node: int, clique: VertexSet) -> bool:
    return any(clique <= tree.clique(d) for d in tree.neighbours(node))


def classify_update(tree: JunctionTree, m: MoveProposal) -> UpdateCase:
    """
    Which of the four maximal/non-maximal cases `m` falls into.

    A clique counts as non-maximal when it is contained in a tree neighbour;
    the neighbours of the target are untouched by the move.
    """
    before = _non_maximal_in(tree, m.target, m.clique)
    after = _non_maximal_in(tree, m.target, m.new_clique)
    if not before:
        return UpdateCase.BECOMES_NON_MAXIMAL if after else UpdateCase.BOTH_MAXIMAL
    return UpdateCase.BOTH_NON_MAXIMAL if after else UpdateCase.BECOMES_MAXIMAL


# ---------------------------------------------------------------------------
# Connect / disconnect predicates
# ---------------------------------------------------------------------------


def _max_weight_spanning_trees(cliques: List[VertexSet]) -> Iterator[List[Edge]]:
    k = len(cliques)
    if k == 1:
        yield []
        return
    pairs = sorted(
        ((len(cliques[i] & cliques[j]), i, j) for i, j in itertools.combinations(range(k), 2)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    weights = [w for w, _, _ in pairs]

    # Kruskal weight is the target every junction tree attains
    parent = list(range(k))

    def find(par: List[int], x: int) -> int:
        while par[x] != x:
            x = par[x]
        return x

    best = 0
    for w, i, j in pairs:
        ri, rj = find(parent, i), find(parent, j)
        if ri != rj:
            parent[ri] = rj
            best += w

    def extend(start: int, chosen: List[Edge], par: List[int], weight: int) -> Iterator[List[Edge]]:
        needed = k - 1 - len(chosen)
        if needed == 0:
            if weight == best:
                yield list(chosen)
            return
        for idx in range(start, len(pairs)):
            if weight + sum(weights[idx : idx + needed]) < best:
                return
            w, i, j = pairs[idx]
            ri, rj = find(par, i), find(par, j)
            if ri == rj:
                continue
            nxt = list(par)
            nxt[ri] = rj
            chosen.append((i, j))
            yield from extend(idx + 1, chosen, nxt, weight + w)
            chosen.pop()

    yield from extend(0, [], list(range(k)), 0)


@lru_cache(maxsize=4096)
def _junction_trees_cached(g: Graph) -> Tuple[JunctionTree, ...]:
    cliques = maximal_cliques(g)
    trees = []
    for edges in _max_weight_spanning_trees(cliques):
        tree = JunctionTree(g.p, cliques, edges)
        if validate_junction_property(tree):
            trees.append(tree)
    return tuple(trees)


def junction_trees_of(g: Graph) -> List[JunctionTree]:
    """
    Every reduced junction tree of a small chordal graph.

    Raises:
        TooLarge: above MAX_THEOREM_P vertices
        NotChordal: if `g` is not chordal
    """
    if g.p > MAX_THEOREM_P:
        raise TooLarge(f"junction tree enumeration is limited to p <= {MAX_THEOREM_P}, got p={g.p}")
    return [t.copy() for t in _junction_trees_cached(g)]


def _check_theorem_args(g: Graph, V: VertexSet, U: VertexSet) -> None:
    if g.p > MAX_THEOREM_P:
        raise TooLarge(f"theorem predicates are limited to p <= {MAX_THEOREM_P}, got p={g.p}")
    if not V.isdisjoint(U):
        raise GraphError(f"V={V} and U={U} must be disjoint")
    if (V | U).bits >> g.p:
        raise GraphError(f"V and U must lie inside 0..{g.p - 1}")


def _pairs(V: VertexSet, U: VertexSet) -> FrozenSet[Edge]:
    return frozenset((min(v, u), max(v, u)) for v in V for u in U)


def _nonempty_subsets(w: List[int]) -> Iterator[Tuple[int, ...]]:
    # singletons first: they alone already make the search complete
    for size in range(1, len(w) + 1):
        yield from itertools.combinations(w, size)


def _connect_steps(g: Graph, V: VertexSet, pending: FrozenSet[Edge]) -> Iterator[FrozenSet[Edge]]:
    """
    Edge blocks {v} x W that can be connected next.

    In a reduced junction tree J of `g`, a clique C next to J_v with anchor A
    is split into (A & C) | W on the A side; adding v to that new node joins
    v to exactly W and keeps the junction property.
    """
    for tree in _junction_trees_cached(g):
        for v in V:
            for member in partition_sets(tree, v).neighbours:
                c = tree.clique(member.node)
                w = [u for u in c if (min(v, u), max(v, u)) in pending]
                for block in _nonempty_subsets(w):
                    yield frozenset((min(v, u), max(v, u)) for u in block)


def _disconnect_steps(
    g: Graph, V: VertexSet, pending: FrozenSet[Edge]
) -> Iterator[FrozenSet[Edge]]:
    """
    Edge blocks {v} x W that can be disconnected next.

    W must sit in a single node C of J_v: C is split into C - W (keeping v)
    and C - {v} (keeping W), neighbours reattached to the half that shares
    their vertices. Leaf cliques of J_v with W outside the anchor are the
    special case.
    """
    for tree in _junction_trees_cached(g):
        for v in V:
            tv = tree.nodes_containing(v)
            for node in sorted(tv):
                others = 0
                for d in tv:
                    if d != node:
                        others |= tree.clique(d).bits
                w = [
                    u
                    for u in tree.clique(node)
                    if (min(v, u), max(v, u)) in pending and not (others >> u) & 1
                ]
                for block in _nonempty_subsets(w):
                    yield frozenset((min(v, u), max(v, u)) for u in block)


def _peel(
    g: Graph, V: VertexSet, pending: FrozenSet[Edge], connect: bool, seen: Set[FrozenSet[Edge]]
) -> bool:
    if not pending:
        return True
    if pending in seen:
        return False
    seen.add(pending)
    steps = _connect_steps if connect else _disconnect_steps
    for block in steps(g, V, pending):
        nxt = g.with_edges(block) if connect else g.without_edges(block)
        if _peel(nxt, V, pending - block, connect, seen):
            return True
    return False


def check_connect_valid(g: Graph, V: VertexSet, U: VertexSet) -> bool:
    """
    Whether joining every vertex of V to every vertex of U keeps `g` decomposable.

    Decided by a path search over reduced junction trees: U is peeled off in
    blocks, each contained in a clique neighbouring the subtree of a vertex
    of V in some junction tree of the graph built so far.

    Raises:
        TooLarge: above MAX_THEOREM_P vertices
        GraphError: if V and U overlap, are not complete, or are already joined
    """
    _check_theorem_args(g, V, U)
    if not is_clique(g, V) or not is_clique(g, U):
        raise GraphError("V and U must each be complete in g")
    pending = _pairs(V, U)
    if any(g.has_edge(i, j) for i, j in pending):
        raise GraphError("V and U must not share an edge")
    return _peel(g, V, pending, connect=True, seen=set())


def check_disconnect_valid(g: Graph, V: VertexSet, U: VertexSet) -> bool:
    """
    Whether removing every edge between V and U keeps `g` decomposable.

    U is peeled off in blocks that sit in a single clique of the subtree of
    a vertex of V in some junction tree of the graph built so far.

    Raises:
        TooLarge: above MAX_THEOREM_P vertices
        GraphError: if V and U overlap or V | U is not complete
    """
    _check_theorem_args(g, V, U)
    if not is_clique(g, V | U):
        raise GraphError("V | U must be complete in g")
    return _peel(g, V, _pairs(V, U), connect=False, seen=set())
