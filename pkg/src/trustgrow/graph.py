"""Undirected trust graphs and the set primitives everything else builds on.

Vertices are dense integer ids in [0, n). Graphs are simple (no self-loops,
no parallel edges) and frozen after construction; adjacency is kept both as
sorted tuples and as per-vertex bitmasks so subset-heavy computations stay
cheap. External string names, if any, are the I/O layer's problem.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .errors import InputError


class VertexSet:
    """Immutable subset of the vertex range [0, n), backed by one bitmask."""

    __slots__ = ("n", "mask")

    def __init__(self, n: int, mask: int = 0):
        if n < 0:
            raise InputError(f"vertex range size must be non-negative, got {n}")
        if mask < 0 or mask >> n:
            raise InputError(f"membership mask 0x{mask:x} outside range [0, {n})")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):
        raise AttributeError("VertexSet is immutable")

    @classmethod
    def from_iterable(cls, n: int, ids: Iterable[int]) -> "VertexSet":
        mask = 0
        for v in ids:
            if not 0 <= v < n:
                raise InputError(f"vertex {v} outside range [0, {n})")
            mask |= 1 << v
        return cls(n, mask)

    @classmethod
    def full(cls, n: int) -> "VertexSet":
        return cls(n, (1 << n) - 1)

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.n and (self.mask >> v) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def _check_peer(self, other: "VertexSet") -> None:
        if not isinstance(other, VertexSet):
            raise TypeError(f"expected VertexSet, got {type(other).__name__}")
        if other.n != self.n:
            raise InputError(f"vertex ranges differ: {self.n} vs {other.n}")

    def __or__(self, other: "VertexSet") -> "VertexSet":
        self._check_peer(other)
        return VertexSet(self.n, self.mask | other.mask)

    def __and__(self, other: "VertexSet") -> "VertexSet":
        self._check_peer(other)
        return VertexSet(self.n, self.mask & other.mask)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        self._check_peer(other)
        return VertexSet(self.n, self.mask & ~other.mask)

    def complement(self) -> "VertexSet":
        return VertexSet(self.n, ~self.mask & ((1 << self.n) - 1))

    def issubset(self, other: "VertexSet") -> bool:
        self._check_peer(other)
        return self.mask & ~other.mask == 0

    def isdisjoint(self, other: "VertexSet") -> bool:
        self._check_peer(other)
        return self.mask & other.mask == 0

    def members(self) -> tuple[int, ...]:
        return tuple(self)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VertexSet)
            and self.n == other.n
            and self.mask == other.mask
        )

    def __hash__(self) -> int:
        return hash((self.n, self.mask))

    def __repr__(self) -> str:
        return f"VertexSet(n={self.n}, members={list(self)})"


class TrustGraph:
    """Simple undirected graph over identities; immutable once built.

    Neighbor lists are sorted ascending, which makes serialization and
    hashing stable for identical edge sets regardless of insertion order.
    """

    __slots__ = ("n", "neighbors", "adj_masks", "edge_count", "_hash")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise InputError(f"vertex count must be non-negative, got {n}")
        adj_masks = [0] * n
        count = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) outside vertex range [0, {n})")
            if u == v:
                raise InputError(f"self-loop at vertex {u} rejected")
            if (adj_masks[u] >> v) & 1:
                raise InputError(f"duplicate edge ({u}, {v}) rejected")
            adj_masks[u] |= 1 << v
            adj_masks[v] |= 1 << u
            count += 1
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "adj_masks", tuple(adj_masks))
        object.__setattr__(
            self,
            "neighbors",
            tuple(tuple(VertexSet(n, m)) for m in adj_masks),
        )
        object.__setattr__(self, "edge_count", count)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("TrustGraph is immutable")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "TrustGraph":
        return cls(n, edges)

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise InputError(f"vertex {v} outside range [0, {self.n})")

    def degree(self, v: int) -> int:
        self.check_vertex(v)
        return len(self.neighbors[v])

    def degrees(self) -> tuple[int, ...]:
        return tuple(len(nb) for nb in self.neighbors)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Canonical edge iteration: u < v, lexicographic."""
        for u in range(self.n):
            for v in self.neighbors[u]:
                if v > u:
                    yield (u, v)

    def has_edge(self, u: int, v: int) -> bool:
        self.check_vertex(u)
        self.check_vertex(v)
        return (self.adj_masks[u] >> v) & 1 == 1

    def vertex_set(self, ids: Iterable[int] | VertexSet) -> VertexSet:
        if isinstance(ids, VertexSet):
            if ids.n != self.n:
                raise InputError(
                    f"vertex set over range {ids.n} used with graph of size {self.n}"
                )
            return ids
        return VertexSet.from_iterable(self.n, ids)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        seen = 1
        frontier = 1
        full = (1 << self.n) - 1
        while frontier:
            nxt = 0
            m = frontier
            while m:
                low = m & -m
                nxt |= self.adj_masks[low.bit_length() - 1]
                m ^= low
            frontier = nxt & ~seen
            seen |= frontier
            if seen == full:
                return True
        return False

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TrustGraph)
            and self.n == other.n
            and self.adj_masks == other.adj_masks
        )

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((self.n, self.adj_masks))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self) -> str:
        return f"TrustGraph(n={self.n}, edges={self.edge_count})"


class GraphBuilder:
    """Single-threaded incremental construction of a TrustGraph."""

    def __init__(self, n: int):
        if n < 0:
            raise InputError(f"vertex count must be non-negative, got {n}")
        self.n = n
        self._adj = [0] * n
        self._edges: list[tuple[int, int]] = []

    @classmethod
    def from_graph(cls, g: TrustGraph) -> "GraphBuilder":
        b = cls(g.n)
        for u, v in g.edges():
            b.add_edge(u, v)
        return b

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.n and 0 <= v < self.n and (self._adj[u] >> v) & 1 == 1

    def degree(self, v: int) -> int:
        return self._adj[v].bit_count()

    def add_edge(self, u: int, v: int) -> None:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise InputError(f"edge ({u}, {v}) outside vertex range [0, {self.n})")
        if u == v:
            raise InputError(f"self-loop at vertex {u} rejected")
        if (self._adj[u] >> v) & 1:
            raise InputError(f"duplicate edge ({u}, {v}) rejected")
        self._adj[u] |= 1 << v
        self._adj[v] |= 1 << u
        self._edges.append((u, v) if u < v else (v, u))

    def add_edges(self, edges: Iterable[tuple[int, int]]) -> None:
        for u, v in edges:
            self.add_edge(u, v)

    def build(self) -> TrustGraph:
        return TrustGraph(self.n, self._edges)


def degree(g: TrustGraph, v: int) -> int:
    """Number of neighbors of v."""
    return g.degree(v)


def volume(g: TrustGraph, vertices: Iterable[int] | VertexSet) -> int:
    """Sum of degrees over the given set; 0 for the empty set."""
    a = g.vertex_set(vertices)
    return sum(len(g.neighbors[v]) for v in a)


def cut_size(
    g: TrustGraph,
    a: Iterable[int] | VertexSet,
    b: Iterable[int] | VertexSet,
) -> int:
    """Count of ordered pairs (x, y) with x in a, y in b and (x, y) an edge.

    The sets need not be disjoint; an edge inside the overlap counts twice,
    once per orientation.
    """
    aset = g.vertex_set(a)
    bmask = g.vertex_set(b).mask
    return sum((g.adj_masks[x] & bmask).bit_count() for x in aset)


def inner_boundary(
    g: TrustGraph,
    a: Iterable[int] | VertexSet,
    b: Iterable[int] | VertexSet,
) -> int:
    """Number of vertices of a with at least one neighbor in b."""
    aset = g.vertex_set(a)
    bmask = g.vertex_set(b).mask
    return sum(1 for x in aset if g.adj_masks[x] & bmask)


def induced_subgraph(
    g: TrustGraph, vertices: Iterable[int] | VertexSet
) -> tuple[TrustGraph, dict[int, int]]:
    """Subgraph on the given non-empty set, plus the old-id -> new-id map.

    New ids follow ascending old-id order, so the result is canonical for a
    given set.
    """
    a = g.vertex_set(vertices)
    if not a:
        raise InputError("induced subgraph of the empty set is undefined")
    old_ids = a.members()
    old_to_new = {old: new for new, old in enumerate(old_ids)}
    amask = a.mask
    edges = []
    for old in old_ids:
        m = g.adj_masks[old] & amask
        while m:
            low = m & -m
            other = low.bit_length() - 1
            if other > old:
                edges.append((old_to_new[old], old_to_new[other]))
            m ^= low
    return TrustGraph(len(old_ids), edges), old_to_new


def degree_bounds_ok(g: TrustGraph, alpha, d: int) -> bool:
    """True iff every degree lies in [alpha * d, d].

    The lower bound is compared as a real number, without rounding, so a
    fractional alpha * d behaves exactly like the inequality it encodes.
    """
    if not 0 <= alpha <= 1:
        raise InputError(f"alpha must lie in [0, 1], got {alpha}")
    if d < 1:
        raise InputError(f"degree cap must be at least 1, got {d}")
    lo = alpha * d
    return all(lo <= len(nb) <= d for nb in g.neighbors)
