"""Ground-truth identity labels, growing communities, and penetration metrics.

An identity is either genuine or a sybil. Genuine identities that trust a
sybil at any point (or are marked as latently willing to) are corrupt; the
rest are honest. Sybils and corrupt identities together form the byzantine
set, which is the quantity the growth theorems bound.

All ratio metrics are exact rationals so that threshold comparisons never
depend on floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import InputError, LedgerConsistencyError, UndefinedMetricError
from .graph import TrustGraph, VertexSet


@dataclass(frozen=True)
class IdentityRecord:
    genuine: bool
    corrupt_at_heart: bool = False


class IdentityLedger:
    """Per-vertex ground truth: genuine vs sybil, plus latent-corruption flags.

    ``corrupt_at_heart`` asserts that a genuine identity is (or will become)
    a sybil collaborator even while no sybil edge is visible yet. A ledger
    understates corruption if a genuine vertex without the flag turns out to
    be adjacent to a sybil; strict classification treats that as an error.
    """

    __slots__ = ("n", "records", "sybil_mask", "genuine_mask", "flagged_mask")

    def __init__(self, records: Iterable[IdentityRecord]):
        records = tuple(records)
        sybil_mask = 0
        flagged_mask = 0
        for v, rec in enumerate(records):
            if not rec.genuine:
                if rec.corrupt_at_heart:
                    raise InputError(
                        f"vertex {v}: corrupt_at_heart is meaningful only for genuine identities"
                    )
                sybil_mask |= 1 << v
            elif rec.corrupt_at_heart:
                flagged_mask |= 1 << v
        n = len(records)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "sybil_mask", sybil_mask)
        object.__setattr__(self, "genuine_mask", ~sybil_mask & ((1 << n) - 1))
        object.__setattr__(self, "flagged_mask", flagged_mask)

    def __setattr__(self, name, value):
        raise AttributeError("IdentityLedger is immutable")

    @classmethod
    def from_sets(
        cls, n: int, sybils: Iterable[int] = (), corrupt: Iterable[int] = ()
    ) -> "IdentityLedger":
        sybils = set(sybils)
        corrupt = set(corrupt)
        for v in sybils | corrupt:
            if not 0 <= v < n:
                raise InputError(f"vertex {v} outside range [0, {n})")
        if sybils & corrupt:
            raise InputError("a vertex cannot be both sybil and corrupt-genuine")
        return cls(
            IdentityRecord(genuine=v not in sybils, corrupt_at_heart=v in corrupt)
            for v in range(n)
        )

    def sybils(self) -> VertexSet:
        return VertexSet(self.n, self.sybil_mask)

    def genuine(self) -> VertexSet:
        return VertexSet(self.n, self.genuine_mask)

    def flagged_corrupt(self) -> VertexSet:
        return VertexSet(self.n, self.flagged_mask)

    def __eq__(self, other) -> bool:
        return isinstance(other, IdentityLedger) and self.records == other.records

    def __hash__(self) -> int:
        return hash(self.records)


@dataclass(frozen=True)
class Partition:
    """The honest / corrupt / sybil split, with byzantine = corrupt + sybil."""

    honest: VertexSet
    corrupt: VertexSet
    sybil: VertexSet

    @property
    def byzantine(self) -> VertexSet:
        return self.corrupt | self.sybil


@dataclass(frozen=True)
class CommunityTrustGraph:
    """A trust graph together with the distinguished community inside it."""

    graph: TrustGraph
    community: VertexSet

    def __post_init__(self):
        if self.community.n != self.graph.n:
            raise InputError(
                f"community range {self.community.n} does not match graph size {self.graph.n}"
            )
        if not self.community:
            raise InputError("community must be non-empty")


@dataclass(frozen=True)
class HistoryStep:
    community: VertexSet
    graph: TrustGraph

    def as_ctg(self) -> CommunityTrustGraph:
        return CommunityTrustGraph(self.graph, self.community)


class CommunityHistory:
    """A sequence of strictly growing communities over a fixed vertex set.

    Each step carries its own edge snapshot; edges only accumulate, which
    covers both the fixed-edge-set reading (all snapshots equal) and growth
    processes where trust keeps forming between steps.
    """

    __slots__ = ("steps",)

    def __init__(self, steps: Iterable[HistoryStep]):
        steps = tuple(steps)
        if not steps:
            raise InputError("a community history needs at least one step")
        n = steps[0].graph.n
        for i, step in enumerate(steps):
            if step.graph.n != n:
                raise InputError("all steps must share one vertex set")
            if not step.community:
                raise InputError(f"step {i}: community must be non-empty")
        for prev, nxt in zip(steps, steps[1:]):
            if not prev.community.issubset(nxt.community) or prev.community == nxt.community:
                raise InputError("communities must grow strictly at every step")
            for v in range(n):
                if prev.graph.adj_masks[v] & ~nxt.graph.adj_masks[v]:
                    raise InputError("edges may only accumulate across steps")
        object.__setattr__(self, "steps", steps)

    def __setattr__(self, name, value):
        raise AttributeError("CommunityHistory is immutable")

    @classmethod
    def start(cls, graph: TrustGraph, community: VertexSet | Iterable[int]) -> "CommunityHistory":
        return cls([HistoryStep(graph.vertex_set(community), graph)])

    @property
    def n(self) -> int:
        return self.steps[0].graph.n

    def __len__(self) -> int:
        return len(self.steps)

    def current(self) -> HistoryStep:
        return self.steps[-1]

    def extended(
        self, community: VertexSet | Iterable[int], graph: TrustGraph | None = None
    ) -> "CommunityHistory":
        graph = graph if graph is not None else self.steps[-1].graph
        return CommunityHistory(self.steps + (HistoryStep(graph.vertex_set(community), graph),))

    def edge_union_masks(self) -> tuple[int, ...]:
        """Per-vertex adjacency of the union of all step edge sets.

        Because edges only accumulate this equals the last snapshot, but it
        is computed as a union so the invariant is not silently assumed.
        """
        masks = [0] * self.n
        for step in self.steps:
            for v in range(self.n):
                masks[v] |= step.graph.adj_masks[v]
        return tuple(masks)


def _partition_from_masks(
    ledger: IdentityLedger, adj_masks: tuple[int, ...], strict: bool
) -> Partition:
    n = ledger.n
    revealed = 0
    for v in range(n):
        if (ledger.genuine_mask >> v) & 1 and adj_masks[v] & ledger.sybil_mask:
            revealed |= 1 << v
    understated = revealed & ~ledger.flagged_mask
    if strict and understated:
        bad = list(VertexSet(n, understated))
        raise LedgerConsistencyError(
            f"ledger marks {bad} as honest but they trust sybils"
        )
    corrupt_mask = (ledger.flagged_mask | revealed) & ledger.genuine_mask
    honest_mask = ledger.genuine_mask & ~corrupt_mask
    return Partition(
        honest=VertexSet(n, honest_mask),
        corrupt=VertexSet(n, corrupt_mask),
        sybil=VertexSet(n, ledger.sybil_mask),
    )


def partition_for_graph(
    graph: TrustGraph, ledger: IdentityLedger, strict: bool = True
) -> Partition:
    """Classify identities against a single trust graph snapshot."""
    if ledger.n != graph.n:
        raise InputError(f"ledger covers {ledger.n} vertices, graph has {graph.n}")
    return _partition_from_masks(ledger, graph.adj_masks, strict)


def classify(
    history: CommunityHistory, ledger: IdentityLedger, strict: bool = True
) -> Partition:
    """Classify identities against everything a history ever revealed.

    A genuine vertex is corrupt if it is flagged corrupt_at_heart or if it
    is adjacent to a sybil in the union of all step edge sets; honest
    otherwise. In strict mode (the default) an unflagged genuine vertex with
    a sybil edge raises, because the ledger understated corruption.
    """
    if ledger.n != history.n:
        raise InputError(f"ledger covers {ledger.n} vertices, history has {history.n}")
    return _partition_from_masks(ledger, history.edge_union_masks(), strict)


def sybil_penetration(ctg: CommunityTrustGraph, ledger: IdentityLedger) -> Fraction:
    """|A and S| / |A| for community A."""
    part = partition_for_graph(ctg.graph, ledger)
    return Fraction(len(ctg.community & part.sybil), len(ctg.community))


def byzantine_penetration(ctg: CommunityTrustGraph, ledger: IdentityLedger) -> Fraction:
    """|A and B| / |A| for community A, byzantine B."""
    part = partition_for_graph(ctg.graph, ledger)
    return Fraction(len(ctg.community & part.byzantine), len(ctg.community))


def corrupt_fraction(ctg: CommunityTrustGraph, ledger: IdentityLedger) -> Fraction:
    """|A and C| / |A| for community A, corrupt C."""
    part = partition_for_graph(ctg.graph, ledger)
    return Fraction(len(ctg.community & part.corrupt), len(ctg.community))


def attack_edge_ratio(ctg: CommunityTrustGraph, ledger: IdentityLedger) -> Fraction:
    """Internal honest-to-byzantine edges over the honest internal volume.

    Both counts are taken inside the subgraph induced on the community, so
    trust edges leaving the community affect neither numerator nor
    denominator.
    """
    part = partition_for_graph(ctg.graph, ledger)
    amask = ctg.community.mask
    hmask = part.honest.mask & amask
    bmask = part.byzantine.mask & amask
    g = ctg.graph
    vol_h = 0
    attack = 0
    m = hmask
    while m:
        low = m & -m
        v = low.bit_length() - 1
        inside = g.adj_masks[v] & amask
        vol_h += inside.bit_count()
        attack += (inside & bmask).bit_count()
        m ^= low
    if vol_h == 0:
        raise UndefinedMetricError(
            "attack edge ratio undefined: honest members have no internal volume"
        )
    return Fraction(attack, vol_h)
