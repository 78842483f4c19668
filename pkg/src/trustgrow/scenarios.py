"""Scenario generators, the sampling estimator, and parameter sweeps.

Everything here is a pure function of (config, seed): generated graphs,
ledgers, and histories are bit-identical across runs with the same inputs.
The adversary follows a greedy-infiltration strategy: spend the attack-edge
budget connecting corrupt members to honest community members, then park
sybil cliques behind the corrupt ones. Honest-to-sybil edges are never
created.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, log, sqrt

from . import engine
from .engine import AdmissionVerdict, GrowthPolicy
from .errors import InputError
from .graph import GraphBuilder, TrustGraph, VertexSet
from .identity import (
    CommunityHistory,
    CommunityTrustGraph,
    IdentityLedger,
    IdentityRecord,
)

_REGULAR_RETRY_CAP = 1000


def gen_random_regular(n: int, d: int, seed: int, max_retries: int = _REGULAR_RETRY_CAP) -> TrustGraph:
    """Random d-regular simple graph via stub matching.

    Degree stubs are paired uniformly; pairs that would form a self-loop or
    duplicate edge are thrown back and re-paired, and the attempt restarts
    from scratch if a round makes no progress. Deterministic under seed.
    """
    if d < 0 or n < 0:
        raise InputError("n and d must be non-negative")
    if d >= n and n > 0:
        raise InputError(f"degree {d} impossible on {n} vertices")
    if (n * d) % 2 != 0:
        raise InputError(f"n*d must be even, got n={n}, d={d}")
    rng = random.Random(seed)
    for _ in range(max_retries):
        edges: set[tuple[int, int]] = set()
        stubs = list(range(n)) * d
        failed = False
        while stubs:
            rng.shuffle(stubs)
            leftover: list[int] = []
            progressed = False
            it = iter(stubs)
            for u, v in zip(it, it):
                if u > v:
                    u, v = v, u
                if u != v and (u, v) not in edges:
                    edges.add((u, v))
                    progressed = True
                else:
                    leftover.append(u)
                    leftover.append(v)
            if not progressed:
                failed = True
                break
            stubs = leftover
        if not failed:
            return TrustGraph(n, sorted(edges))
    raise InputError(
        f"could not realize a simple {d}-regular graph on {n} vertices "
        f"after {max_retries} attempts"
    )


def gen_bottleneck(
    k_honest: int,
    k_byz: int,
    bridges: int = 1,
    mode: str = "corrupt_edge",
    seed: int = 0,
) -> tuple[TrustGraph, IdentityLedger]:
    """Two tightly-knit clusters joined through a thin corrupt interface.

    corrupt_edge: two cliques linked by `bridges` trust edges; the linked
    vertices on the byzantine side are corrupt, the rest of that clique are
    sybils. corrupt_vertex: a clique of honest identities and a clique of
    sybils, joined through `bridges` corrupt hub vertices trusted by every
    member of both cliques.
    """
    if k_honest < 2 or k_byz < 2:
        raise InputError("both clusters need at least 2 members")
    if bridges < 1:
        raise InputError("at least one bridge is required")
    rng = random.Random(seed)
    if mode == "corrupt_edge":
        n = k_honest + k_byz
        builder = GraphBuilder(n)
        for i in range(k_honest):
            for j in range(i + 1, k_honest):
                builder.add_edge(i, j)
        for i in range(k_honest, n):
            for j in range(i + 1, n):
                builder.add_edge(i, j)
        if bridges > k_honest * k_byz:
            raise InputError("more bridges than available cross pairs")
        pairs = [(h, b) for h in range(k_honest) for b in range(k_honest, n)]
        chosen = rng.sample(pairs, bridges)
        corrupt = sorted({b for _, b in chosen})
        for h, b in sorted(chosen):
            builder.add_edge(h, b)
        sybils = [v for v in range(k_honest, n) if v not in corrupt]
        ledger = IdentityLedger.from_sets(n, sybils=sybils, corrupt=corrupt)
        return builder.build(), ledger
    if mode == "corrupt_vertex":
        n = k_honest + k_byz + bridges
        builder = GraphBuilder(n)
        for i in range(k_honest):
            for j in range(i + 1, k_honest):
                builder.add_edge(i, j)
        for i in range(k_honest, k_honest + k_byz):
            for j in range(i + 1, k_honest + k_byz):
                builder.add_edge(i, j)
        hubs = list(range(k_honest + k_byz, n))
        for hub in hubs:
            for v in range(k_honest + k_byz):
                builder.add_edge(hub, v)
        sybils = list(range(k_honest, k_honest + k_byz))
        ledger = IdentityLedger.from_sets(n, sybils=sybils, corrupt=hubs)
        return builder.build(), ledger
    raise InputError(f"unknown bottleneck mode {mode!r}")


@dataclass(frozen=True)
class AdversaryConfig:
    num_corrupt: int = 0
    attack_edge_budget: int = 0      # new attack edges per step
    sybil_supply: int = 0

    def __post_init__(self):
        if min(self.num_corrupt, self.attack_edge_budget, self.sybil_supply) < 0:
            raise InputError("adversary parameters must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    initial_size: int
    d: int
    honest_growth_rate: float        # candidate arrivals per step, relative to |A|
    adversary: AdversaryConfig
    steps: int
    policy: GrowthPolicy
    enforce_gates: bool = True

    def __post_init__(self):
        if self.initial_size < 2:
            raise InputError("initial community needs at least 2 members")
        if self.d < 1:
            raise InputError("degree cap must be at least 1")
        if self.honest_growth_rate < 0:
            raise InputError("honest growth rate must be non-negative")
        if self.steps < 0:
            raise InputError("step count must be non-negative")


@dataclass(frozen=True)
class StepRecord:
    index: int
    added_members: tuple[int, ...]
    added_edges: tuple[tuple[int, int], ...]
    verdict: AdmissionVerdict | None


@dataclass(frozen=True)
class ScenarioRun:
    config: ScenarioConfig
    history: CommunityHistory
    ledger: IdentityLedger
    records: tuple[StepRecord, ...]
    attack_edges_created: int


def _initial_degree(cfg: ScenarioConfig) -> int:
    policy = cfg.policy
    if policy.mode == engine.CONDUCTANCE:
        d0 = max(2, ceil(policy.alpha * policy.d))
    else:
        d0 = max(2, min(cfg.d, (cfg.initial_size - 1) // 2 + 1))
    d0 = min(d0, cfg.initial_size - 1)
    if (cfg.initial_size * d0) % 2 != 0:
        d0 += 1 if d0 + 1 <= min(cfg.d, cfg.initial_size - 1) else -1
    if d0 < 1:
        raise InputError("initial community too small for the requested degrees")
    return d0


def _attach_arrival(
    builder: GraphBuilder,
    rng: random.Random,
    vertex: int,
    targets: list[int],
    want: int,
    cap: int,
) -> None:
    """Connect a new member to `want` targets, never pushing anyone past cap."""
    eligible = [t for t in targets if builder.degree(t) < cap and not builder.has_edge(vertex, t)]
    rng.shuffle(eligible)
    # fill from the least-loaded side so degrees stay inside the band
    eligible.sort(key=builder.degree)
    for t in eligible[:want]:
        builder.add_edge(vertex, t)


def gen_history(config: ScenarioConfig) -> ScenarioRun:
    """Simulate an adversarial community history under the given policy.

    Per step: honest candidates arrive and wire themselves into the
    community; the adversary spends its per-step attack-edge budget and
    parks sybils behind corrupt members; then the growth engine is invoked
    (or, with gates disabled, the same greedy batch is admitted unchecked).
    """
    cfg = config
    policy = cfg.policy
    rng = random.Random(cfg.seed)

    # --- vertex budget ---------------------------------------------------
    grow_factor = 1 + max(cfg.honest_growth_rate, float(policy.delta))
    projected = cfg.initial_size * grow_factor ** max(cfg.steps, 1)
    honest_pool = int(ceil(projected)) + cfg.steps + 8
    n_initial = cfg.initial_size
    first_corrupt = n_initial + honest_pool
    first_sybil = first_corrupt + cfg.adversary.num_corrupt
    n = first_sybil + cfg.adversary.sybil_supply
    corrupt_ids = list(range(first_corrupt, first_sybil))
    sybil_ids = list(range(first_sybil, n))

    corrupt_set = set(corrupt_ids)
    ledger = IdentityLedger(
        [
            IdentityRecord(genuine=v < first_sybil, corrupt_at_heart=v in corrupt_set)
            for v in range(n)
        ]
    )

    # --- initial community ----------------------------------------------
    d0 = _initial_degree(cfg)
    seed_graph = gen_random_regular(n_initial, d0, rng.randrange(2**32))
    builder = GraphBuilder(n)
    for u, v in seed_graph.edges():
        builder.add_edge(u, v)

    # sybil cliques, pre-wired among themselves and to corrupt patrons
    if sybil_ids and corrupt_ids:
        clique_size = max(2, ceil(policy.alpha * policy.d)) if policy.mode == engine.CONDUCTANCE else 3
        for start in range(0, len(sybil_ids), clique_size):
            clique = sybil_ids[start : start + clique_size]
            for i, u in enumerate(clique):
                for v in clique[i + 1 :]:
                    builder.add_edge(u, v)
            patron = corrupt_ids[(start // clique_size) % len(corrupt_ids)]
            for u in clique[: min(2, len(clique))]:
                builder.add_edge(patron, u)
        # corrupt members loosely trust each other
        for i in range(len(corrupt_ids) - 1):
            builder.add_edge(corrupt_ids[i], corrupt_ids[i + 1])

    community = VertexSet.from_iterable(n, range(n_initial))
    graph = builder.build()
    history = engine.start_history(graph, community, policy)
    records = [
        StepRecord(0, tuple(range(n_initial)), tuple(graph.edges()), None)
    ]

    next_honest = n_initial
    attack_created = 0
    target_degree = max(2, ceil(policy.alpha * policy.d)) if policy.mode == engine.CONDUCTANCE else None

    for step_index in range(1, cfg.steps + 1):
        community = history.current().community
        members = list(community)
        prev_edges = set(history.current().graph.edges())

        # --- honest arrivals ---------------------------------------------
        arrivals: list[int] = []
        want_new = floor(cfg.honest_growth_rate * len(community))
        for _ in range(want_new):
            if next_honest >= first_corrupt:
                break
            arrivals.append(next_honest)
            next_honest += 1
        placed: list[int] = []
        for v in arrivals:
            if policy.mode == engine.CONDUCTANCE:
                want = target_degree
            else:
                # dense attachment keeps the inner boundary of any subset high
                want = max(2, ceil(0.6 * (len(members) + len(placed))))
            _attach_arrival(builder, rng, v, members + placed, want, cfg.d)
            placed.append(v)

        # --- adversary: attack edges, then sybils behind corrupt ----------
        if corrupt_ids:
            honest_members = [v for v in members if v < first_corrupt]
            for _ in range(cfg.adversary.attack_edge_budget):
                c = rng.choice(corrupt_ids)
                targets = [
                    h
                    for h in honest_members
                    if builder.degree(h) < cfg.d and not builder.has_edge(c, h)
                ]
                if not targets:
                    break
                h = rng.choice(targets)
                builder.add_edge(c, h)
                attack_created += 1

        graph = builder.build()

        # --- candidate pool: anyone already trusted by the community ------
        pool_ids = set()
        cmask = community.mask
        for v in range(n):
            if v not in community and graph.adj_masks[v] & cmask:
                pool_ids.add(v)
        pool = VertexSet.from_iterable(n, sorted(pool_ids))

        if cfg.enforce_gates:
            new_history, verdict = engine.grow(history, pool, policy, graph=graph)
        else:
            new_history, verdict = _grow_ungated(history, pool, policy, graph)

        added_members = tuple(
            sorted(new_history.current().community - community)
        ) if len(new_history) > len(history) else ()
        added_edges = tuple(sorted(set(graph.edges()) - prev_edges))
        records.append(StepRecord(step_index, added_members, added_edges, verdict))
        history = new_history

    return ScenarioRun(
        config=cfg,
        history=history,
        ledger=ledger,
        records=tuple(records),
        attack_edges_created=attack_created,
    )


def _grow_ungated(
    history: CommunityHistory,
    pool: VertexSet,
    policy: GrowthPolicy,
    graph: TrustGraph,
) -> tuple[CommunityHistory, AdmissionVerdict | None]:
    """Admit the greedy batch without any connectivity or degree checks.

    The growth cap is still respected so the negative control isolates the
    effect of the admission gate itself.
    """
    community = history.current().community
    if not pool:
        return history, None
    cap = floor(policy.delta * len(community))
    if cap == 0:
        return history, None
    ranked = sorted(
        pool, key=lambda v: (-(graph.adj_masks[v] & community.mask).bit_count(), v)
    )
    batch = VertexSet.from_iterable(graph.n, ranked[:cap])
    return history.extended(community | batch, graph), None


@dataclass(frozen=True)
class LedgerExaminer:
    """A ground-truth oracle answering the per-identity checks.

    Radius 0 reveals whether an identity is a sybil; radius 1 additionally
    reveals explicit corruption (a sybil neighbor); latent corruption is
    invisible at every radius.
    """

    ledger: IdentityLedger

    def is_sybil(self, v: int) -> bool:
        return not self.ledger.records[v].genuine

    def is_explicit_corrupt(self, graph: TrustGraph, v: int) -> bool:
        return (
            self.ledger.records[v].genuine
            and graph.adj_masks[v] & self.ledger.sybil_mask != 0
        )

    def is_explicit_byzantine(self, graph: TrustGraph, v: int) -> bool:
        return self.is_sybil(v) or self.is_explicit_corrupt(graph, v)


@dataclass(frozen=True)
class EstimateReport:
    sample_size: int
    radius: int
    beta_hat: Fraction
    beta_interval: tuple[float, float]
    gamma_hat: Fraction | None
    gamma_interval: tuple[float, float] | None
    census: bool


def _hoeffding_half_width(m: int, confidence: float = 0.95) -> float:
    return sqrt(log(2.0 / (1.0 - confidence)) / (2.0 * m))


def estimate_parameters(
    ctg: CommunityTrustGraph,
    examiner: LedgerExaminer,
    sample_size: int,
    radius: int,
    seed: int,
) -> EstimateReport:
    """Estimate byzantine penetration (and attack scarcity) by random checks.

    Members are sampled uniformly without replacement. At radius 0 only
    sybils are detectable, so beta_hat degenerates to a sybil-penetration
    estimate; radius 1 adds explicit corruption; radius 2 also examines each
    sampled honest member's neighbors, enabling the attack-edge estimate.
    Intervals are two-sided 95% Hoeffding bounds; a census (sampling the
    whole community) gets a zero-width interval by convention.
    """
    if radius not in (0, 1, 2):
        raise InputError(f"examination radius must be 0, 1, or 2, got {radius}")
    members = ctg.community.members()
    if sample_size < 1:
        raise InputError("sample size must be at least 1")
    if sample_size > len(members):
        raise InputError(
            f"sample size {sample_size} exceeds community size {len(members)}"
        )
    rng = random.Random(seed)
    sample = sorted(rng.sample(members, sample_size))
    graph = ctg.graph

    if radius == 0:
        byz_hits = sum(1 for v in sample if examiner.is_sybil(v))
    else:
        byz_hits = sum(1 for v in sample if examiner.is_explicit_byzantine(graph, v))
    beta_hat = Fraction(byz_hits, sample_size)

    census = sample_size == len(members)
    if census:
        beta_interval = (float(beta_hat), float(beta_hat))
    else:
        w = _hoeffding_half_width(sample_size)
        beta_interval = (max(0.0, float(beta_hat) - w), min(1.0, float(beta_hat) + w))

    gamma_hat = None
    gamma_interval = None
    if radius == 2:
        amask = ctg.community.mask
        explicit_byz_mask = 0
        for v in range(graph.n):
            if examiner.is_explicit_byzantine(graph, v):
                explicit_byz_mask |= 1 << v
        attack = 0
        vol = 0
        per_member: list[float] = []
        for v in sample:
            if examiner.is_explicit_byzantine(graph, v):
                continue
            inside = graph.adj_masks[v] & amask
            deg = inside.bit_count()
            hit = (inside & explicit_byz_mask).bit_count()
            attack += hit
            vol += deg
            if deg:
                per_member.append(hit / deg)
        if vol > 0:
            gamma_hat = Fraction(attack, vol)
            if census:
                gamma_interval = (float(gamma_hat), float(gamma_hat))
            elif per_member:
                w = _hoeffding_half_width(len(per_member))
                center = sum(per_member) / len(per_member)
                gamma_interval = (max(0.0, center - w), min(1.0, center + w))
    return EstimateReport(
        sample_size=sample_size,
        radius=radius,
        beta_hat=beta_hat,
        beta_interval=beta_interval,
        gamma_hat=gamma_hat,
        gamma_interval=gamma_interval,
        census=census,
    )


@dataclass(frozen=True)
class SweepRow:
    mode: str
    phi: Fraction
    beta: Fraction
    alpha: Fraction | None
    gamma_max: Fraction
    feasible: bool


def sweep_interplay(
    mode: str,
    phi_grid: list,
    beta_grid: list,
    alpha=1,
) -> list[SweepRow]:
    """Largest tolerable gamma for each (connectivity, beta) pair.

    Conductance mode inverts the admission threshold into
    gamma_e = phi * alpha * beta / (1 - beta); vertex mode into
    gamma_v = phi * beta. All arithmetic is exact.
    """
    if mode not in (engine.CONDUCTANCE, engine.VERTEX_EXPANSION):
        raise InputError(f"unknown sweep mode {mode!r}")
    alpha_f = engine._frac(alpha, "alpha")
    if not 0 < alpha_f <= 1:
        raise InputError(f"alpha must lie in (0, 1], got {alpha_f}")
    rows = []
    for phi in phi_grid:
        phi_f = engine._frac(phi, "phi")
        for beta in beta_grid:
            beta_f = engine._frac(beta, "beta")
            if not 0 < beta_f <= Fraction(1, 2):
                raise InputError(f"beta must lie in (0, 1/2], got {beta_f}")
            if mode == engine.CONDUCTANCE:
                gamma = phi_f * alpha_f * beta_f / (1 - beta_f)
                feasible = phi_f <= Fraction(1, 2)
                rows.append(SweepRow(mode, phi_f, beta_f, alpha_f, gamma, feasible))
            else:
                gamma = phi_f * beta_f
                feasible = phi_f <= 1
                rows.append(SweepRow(mode, phi_f, beta_f, None, gamma, feasible))
    return rows


def fig_example_community() -> tuple[TrustGraph, IdentityLedger, VertexSet]:
    """A nine-member worked example with one sybil and two corrupt members.

    Six honest members share seven internal trust edges; one explicit
    corrupt member trusts the sybil, one member is corrupt at heart, and
    each corrupt member holds one attack edge into the honest part. The
    resulting community has sybil penetration 1/9, byzantine penetration
    1/3, corrupt fraction 2/9, and attack-edge ratio 2/16 = 1/8.
    """
    n = 9
    honest = list(range(6))
    explicit_corrupt, latent_corrupt, sybil = 6, 7, 8
    edges = [
        (0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (3, 5),
        (5, explicit_corrupt),
        (1, latent_corrupt),
        (explicit_corrupt, sybil),
    ]
    graph = TrustGraph(n, edges)
    ledger = IdentityLedger.from_sets(
        n, sybils=[sybil], corrupt=[explicit_corrupt, latent_corrupt]
    )
    community = VertexSet.full(n)
    return graph, ledger, community
