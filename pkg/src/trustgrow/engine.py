"""Admission gates, safety audits, and the growth loop for communities.

The gate checks only what a community can observe about itself: degrees,
growth size, and connectivity of the candidate community. Premises about
byzantines (initial penetration, attack-edge scarcity, corrupt-population
bounds) are assumptions; they are recorded as such in every verdict and are
verified only by the ledger-aware audit, which holds the ground truth.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from math import floor

from . import connectivity
from .connectivity import ConnectivityReport, analyze
from .errors import InfeasiblePolicyError, InputError, ScaleError
from .graph import TrustGraph, VertexSet, degree_bounds_ok, induced_subgraph
from .identity import (
    CommunityHistory,
    CommunityTrustGraph,
    IdentityLedger,
    attack_edge_ratio,
    byzantine_penetration,
    corrupt_fraction,
    partition_for_graph,
)

CONDUCTANCE = "conductance"
VERTEX_EXPANSION = "vertex_expansion"

PASS = "pass"
FAIL = "fail"
ASSUMED = "assumed"


def _frac(value, name: str) -> Fraction:
    """Coerce a policy number to an exact rational.

    Floats are read through their decimal literal (0.2 -> 1/5), which is
    what a human writing 0.2 means; pass a Fraction or a "p/q" string for
    anything that decimal notation cannot express exactly.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (float, str)):
        return Fraction(str(value))
    raise InputError(f"{name} must be a number, fraction, or string, got {type(value).__name__}")


@dataclass(frozen=True)
class GrowthPolicy:
    """Parameter bundle for one growth regime.

    delta is always derived as 1 - 2*beta; it is a property, not a field,
    so it can never drift out of sync with beta.
    """

    mode: str
    beta: Fraction
    alpha: Fraction | None = None
    gamma_e: Fraction | None = None
    gamma_v: Fraction | None = None
    d: int | None = None
    enumeration_limit: int = connectivity.DEFAULT_ENUMERATION_LIMIT
    spectral: bool = True
    allow_heuristic: bool = False

    def __post_init__(self):
        if self.mode not in (CONDUCTANCE, VERTEX_EXPANSION):
            raise InputError(f"unknown growth mode {self.mode!r}")
        object.__setattr__(self, "beta", _frac(self.beta, "beta"))
        if self.beta <= 0:
            raise InfeasiblePolicyError("beta = 0 is not attainable")
        if self.beta > Fraction(1, 2):
            raise InputError(f"beta must lie in (0, 1/2], got {self.beta}")
        if self.mode == CONDUCTANCE:
            if self.alpha is None or self.gamma_e is None or self.d is None:
                raise InputError("conductance mode needs alpha, gamma_e, and d")
            object.__setattr__(self, "alpha", _frac(self.alpha, "alpha"))
            object.__setattr__(self, "gamma_e", _frac(self.gamma_e, "gamma_e"))
            if not 0 < self.alpha <= 1:
                raise InputError(f"alpha must lie in (0, 1], got {self.alpha}")
            if self.gamma_e < 0:
                raise InputError(f"gamma_e must be non-negative, got {self.gamma_e}")
            if self.d < 1:
                raise InputError(f"degree cap must be at least 1, got {self.d}")
        else:
            if self.gamma_v is None:
                raise InputError("vertex expansion mode needs gamma_v")
            object.__setattr__(self, "gamma_v", _frac(self.gamma_v, "gamma_v"))
            if self.gamma_v < 0:
                raise InputError(f"gamma_v must be non-negative, got {self.gamma_v}")
        if self.enumeration_limit < 2:
            raise InputError("enumeration limit must be at least 2")

    @property
    def delta(self) -> Fraction:
        return 1 - 2 * self.beta

    @property
    def threshold(self) -> Fraction:
        if self.mode == CONDUCTANCE:
            return connectivity.threshold_conductance(self.alpha, self.beta, self.gamma_e)
        return connectivity.threshold_vertex_expansion(self.beta, self.gamma_v)

    @property
    def feasible(self) -> bool:
        """Whether any graph at all can clear the connectivity threshold."""
        if self.mode == CONDUCTANCE:
            return self.threshold < Fraction(1, 2)
        return self.threshold <= 1

    def initial_beta_cap(self, initial_size: int) -> Fraction:
        if self.mode == CONDUCTANCE:
            return Fraction(1, 2) - Fraction(1, initial_size)
        return Fraction(1, 2) - Fraction(1, 2 * initial_size)


@dataclass(frozen=True)
class ConditionResult:
    condition: str
    status: str                      # pass / fail / assumed
    measured: object = None
    bound: object = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.status != FAIL


@dataclass(frozen=True)
class AdmissionVerdict:
    admitted: bool
    conditions: tuple[ConditionResult, ...]
    measured_phi: ConnectivityReport | None
    growth_used: Fraction | None     # fraction of the delta budget consumed
    flags: tuple[str, ...] = ()

    def condition(self, name: str) -> ConditionResult:
        for cond in self.conditions:
            if cond.condition == name:
                return cond
        raise KeyError(name)


@functools.lru_cache(maxsize=4096)
def _induced_report(
    graph: TrustGraph, mask: int, exact_limit: int, spectral: bool
) -> ConnectivityReport:
    sub, _ = induced_subgraph(graph, VertexSet(graph.n, mask))
    return analyze(sub, exact_limit=exact_limit, spectral=spectral)


def _connectivity_condition(
    graph: TrustGraph, community: VertexSet, policy: GrowthPolicy
) -> tuple[ConditionResult, ConnectivityReport, list[str]]:
    """Evaluate the mode's connectivity requirement on the induced community."""
    threshold = policy.threshold
    flags: list[str] = []
    size = len(community)
    exact_ok = size <= policy.enumeration_limit
    if not exact_ok and not policy.spectral:
        raise ScaleError(
            f"community of {size} exceeds enumeration limit "
            f"{policy.enumeration_limit} and spectral bounds are disabled"
        )
    report = _induced_report(graph, community.mask, policy.enumeration_limit, policy.spectral)
    name = "conductance" if policy.mode == CONDUCTANCE else "vertex_expansion"
    if policy.mode == CONDUCTANCE:
        if report.phi_e_exact is not None:
            measured = report.phi_e_exact
            status = PASS if measured > threshold else FAIL
            note = "exact enumeration"
        else:
            measured = report.phi_e_lower
            status = PASS if measured is not None and measured > threshold else FAIL
            note = "spectral lower bound"
            flags.append("spectral_bound")
    else:
        if report.phi_v_exact is not None:
            measured = report.phi_v_exact
            status = PASS if measured > threshold else FAIL
            note = "exact enumeration"
        else:
            bound = connectivity.vertex_expansion_lower_bound(
                induced_subgraph(graph, community)[0]
            )
            if bound.heuristic and not policy.allow_heuristic:
                measured = None
                status = FAIL
                note = (
                    "community is not regular and exceeds the enumeration limit; "
                    "no sound vertex-expansion bound (heuristic disabled)"
                )
                flags.append("no_sound_bound")
            else:
                measured = bound.value
                status = PASS if measured > threshold else FAIL
                note = "spectral lower bound" + (" (heuristic)" if bound.heuristic else "")
                if bound.heuristic:
                    flags.append("heuristic_bound")
    return (
        ConditionResult(name, status, measured=measured, bound=threshold, note=note),
        report,
        flags,
    )


def _growth_condition(
    current: VertexSet, candidate: VertexSet, policy: GrowthPolicy
) -> tuple[ConditionResult, Fraction | None]:
    added = len(candidate - current)
    budget = policy.delta * len(current)
    status = PASS if added <= budget else FAIL
    used = None if budget == 0 else Fraction(added) / budget
    return (
        ConditionResult("growth_cap", status, measured=added, bound=budget),
        used,
    )


def _degree_condition(
    graph: TrustGraph, candidate: VertexSet, policy: GrowthPolicy
) -> ConditionResult:
    sub, _ = induced_subgraph(graph, candidate)
    degs = sub.degrees()
    ok = degree_bounds_ok(sub, policy.alpha, policy.d)
    return ConditionResult(
        "degree_bounds",
        PASS if ok else FAIL,
        measured=(min(degs), max(degs)),
        bound=(policy.alpha * policy.d, policy.d),
    )


def _gate(
    current: CommunityTrustGraph,
    candidate: VertexSet,
    policy: GrowthPolicy,
    allow_equal: bool,
) -> AdmissionVerdict:
    graph = current.graph
    candidate = graph.vertex_set(candidate)
    if not current.community.issubset(candidate):
        raise InputError("candidate community must contain the current community")
    if not allow_equal and candidate == current.community:
        raise InputError("candidate community must strictly extend the current one")
    if len(candidate) < 2:
        raise InputError("candidate community must have at least 2 members")

    conditions: list[ConditionResult] = []
    flags: list[str] = []
    if policy.mode == CONDUCTANCE:
        conditions.append(_degree_condition(graph, candidate, policy))
        conditions.append(
            ConditionResult("initial_penetration", ASSUMED, note="ledger-only; see audit")
        )
        conditions.append(
            ConditionResult("attack_scarcity", ASSUMED, note="ledger-only; see audit")
        )
    else:
        conditions.append(
            ConditionResult("initial_penetration", ASSUMED, note="ledger-only; see audit")
        )
        conditions.append(
            ConditionResult("corrupt_bound", ASSUMED, note="ledger-only; see audit")
        )
    growth_cond, used = _growth_condition(current.community, candidate, policy)
    conditions.append(growth_cond)
    conn_cond, report, conn_flags = _connectivity_condition(graph, candidate, policy)
    conditions.append(conn_cond)
    flags.extend(conn_flags)
    admitted = all(c.ok for c in conditions)
    return AdmissionVerdict(
        admitted=admitted,
        conditions=tuple(conditions),
        measured_phi=report,
        growth_used=used,
        flags=tuple(flags),
    )


def gate_conductance(
    current: CommunityTrustGraph, candidate: VertexSet, policy: GrowthPolicy
) -> AdmissionVerdict:
    """Label-blind admission check for the conductance regime."""
    if policy.mode != CONDUCTANCE:
        raise InputError("gate_conductance requires a conductance-mode policy")
    return _gate(current, candidate, policy, allow_equal=False)


def gate_vertex_expansion(
    current: CommunityTrustGraph, candidate: VertexSet, policy: GrowthPolicy
) -> AdmissionVerdict:
    """Label-blind admission check for the vertex-expansion regime."""
    if policy.mode != VERTEX_EXPANSION:
        raise InputError("gate_vertex_expansion requires a vertex_expansion-mode policy")
    return _gate(current, candidate, policy, allow_equal=False)


def gate(
    current: CommunityTrustGraph, candidate: VertexSet, policy: GrowthPolicy
) -> AdmissionVerdict:
    return _gate(current, candidate, policy, allow_equal=False)


@dataclass(frozen=True)
class StepAudit:
    """Ledger-aware evaluation of one growth step against all premises."""

    conditions: tuple[ConditionResult, ...]
    beta_prev: Fraction
    beta_next: Fraction
    premises_hold: bool
    conclusion_holds: bool
    flags: tuple[str, ...] = ()

    @property
    def safe(self) -> bool:
        return self.conclusion_holds


def audit_step(
    prev: CommunityTrustGraph,
    next_: CommunityTrustGraph,
    ledger: IdentityLedger,
    policy: GrowthPolicy,
) -> StepAudit:
    """Check every premise of the step lemma plus its conclusion.

    Unlike the gate this sees the ground truth, so the byzantine-dependent
    premises are measured rather than assumed. The audit raises on an
    inconsistent ledger; everything else, including violated premises and a
    violated conclusion, is a reportable outcome rather than an error.
    """
    if prev.graph.n != next_.graph.n:
        raise InputError("both steps must live on the same vertex set")
    if not prev.community.issubset(next_.community):
        raise InputError("the next community must contain the previous one")
    # classification is strict: raises LedgerConsistencyError on understatement
    partition_for_graph(next_.graph, ledger)

    beta_prev = byzantine_penetration(prev, ledger)
    beta_next = byzantine_penetration(next_, ledger)

    conditions: list[ConditionResult] = []
    if policy.mode == CONDUCTANCE:
        conditions.append(_degree_condition(next_.graph, next_.community, policy))
    half = Fraction(1, 2)
    conditions.append(
        ConditionResult(
            "initial_penetration",
            PASS if beta_prev + policy.delta / 2 <= half else FAIL,
            measured=beta_prev + policy.delta / 2,
            bound=half,
        )
    )
    if policy.mode == CONDUCTANCE:
        ratio = attack_edge_ratio(next_, ledger)
        conditions.append(
            ConditionResult(
                "attack_scarcity",
                PASS if ratio <= policy.gamma_e else FAIL,
                measured=ratio,
                bound=policy.gamma_e,
            )
        )
    else:
        frac_c = corrupt_fraction(next_, ledger)
        conditions.append(
            ConditionResult(
                "corrupt_bound",
                PASS if frac_c <= policy.gamma_v else FAIL,
                measured=frac_c,
                bound=policy.gamma_v,
            )
        )
    growth_cond, _ = _growth_condition(prev.community, next_.community, policy)
    conditions.append(growth_cond)
    conn_cond, _, conn_flags = _connectivity_condition(next_.graph, next_.community, policy)
    conditions.append(conn_cond)

    premises_hold = all(c.ok for c in conditions)
    conclusion = beta_next <= policy.beta
    flags = list(conn_flags)
    if not premises_hold:
        flags.append("premises_unmet")
        if not conclusion:
            flags.append("unsafe_growth_premises_unmet")
    elif not conclusion:
        # premises satisfied but the bound failed: a soundness bug by the lemma
        flags.append("soundness_violation")
    return StepAudit(
        conditions=tuple(conditions),
        beta_prev=beta_prev,
        beta_next=beta_next,
        premises_hold=premises_hold,
        conclusion_holds=conclusion,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class HistoryAudit:
    initial_condition: ConditionResult
    initial_penetration: ConditionResult
    steps: tuple[StepAudit, ...]
    betas: tuple[Fraction, ...]

    @property
    def premises_hold(self) -> bool:
        return (
            self.initial_condition.ok
            and self.initial_penetration.ok
            and all(s.premises_hold for s in self.steps)
        )

    @property
    def all_safe(self) -> bool:
        """Byzantine penetration stayed within target at every step."""
        return self.initial_penetration.ok and all(
            s.conclusion_holds for s in self.steps
        )

    def max_beta(self) -> Fraction:
        return max(self.betas)


def audit_history(
    history: CommunityHistory, ledger: IdentityLedger, policy: GrowthPolicy
) -> HistoryAudit:
    """Audit a whole history: theorem-level initial conditions plus each step."""
    first = history.steps[0]
    size0 = len(first.community)
    cap = policy.initial_beta_cap(size0)
    initial_condition = ConditionResult(
        "initial_size_bound",
        PASS if policy.beta <= cap else FAIL,
        measured=policy.beta,
        bound=cap,
    )
    beta0 = byzantine_penetration(first.as_ctg(), ledger)
    initial_penetration = ConditionResult(
        "initial_penetration",
        PASS if beta0 <= policy.beta else FAIL,
        measured=beta0,
        bound=policy.beta,
    )
    audits = []
    betas = [beta0]
    for prev, nxt in zip(history.steps, history.steps[1:]):
        audit = audit_step(prev.as_ctg(), nxt.as_ctg(), ledger, policy)
        audits.append(audit)
        betas.append(audit.beta_next)
    return HistoryAudit(
        initial_condition=initial_condition,
        initial_penetration=initial_penetration,
        steps=tuple(audits),
        betas=tuple(betas),
    )


def start_history(
    graph: TrustGraph, community: VertexSet, policy: GrowthPolicy
) -> CommunityHistory:
    """Open a history after checking the theorem's initial-size condition."""
    community = graph.vertex_set(community)
    if not community:
        raise InputError("initial community must be non-empty")
    cap = policy.initial_beta_cap(len(community))
    if policy.beta > cap:
        raise InfeasiblePolicyError(
            f"beta={policy.beta} exceeds the initial-size cap {cap} "
            f"for a community of {len(community)}"
        )
    return CommunityHistory.start(graph, community)


def grow(
    history: CommunityHistory,
    pool: VertexSet,
    policy: GrowthPolicy,
    *,
    graph: TrustGraph | None = None,
    strategy: str = "greedy",
) -> tuple[CommunityHistory, AdmissionVerdict]:
    """Admit the largest gate-passing batch from the candidate pool.

    Candidates are ranked by how many trust edges they already hold into the
    community (ties broken by id), then prefixes are tried largest first;
    the first prefix whose final community passes the gate is admitted. If
    none passes, the history is returned unchanged with the verdict of the
    largest attempt, whose failing conditions name the binding constraint.
    """
    if strategy != "greedy":
        raise InputError(f"unknown growth strategy {strategy!r}")
    step = history.current()
    graph = graph if graph is not None else step.graph
    if graph.n != history.n:
        raise InputError("growth graph must cover the history's vertex set")
    community = step.community
    pool = graph.vertex_set(pool)
    if not pool.isdisjoint(community):
        raise InputError("candidate pool must be disjoint from the community")
    no_op = AdmissionVerdict(False, (), None, None, flags=("no_op",))
    if not pool:
        return history, no_op
    for v in pool:
        if not graph.adj_masks[v] & community.mask:
            raise InputError(f"candidate {v} has no trust edge into the community")

    cap = floor(policy.delta * len(community))
    if cap == 0:
        return history, AdmissionVerdict(
            False, (), None, None, flags=("zero_growth_budget",)
        )
    ranked = sorted(
        pool, key=lambda v: (-(graph.adj_masks[v] & community.mask).bit_count(), v)
    )
    current = CommunityTrustGraph(graph, community)
    first_attempt: AdmissionVerdict | None = None
    for k in range(min(cap, len(ranked)), 0, -1):
        batch = VertexSet.from_iterable(graph.n, ranked[:k])
        verdict = _gate(current, community | batch, policy, allow_equal=False)
        if first_attempt is None:
            first_attempt = verdict
        if verdict.admitted:
            return history.extended(community | batch, graph), verdict
    assert first_attempt is not None
    failed = AdmissionVerdict(
        admitted=False,
        conditions=first_attempt.conditions,
        measured_phi=first_attempt.measured_phi,
        growth_used=first_attempt.growth_used,
        flags=first_attempt.flags + ("no_admissible_batch",),
    )
    return history, failed


@dataclass(frozen=True)
class UnionVerdict:
    from_a: AdmissionVerdict
    from_b: AdmissionVerdict
    union: VertexSet

    @property
    def safe(self) -> bool:
        return self.from_a.admitted and self.from_b.admitted


def check_union(
    a: CommunityTrustGraph, b: CommunityTrustGraph, policy: GrowthPolicy
) -> UnionVerdict:
    """Check whether two overlapping communities may safely unite.

    The step conditions are evaluated twice, once from each community to
    the union; the union is safe only if both directions pass, giving each
    side its own guarantee.
    """
    if a.graph != b.graph:
        raise InputError("both communities must live on the same trust graph")
    if a.community.isdisjoint(b.community):
        raise InputError("communities must overlap to unite safely")
    union = a.community | b.community
    from_a = _gate(a, union, policy, allow_equal=True)
    from_b = _gate(b, union, policy, allow_equal=True)
    return UnionVerdict(from_a=from_a, from_b=from_b, union=union)
