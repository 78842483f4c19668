"""Sybil-resilient community growth on trust graphs.

Measure graph connectivity (conductance, vertex expansion, spectral
bounds), gate community admissions on it, simulate adversarial growth, and
audit that byzantine penetration stays within its target.
"""

from ._version import __version__
from .connectivity import (
    ConnectivityReport,
    analyze,
    conductance_bounds_spectral,
    conductance_exact,
    lambda2,
    threshold_conductance,
    threshold_vertex_expansion,
    vertex_expansion_exact,
    vertex_expansion_lower_bound,
)
from .engine import (
    AdmissionVerdict,
    GrowthPolicy,
    HistoryAudit,
    StepAudit,
    audit_history,
    audit_step,
    check_union,
    gate,
    gate_conductance,
    gate_vertex_expansion,
    grow,
    start_history,
)
from .errors import (
    ConvergenceError,
    InfeasiblePolicyError,
    InputError,
    LedgerConsistencyError,
    ScaleError,
    TrustGrowError,
    UndefinedMetricError,
)
from .graph import (
    GraphBuilder,
    TrustGraph,
    VertexSet,
    cut_size,
    degree,
    degree_bounds_ok,
    induced_subgraph,
    inner_boundary,
    volume,
)
from .identity import (
    CommunityHistory,
    CommunityTrustGraph,
    IdentityLedger,
    IdentityRecord,
    Partition,
    attack_edge_ratio,
    byzantine_penetration,
    classify,
    corrupt_fraction,
    partition_for_graph,
    sybil_penetration,
)
from .scenarios import (
    AdversaryConfig,
    EstimateReport,
    LedgerExaminer,
    ScenarioConfig,
    ScenarioRun,
    estimate_parameters,
    gen_bottleneck,
    gen_history,
    gen_random_regular,
    sweep_interplay,
)

__all__ = [name for name in dir() if not name.startswith("_")]
