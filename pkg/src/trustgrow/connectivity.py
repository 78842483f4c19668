"""Conductance, vertex expansion, spectral bounds, and admission thresholds.

Exact values come from exhaustive cut enumeration (exponential, capped by an
enumeration limit); at larger scale the second random-walk eigenvalue gives
two-sided conductance bounds

    (1 - lam2) / 2  <=  phi_e  <=  sqrt(2 * (1 - lam2))

and, on regular graphs, the lower bound transfers to vertex expansion since
phi_v >= phi_e there.

The enumerations are vectorized over all vertex subsets with numpy
subset-DP, so the default 24-vertex limit stays in interactive territory.
Exact results are returned as Fractions built from integer cut and volume
counts; floating point only ever enters through the spectral path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt

import numpy as np

from .errors import ConvergenceError, InputError, ScaleError
from .graph import TrustGraph, VertexSet

DEFAULT_ENUMERATION_LIMIT = 24
DENSE_EIGEN_CUTOFF = 1024
_POWER_ITERATION_CAP = 10**6
_START_VECTOR_SEED = 0x5EED


@dataclass(frozen=True)
class CutResult:
    """An exact extremal cut: the minimum ratio and one set achieving it."""

    value: Fraction
    witness: VertexSet | None
    degenerate: bool = False


@dataclass(frozen=True)
class SpectralResult:
    lambda2: float
    disconnected: bool
    method: str
    iterations: int = 0


@dataclass(frozen=True)
class SpectralBounds:
    lambda2: float
    lower: float
    upper: float        # clamped into [0, 1]; conductance never exceeds 1
    upper_raw: float
    disconnected: bool


@dataclass(frozen=True)
class ExpansionBound:
    """Lower bound on vertex expansion derived from the spectral bound.

    Sound for regular graphs; for merely degree-bounded graphs the value is
    scaled by min_degree / max_degree and flagged as a heuristic.
    """

    value: float
    regular: bool
    heuristic: bool
    lambda2: float


@dataclass(frozen=True)
class ConnectivityReport:
    method: str                      # "enumeration", "spectral", or "both"
    lambda2: float | None
    phi_e_exact: Fraction | None
    phi_e_lower: float | None
    phi_e_upper: float | None
    phi_e_upper_raw: float | None
    phi_v_exact: Fraction | None
    phi_v_lower: float | None
    witness_cut: VertexSet | None
    phi_v_witness: VertexSet | None
    flags: tuple[str, ...] = ()


def _subset_tables(g: TrustGraph):
    """Per-subset popcount, volume, and internal-edge tables, size 2**n."""
    n = g.n
    size = 1 << n
    degs = g.degrees()
    pc = np.zeros(size, dtype=np.int8)
    vol = np.zeros(size, dtype=np.int32)
    internal = np.zeros(size, dtype=np.int32)
    base = np.arange(size >> 1 if n else 1, dtype=np.int64)
    for t in range(n):
        lo = 1 << t
        pc[lo : 2 * lo] = pc[:lo] + 1
        vol[lo : 2 * lo] = vol[:lo] + degs[t]
        adj_low = g.adj_masks[t] & (lo - 1)
        if adj_low:
            internal[lo : 2 * lo] = internal[:lo] + pc[base[:lo] & adj_low]
        else:
            internal[lo : 2 * lo] = internal[:lo]
    return pc, vol, internal


def conductance_exact(
    g: TrustGraph, limit: int = DEFAULT_ENUMERATION_LIMIT
) -> CutResult:
    """Exact conductance by enumerating every unordered bipartition.

    A cut side with zero volume carries no edges in a simple graph, so its
    ratio is taken as 0 (which correctly reports disconnection). An edgeless
    graph yields 0 with the degenerate flag set.
    """
    n = g.n
    if n < 2:
        raise InputError(f"conductance needs at least 2 vertices, got {n}")
    if n > limit:
        raise ScaleError(
            f"exact conductance on {n} vertices exceeds the enumeration limit {limit}"
        )
    if g.edge_count == 0:
        return CutResult(Fraction(0), None, degenerate=True)
    pc, vol, internal = _subset_tables(g)
    total = int(vol[-1])
    half = 1 << (n - 1)  # subsets excluding the top vertex: one per bipartition
    vol_a = vol[1:half].astype(np.int64)
    cut = vol_a - 2 * internal[1:half]
    min_vol = np.minimum(vol_a, total - vol_a)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(
            min_vol > 0, cut / min_vol, np.where(cut == 0, 0.0, np.inf)
        )
    best = int(np.argmin(ratio))
    mask = best + 1
    c = int(cut[best])
    mv = int(min_vol[best])
    value = Fraction(0) if c == 0 else Fraction(c, mv)
    return CutResult(value, VertexSet(n, mask))


def vertex_expansion_exact(
    g: TrustGraph, limit: int = DEFAULT_ENUMERATION_LIMIT
) -> CutResult:
    """Exact inner-boundary vertex expansion over all sets of size <= n/2."""
    n = g.n
    if n < 2:
        raise InputError(f"vertex expansion needs at least 2 vertices, got {n}")
    if n > limit:
        raise ScaleError(
            f"exact vertex expansion on {n} vertices exceeds the enumeration limit {limit}"
        )
    size = 1 << n
    pc = np.zeros(size, dtype=np.int8)
    for t in range(n):
        lo = 1 << t
        pc[lo : 2 * lo] = pc[:lo] + 1
    # closed[A] counts x in A whose whole neighborhood also lies in A;
    # the inner boundary of A is then |A| - closed[A].
    closed = np.zeros(size, dtype=np.int8)
    for x in range(n):
        closed[g.adj_masks[x] | (1 << x)] += 1
    for t in range(n):
        lo = 1 << t
        view = closed.reshape(-1, 2, lo)
        view[:, 1, :] += view[:, 0, :]
    boundary = pc - closed
    valid = (pc > 0) & (pc.astype(np.int32) * 2 <= n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, boundary / pc, np.inf)
    best = int(np.argmin(ratio))
    value = Fraction(int(boundary[best]), int(pc[best]))
    return CutResult(value, VertexSet(n, best))


def _normalized_adjacency_dense(g: TrustGraph) -> np.ndarray:
    degs = np.array(g.degrees(), dtype=np.float64)
    a = np.zeros((g.n, g.n), dtype=np.float64)
    for u in range(g.n):
        for v in g.neighbors[u]:
            a[u, v] = 1.0
    dinv = 1.0 / np.sqrt(degs)
    return a * dinv[:, None] * dinv[None, :]


def _normalized_adjacency_sparse(g: TrustGraph):
    from scipy import sparse

    rows = []
    cols = []
    for u in range(g.n):
        for v in g.neighbors[u]:
            rows.append(u)
            cols.append(v)
    a = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n)
    )
    dinv = 1.0 / np.sqrt(np.asarray(a.sum(axis=1)).ravel())
    d = sparse.diags(dinv)
    return d @ a @ d


def _power_iteration_lambda2(g: TrustGraph, tol: float, max_iter: int) -> tuple[float, int]:
    """Second eigenvalue of the walk matrix by deflated power iteration.

    Works on the shifted symmetric form (N + I) / 2 whose spectrum lies in
    [0, 1], with the known top eigenvector (sqrt of degrees) projected out,
    so the dominant remaining eigenvalue is the second-largest signed one
    rather than the largest in modulus. The start vector comes from a fixed
    seed, making the result reproducible run to run.
    """
    n = g.n
    mat = _normalized_adjacency_sparse(g) if n > 256 else _normalized_adjacency_dense(g)
    w = np.sqrt(np.array(g.degrees(), dtype=np.float64))
    w /= np.linalg.norm(w)
    rng = np.random.default_rng(_START_VECTOR_SEED)
    x = rng.standard_normal(n)
    x -= (w @ x) * w
    nrm = np.linalg.norm(x)
    if nrm == 0.0:  # pragma: no cover - measure-zero start
        raise ConvergenceError("start vector vanished after deflation")
    x /= nrm
    for it in range(1, max_iter + 1):
        z = 0.5 * (mat @ x + x)
        z -= (w @ z) * w
        mu = float(x @ z)
        residual = float(np.linalg.norm(z - mu * x))
        if residual <= 0.5 * tol:
            return 2.0 * mu - 1.0, it
        nrm = float(np.linalg.norm(z))
        if nrm == 0.0:
            # power iterate annihilated: spectrum of the deflated operator is 0
            return -1.0, it
        x = z / nrm
    raise ConvergenceError(
        f"power iteration did not reach tolerance {tol} in {max_iter} iterations"
    )


def lambda2(
    g: TrustGraph,
    tol: float = 1e-9,
    *,
    method: str = "auto",
    dense_cutoff: int = DENSE_EIGEN_CUTOFF,
    max_iter: int = _POWER_ITERATION_CAP,
) -> SpectralResult:
    """Second-largest (signed) eigenvalue of the random-walk matrix.

    Eigenvalues are computed on the degree-symmetrized form so they are
    real. Small graphs go through a full dense solve; larger ones through
    deflated power iteration ("power"). A disconnected graph short-circuits
    to 1.0 with the disconnected flag, since the top eigenvalue repeats.
    """
    if g.n < 2:
        raise InputError(f"lambda2 needs at least 2 vertices, got {g.n}")
    isolated = [v for v in range(g.n) if not g.neighbors[v]]
    if isolated:
        raise InputError(f"isolated vertices {isolated[:4]} have no walk distribution")
    if not g.is_connected():
        return SpectralResult(1.0, disconnected=True, method="structural")
    if method not in ("auto", "dense", "power"):
        raise InputError(f"unknown eigensolver method {method!r}")
    if method == "dense" or (method == "auto" and g.n <= dense_cutoff):
        vals = np.linalg.eigvalsh(_normalized_adjacency_dense(g))
        return SpectralResult(float(vals[-2]), disconnected=False, method="dense")
    value, iters = _power_iteration_lambda2(g, tol, max_iter)
    return SpectralResult(value, disconnected=False, method="power", iterations=iters)


def conductance_bounds_spectral(
    g: TrustGraph, tol: float = 1e-9, **kwargs
) -> SpectralBounds:
    """Two-sided conductance bounds from the second walk eigenvalue.

    The raw upper bound sqrt(2 * (1 - lam2)) can exceed 1 on very well
    connected graphs; since conductance itself never does, the clamped field
    is capped at 1 and the raw value is reported alongside.
    """
    spec = lambda2(g, tol, **kwargs)
    lam = spec.lambda2
    lower = (1.0 - lam) / 2.0
    upper_raw = sqrt(max(0.0, 2.0 * (1.0 - lam)))
    return SpectralBounds(
        lambda2=lam,
        lower=lower,
        upper=min(upper_raw, 1.0),
        upper_raw=upper_raw,
        disconnected=spec.disconnected,
    )


def vertex_expansion_lower_bound(g: TrustGraph, tol: float = 1e-9, **kwargs) -> ExpansionBound:
    """Spectral lower bound on vertex expansion.

    On a d-regular graph every cut satisfies boundary * d >= cut edges, so
    vertex expansion dominates conductance and the spectral conductance
    lower bound applies directly. On irregular graphs the bound is scaled by
    min_degree / max_degree and flagged heuristic; it carries no guarantee.
    """
    degs = g.degrees()
    if not degs:
        raise InputError("vertex expansion bound needs a non-empty graph")
    bounds = conductance_bounds_spectral(g, tol, **kwargs)
    dmin, dmax = min(degs), max(degs)
    if dmin == dmax:
        return ExpansionBound(bounds.lower, regular=True, heuristic=False, lambda2=bounds.lambda2)
    scale = dmin / dmax
    return ExpansionBound(
        bounds.lower * scale, regular=False, heuristic=True, lambda2=bounds.lambda2
    )


def _as_fraction(x, name: str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    if isinstance(x, str):
        return Fraction(x)
    raise InputError(f"{name} must be a number or fraction, got {type(x).__name__}")


def threshold_conductance(alpha, beta, gamma_e) -> Fraction:
    """Conductance a community must strictly exceed: (gamma_e/alpha)*((1-beta)/beta)."""
    alpha = _as_fraction(alpha, "alpha")
    beta = _as_fraction(beta, "beta")
    gamma_e = _as_fraction(gamma_e, "gamma_e")
    if not 0 < alpha <= 1:
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    if gamma_e < 0:
        raise InputError(f"gamma_e must be non-negative, got {gamma_e}")
    if beta <= 0:
        raise InputError("beta = 0 is not attainable; no growth can guarantee it")
    if beta > Fraction(1, 2):
        raise InputError(f"beta must lie in (0, 1/2], got {beta}")
    return (gamma_e / alpha) * ((1 - beta) / beta)


def threshold_vertex_expansion(beta, gamma_v) -> Fraction:
    """Vertex expansion a community must strictly exceed: gamma_v / beta."""
    beta = _as_fraction(beta, "beta")
    gamma_v = _as_fraction(gamma_v, "gamma_v")
    if gamma_v < 0:
        raise InputError(f"gamma_v must be non-negative, got {gamma_v}")
    if beta <= 0:
        raise InputError("beta = 0 is not attainable; no growth can guarantee it")
    if beta > Fraction(1, 2):
        raise InputError(f"beta must lie in (0, 1/2], got {beta}")
    return gamma_v / beta


def analyze(
    g: TrustGraph,
    exact_limit: int = DEFAULT_ENUMERATION_LIMIT,
    spectral: bool = True,
    tol: float = 1e-9,
) -> ConnectivityReport:
    """Full connectivity report: exact values within the limit, bounds beyond.

    Raises ScaleError when the graph is too large for enumeration and the
    spectral fallback was not requested.
    """
    flags: list[str] = []
    exact_ok = g.n <= exact_limit
    if not exact_ok and not spectral:
        raise ScaleError(
            f"{g.n} vertices exceed the enumeration limit {exact_limit}; "
            "enable the spectral bounds to analyze at scale"
        )
    phi_e = phi_v = None
    witness_e = witness_v = None
    if exact_ok:
        cut = conductance_exact(g, exact_limit)
        phi_e, witness_e = cut.value, cut.witness
        if cut.degenerate:
            flags.append("edgeless")
        ve = vertex_expansion_exact(g, exact_limit)
        phi_v, witness_v = ve.value, ve.witness

    lam = lower = upper = upper_raw = phi_v_lower = None
    if spectral and g.edge_count > 0 and not any(not nb for nb in g.neighbors):
        bounds = conductance_bounds_spectral(g, tol)
        lam = bounds.lambda2
        lower, upper, upper_raw = bounds.lower, bounds.upper, bounds.upper_raw
        if bounds.disconnected:
            flags.append("disconnected")
        vb = vertex_expansion_lower_bound(g, tol)
        phi_v_lower = vb.value
        if vb.heuristic:
            flags.append("phi_v_bound_heuristic")
    elif spectral:
        flags.append("spectral_skipped_degenerate")

    if exact_ok and lam is not None:
        method = "both"
    elif exact_ok:
        method = "enumeration"
    else:
        method = "spectral"
    return ConnectivityReport(
        method=method,
        lambda2=lam,
        phi_e_exact=phi_e,
        phi_e_lower=lower,
        phi_e_upper=upper,
        phi_e_upper_raw=upper_raw,
        phi_v_exact=phi_v,
        phi_v_lower=phi_v_lower,
        witness_cut=witness_e,
        phi_v_witness=witness_v,
        flags=tuple(flags),
    )
