"""Generalized schemes and their Kolmogorov-type widths.

Two families of approximating sets are supported: a ``classical`` wrapper
around a catalog chain (one set per index, where the width reduces exactly to
the chain error profile), and ``all_subspaces`` over Euclidean space (the
width of a point set over every subspace of dimension <= n).

The subspace problem is a nonconvex minimax, so those widths come back as
certified bounds: the upper bound from a multi-start annealed descent (plus a
deterministic sphere sweep with local zoom in dimensions <= 3), the lower
bound from the averaged projection residual.  A single value is claimed only
when the two meet within a stated tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ThresholdNotReachedError, UnsupportedSchemeError
from .schemes import SchemeDescriptor, best_error
from .spaces import Element, norm

__all__ = [
    "GeneralizedScheme",
    "WidthResult",
    "QProfile",
    "OrderC0Decomposition",
    "UniformLimitReport",
    "HullInvarianceReport",
    "BallMeasureReport",
    "NetComparisonReport",
    "gen_kolmogorov_number",
    "q_profile",
    "operator_delta",
    "uniform_limit_check",
    "order_c0_decompose",
    "hull_invariance_check",
    "ball_measure",
    "compact_implies_qcompact_check",
]

CERT_TOL = 1e-4


@dataclass(frozen=True)
class GeneralizedScheme:
    """Index-to-family rule Q_n: a classical chain, or all small subspaces.

    Both kinds satisfy the structural axioms: the zero set at index 0, scalar
    invariance, and sums of members of Q_n and Q_m landing in Q_{n+m} (for
    subspaces because dimensions add; for a classical chain through its own
    index map).
    """

    kind: str  # "classical" | "all_subspaces"
    scheme: SchemeDescriptor | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.kind == "classical":
            if self.scheme is None:
                raise ValueError("classical generalized scheme needs a chain")
        elif self.kind == "all_subspaces":
            if self.dim is None or self.dim < 1:
                raise ValueError("all_subspaces needs a positive ambient dimension")
        else:
            raise ValueError(f"unknown generalized-scheme kind {self.kind!r}")

    @classmethod
    def classical(cls, scheme: SchemeDescriptor) -> "GeneralizedScheme":
        return cls("classical", scheme=scheme)

    @classmethod
    def all_subspaces(cls, dim: int) -> "GeneralizedScheme":
        return cls("all_subspaces", dim=int(dim))


@dataclass(frozen=True)
class WidthResult:
    """Width at one index: a value when certified, otherwise bounds."""

    n: int
    lower: float
    upper: float
    method: str  # "exact-reduction" | "spectral-upper" | "search"
    optimizer: dict = field(default_factory=dict)
    value: float | None = None

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


def _certified(n, lower, upper, method, optimizer, cert_tol=CERT_TOL) -> WidthResult:
    value = float(upper) if upper - lower <= cert_tol else None
    return WidthResult(n, float(lower), float(upper), method, optimizer, value)


# -- subspace width search -----------------------------------------------------


def _point_matrix(D: list[Element]) -> np.ndarray:
    for x in D:
        if x.kind != "seq_lp" or x.p != 2.0:
            raise UnsupportedSchemeError("all_subspaces widths need Euclidean seq elements")
    dims = {x.dim for x in D}
    if len(dims) != 1:
        raise UnsupportedSchemeError("all points must share the ambient dimension")
    return np.array([x.payload for x in D])  # N x d


def _max_dist(P: np.ndarray, V: np.ndarray) -> float:
    # V: d x n orthonormal; distance of each row of P to span(V)
    proj = P @ V
    d2 = np.maximum(np.einsum("ij,ij->i", P, P) - np.einsum("ij,ij->i", proj, proj), 0.0)
    return float(np.sqrt(np.max(d2)))


def _qf(A: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(A)
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def _descent(P: np.ndarray, n: int, V0: np.ndarray, iters: int) -> tuple[float, np.ndarray]:
    """Annealed soft-minimax descent on the subspace: softmax weights focus the
    fit on the worst points, the retraction step keeps symmetric optima fixed."""
    X = P.T  # d x N
    V = V0
    best_g = _max_dist(P, V)
    best_V = V
    d2 = None
    temp = None
    for _ in range(iters):
        proj = P @ V
        d2 = np.einsum("ij,ij->i", P, P) - np.einsum("ij,ij->i", proj, proj)
        d2 = np.maximum(d2, 0.0)
        if temp is None:
            temp = max(float(np.ptp(d2)), 1e-8 * max(1.0, float(np.max(d2))), 1e-12)
        w = np.exp((d2 - np.max(d2)) / temp)
        w /= np.sum(w)
        M = (X * w) @ X.T
        G = M @ V
        G -= V @ (V.T @ G)  # tangent component on the Grassmannian
        ng = float(np.linalg.norm(G))
        improved = False
        if ng > 1e-14:
            for step in (1.0, 0.3, 0.1):
                Vt = _qf(V + (step / ng) * G)
                g = _max_dist(P, Vt)
                if g < best_g - 1e-15:
                    best_g, best_V = g, Vt
                    V = Vt
                    improved = True
                    break
        if not improved:
            temp *= 0.6
            if temp < 1e-14:
                break
    return best_g, best_V


def _fibonacci_sphere(count: int) -> np.ndarray:
    golden = (1 + 5**0.5) / 2
    i = np.arange(count)
    z = 1 - (2 * i + 1) / count
    r = np.sqrt(np.maximum(0.0, 1 - z * z))
    phi = 2 * np.pi * i / golden
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _sweep_directions_3d(P: np.ndarray, lines: bool, rng: np.random.Generator,
                         grid: int = 20000) -> tuple[float, np.ndarray]:
    """Deterministic sphere sweep plus local zoom over directions u in R^3.

    ``lines=True`` scores span(u); otherwise u is a plane normal.
    """
    nrm2 = np.einsum("ij,ij->i", P, P)

    def score(U):  # U: K x 3 directions -> worst distance per direction
        comp = (U @ P.T) ** 2
        d2 = np.maximum(nrm2[None, :] - comp, 0.0) if lines else comp
        return np.sqrt(np.max(d2, axis=1))

    U = _fibonacci_sphere(grid)
    vals = score(U)
    best = int(np.argmin(vals))
    best_u, best_val = U[best], float(vals[best])
    radius = math.sqrt(4 * math.pi / grid)
    for _ in range(6):
        C = best_u[None, :] + radius * rng.standard_normal((1500, 3))
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        vals = score(C)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_u = float(vals[j]), C[j]
        radius *= 0.35
    return best_val, best_u


def _sweep_angles_2d(P: np.ndarray, grid: int = 40000) -> tuple[float, np.ndarray]:
    theta = np.linspace(0.0, np.pi, grid, endpoint=False)
    U = np.column_stack([np.cos(theta), np.sin(theta)])
    nrm2 = np.einsum("ij,ij->i", P, P)
    d2 = np.maximum(nrm2[None, :] - (U @ P.T) ** 2, 0.0)
    vals = np.sqrt(np.max(d2, axis=1))
    j = int(np.argmin(vals))
    return float(vals[j]), U[j]


def _subspace_width(P: np.ndarray, n: int, rng: np.random.Generator,
                    starts: int = 8, iters: int = 150) -> tuple[float, float, dict]:
    """Bounds for the smallest worst-case distance of the rows of P to an
    n-dimensional subspace.  Returns (lower, upper, optimizer info)."""
    N, d = P.shape
    if n >= d or np.linalg.matrix_rank(P, tol=1e-12) <= n:
        return 0.0, 0.0, {"note": "rank at most n"}
    svals = np.linalg.svd(P, compute_uv=False)
    tail = float(np.sum(svals[n:] ** 2))
    lower = math.sqrt(max(0.0, tail) / N)

    _, _, vt = np.linalg.svd(P, full_matrices=True)
    starts_v = [vt[:n].T]
    for _ in range(starts):
        starts_v.append(_qf(rng.standard_normal((d, n))))
    upper = math.inf
    best_V = starts_v[0]
    for V0 in starts_v:
        g, V = _descent(P, n, V0, iters)
        if g < upper:
            upper, best_V = g, V

    sweep_used = False
    if d == 3 and n in (1, 2):
        sval, u = _sweep_directions_3d(P, lines=(n == 1), rng=rng)
        sweep_used = True
        if sval < upper:
            upper = sval
            best_V = u[:, None] if n == 1 else _qf(np.eye(3) - np.outer(u, u))[:, :2]
    elif d == 2 and n == 1:
        sval, u = _sweep_angles_2d(P)
        sweep_used = True
        if sval < upper:
            upper = sval
            best_V = u[:, None]
    upper = max(upper, lower)
    info = {
        "subspace": best_V.tolist(),
        "sweep": sweep_used,
        "starts": starts,
    }
    return lower, float(upper), info


# -- widths ---------------------------------------------------------------------


def gen_kolmogorov_number(D: list[Element], Q: GeneralizedScheme, n: int,
                          seed: int = 0, starts: int = 8, iters: int = 150) -> WidthResult:
    """Smallest radius r such that D sits inside r times the unit ball plus a
    member of Q_n.

    For a classical chain this is exactly the family error at index n.  For
    all subspaces it is the point-set width, returned as certified bounds.
    """
    if not D:
        raise ValueError("need a non-empty set")
    if n < 0:
        raise ValueError("index must be non-negative")
    if Q.kind == "classical":
        value = max(best_error(x, Q.scheme, n).error for x in D)
        return WidthResult(n, value, value, "exact-reduction",
                           {"chain_index": n}, value)
    P = _point_matrix(D)
    if P.shape[1] != Q.dim:
        raise UnsupportedSchemeError(
            f"points have dimension {P.shape[1]}, scheme expects {Q.dim}")
    if n == 0:
        value = float(np.max(np.linalg.norm(P, axis=1)))
        return WidthResult(n, value, value, "spectral-upper", {"note": "zero set"}, value)
    if n >= Q.dim:
        return WidthResult(n, 0.0, 0.0, "spectral-upper", {"note": "full space"}, 0.0)
    rng = np.random.default_rng(seed)
    lower, upper, info = _subspace_width(P, n, rng, starts, iters)
    method = "search" if info.get("subspace") is not None else "spectral-upper"
    info["seed"] = seed
    return _certified(n, lower, upper, method, info)


@dataclass(frozen=True)
class QProfile:
    """Width results delta_0..delta_N with the monotone post-check applied."""

    results: list[WidthResult]
    verdict: str
    tail_upper: float
    tol: float
    adjusted: bool  # True when the monotone enforcement tightened any bound

    @property
    def uppers(self) -> np.ndarray:
        return np.array([r.upper for r in self.results])

    @property
    def lowers(self) -> np.ndarray:
        return np.array([r.lower for r in self.results])


def q_profile(D: list[Element], Q: GeneralizedScheme, N: int, tol: float = 1e-3,
              seed: int = 0, starts: int = 8, iters: int = 150) -> QProfile:
    """delta_n for n = 0..N with monotone non-increase enforced as a post-check.

    A valid upper bound at index n stays valid later (the families only grow),
    and a valid lower bound at index n+1 is valid earlier, so enforcement only
    tightens certified bounds; any adjustment is flagged.
    """
    raw = [gen_kolmogorov_number(D, Q, n, seed, starts, iters) for n in range(N + 1)]
    uppers = np.minimum.accumulate([r.upper for r in raw])
    lowers = np.maximum.accumulate([r.lower for r in raw][::-1])[::-1]
    adjusted = False
    results = []
    for r, lo, up in zip(raw, lowers, uppers):
        lo, up = float(lo), float(up)
        if lo != r.lower or up != r.upper:
            adjusted = True
            results.append(_certified(r.n, lo, max(up, lo), r.method, r.optimizer))
        else:
            results.append(r)
    tail = results[-1].upper
    verdict = "evidence-Q-compact" if tail < tol else "inconclusive"
    if tail >= tol and results[max(0, N // 2)].lower >= tail - tol:
        verdict = "evidence-non-Q-compact"
    return QProfile(results, verdict, float(tail), tol, adjusted)


def operator_delta(T, Q: GeneralizedScheme, n: int, samples: int = 512,
                   seed: int = 0) -> WidthResult:
    """Width of the image of the Euclidean unit ball under the matrix T.

    The image is the ellipsoid with the matrix's singular geometry, handled in
    closed form: over all subspaces the width at index n is the (n+1)-th
    singular value; for a classical subspace chain it is the spectral norm of
    the residual of T against the chain's leading span.  A sampled-sphere
    lower bound is reported alongside for the chain case.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 2:
        raise ValueError("T must be a matrix")
    if n < 0:
        raise ValueError("index must be non-negative")
    d_out, d_in = T.shape
    if Q.kind == "all_subspaces":
        if Q.dim != d_out:
            raise UnsupportedSchemeError(
                f"operator codomain has dimension {d_out}, scheme expects {Q.dim}")
        svals = np.linalg.svd(T, compute_uv=False)
        value = float(svals[n]) if n < svals.size else 0.0
        return WidthResult(n, value, value, "spectral-upper",
                           {"singular_values": svals.tolist()}, value)
    s = Q.scheme
    if s.kind != "subspace_chain":
        raise UnsupportedSchemeError(
            "classical operator widths need a subspace_chain codomain")
    if s.basis.shape[0] != d_out:
        raise UnsupportedSchemeError(
            f"operator codomain has dimension {d_out}, chain lives in {s.basis.shape[0]}")
    if n == 0:
        residual = T
    else:
        q = s._chain_q(s.chain_dim(n))
        residual = T - q @ (q.T @ T)
    value = float(np.linalg.norm(residual, 2))
    rng = np.random.default_rng(seed)
    sphere = rng.standard_normal((samples, d_in))
    sphere /= np.linalg.norm(sphere, axis=1, keepdims=True)
    sample_lower = float(np.max(np.linalg.norm(sphere @ residual.T, axis=1)))
    return WidthResult(n, value, value, "spectral-upper",
                       {"sampled_lower_bound": sample_lower, "samples": samples},
                       value)


@dataclass(frozen=True)
class UniformLimitReport:
    """delta_n(T) against ||T - T_m|| + delta_n(T_m) for every approximating map."""

    n: int
    delta: float
    gaps: np.ndarray
    deltas_m: np.ndarray
    margins: np.ndarray
    holds: bool
    tol: float


def uniform_limit_check(T_seq, T, Q: GeneralizedScheme, n: int,
                        tol: float = 1e-9) -> UniformLimitReport:
    """Subadditivity of widths along an operator approximation sequence."""
    if not len(T_seq):
        raise ValueError("need at least one approximating operator")
    T = np.asarray(T, dtype=float)
    delta = operator_delta(T, Q, n).value
    gaps, deltas_m = [], []
    for Tm in T_seq:
        Tm = np.asarray(Tm, dtype=float)
        if Tm.shape != T.shape:
            raise ValueError("operator shapes are inconsistent")
        gaps.append(float(np.linalg.norm(T - Tm, 2)))
        deltas_m.append(operator_delta(Tm, Q, n).value)
    gaps = np.array(gaps)
    deltas_m = np.array(deltas_m)
    margins = gaps + deltas_m + tol - delta
    return UniformLimitReport(n, delta, gaps, deltas_m, margins,
                              bool(np.all(margins >= 0)), tol)


# -- order-c0 decomposition ------------------------------------------------------


@dataclass(frozen=True)
class OrderC0Decomposition:
    """Doubling iteration transcript: atoms, coefficients, and certified bounds.

    For each input point d the reconstruction sum over stages k of
    lambda_k * atom_k approaches d, with the residual after stage k certified
    below scale * 4^-k and every stage-k atom below scale * 3 * 2^-(k-2).
    """

    scale: float
    depth: int
    stage_indices: list[int]          # chain index used at each stage
    lambdas: np.ndarray               # 2^-k, k = 1..depth
    atoms: list[list[Element]]        # per input point, per stage (original scale)
    atom_norms: np.ndarray            # (points, depth)
    atom_bounds: np.ndarray           # per stage
    residual_norms: np.ndarray        # (points, depth): after each stage
    residual_bounds: np.ndarray       # per stage
    stage_thresholds: np.ndarray      # per stage, in scaled units

    def reconstruction(self, i: int, depth: int | None = None) -> Element:
        depth = self.depth if depth is None else depth
        acc = self.atoms[i][0] * self.lambdas[0]
        for k in range(1, depth):
            acc = acc + self.atoms[i][k] * self.lambdas[k]
        return acc

    @property
    def coefficient_budget(self) -> float:
        return float(np.sum(self.lambdas))


def order_c0_decompose(D: list[Element], s: SchemeDescriptor, depth: int,
                       horizon: int | None = None) -> OrderC0Decomposition:
    """Run the doubling iteration with solver-produced near-best atoms.

    Stage k doubles the previous residuals, finds the first chain index whose
    family error drops below 2^-(k+2) (scaled units), and subtracts the
    approximants.  Raises ThresholdNotReachedError when a stage cannot reach
    its threshold within the chain horizon.
    """
    if not D:
        raise ValueError("need a non-empty set")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    for x in D:
        s.check_compatible(x)
    sat = s.saturation_index()
    if horizon is None:
        horizon = sat if sat is not None else 4 * max(x.dim for x in D)
    elif sat is not None:
        horizon = min(horizon, sat)

    scale = max(1.0, max(norm(x) for x in D))
    current = [x * (1.0 / scale) for x in D]
    stage_indices: list[int] = []
    thresholds = []
    atoms: list[list[Element]] = [[] for _ in D]
    atom_norms = np.zeros((len(D), depth))
    residual_norms = np.zeros((len(D), depth))

    for k in range(1, depth + 1):
        targets = [y * 2.0 for y in current]
        threshold = 2.0 ** -(k + 2)
        chosen = None
        for nn in range(horizon + 1):
            if max(best_error(t, s, nn).error for t in targets) <= threshold:
                chosen = nn
                break
        if chosen is None:
            raise ThresholdNotReachedError(
                f"stage {k} cannot reach {threshold} within chain index {horizon}",
                stage=k, index=horizon)
        stage_indices.append(chosen)
        thresholds.append(threshold)
        nxt = []
        for i, t in enumerate(targets):
            b = best_error(t, s, chosen).approximant
            r = t - b
            atoms[i].append(b * scale)
            atom_norms[i, k - 1] = norm(b) * scale
            residual_norms[i, k - 1] = norm(r) * scale * 2.0**-k
            nxt.append(r)
        current = nxt

    ks = np.arange(1, depth + 1, dtype=float)
    return OrderC0Decomposition(
        scale=scale,
        depth=depth,
        stage_indices=stage_indices,
        lambdas=2.0**-ks,
        atoms=atoms,
        atom_norms=atom_norms,
        atom_bounds=scale * 3.0 * 2.0 ** -(ks - 2),
        residual_norms=residual_norms,
        residual_bounds=scale * 4.0**-ks,
        stage_thresholds=np.array(thresholds),
    )


# -- hull invariance, ball measure, net comparison -------------------------------


@dataclass(frozen=True)
class HullInvarianceReport:
    n: int
    vertex_value: float
    sample_max: float
    samples: int
    violations: int
    holds: bool
    tol: float


def hull_invariance_check(D: list[Element], s: SchemeDescriptor, n: int,
                          samples: int = 200, seed: int = 0,
                          tol: float | None = None) -> HullInvarianceReport:
    """Chain errors of absolutely convex combinations never beat the vertices.

    Samples random coefficient vectors with total mass at most one and checks
    E(combination, A_n) <= max over D of E(., A_n) plus tolerance.  Linear
    chains only: the argument needs the members to absorb the combination.
    """
    if not D:
        raise ValueError("need a non-empty set")
    if not s.linear:
        raise UnsupportedSchemeError("hull invariance needs a linear chain")
    from .spaces import absolutely_convex_combination

    tol = 10 * (1e-6 if s.kind == "poly_sup" else 1e-8) if tol is None else tol
    vertex = max(best_error(x, s, n).error for x in D)
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    for _ in range(samples):
        lam = rng.standard_normal(len(D))
        lam /= max(np.sum(np.abs(lam)), 1e-30)
        lam *= rng.uniform(0.0, 1.0)
        e = best_error(absolutely_convex_combination(D, lam), s, n).error
        worst = max(worst, e)
        if e > vertex + tol:
            violations += 1
    return HullInvarianceReport(n, vertex, worst, samples, violations,
                                violations == 0, tol)


@dataclass(frozen=True)
class BallMeasureReport:
    gamma: float
    stabilization_gap: float
    profile: QProfile


def ball_measure(D: list[Element], Q: GeneralizedScheme, N: int, tol: float = 1e-3,
                 seed: int = 0) -> BallMeasureReport:
    """Trailing width as the estimate of the limiting non-compactness radius."""
    prof = q_profile(D, Q, N, tol, seed)
    uppers = prof.uppers
    gap = float(uppers[-2] - uppers[-1]) if uppers.size >= 2 else 0.0
    return BallMeasureReport(float(uppers[-1]), gap, prof)


@dataclass(frozen=True)
class NetComparisonReport:
    """Per epsilon: the width at the atom index against the net-span error."""

    epsilons: list[float]
    net_sizes: list[int]
    chain_indices: list[int]
    width_values: np.ndarray
    span_errors: np.ndarray
    margins: np.ndarray
    holds: bool
    tol: float


def _span_distance(x: Element, span: list[Element]) -> float:
    """Distance from x to the linear span of the given elements (Hilbert kinds)."""
    if x.kind == "seq_lp" and x.p == 2.0:
        A = np.column_stack([e.payload for e in span])
        z = x.payload
    elif x.kind == "grid_lp" and x.p == 2.0:
        sw = np.sqrt(x.grid.quadrature_weights())
        A = np.column_stack([e.payload * sw for e in span])
        z = x.payload * sw
    else:
        raise UnsupportedSchemeError("span distances need an inner-product norm")
    q, _ = np.linalg.qr(A)
    return float(np.linalg.norm(z - q @ (q.T @ z)))


def compact_implies_qcompact_check(D: list[Element], Q: GeneralizedScheme,
                                   eps_schedule, horizon: int = 64,
                                   tol: float = 1e-9) -> NetComparisonReport:
    """Nets of D produce chain atoms whose span dominates the width.

    For each epsilon: cover D greedily, approximate every net center on the
    chain to within epsilon at some index, and verify the width at the mapped
    index K(N) is at most the distance of D to the atom span.
    """
    from .compactness import epsilon_net

    if Q.kind != "classical":
        raise UnsupportedSchemeError("the net comparison needs a classical scheme")
    s = Q.scheme
    if not s.linear:
        raise UnsupportedSchemeError("the net comparison needs a linear chain")
    eps_schedule = [float(e) for e in eps_schedule]
    if not eps_schedule:
        raise ValueError("need at least one epsilon")
    sat = s.saturation_index()
    top = horizon if sat is None else min(horizon, sat)

    sizes, indices, widths, spans = [], [], [], []
    for eps in eps_schedule:
        net = epsilon_net(D, eps)
        atoms = []
        worst_index = 0
        for c in net.centers:
            idx = None
            for nn in range(top + 1):
                ba = best_error(c, s, nn)
                if ba.error <= eps:
                    idx = nn
                    atoms.append(ba.approximant)
                    break
            if idx is None:
                raise ThresholdNotReachedError(
                    f"net center cannot be approximated within {eps} up to index {top}",
                    index=top)
            worst_index = max(worst_index, idx)
        mapped = s.K(worst_index)
        width = gen_kolmogorov_number(D, Q, mapped).value
        span_err = max(_span_distance(x, atoms) for x in D)
        sizes.append(len(net.centers))
        indices.append(mapped)
        widths.append(width)
        spans.append(span_err)
    widths = np.array(widths)
    spans = np.array(spans)
    margins = spans + tol - widths
    return NetComparisonReport(eps_schedule, sizes, indices, widths, spans, margins,
                               bool(np.all(margins >= 0)), tol)
