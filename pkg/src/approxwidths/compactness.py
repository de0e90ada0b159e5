"""Family-level compactness diagnostics on a fixed chain.

Everything here is finite evidence about a finite family: error profiles and
their decay, greedy covering nets, the shift decomposition M inside A_N + M',
witness weight sequences with their summability bound, smoothness tables
(modulus of continuity, equicontinuity, empirical Jackson ratios), prescribed
error-profile witnesses, and the projection-defect inequality.

Verdicts are labelled "evidence-..." throughout: a finite family is always
literally compact, so the diagnostics target the parameterized family the
samples represent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    KindMismatchError,
    ProfileNotDecayingError,
    ThresholdNotReachedError,
    UnsupportedSchemeError,
)
from .schemes import (
    DEFAULT_TOL_HILBERT,
    DEFAULT_TOL_MINIMAX,
    SchemeDescriptor,
    apply_projection,
    best_error,
    projection_bound,
)
from .sequences import WeightSequence
from .spaces import Element, distance, norm

__all__ = [
    "ErrorProfile",
    "NetResult",
    "CompactnessReport",
    "ShiftDecomposition",
    "EquicontinuityReport",
    "JacksonReport",
    "ProjectionDefectReport",
    "error_profile",
    "compactness_test",
    "epsilon_net",
    "shift_decomposition",
    "witness_weights",
    "modulus_of_continuity",
    "equicontinuity_report",
    "jackson_ratio",
    "lethargy_witness",
    "projection_defect",
]


def default_tol(s: SchemeDescriptor) -> float:
    return DEFAULT_TOL_MINIMAX if s.kind == "poly_sup" else DEFAULT_TOL_HILBERT


@dataclass(frozen=True)
class ErrorProfile:
    """alpha_n = max over the family of E(x, A_n), for n = 0..horizon."""

    values: np.ndarray
    horizon: int
    family_size: int
    scheme_kind: str
    tol: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def monotone_defect(self) -> float:
        """Largest upward jump; zero for an exactly non-increasing profile."""
        if self.values.size < 2:
            return 0.0
        return float(max(0.0, np.max(self.values[1:] - self.values[:-1])))

    @property
    def tail(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class NetResult:
    """Greedy farthest-point covering net."""

    centers: list[Element]
    center_indices: list[int]
    radius: float
    covered: np.ndarray
    iterations: int

    @property
    def all_covered(self) -> bool:
        return bool(np.all(self.covered))


@dataclass(frozen=True)
class CompactnessReport:
    verdict: str  # "evidence-compact" | "evidence-noncompact" | "inconclusive"
    bounded: bool
    bound: float
    profile: ErrorProfile
    tail: float
    stall_gap: float
    tol: float


@dataclass(frozen=True)
class ShiftDecomposition:
    """x = a(x) + y(x) with a(x) in A_N and every y(x) in the unit ball."""

    index: int
    approximants: list[Element]
    residuals: list[Element]
    residual_norms: np.ndarray


def error_profile(M: list[Element], s: SchemeDescriptor, N: int,
                  tol: float | None = None) -> ErrorProfile:
    """Worst best-approximation error over the family at each index up to N."""
    if not M:
        raise ValueError("need a non-empty family")
    for x in M:
        s.check_compatible(x)
    tol = default_tol(s) if tol is None else tol
    values = np.array([
        max(best_error(x, s, n, tol).error for x in M) for n in range(N + 1)
    ])
    return ErrorProfile(values, N, len(M), s.kind, tol)


def _norms_running_away(norms: np.ndarray) -> bool:
    # growth evidence: member norms strictly increase along the family order
    # and at least double overall, i.e. the parameterization is running away
    if norms.size < 3:
        return False
    return bool(np.all(np.diff(norms) > 0) and norms[-1] >= 2.0 * max(norms[0], 1e-30))


def compactness_test(M: list[Element], s: SchemeDescriptor, N: int,
                     tol: float = 1e-3, solver_tol: float | None = None) -> CompactnessReport:
    """Boundedness evidence plus profile decay, the two halves of the dichotomy.

    ``bounded`` is finite evidence, not a theorem: it is False when the member
    norms grow monotonically along the family order (the parameterization is
    running away), True otherwise; the maximum norm is always reported.  The
    verdict likewise reports grid-level evidence at the given horizon only.
    """
    profile = error_profile(M, s, N, solver_tol)
    norms = np.array([norm(x) for x in M])
    bound = float(np.max(norms))
    bounded = not _norms_running_away(norms)
    tail = profile.tail
    mid = profile.values[max(0, N // 2)]
    stall_gap = float(mid - tail)
    if bounded and tail < tol:
        verdict = "evidence-compact"
    elif not bounded:
        verdict = "evidence-noncompact"
    elif stall_gap <= tol:
        # the profile has flattened well above the tolerance
        verdict = "evidence-noncompact"
    else:
        verdict = "inconclusive"
    return CompactnessReport(verdict, bounded, bound, profile, tail, stall_gap, tol)


def epsilon_net(M: list[Element], eps: float) -> NetResult:
    """Greedy farthest-point net: add the farthest point until everything is within eps.

    Deterministic given the input order; the first point seeds the net.
    """
    if not M:
        raise ValueError("need a non-empty family")
    if eps <= 0:
        raise ValueError("eps must be positive")
    dists = np.array([distance(x, M[0]) for x in M])
    chosen = [0]
    iterations = 0
    while np.max(dists) > eps:
        iterations += 1
        far = int(np.argmax(dists))
        chosen.append(far)
        dists = np.minimum(dists, np.array([distance(x, M[far]) for x in M]))
    return NetResult(
        centers=[M[i] for i in chosen],
        center_indices=chosen,
        radius=float(eps),
        covered=dists <= eps,
        iterations=iterations,
    )


def shift_decomposition(M: list[Element], s: SchemeDescriptor, tol: float | None = None,
                        horizon: int = 64) -> tuple[int, ShiftDecomposition]:
    """Split every x as a(x) + y(x) with a(x) in A_N and ||y(x)|| <= 1.

    N is the first index where the family profile reaches 1/2, so near-best
    approximants leave residuals inside the unit ball.  Raises
    ThresholdNotReachedError when the profile never gets there.
    """
    if not M:
        raise ValueError("need a non-empty family")
    tol = default_tol(s) if tol is None else tol
    sat = s.saturation_index()
    top = horizon if sat is None else min(horizon, sat)
    index = None
    for n in range(top + 1):
        if max(best_error(x, s, n, tol).error for x in M) <= 0.5:
            index = n
            break
    if index is None:
        raise ThresholdNotReachedError(
            f"family profile stays above 1/2 up to index {top}", index=top)
    approximants = []
    residuals = []
    for x in M:
        a = best_error(x, s, index, tol).approximant
        approximants.append(a)
        residuals.append(x - a)
    norms = np.array([norm(y) for y in residuals])
    return index, ShiftDecomposition(index, approximants, residuals, norms)


def witness_weights(profile, q: float) -> WeightSequence:
    """Weight sequence built from a decaying profile alpha.

    Indices where alpha first dips below 2^-k get unit weight (these recur all
    the way to the deepest threshold the horizon resolves, which is the finite
    divergence evidence); elsewhere b_n = 1/(2^n alpha_n).  Zero profile
    entries also get unit weight: they cost nothing in the norm and keep the
    divergence evidence.  The construction guarantees
    sum_n b_n alpha_n^q <= 3 for any profile dominating the family.
    """
    if math.isinf(q):
        raise ValueError("the weight construction needs q < inf")
    if q < 1:
        raise ValueError("q must satisfy q >= 1")
    alpha = profile.values if hasattr(profile, "values") else np.asarray(profile, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise ValueError("need a non-empty profile")
    if np.any(alpha < 0):
        raise ValueError("profile entries must be non-negative")

    floor = float(np.min(alpha))
    if floor > 0.5:
        raise ProfileNotDecayingError(
            f"profile never reaches 1/2 (minimum {floor}); no unit index exists")
    selected = []
    k = 1
    while True:
        hits = np.flatnonzero(alpha <= 2.0**-k)
        if hits.size == 0:
            break  # deeper thresholds are beyond this horizon
        n_k = int(hits[0])
        selected.append(n_k)
        if alpha[n_k] == 0.0 or 2.0**-k < max(floor, np.finfo(float).tiny):
            break
        k += 1

    n = np.arange(alpha.size, dtype=float)
    with np.errstate(divide="ignore"):
        b = np.where(alpha > 0, 1.0 / (2.0**n * np.where(alpha > 0, alpha, 1.0)), 1.0)
    b[np.array(selected, dtype=int)] = 1.0
    return WeightSequence(b, q)


def modulus_of_continuity(f: Element, delta: float) -> float:
    """Largest |f(t) - f(s)| over node pairs with |t - s| <= delta."""
    if f.kind not in ("grid_sup", "grid_lp"):
        raise KindMismatchError("modulus of continuity needs a grid element")
    if delta <= 0:
        raise ValueError("delta must be positive")
    t = f.grid.nodes
    v = f.payload
    best = 0.0
    for i in range(t.size - 1):
        j = int(np.searchsorted(t, t[i] + delta, side="right"))
        if j > i + 1:
            window = v[i + 1 : j]
            best = max(best, float(np.max(np.abs(window - v[i]))))
    return best


@dataclass(frozen=True)
class EquicontinuityReport:
    """sup over the family of the modulus of continuity, per delta."""

    deltas: np.ndarray
    sup_moduli: np.ndarray
    threshold: float
    equicontinuous: bool
    uniform_bound: float


def equicontinuity_report(M: list[Element], deltas, threshold: float = 0.1) -> EquicontinuityReport:
    """Monotone table of worst moduli: the evidence pair for grid families.

    The family is flagged equicontinuous when the worst modulus at the
    smallest delta is below the threshold.
    """
    if not M:
        raise ValueError("need a non-empty family")
    grid = M[0].grid
    for f in M[1:]:
        if f.grid is None or not grid.matches(f.grid):
            raise ValueError("equicontinuity needs a common grid")
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1].copy()
    if deltas.size == 0 or deltas[-1] <= 0:
        raise ValueError("need positive deltas")
    table = np.array([
        max(modulus_of_continuity(f, float(d)) for f in M) for d in deltas
    ])
    return EquicontinuityReport(
        deltas=deltas,
        sup_moduli=table,
        threshold=float(threshold),
        equicontinuous=bool(table[-1] <= threshold),
        uniform_bound=max(norm(f) for f in M),
    )


@dataclass(frozen=True)
class JacksonReport:
    """Ratios of best polynomial errors to moduli at matched scales."""

    indices: list[int]
    errors: np.ndarray
    moduli: np.ndarray
    ratios: np.ndarray
    max_ratio: float


def jackson_ratio(f: Element, s: SchemeDescriptor, n_range) -> JacksonReport:
    """E(f, A_n) / w(f, 1/(n+1)) over the given indices.

    The largest ratio is an empirical smoothness-to-error constant.  A constant
    input short-circuits every ratio to zero.
    """
    if s.kind != "poly_sup":
        raise UnsupportedSchemeError("Jackson ratios are defined for the poly_sup chain")
    s.check_compatible(f)
    indices = [int(n) for n in n_range]
    if not indices:
        raise ValueError("need at least one index")
    errors = np.array([best_error(f, s, n).error for n in indices])
    spread = float(np.max(f.payload) - np.min(f.payload))
    if spread <= 1e-14 * max(1.0, float(np.max(np.abs(f.payload)))):
        zero = np.zeros(len(indices))
        return JacksonReport(indices, errors, zero, zero, 0.0)
    min_gap = float(np.min(np.diff(f.grid.nodes)))
    moduli = np.array([
        modulus_of_continuity(f, max(1.0 / (n + 1), min_gap)) for n in indices
    ])
    if np.any(moduli == 0):
        raise ValueError("modulus vanished for a non-constant input; refine the grid")
    ratios = errors / moduli
    return JacksonReport(indices, errors, moduli, ratios, float(np.max(ratios)))


def lethargy_witness(eps, s: SchemeDescriptor) -> Element:
    """Element whose chain errors reproduce a prescribed non-increasing sequence.

    For an orthonormal chain of dimension d and eps_0 >= ... >= eps_{d-1} >= 0
    (eps_d treated as zero), the payload sum of sqrt(eps_{k-1}^2 - eps_k^2)
    times the k-th basis column has E(f, A_k) = eps_k exactly.
    """
    if s.kind != "subspace_chain":
        raise UnsupportedSchemeError("the witness needs an orthonormal subspace chain")
    basis = s.basis
    d = basis.shape[1]
    gram = basis.T @ basis
    if not np.allclose(gram, np.eye(d), atol=1e-10):
        raise ValueError("the witness needs an orthonormal chain basis")
    eps = np.asarray(eps, dtype=float)
    if eps.ndim != 1 or eps.size != d:
        raise ValueError(f"need exactly {d} prescribed errors, got {eps.size}")
    if np.any(eps < 0):
        raise ValueError("prescribed errors must be non-negative")
    if np.any(np.diff(eps) > 0):
        raise ValueError("prescribed errors must be non-increasing")
    padded = np.append(eps, 0.0)
    coeffs = np.sqrt(padded[:-1] ** 2 - padded[1:] ** 2)
    return Element.seq(basis @ coeffs, 2.0)


@dataclass(frozen=True)
class ProjectionDefectReport:
    """||f - P_k f|| against (1 + ||P_k||) E(f, A_k), per family member."""

    k: int
    projection_norm: float
    residual_norms: np.ndarray
    best_errors: np.ndarray
    ratios: np.ndarray  # residual / best error where the best error is nonzero
    max_ratio: float
    holds: bool
    tol: float


def projection_defect(M: list[Element], s: SchemeDescriptor, k: int,
                      tol: float = 1e-10) -> ProjectionDefectReport:
    """Check the projection-residual inequality on every family member."""
    if not M:
        raise ValueError("need a non-empty family")
    pk = projection_bound(s, k)
    residuals = []
    errors = []
    for f in M:
        residuals.append(distance(f, apply_projection(f, s, k)))
        errors.append(best_error(f, s, k).error)
    residuals = np.array(residuals)
    errors = np.array(errors)
    bound = (1.0 + pk) * errors + tol
    mask = errors > tol
    ratios = np.where(mask, residuals / np.where(mask, errors, 1.0), 0.0)
    return ProjectionDefectReport(
        k=k,
        projection_norm=pk,
        residual_norms=residuals,
        best_errors=errors,
        ratios=ratios,
        max_ratio=float(np.max(ratios)) if ratios.size else 0.0,
        holds=bool(np.all(residuals <= bound)),
        tol=tol,
    )
