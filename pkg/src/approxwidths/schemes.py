"""Approximation-scheme catalog: nested chains with best-approximation solvers.

Four chains are provided.  Index 0 is the zero subspace for every kind; for the
two function chains, index n >= 1 is the full degree-n space, so the best error
at index n is the classical degree-n error.

* ``poly_sup``       — algebraic polynomials of degree <= n under the grid sup
                       norm, solved by a discrete exchange (minimax) iteration
                       with an equioscillation certificate;
* ``trig_l2``        — trigonometric polynomials of degree <= n under the
                       quadrature L2 norm, solved by weighted projection;
* ``nterm_lp``       — vectors with at most n nonzero coordinates in l^p,
                       solved exactly by largest-coordinate selection;
* ``subspace_chain`` — spans of leading basis columns in Euclidean space,
                       solved by least squares.

Past the grid resolution a chain saturates (the whole discrete space is
reachable); indices beyond saturation are a declared horizon limit, not an
error, and solvers report a zero best error there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .errors import (
    KindMismatchError,
    RankDeficientBasisError,
    UnsupportedSchemeError,
)
from .spaces import Element, Grid, distance, norm

__all__ = [
    "SchemeDescriptor",
    "BestApprox",
    "AxiomCheck",
    "AxiomReport",
    "best_error",
    "apply_projection",
    "projection_bound",
    "verify_axioms",
]

DEFAULT_TOL_HILBERT = 1e-8
DEFAULT_TOL_MINIMAX = 1e-6

_KINDS = ("poly_sup", "trig_l2", "nterm_lp", "subspace_chain")
_PROJECTION_KINDS = ("trig_l2", "subspace_chain")


@dataclass(frozen=True)
class BestApprox:
    """Best-approximation result: error, approximant, and solver evidence."""

    error: float
    approximant: Element
    n: int
    certificate: dict


class SchemeDescriptor:
    """One catalog chain together with its index map K(n)."""

    def __init__(self, kind: str, *, grid: Grid | None = None, p: float | None = None,
                 basis: np.ndarray | None = None):
        if kind not in _KINDS:
            raise ValueError(f"unknown scheme kind {kind!r}")
        self.kind = kind
        self.grid = grid
        self.p = p
        self.basis = basis
        self._cache: dict = {}
        if kind in ("poly_sup", "trig_l2"):
            if grid is None:
                raise ValueError(f"{kind} needs a grid")
        if kind == "nterm_lp" and (p is None or p < 1):
            raise ValueError("nterm_lp needs an exponent p in [1, inf]")
        if kind == "subspace_chain":
            basis = np.array(basis, dtype=float)
            if basis.ndim != 2 or basis.shape[0] < 1 or basis.shape[1] < 1:
                raise ValueError("subspace_chain needs a (d x r) basis matrix")
            if not np.all(np.isfinite(basis)):
                raise ValueError("basis entries must be finite")
            basis.flags.writeable = False
            self.basis = basis

    # -- constructors -------------------------------------------------------

    @classmethod
    def poly_sup(cls, grid: Grid) -> "SchemeDescriptor":
        return cls("poly_sup", grid=grid)

    @classmethod
    def trig_l2(cls, grid: Grid) -> "SchemeDescriptor":
        return cls("trig_l2", grid=grid)

    @classmethod
    def nterm_lp(cls, p: float) -> "SchemeDescriptor":
        return cls("nterm_lp", p=p)

    @classmethod
    def subspace_chain(cls, basis) -> "SchemeDescriptor":
        return cls("subspace_chain", basis=np.asarray(basis, dtype=float))

    # -- structure ----------------------------------------------------------

    def K(self, n: int) -> int:
        """Index map with A_n + A_n contained in A_K(n)."""
        return 2 * n if self.kind == "nterm_lp" else n

    @property
    def linear(self) -> bool:
        return self.kind != "nterm_lp"

    @property
    def ambient_dim(self) -> int | None:
        if self.kind in ("poly_sup", "trig_l2"):
            return self.grid.size
        if self.kind == "subspace_chain":
            return self.basis.shape[0]
        return None

    def saturation_index(self) -> int | None:
        """Smallest n whose member set already fills the discrete space (None for nterm)."""
        if self.kind == "poly_sup":
            return self.grid.size - 1
        if self.kind == "trig_l2":
            return max(1, math.ceil((self.grid.size - 2) / 2))
        if self.kind == "subspace_chain":
            return self.basis.shape[1]
        return None

    def chain_dim(self, n: int) -> int:
        """Member-space dimension at index n (before grid saturation caps it)."""
        if n == 0:
            return 0
        if self.kind == "poly_sup":
            return min(n + 1, self.grid.size)
        if self.kind == "trig_l2":
            return min(2 * n + 1, self.grid.size - 1)
        if self.kind == "subspace_chain":
            return min(n, self.basis.shape[1])
        return n

    def check_compatible(self, x: Element):
        if self.kind == "poly_sup":
            if x.kind != "grid_sup" or not self.grid.matches(x.grid):
                raise KindMismatchError("poly_sup expects grid_sup elements on its own grid")
        elif self.kind == "trig_l2":
            if x.kind != "grid_lp" or x.p != 2.0 or not self.grid.matches(x.grid):
                raise KindMismatchError("trig_l2 expects grid_lp (p=2) elements on its own grid")
        elif self.kind == "nterm_lp":
            if x.kind != "seq_lp" or x.p != float(self.p):
                raise KindMismatchError(f"nterm_lp expects seq_lp elements with p={self.p}")
        else:
            if x.kind != "seq_lp" or x.p != 2.0 or x.dim != self.basis.shape[0]:
                raise KindMismatchError(
                    f"subspace_chain expects seq_lp (p=2) elements of length {self.basis.shape[0]}"
                )

    def zero_element(self, like: Element) -> Element:
        return like.zero_like()

    # -- cached solver data --------------------------------------------------

    def _poly_xi(self) -> np.ndarray:
        xi = self._cache.get("xi")
        if xi is None:
            g = self.grid
            xi = 2.0 * (g.nodes - g.a) / (g.b - g.a) - 1.0
            self._cache["xi"] = xi
        return xi

    def _trig_design(self, cols: int) -> np.ndarray:
        key = ("design", cols)
        mat = self._cache.get(key)
        if mat is None:
            g = self.grid
            omega = 2.0 * np.pi / (g.b - g.a)
            t = g.nodes - g.a
            columns = [np.ones(g.size)]
            j = 1
            while len(columns) < cols:
                columns.append(np.cos(j * omega * t))
                if len(columns) < cols:
                    columns.append(np.sin(j * omega * t))
                j += 1
            mat = np.column_stack(columns)
            self._cache[key] = mat
        return mat

    def _trig_sqrt_weights(self) -> np.ndarray:
        sw = self._cache.get("sw")
        if sw is None:
            sw = np.sqrt(self.grid.quadrature_weights())
            self._cache["sw"] = sw
        return sw

    def _trig_q(self, cols: int) -> np.ndarray:
        key = ("q", cols)
        q = self._cache.get(key)
        if q is None:
            sw = self._trig_sqrt_weights()
            q, r = np.linalg.qr(self._trig_design(cols) * sw[:, None])
            if np.any(np.abs(np.diag(r)) < 1e-10 * max(1.0, abs(r[0, 0]))):
                raise RankDeficientBasisError(
                    f"trigonometric design is rank deficient at {cols} columns on this grid"
                )
            self._cache[key] = q
        return q

    def _chain_q(self, cols: int) -> np.ndarray:
        key = ("q", cols)
        q = self._cache.get(key)
        if q is None:
            sub = self.basis[:, :cols]
            q, r = np.linalg.qr(sub)
            scale = max(1.0, float(np.max(np.abs(self.basis))))
            if np.any(np.abs(np.diag(r)) < 1e-10 * scale):
                raise RankDeficientBasisError(
                    f"leading {cols} basis columns are numerically dependent"
                )
            self._cache[key] = q
        return q

    def random_member(self, n: int, rng: np.random.Generator, like: Element) -> Element:
        """A pseudorandom member of the index-n set, shaped like ``like``."""
        self.check_compatible(like)
        if n == 0:
            return like.zero_like()
        if self.kind == "poly_sup":
            deg = min(n, self.grid.size - 1)
            coeffs = rng.normal(size=deg + 1)
            return like.with_payload(_cheb.chebval(self._poly_xi(), coeffs))
        if self.kind == "trig_l2":
            cols = self.chain_dim(n)
            coeffs = rng.normal(size=cols)
            return like.with_payload(self._trig_design(cols) @ coeffs)
        if self.kind == "subspace_chain":
            cols = self.chain_dim(n)
            coeffs = rng.normal(size=cols)
            return like.with_payload(self.basis[:, :cols] @ coeffs)
        support = rng.choice(like.dim, size=min(n, like.dim), replace=False)
        payload = np.zeros(like.dim)
        payload[support] = rng.normal(size=support.size)
        return like.with_payload(payload)

    def __repr__(self):
        extra = ""
        if self.grid is not None:
            extra = f", grid={self.grid!r}"
        if self.kind == "nterm_lp":
            extra = f", p={self.p}"
        if self.kind == "subspace_chain":
            extra = f", basis={self.basis.shape}"
        return f"SchemeDescriptor({self.kind!r}{extra})"


# -- discrete exchange minimax ------------------------------------------------


def _initial_reference(m: int, count: int) -> np.ndarray:
    targets = -np.cos(np.arange(count) * np.pi / (count - 1))
    idx = np.rint((targets + 1.0) * (m - 1) / 2.0).astype(int)
    # repair collisions while keeping the set strictly increasing
    for j in range(1, count):
        if idx[j] <= idx[j - 1]:
            idx[j] = idx[j - 1] + 1
    overflow = idx[-1] - (m - 1)
    if overflow > 0:
        idx -= overflow
        for j in range(count - 2, -1, -1):
            if idx[j] >= idx[j + 1]:
                idx[j] = idx[j + 1] - 1
    return idx


def _alternating_extrema(r: np.ndarray) -> list[int]:
    signs = np.sign(r)
    nz = np.flatnonzero(signs)
    if nz.size == 0:
        return [0]
    filled = signs.copy()
    filled[: nz[0]] = signs[nz[0]]
    for i in range(nz[0] + 1, r.size):
        if filled[i] == 0:
            filled[i] = filled[i - 1]
    boundaries = np.flatnonzero(filled[1:] != filled[:-1]) + 1
    bounds = np.concatenate(([0], boundaries, [r.size]))
    absr = np.abs(r)
    return [int(lo + np.argmax(absr[lo:hi])) for lo, hi in zip(bounds[:-1], bounds[1:])]


def _trim_reference(cands: list[int], absr: np.ndarray, need: int) -> list[int]:
    cands = list(cands)
    if (len(cands) - need) % 2 == 1:
        if absr[cands[0]] <= absr[cands[-1]]:
            cands.pop(0)
        else:
            cands.pop()
    while len(cands) > need:
        pair_scores = [max(absr[cands[j]], absr[cands[j + 1]]) for j in range(len(cands) - 1)]
        j = int(np.argmin(pair_scores))
        del cands[j : j + 2]
    return cands


def _single_exchange(ref: list[int], r: np.ndarray, i_star: int) -> list[int]:
    ref = list(ref)
    s_star = math.copysign(1.0, r[i_star])
    pos = int(np.searchsorted(ref, i_star))
    if pos < len(ref) and ref[pos] == i_star:
        return ref
    if pos == 0:
        if math.copysign(1.0, r[ref[0]]) == s_star:
            ref[0] = i_star
        else:
            ref = [i_star] + ref[:-1]
    elif pos == len(ref):
        if math.copysign(1.0, r[ref[-1]]) == s_star:
            ref[-1] = i_star
        else:
            ref = ref[1:] + [i_star]
    else:
        if math.copysign(1.0, r[ref[pos - 1]]) == s_star:
            ref[pos - 1] = i_star
        else:
            ref[pos] = i_star
    return sorted(ref)


def _exchange_minimax(xi: np.ndarray, y: np.ndarray, degree: int, tol: float,
                      max_iter: int = 80) -> tuple[np.ndarray, float, dict]:
    """Discrete minimax fit on the nodes ``xi`` by polynomials of the given degree.

    Runs a multiple-exchange iteration on the Chebyshev basis (single exchange
    as a fallback when the residual does not oscillate enough yet).  Returns
    the fitted values, the achieved max deviation, and a certificate with the
    alternation reference.  On a stall the best iterate is returned flagged
    ``near_best`` with its defect; it is always within that defect of optimal.
    """
    m = xi.size
    scale = max(1.0, float(np.max(np.abs(y))))
    snap = 1e-13 * scale
    count = degree + 2
    if count > m:
        # saturated chain: the space interpolates every grid function
        coeffs, *_ = np.linalg.lstsq(_cheb.chebvander(xi, m - 1), y, rcond=None)
        fitted = _cheb.chebval(xi, coeffs)
        err = float(np.max(np.abs(y - fitted)))
        return fitted, err, {"method": "exchange", "saturated": True, "near_best": False,
                             "defect": 0.0, "iterations": 0}

    ref = list(_initial_reference(m, count))
    sigma = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
    best = None  # (emax, fitted, r, ref, h)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        xr = xi[ref]
        system = np.column_stack([_cheb.chebvander(xr, degree), sigma])
        sol = np.linalg.solve(system, y[ref])
        coeffs, h = sol[:-1], float(sol[-1])
        fitted = _cheb.chebval(xi, coeffs)
        r = y - fitted
        emax = float(np.max(np.abs(r)))
        if best is None or emax < best[0]:
            best = (emax, fitted, r, list(ref), h)
        if emax <= abs(h) + tol * max(emax, 1e-30) + snap or emax <= snap:
            converged = True
            break
        cands = _alternating_extrema(r)
        if len(cands) >= count:
            new_ref = _trim_reference(cands, np.abs(r), count)
        else:
            new_ref = _single_exchange(ref, r, int(np.argmax(np.abs(r))))
        if new_ref == ref:
            break
        ref = new_ref

    emax, fitted, r, ref, h = best
    defect = max(0.0, emax - abs(h))
    near_best = not (converged or defect <= tol * max(emax, 1e-30) + snap)
    return fitted, emax, {
        "method": "exchange",
        "saturated": False,
        "reference": ref,
        "level": abs(h),
        "near_best": near_best,
        "defect": defect,
        "iterations": iterations,
        "residual": r,
    }


# -- best approximation --------------------------------------------------------


def _best_poly(x: Element, s: SchemeDescriptor, n: int, tol: float) -> BestApprox:
    degree = n
    fitted, err, info = _exchange_minimax(s._poly_xi(), x.payload, degree, tol)
    cert = {
        "method": "exchange",
        "near_best": info["near_best"],
        "defect": info["defect"],
        "iterations": info["iterations"],
        "saturated": info["saturated"],
    }
    if not info["saturated"]:
        ref = info["reference"]
        r = info["residual"]
        cert.update(
            alternation_nodes=[float(s.grid.nodes[i]) for i in ref],
            signs=[int(math.copysign(1, r[i])) if r[i] != 0 else 0 for i in ref],
            levels=[float(abs(r[i])) for i in ref],
            level=info["level"],
        )
    return BestApprox(err, x.with_payload(fitted), n, cert)


def _best_projection(x: Element, s: SchemeDescriptor, n: int) -> BestApprox:
    if s.kind == "trig_l2":
        sw = s._trig_sqrt_weights()
        q = s._trig_q(s.chain_dim(n))
        z = x.payload * sw
        proj = q @ (q.T @ z)
        residual = z - proj
        approx = x.with_payload(proj / sw)
        ortho = float(np.max(np.abs(q.T @ residual))) if q.size else 0.0
    else:
        q = s._chain_q(s.chain_dim(n))
        proj = q @ (q.T @ x.payload)
        residual = x.payload - proj
        approx = x.with_payload(proj)
        ortho = float(np.max(np.abs(q.T @ residual))) if q.size else 0.0
    err = float(np.linalg.norm(residual))
    return BestApprox(err, approx, n, {"method": "projection", "residual_orthogonality": ortho})


def _best_nterm(x: Element, s: SchemeDescriptor, n: int) -> BestApprox:
    keep = min(n, x.dim)
    # stable sort on (-|x|, index): ties break toward the lowest index
    order = np.argsort(-np.abs(x.payload), kind="stable")
    support = np.sort(order[:keep])
    payload = np.zeros(x.dim)
    payload[support] = x.payload[support]
    approx = x.with_payload(payload)
    return BestApprox(
        distance(x, approx), approx, n,
        {"method": "support", "support": [int(i) for i in support]},
    )


def best_error(x: Element, s: SchemeDescriptor, n: int, tol: float | None = None) -> BestApprox:
    """Distance from x to the index-n member set, with approximant and certificate."""
    s.check_compatible(x)
    if n < 0:
        raise ValueError("index must be non-negative")
    if n == 0:
        zero = x.zero_like()
        return BestApprox(norm(x), zero, 0, {"method": "zero_set"})
    if s.kind == "poly_sup":
        return _best_poly(x, s, n, DEFAULT_TOL_MINIMAX if tol is None else tol)
    if s.kind == "nterm_lp":
        return _best_nterm(x, s, n)
    return _best_projection(x, s, n)


def apply_projection(x: Element, s: SchemeDescriptor, k: int) -> Element:
    """P_k x for the projection-capable kinds (trig_l2, subspace_chain)."""
    if s.kind not in _PROJECTION_KINDS:
        raise UnsupportedSchemeError(f"{s.kind} does not expose linear projections")
    s.check_compatible(x)
    if k < 0:
        raise ValueError("index must be non-negative")
    if k == 0:
        return x.zero_like()
    return _best_projection(x, s, k).approximant


def projection_bound(s: SchemeDescriptor, k: int, method: str = "exact",
                     rng: np.random.Generator | None = None, iterations: int = 60) -> float:
    """Operator norm of P_k on the discretized space.

    The catalog projections are orthogonal in their inner products, so the
    exact value is 1 for every nonempty range (0 for the zero map at k = 0).
    ``method="power"`` estimates the same value by power iteration instead.
    """
    if s.kind not in _PROJECTION_KINDS:
        raise UnsupportedSchemeError(f"{s.kind} does not expose linear projections")
    if k < 0:
        raise ValueError("index must be non-negative")
    if k == 0:
        return 0.0
    if method == "exact":
        # force the factorization so rank problems surface here, not later
        if s.kind == "trig_l2":
            s._trig_q(s.chain_dim(k))
        else:
            s._chain_q(s.chain_dim(k))
        return 1.0
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    dim = s.ambient_dim
    v = rng.normal(size=dim)
    q = s._trig_q(s.chain_dim(k)) if s.kind == "trig_l2" else s._chain_q(s.chain_dim(k))
    for _ in range(iterations):
        v = q @ (q.T @ v)
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        v /= nv
    return float(np.linalg.norm(q @ (q.T @ v)))


# -- finite-scale axiom checking ------------------------------------------------


@dataclass(frozen=True)
class AxiomCheck:
    passed: bool
    trials: int
    max_defect: float
    note: str = ""


@dataclass(frozen=True)
class AxiomReport:
    """Finite evidence for the three chain axioms on random members and samples."""

    additivity: AxiomCheck        # A_n + A_n inside A_K(n)
    scale_invariance: AxiomCheck  # lambda * A_n inside A_n
    density_evidence: AxiomCheck  # E(x, A_n) -> 0 across the samples
    tail_errors: np.ndarray
    horizon: int

    @property
    def all_passed(self) -> bool:
        return (self.additivity.passed and self.scale_invariance.passed
                and self.density_evidence.passed)


def verify_axioms(s: SchemeDescriptor, samples: list[Element], horizon: int,
                  seed: int = 0, trials: int = 12, tol: float | None = None,
                  density_threshold: float = 1e-6) -> AxiomReport:
    """Check the chain axioms at desk scale.

    Set-algebra axioms are tested on random members (the defect is the best
    error of the combined element at the target index); density can only be
    evidenced, via the trailing errors of the given samples over the horizon.
    """
    if not samples:
        raise ValueError("need at least one sample element")
    if tol is None:
        tol = DEFAULT_TOL_MINIMAX if s.kind == "poly_sup" else DEFAULT_TOL_HILBERT
    rng = np.random.default_rng(seed)
    like = samples[0]
    sat = s.saturation_index()
    top = horizon if sat is None else min(horizon, sat)
    indices = sorted({max(1, top // 4), max(1, top // 2), max(1, top)})

    add_defect = 0.0
    scale_defect = 0.0
    count = 0
    for n in indices:
        for _ in range(max(1, trials // len(indices))):
            a = s.random_member(n, rng, like)
            b = s.random_member(n, rng, like)
            add_defect = max(add_defect, best_error(a + b, s, s.K(n)).error)
            lam = float(rng.uniform(-3.0, 3.0))
            scale_defect = max(scale_defect, best_error(lam * a, s, n).error)
            count += 1

    ref = max(norm(x) for x in samples)
    rel = tol * max(1.0, ref)
    tails = np.array([best_error(x, s, horizon).error for x in samples])
    density = AxiomCheck(
        passed=bool(np.max(tails) <= density_threshold),
        trials=len(samples),
        max_defect=float(np.max(tails)),
        note=f"trailing best error at index {horizon}",
    )
    return AxiomReport(
        additivity=AxiomCheck(add_defect <= rel, count, add_defect,
                              note=f"checked at indices {indices} with K(n)"),
        scale_invariance=AxiomCheck(scale_defect <= rel, count, scale_defect),
        density_evidence=density,
        tail_errors=tails,
        horizon=horizon,
    )
