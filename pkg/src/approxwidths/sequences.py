"""Sequence-space machinery: rearrangements, weighted norms, decay and growth reports.

All sequences are finite, indexed 0..horizon.  Claims about infinite behaviour
(memberships, diverging weight norms) are replaced by finite-horizon evidence
carried in small report objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RealSeq",
    "WeightSequence",
    "DecayReport",
    "GrowthReport",
    "nonincreasing_rearrangement",
    "lorentz_norm",
    "weighted_lq_norm",
    "c0_beta_decay",
    "divergence_witness",
]

_TREND_TOL = 1e-12


def _as_values(a) -> np.ndarray:
    values = np.array(getattr(a, "values", a), dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("expected a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(values)):
        raise ValueError("sequence entries must be finite")
    if np.any(values < 0):
        raise ValueError("sequence entries must be non-negative")
    return values


@dataclass(frozen=True)
class RealSeq:
    """Finite non-negative real sequence (a_0, ..., a_horizon)."""

    values: np.ndarray

    def __post_init__(self):
        values = _as_values(self.values)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> int:
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class WeightSequence:
    """Weights (b_0, ..., b_N) with an exponent q in [1, inf]."""

    values: np.ndarray
    q: float = 1.0

    def __post_init__(self):
        values = _as_values(self.values)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "q", float(self.q))
        if not self.q >= 1.0:
            raise ValueError(f"q must satisfy q >= 1, got {self.q}")

    @property
    def horizon(self) -> int:
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DecayReport:
    """Finite-horizon evidence that a_n * b_n tends to zero."""

    trailing_max: float
    trend: str  # "decreasing" | "flat" | "increasing" | "mixed"
    window: int
    products: np.ndarray

    @property
    def vanishing_evidence(self) -> bool:
        return self.trend == "decreasing" or self.trailing_max <= _TREND_TOL


@dataclass(frozen=True)
class GrowthReport:
    """Smallest prefix whose partial weight norm reaches a threshold, if any."""

    attained: bool
    prefix_length: int | None
    threshold: float
    q: float
    partial_norm_at_horizon: float
    horizon: int


def nonincreasing_rearrangement(a) -> RealSeq:
    """Sort a sequence into non-increasing order (a permutation of the input)."""
    values = _as_values(a)
    return RealSeq(np.sort(values)[::-1].copy())


def lorentz_norm(a, p: float, r: float) -> float:
    """Weighted norm of the non-increasing rearrangement with weights n^(r*p-1).

    The inner sum runs over positions n = 1, 2, ... of the rearranged sequence,
    so entry 0 of the input contributes at position 1.
    """
    if p < 1:
        raise ValueError(f"p must satisfy p >= 1, got {p}")
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    star = nonincreasing_rearrangement(a).values
    n = np.arange(1, star.size + 1, dtype=float)
    return float(np.sum(n ** (r * p - 1.0) * star**p) ** (1.0 / p))


def weighted_lq_norm(a, weights: WeightSequence) -> float:
    """(sum b_n |a_n|^q)^(1/q) for finite q, sup_n b_n |a_n| for q = inf.

    Shorter of the two sequences is zero-padded.
    """
    values = _as_values(a)
    b = weights.values
    size = max(values.size, b.size)
    av = np.zeros(size)
    av[: values.size] = np.abs(values)
    bv = np.zeros(size)
    bv[: b.size] = b
    if math.isinf(weights.q):
        return float(np.max(bv * av))
    return float(np.sum(bv * av**weights.q) ** (1.0 / weights.q))


def _classify_trend(products: np.ndarray) -> str:
    if products.size < 2:
        return "flat"
    scale = max(1.0, float(np.max(products)))
    diffs = np.diff(products)
    tol = _TREND_TOL * scale
    if np.all(np.abs(diffs) <= tol):
        return "flat"
    if np.all(diffs <= tol):
        return "decreasing"
    if np.all(diffs >= -tol):
        return "increasing"
    return "mixed"


def c0_beta_decay(a, weights: WeightSequence, window: int) -> DecayReport:
    """Trailing-window report on the products a_n * b_n.

    Desk-scale proxy for membership in the weighted null-sequence space: the
    products over the last ``window`` indices should be small or shrinking.
    """
    values = _as_values(a)
    if window < 1 or window > values.size:
        raise ValueError(f"window must be in 1..{values.size}, got {window}")
    b = weights.values
    size = min(values.size, b.size)
    products = values[:size] * b[:size]
    tail = products[-window:] if window <= size else products
    return DecayReport(
        trailing_max=float(np.max(tail)),
        trend=_classify_trend(tail),
        window=window,
        products=products,
    )


def divergence_witness(weights: WeightSequence, threshold: float) -> GrowthReport:
    """Find the smallest prefix of the weights whose l^q norm reaches ``threshold``.

    Finite evidence for a diverging weight norm; non-attainment at the horizon
    is reported, never inferred as convergence.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    b = weights.values
    if math.isinf(weights.q):
        partial = np.maximum.accumulate(b)
    else:
        partial = np.cumsum(b**weights.q) ** (1.0 / weights.q)
    hit = np.flatnonzero(partial >= threshold)
    attained = hit.size > 0
    return GrowthReport(
        attained=attained,
        prefix_length=int(hit[0]) + 1 if attained else None,
        threshold=float(threshold),
        q=weights.q,
        partial_norm_at_horizon=float(partial[-1]),
        horizon=weights.horizon,
    )
