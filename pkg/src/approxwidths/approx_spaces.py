"""Norms built from best-approximation error profiles.

An element's profile (E(x, A_0), ..., E(x, A_N)) is pushed through a sequence
norm: either the rearrangement norm with polynomial weights, or a weighted l^q
norm.  All values are finite-horizon truncations; the horizon travels with the
spec so membership claims stay explicitly "evidence up to N".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .schemes import SchemeDescriptor, best_error
from .sequences import DecayReport, WeightSequence, c0_beta_decay, lorentz_norm, weighted_lq_norm
from .spaces import Element

__all__ = ["ApproxSpaceSpec", "approx_space_norm", "family_bound", "null_closure_report"]


@dataclass(frozen=True)
class ApproxSpaceSpec:
    """A scheme, a sequence norm, and the truncation horizon.

    ``s_kind`` selects the sequence norm: ``"lorentz"`` uses (p, r) rearrangement
    weights; ``"weighted_lq"`` and ``"weighted_lq0"`` use an explicit weight
    sequence.  The two weighted flavours share the same norm value; the ``lq0``
    flavour additionally tracks the null-closure membership proxy (for q = inf
    the natural ambient norm is the weighted sup).
    """

    scheme: SchemeDescriptor
    s_kind: str
    horizon: int
    p: float | None = None
    r: float | None = None
    weights: WeightSequence | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.s_kind == "lorentz":
            if self.p is None or self.r is None:
                raise ValueError("lorentz spec needs p and r")
        elif self.s_kind in ("weighted_lq", "weighted_lq0"):
            if self.weights is None:
                raise ValueError("weighted spec needs a weight sequence")
            if self.weights.values[0] <= 0:
                raise ValueError("weighted spec needs b_0 > 0")
        else:
            raise ValueError(f"unknown sequence-space kind {self.s_kind!r}")

    @classmethod
    def lorentz(cls, scheme: SchemeDescriptor, p: float, r: float, horizon: int) -> "ApproxSpaceSpec":
        return cls(scheme, "lorentz", horizon, p=p, r=r)

    @classmethod
    def weighted(cls, scheme: SchemeDescriptor, weights: WeightSequence, horizon: int,
                 null_closure: bool = False) -> "ApproxSpaceSpec":
        kind = "weighted_lq0" if null_closure else "weighted_lq"
        return cls(scheme, kind, horizon, weights=weights)


def _error_values(x: Element, spec: ApproxSpaceSpec) -> np.ndarray:
    return np.array([
        best_error(x, spec.scheme, n).error for n in range(spec.horizon + 1)
    ])


def approx_space_norm(x: Element, spec: ApproxSpaceSpec) -> float:
    """Sequence norm of the error profile of x, truncated at the spec horizon."""
    profile = _error_values(x, spec)
    if spec.s_kind == "lorentz":
        return lorentz_norm(profile, spec.p, spec.r)
    return weighted_lq_norm(profile, spec.weights)


def family_bound(M: list[Element], spec: ApproxSpaceSpec) -> float:
    """sup over the family of the approximation-space norm."""
    if not M:
        raise ValueError("need a non-empty family")
    return max(approx_space_norm(x, spec) for x in M)


def null_closure_report(x: Element, spec: ApproxSpaceSpec, window: int | None = None) -> DecayReport:
    """Membership proxy for the null-closure flavour: decay of b_n * E(x, A_n).

    The closure of the chain union inside the approximation space is not
    finitely decidable, so membership is evidenced by the trailing products.
    """
    if spec.s_kind != "weighted_lq0":
        raise ValueError("null-closure report is only defined for weighted_lq0 specs")
    if window is None:
        window = max(1, (spec.horizon + 1) // 4)
    profile = _error_values(x, spec)
    q = spec.weights.q
    if math.isinf(q):
        return c0_beta_decay(profile, spec.weights, window)
    # for finite q the products b_n E^q must vanish for the tail sums to close up
    powered = WeightSequence(spec.weights.values, 1.0)
    return c0_beta_decay(profile**q, powered, window)
