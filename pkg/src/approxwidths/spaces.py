"""Discretized normed-space elements: grid functions and finite sequences.

Three element kinds are supported:

* ``grid_sup`` — a function sampled on an interval grid, max-modulus norm;
* ``grid_lp``  — a function sampled on an interval grid, composite-trapezoid
  quadrature of |f|^p raised to 1/p;
* ``seq_lp``   — a finite coordinate vector under the plain l^p norm.

Elements are immutable values; arithmetic between compatible elements is
ordinary pointwise arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import KindMismatchError

__all__ = ["Grid", "Element", "norm", "distance", "absolutely_convex_combination"]

_GRID_KINDS = ("grid_sup", "grid_lp")
_KINDS = _GRID_KINDS + ("seq_lp",)


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing nodes on [a, b] with both endpoints included."""

    a: float
    b: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("grid nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        span = max(1.0, abs(self.b - self.a))
        if abs(nodes[0] - self.a) > 1e-12 * span or abs(nodes[-1] - self.b) > 1e-12 * span:
            raise ValueError("grid must start at a and end at b")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def uniform(cls, a: float, b: float, m: int) -> "Grid":
        if m < 2:
            raise ValueError("need at least two nodes")
        return cls(a, b, np.linspace(a, b, m))

    @classmethod
    def chebyshev(cls, a: float, b: float, m: int) -> "Grid":
        """Chebyshev-extrema nodes (clustered at the endpoints); odd m contains the midpoint."""
        if m < 2:
            raise ValueError("need at least two nodes")
        xi = np.cos(np.pi * np.arange(m)[::-1] / (m - 1))
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * xi
        nodes[0], nodes[-1] = a, b
        return cls(a, b, nodes)

    @property
    def size(self) -> int:
        return self.nodes.size

    def quadrature_weights(self) -> np.ndarray:
        """Composite-trapezoid weights for the grid nodes."""
        gaps = np.diff(self.nodes)
        w = np.empty(self.size)
        w[0] = gaps[0] / 2
        w[-1] = gaps[-1] / 2
        w[1:-1] = (gaps[1:] + gaps[:-1]) / 2
        return w

    def matches(self, other: "Grid") -> bool:
        return self is other or (
            self.a == other.a and self.b == other.b and np.array_equal(self.nodes, other.nodes)
        )

    def __repr__(self):
        return f"Grid(a={self.a}, b={self.b}, m={self.size})"


@dataclass(frozen=True, eq=False)
class Element:
    """A point of a discretized normed space, tagged with its norm semantics."""

    kind: str
    payload: np.ndarray
    p: float | None = None
    grid: Grid | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        payload = np.array(self.payload, dtype=float)
        if payload.ndim != 1 or payload.size == 0:
            raise ValueError("payload must be a non-empty vector")
        if not np.all(np.isfinite(payload)):
            raise ValueError("payload entries must be finite")
        payload.flags.writeable = False
        object.__setattr__(self, "payload", payload)
        if self.kind in _GRID_KINDS:
            if self.grid is None:
                raise ValueError(f"{self.kind} elements need a grid")
            if payload.size != self.grid.size:
                raise ValueError(
                    f"payload length {payload.size} != grid node count {self.grid.size}"
                )
        if self.kind == "grid_lp":
            if self.p is None or not 1 <= self.p < math.inf:
                raise ValueError("grid_lp needs a finite exponent p >= 1 (use grid_sup for p = inf)")
        if self.kind == "seq_lp":
            if self.p is None or self.p < 1:
                raise ValueError("seq_lp needs an exponent p in [1, inf]")
            object.__setattr__(self, "grid", None)
        if self.p is not None:
            object.__setattr__(self, "p", float(self.p))

    @classmethod
    def grid_sup(cls, grid: Grid, values) -> "Element":
        return cls("grid_sup", np.asarray(values, dtype=float), None, grid)

    @classmethod
    def grid_lp(cls, grid: Grid, values, p: float) -> "Element":
        return cls("grid_lp", np.asarray(values, dtype=float), p, grid)

    @classmethod
    def seq(cls, values, p: float = 2.0) -> "Element":
        return cls("seq_lp", np.asarray(values, dtype=float), p, None)

    @property
    def dim(self) -> int:
        return self.payload.size

    def with_payload(self, values) -> "Element":
        return Element(self.kind, np.asarray(values, dtype=float), self.p, self.grid)

    def zero_like(self) -> "Element":
        return self.with_payload(np.zeros(self.dim))

    def _require_compatible(self, other: "Element"):
        if not isinstance(other, Element):
            raise KindMismatchError(f"expected an Element, got {type(other).__name__}")
        if self.kind != other.kind:
            raise KindMismatchError(f"element kinds differ: {self.kind} vs {other.kind}")
        if self.p != other.p:
            raise KindMismatchError(f"norm exponents differ: {self.p} vs {other.p}")
        if self.kind in _GRID_KINDS:
            if not self.grid.matches(other.grid):
                raise KindMismatchError("elements live on different grids")
        elif self.dim != other.dim:
            raise KindMismatchError(f"sequence lengths differ: {self.dim} vs {other.dim}")

    def __add__(self, other: "Element") -> "Element":
        self._require_compatible(other)
        return self.with_payload(self.payload + other.payload)

    def __sub__(self, other: "Element") -> "Element":
        self._require_compatible(other)
        return self.with_payload(self.payload - other.payload)

    def __neg__(self) -> "Element":
        return self.with_payload(-self.payload)

    def __mul__(self, scalar) -> "Element":
        return self.with_payload(self.payload * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Element(kind={self.kind!r}, dim={self.dim}, p={self.p})"


def norm(x: Element) -> float:
    """Norm of an element under its own semantics."""
    if x.kind == "grid_sup":
        return float(np.max(np.abs(x.payload)))
    if x.kind == "grid_lp":
        w = x.grid.quadrature_weights()
        return float(np.sum(w * np.abs(x.payload) ** x.p) ** (1.0 / x.p))
    if math.isinf(x.p):
        return float(np.max(np.abs(x.payload)))
    return float(np.sum(np.abs(x.payload) ** x.p) ** (1.0 / x.p))


def distance(x: Element, y: Element) -> float:
    """norm(x - y); raises KindMismatchError on incompatible elements."""
    return norm(x - y)


def absolutely_convex_combination(points: list[Element], coefficients) -> Element:
    """sum lambda_i x_i with sum |lambda_i| <= 1."""
    if not points:
        raise ValueError("need at least one point")
    lam = np.asarray(coefficients, dtype=float)
    if lam.shape != (len(points),):
        raise ValueError(f"expected {len(points)} coefficients, got shape {lam.shape}")
    budget = float(np.sum(np.abs(lam)))
    if budget > 1.0 + 1e-12:
        raise ValueError(f"coefficient budget exceeded: sum |lambda| = {budget}")
    first = points[0]
    for other in points[1:]:
        first._require_compatible(other)
    acc = np.zeros(first.dim)
    for c, pt in zip(lam, points):
        acc += c * pt.payload
    return first.with_payload(acc)
