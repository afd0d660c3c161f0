"""Closed convex cones and simple sets with exact Euclidean projections.

Cones: :class:`Zero`, :class:`NonnegOrthant`, :class:`SecondOrder` and
:class:`Product`.  Sets: :class:`Box`, :class:`Ball`,
:class:`PPowerEpigraph` and :class:`FullSpace`.

Everything here is immutable and keeps no counters; counting happens in
:mod:`conicfo.problem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import DimensionError, NumericalError, ParameterError

__all__ = [
    "Cone", "Zero", "NonnegOrthant", "SecondOrder", "Product",
    "SimpleSet", "Box", "Ball", "PPowerEpigraph", "FullSpace",
    "project_cone", "project_polar_cone", "dist_cone", "project_set",
    "half_sq_dist_grad",
]


def _check_dim(v, dim, what):
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise DimensionError(f"{what} expects a vector of shape ({dim},), got {v.shape}")
    return v


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

class Cone:
    """Nonempty closed convex cone in R^dim."""

    dim: int

    def project(self, v):
        raise NotImplementedError

    def project_polar(self, v):
        # Moreau: v = P_K(v) + P_{K*}(v)
        return v - self.project(v)

    def dist(self, v):
        return float(np.linalg.norm(v - self.project(v)))

    def contains(self, v, tol=1e-10):
        return self.dist(v) <= tol * (1.0 + float(np.linalg.norm(v)))

    def sample(self, rng, size):
        """Draw ``size`` points of the cone (for brute-force checks)."""
        raw = rng.standard_normal((size, self.dim))
        return np.array([self.project(r) for r in raw])

    def to_spec(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Cone):
    """The trivial cone {0}; its polar is the whole space."""

    dim: int

    def project(self, v):
        return np.zeros_like(v)

    def project_polar(self, v):
        return v.copy()

    def to_spec(self):
        return {"type": "zero", "dim": self.dim}


@dataclass(frozen=True)
class NonnegOrthant(Cone):
    dim: int

    def project(self, v):
        return np.maximum(v, 0.0)

    def project_polar(self, v):
        return np.minimum(v, 0.0)

    def to_spec(self):
        return {"type": "orthant", "dim": self.dim}


@dataclass(frozen=True)
class SecondOrder(Cone):
    """Lorentz cone {(x, t) : ||x|| <= t}, with t stored last."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ParameterError("second-order cone needs dim >= 2")

    def project(self, v):
        x, t = v[:-1], v[-1]
        nx = math.sqrt(float(x @ x))
        if nx <= t:
            return v.copy()
        if nx <= -t:
            return np.zeros_like(v)
        a = 0.5 * (nx + t)
        out = np.empty_like(v)
        out[:-1] = (a / nx) * x
        out[-1] = a
        return out

    def to_spec(self):
        return {"type": "soc", "dim": self.dim}


@dataclass(frozen=True)
class Product(Cone):
    """Cartesian product of cones, blocks stacked in order."""

    cones: tuple
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cones", tuple(self.cones))
        if not self.cones:
            raise ParameterError("empty product cone")
        object.__setattr__(self, "dim", sum(c.dim for c in self.cones))

    def _blocks(self):
        start = 0
        for c in self.cones:
            yield c, slice(start, start + c.dim)
            start += c.dim

    def project(self, v):
        out = np.empty_like(v)
        for c, s in self._blocks():
            out[s] = c.project(v[s])
        return out

    def project_polar(self, v):
        out = np.empty_like(v)
        for c, s in self._blocks():
            out[s] = c.project_polar(v[s])
        return out

    def to_spec(self):
        return {"type": "product", "cones": [c.to_spec() for c in self.cones]}


def project_cone(cone: Cone, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``cone``."""
    return cone.project(_check_dim(v, cone.dim, "project_cone"))


def project_polar_cone(cone: Cone, v) -> np.ndarray:
    """Projection onto the polar cone, ``v - project_cone(cone, v)``."""
    return cone.project_polar(_check_dim(v, cone.dim, "project_polar_cone"))


def dist_cone(cone: Cone, v) -> float:
    return cone.dist(_check_dim(v, cone.dim, "dist_cone"))


def half_sq_dist_grad(G, g, cone: Cone, u) -> np.ndarray:
    """Gradient of ``u -> 0.5 * dist_K(G u + g)**2``, i.e. ``G^T (s - P_K s)``."""
    G = np.asarray(G, dtype=float)
    u = _check_dim(u, G.shape[1], "half_sq_dist_grad")
    g = _check_dim(g, G.shape[0], "half_sq_dist_grad")
    if cone.dim != G.shape[0]:
        raise DimensionError(f"cone dim {cone.dim} != rows of G {G.shape[0]}")
    s = G @ u + g
    return G.T @ (s - cone.project(s))


# ---------------------------------------------------------------------------
# simple sets
# ---------------------------------------------------------------------------

class SimpleSet:
    """Closed convex set with a cheap projection."""

    dim: int

    def project(self, v):
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    @property
    def center(self) -> np.ndarray:
        """A point of the set used as default starting point / prox center."""
        raise NotImplementedError

    def contains(self, v, tol=1e-10):
        return float(np.linalg.norm(self.project(v) - v)) <= tol * (1.0 + float(np.linalg.norm(v)))

    def to_spec(self):
        raise NotImplementedError


class Box(SimpleSet):
    def __init__(self, lower, upper):
        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise DimensionError("box bounds must be 1-d arrays of equal length")
        if np.any(self.lower > self.upper):
            raise ParameterError("box lower bound exceeds upper bound")
        self.dim = self.lower.size
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    def project(self, v):
        return np.minimum(np.maximum(v, self.lower), self.upper)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    def to_spec(self):
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Ball(SimpleSet):
    def __init__(self, center, radius):
        self._center = np.array(center, dtype=float)
        if radius < 0:
            raise ParameterError("ball radius must be nonnegative")
        self.radius = float(radius)
        self.dim = self._center.size
        self._center.setflags(write=False)

    def project(self, v):
        d = v - self._center
        nd = math.sqrt(float(d @ d))
        if nd <= self.radius:
            return v.copy()
        return self._center + (self.radius / nd) * d

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def center(self):
        return self._center.copy()

    def to_spec(self):
        return {"type": "ball", "center": self._center.tolist(), "radius": self.radius}


class FullSpace(SimpleSet):
    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, v):
        return v.copy()

    @property
    def diameter(self):
        return math.inf

    @property
    def center(self):
        return np.zeros(self.dim)

    def to_spec(self):
        return {"type": "full", "dim": self.dim}


class PPowerEpigraph(SimpleSet):
    """The set {(u1, u2) : |u2|**p <= u1}, optionally cut at ``u1 <= bound``.

    Projection onto the curved boundary solves the scalar stationarity
    equation ``p t^(p-1) (t^p - v1) + t - v2 = 0`` with Brent's method on a
    bracket that is known to contain exactly one root.
    """

    max_iter = 200
    xtol = 1e-14

    def __init__(self, p, bound=None):
        if p < 1:
            raise ParameterError("PPowerEpigraph needs p >= 1")
        self.p = float(p)
        self.bound = None if bound is None else float(bound)
        if self.bound is not None and self.bound < 0:
            raise ParameterError("bound must be nonnegative")
        self.dim = 2
        self._diam = None

    def _project_epi(self, v1, v2):
        p = self.p
        a = abs(v2)
        if a ** p <= v1:
            return v1, v2
        lo = max(v1, 0.0) ** (1.0 / p)

        def stat(t):
            return p * t ** (p - 1.0) * (t ** p - v1) + t - a

        if stat(lo) >= 0.0:
            t = lo
        else:
            try:
                t, info = brentq(stat, lo, a, xtol=self.xtol, maxiter=self.max_iter,
                                 full_output=True, disp=False)
            except ValueError as exc:  # bracket lost to round-off
                raise NumericalError(f"epigraph projection failed for v=({v1}, {v2}): {exc}")
            if not info.converged:
                raise NumericalError(
                    f"epigraph projection did not converge in {self.max_iter} iterations")
        return t ** p, math.copysign(t, v2)

    def project(self, v):
        v1, v2 = float(v[0]), float(v[1])
        B = self.bound
        if B is not None and v1 <= B and abs(v2) ** self.p <= v1:
            return np.array([v1, v2])
        w1, w2 = self._project_epi(v1, v2)
        if B is not None and w1 > B:
            # the projection onto the cut set then lies on its flat top
            c = B ** (1.0 / self.p)
            return np.array([B, min(max(v2, -c), c)])
        return np.array([w1, w2])

    @property
    def diameter(self):
        if self.bound is None:
            return math.inf
        if self._diam is None:
            # extreme points lie on the curve u1 = |u2|^p, |u2| <= B^(1/p)
            c = self.bound ** (1.0 / self.p)
            t = np.linspace(-c, c, 801)
            pts = np.column_stack([np.abs(t) ** self.p, t])
            sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
            i, j = np.unravel_index(np.argmax(sq), sq.shape)
            p = self.p

            def neg_sq(ab):
                a, b = np.clip(ab, -c, c)
                return -((abs(a) ** p - abs(b) ** p) ** 2 + (a - b) ** 2)

            # polish the best grid pair
            res = minimize(neg_sq, [t[i], t[j]], method="Nelder-Mead",
                           options={"xatol": 1e-13, "fatol": 1e-15})
            self._diam = math.sqrt(max(float(sq[i, j]), -float(res.fun)))
        return self._diam

    @property
    def center(self):
        if self.bound is None:
            return np.array([1.0, 0.0])
        return np.array([0.5 * self.bound, 0.0])

    def to_spec(self):
        return {"type": "ppower", "p": self.p, "bound": self.bound}

    def __repr__(self):
        return f"PPowerEpigraph(p={self.p}, bound={self.bound})"


def project_set(U: SimpleSet, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto the simple set ``U``."""
    return U.project(_check_dim(v, U.dim, "project_set"))


def cone_from_spec(spec) -> Cone:
    kind = spec["type"]
    if kind == "zero":
        return Zero(int(spec["dim"]))
    if kind == "orthant":
        return NonnegOrthant(int(spec["dim"]))
    if kind == "soc":
        return SecondOrder(int(spec["dim"]))
    if kind == "product":
        return Product(tuple(cone_from_spec(s) for s in spec["cones"]))
    raise ParameterError(f"unknown cone type {kind!r}")


def set_from_spec(spec) -> SimpleSet:
    kind = spec["type"]
    if kind == "box":
        return Box(spec["lower"], spec["upper"])
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    if kind == "ppower":
        return PPowerEpigraph(spec["p"], spec.get("bound"))
    if kind == "full":
        return FullSpace(int(spec["dim"]))
    raise ParameterError(f"unknown set type {kind!r}")
