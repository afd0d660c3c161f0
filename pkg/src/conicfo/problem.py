"""Problem data model: ``min f(u)  s.t.  u in U,  G u + g in K``.

Objectives expose value / gradient / prox depending on what they can do,
:class:`ConicProblem` bundles the data with instrumented linear-algebra
helpers, and :func:`check_eps_optimal` evaluates a candidate point against
a known optimal value.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .cones import Box, Cone, FullSpace, SimpleSet, cone_from_spec, set_from_spec
from .errors import (CapabilityError, ConfigurationError, DataIOError, DimensionError,
                     ParameterError)

__all__ = [
    "ObjectiveOracle", "DiagonalQuadratic", "CallableObjective", "linear", "zero",
    "Counters", "ConicProblem", "KnownSolution", "EpsCheck",
    "check_eps_optimal", "prox_simple", "kkt_residual",
    "load_problem", "save_problem", "problem_to_dict", "problem_from_dict",
]


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

class ObjectiveOracle:
    """Convex objective f.

    ``gradient`` exists iff ``is_smooth``; ``prox(z, t, U)`` returns
    ``argmin_{u in U} f(u) + ||u - z||^2 / (2 t)`` iff ``is_simple_on(U)``.
    By convention ``L_f = 0`` for objectives used only through their prox.
    """

    L_f: float = 0.0
    sigma_f: float = 0.0
    is_smooth: bool = False

    def value(self, u) -> float:
        raise NotImplementedError

    def gradient(self, u):
        raise CapabilityError(f"{type(self).__name__} has no gradient oracle")

    def is_simple_on(self, U: SimpleSet) -> bool:
        return False

    def prox(self, z, t, U: SimpleSet):
        raise CapabilityError(f"{type(self).__name__} is not simple on {U!r}")

    def to_spec(self):
        raise CapabilityError(f"{type(self).__name__} cannot be serialized")


class DiagonalQuadratic(ObjectiveOracle):
    """``f(u) = 0.5 * sum(d_i u_i^2) + q^T u`` with ``d >= 0``.

    Covers linear (``d = 0``) and zero objectives.  Simple on boxes and on
    the whole space, and on any set when ``d`` is constant.
    """

    is_smooth = True

    def __init__(self, diag, linear):
        self.diag = np.array(diag, dtype=float)
        self.linear = np.array(linear, dtype=float)
        if self.diag.shape != self.linear.shape or self.diag.ndim != 1:
            raise DimensionError("diag and linear parts must be 1-d of equal length")
        if np.any(self.diag < 0):
            raise ParameterError("diagonal quadratic must be convex (diag >= 0)")
        self.n = self.diag.size
        self.L_f = float(self.diag.max()) if self.n else 0.0
        self.sigma_f = float(self.diag.min()) if self.n else 0.0
        self._isotropic = bool(np.all(self.diag == self.diag[0])) if self.n else True
        self._has_quad = bool(np.any(self.diag != 0))

    def value(self, u):
        return float(0.5 * (self.diag * u) @ u + self.linear @ u)

    def gradient(self, u):
        return self.diag * u + self.linear

    def is_simple_on(self, U):
        return self._isotropic or isinstance(U, (Box, FullSpace))

    def prox(self, z, t, U):
        if not self.is_simple_on(U):
            raise CapabilityError("non-isotropic quadratic prox is only closed-form on boxes")
        if self._has_quad:
            w = (z - t * self.linear) / (1.0 + t * self.diag)
        else:
            w = z - t * self.linear
        return U.project(w)

    @property
    def kind(self):
        if self._has_quad:
            return "quadratic_diag"
        return "linear" if np.any(self.linear != 0) else "zero"

    def to_spec(self):
        if self.kind == "quadratic_diag":
            return {"kind": "quadratic_diag", "diag": self.diag.tolist(),
                    "linear": self.linear.tolist()}
        if self.kind == "linear":
            return {"kind": "linear", "c": self.linear.tolist()}
        return {"kind": "zero", "n": self.n}


def linear(c) -> DiagonalQuadratic:
    c = np.asarray(c, dtype=float)
    return DiagonalQuadratic(np.zeros_like(c), c)


def zero(n) -> DiagonalQuadratic:
    return DiagonalQuadratic(np.zeros(n), np.zeros(n))


class CallableObjective(ObjectiveOracle):
    """Objective assembled from user callables."""

    def __init__(self, value: Callable, gradient: Optional[Callable] = None,
                 prox: Optional[Callable] = None, L_f: float = 0.0, sigma_f: float = 0.0):
        self._value = value
        self._gradient = gradient
        self._prox = prox
        self.is_smooth = gradient is not None
        self.L_f = float(L_f)
        self.sigma_f = float(sigma_f)
        if self.is_smooth and self.L_f <= 0 and prox is None:
            raise ParameterError("a smooth objective needs L_f > 0")

    def value(self, u):
        return float(self._value(u))

    def gradient(self, u):
        if self._gradient is None:
            return super().gradient(u)
        return self._gradient(u)

    def is_simple_on(self, U):
        return self._prox is not None

    def prox(self, z, t, U):
        if self._prox is None:
            return super().prox(z, t, U)
        return self._prox(z, t, U)


def prox_simple(f: ObjectiveOracle, U: SimpleSet, z, t) -> np.ndarray:
    """Exact ``argmin_{u in U} f(u) + ||u - z||^2 / (2 t)``."""
    if t <= 0:
        raise ParameterError("prox step t must be positive")
    if not f.is_simple_on(U):
        raise CapabilityError(f"objective is not simple on {U!r}")
    return f.prox(np.asarray(z, dtype=float), t, U)


# ---------------------------------------------------------------------------
# problem + counters
# ---------------------------------------------------------------------------

@dataclass
class Counters:
    """Operation tally for one solver run (inner and outer levels share it)."""

    proj_U: int = 0
    proj_K: int = 0
    proj_Kstar: int = 0
    matvec_G: int = 0
    matvec_Gt: int = 0
    grad_f: int = 0

    @property
    def matvec(self) -> int:
        return self.matvec_G + self.matvec_Gt

    @property
    def projections(self) -> int:
        return self.proj_U + self.proj_K + self.proj_Kstar

    def snapshot(self) -> dict:
        d = asdict(self)
        d["matvec"] = self.matvec
        return d


class ConicProblem:
    """Data of ``min_{u in U} f(u)  s.t.  G u + g in K``.

    Helper methods take an optional :class:`Counters` and tally the
    projections and matrix-vector products they perform.  Calls without a
    counter (monitoring, checks) are free.
    """

    def __init__(self, f: ObjectiveOracle, U: SimpleSet, G, g, K: Cone):
        G = np.array(G, dtype=float)
        g = np.array(g, dtype=float)
        if G.ndim != 2:
            raise DimensionError("G must be a matrix")
        m, n = G.shape
        if U.dim != n:
            raise DimensionError(f"set dimension {U.dim} != columns of G {n}")
        if g.shape != (m,):
            raise DimensionError(f"g has shape {g.shape}, expected ({m},)")
        if K.dim != m:
            raise DimensionError(f"cone dimension {K.dim} != rows of G {m}")
        if getattr(f, "n", n) != n:
            raise DimensionError("objective dimension does not match G")
        self.f, self.U, self.K = f, U, K
        self.G, self.g = G, g
        self.Gt = np.ascontiguousarray(G.T)
        self.m, self.n = m, n
        self.norm_G = float(np.linalg.norm(G, 2)) if G.size else 0.0
        self.D_U = U.diameter

    # instrumented primitives ------------------------------------------------
    def residual(self, u, c: Optional[Counters] = None):
        """``G u + g``."""
        if c is not None:
            c.matvec_G += 1
        return self.G @ u + self.g

    def apply_Gt(self, x, c: Optional[Counters] = None):
        if c is not None:
            c.matvec_Gt += 1
        return self.Gt @ x

    def proj_K(self, v, c: Optional[Counters] = None):
        if c is not None:
            c.proj_K += 1
        return self.K.project(v)

    def proj_Kstar(self, v, c: Optional[Counters] = None):
        if c is not None:
            c.proj_Kstar += 1
        return self.K.project_polar(v)

    def proj_U(self, v, c: Optional[Counters] = None):
        if c is not None:
            c.proj_U += 1
        return self.U.project(v)

    def grad_f(self, u, c: Optional[Counters] = None):
        if c is not None:
            c.grad_f += 1
        return self.f.gradient(u)

    def prox_f(self, z, t, c: Optional[Counters] = None):
        """Prox of f over U; counted as one projection onto U."""
        if c is not None:
            c.proj_U += 1
        return self.f.prox(z, t, self.U)

    def half_sq_dist_grad(self, u, c: Optional[Counters] = None):
        """Gradient of ``0.5 dist_K(G u + g)^2``: one K-projection, two products."""
        s = self.residual(u, c)
        return self.apply_Gt(s - self.proj_K(s, c), c)

    # uncounted monitoring ---------------------------------------------------
    def infeasibility(self, u) -> float:
        return self.K.dist(self.G @ u + self.g)

    def objective(self, u) -> float:
        return self.f.value(u)

    @property
    def f_is_simple(self) -> bool:
        return self.f.is_simple_on(self.U)

    def __repr__(self):
        return (f"ConicProblem(n={self.n}, m={self.m}, U={self.U!r}, K={self.K!r}, "
                f"norm_G={self.norm_G:.6g})")


@dataclass
class KnownSolution:
    """Reference optimum data for an instance.

    ``delta_star`` is derived as ``f_star - f_lower`` when not given.
    """

    f_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    R_d: Optional[float] = None
    f_lower: Optional[float] = None
    delta_star: Optional[float] = None
    u_star: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.x_star is not None:
            self.x_star = np.asarray(self.x_star, dtype=float)
            if self.R_d is None:
                self.R_d = float(np.linalg.norm(self.x_star))
        if self.u_star is not None:
            self.u_star = np.asarray(self.u_star, dtype=float)
        if self.delta_star is None and self.f_star is not None and self.f_lower is not None:
            self.delta_star = max(self.f_star - self.f_lower, 0.0)
        if self.delta_star is not None and self.delta_star < 0:
            raise ParameterError("delta_star must be nonnegative")

    def to_dict(self):
        out = {}
        for k in ("f_star", "R_d", "f_lower", "delta_star"):
            v = getattr(self, k)
            if v is not None:
                out[k] = float(v)
        for k in ("x_star", "u_star"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v.tolist()
        return out


@dataclass(frozen=True)
class EpsCheck:
    subopt_gap: float
    infeas: float
    passed: bool


def check_eps_optimal(problem: ConicProblem, known: KnownSolution, u, eps: float,
                      mode: str = "two_sided", lower: Optional[float] = None) -> EpsCheck:
    """Test ``|f(u) - f*| <= eps`` and ``dist_K(G u + g) <= eps``.

    ``mode="one_sided"`` relaxes the lower bound on the gap to ``-delta_star``
    (the guarantee penalty methods give); an explicit ``lower`` overrides it.
    ``u`` is projected onto U first.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if known is None or known.f_star is None:
        raise ConfigurationError("check_eps_optimal needs a known f_star")
    u = problem.U.project(np.asarray(u, dtype=float))
    gap = problem.f.value(u) - known.f_star
    infeas = problem.infeasibility(u)
    if lower is None:
        if mode == "two_sided":
            lower = -eps
        elif mode == "one_sided":
            if known.delta_star is None:
                raise ConfigurationError("one-sided check needs delta_star")
            lower = -known.delta_star
        else:
            raise ParameterError(f"unknown mode {mode!r}")
    passed = (lower <= gap <= eps) and infeas <= eps
    return EpsCheck(float(gap), float(infeas), bool(passed))


def kkt_residual(problem: ConicProblem, u, x) -> float:
    """Largest violation among stationarity, primal and dual feasibility and
    complementarity for the pair ``(u, x)``."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    s = problem.G @ u + problem.g
    grad = problem.f.gradient(u) + problem.Gt @ x
    stationarity = np.linalg.norm(u - problem.U.project(u - grad))
    primal = problem.K.dist(s)
    dual = np.linalg.norm(x - problem.K.project_polar(x))
    comp = abs(float(x @ s))
    return float(max(stationarity, primal, dual, comp))


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------

def objective_from_spec(spec, n) -> ObjectiveOracle:
    kind = spec.get("kind")
    if kind == "linear":
        return linear(spec["c"])
    if kind == "quadratic_diag":
        return DiagonalQuadratic(spec["diag"], spec.get("linear", np.zeros(n)))
    if kind == "zero":
        return zero(n)
    raise ParameterError(f"unknown objective kind {kind!r}")


def problem_to_dict(problem: ConicProblem, known: Optional[KnownSolution] = None) -> dict:
    d = {
        "n": problem.n,
        "m": problem.m,
        "G": problem.G.ravel().tolist(),
        "g": problem.g.tolist(),
        "cone": problem.K.to_spec(),
        "set": problem.U.to_spec(),
        "objective": problem.f.to_spec(),
    }
    if known is not None:
        d["known"] = known.to_dict()
    return d


def problem_from_dict(d: dict):
    try:
        n, m = int(d["n"]), int(d["m"])
        G = np.asarray(d["G"], dtype=float)
        if G.ndim == 1:
            if G.size != m * n:
                raise DimensionError(f"G has {G.size} entries, expected {m}x{n}")
            G = G.reshape(m, n)
        if G.shape != (m, n):
            raise DimensionError(f"G has shape {G.shape}, expected ({m}, {n})")
        K = cone_from_spec(d["cone"])
        U = set_from_spec(d["set"])
        f = objective_from_spec(d["objective"], n)
        problem = ConicProblem(f, U, G, d["g"], K)
    except KeyError as exc:
        raise ParameterError(f"problem description lacks field {exc}") from None
    known = None
    if d.get("known"):
        known = KnownSolution(**d["known"])
    return problem, known


def load_problem(path):
    """Read a JSON problem file; returns ``(problem, known_or_None)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataIOError(f"{path} is not valid JSON: {exc}") from exc
    return problem_from_dict(data)


def save_problem(path, problem: ConicProblem, known: Optional[KnownSolution] = None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem, known), fh, indent=1)
