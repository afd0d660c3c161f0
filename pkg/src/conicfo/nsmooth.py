"""Dual fast gradient with a smoothed Lagrangian part only.

The Lagrangian is regularized by ``mu/2 ||u - u0||^2``, which makes

    d_mu(x) = min_{u in U} f(u) + <x, G u + g> + mu/2 ||u - u0||^2

smooth with constant ``||G||^2 / mu``.  The cone part of the dual stays an
indicator of the polar cone and is handled exactly by projection, so every
dual iterate produced by the prox step lies in the polar cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .auglag import PrimalAverage
from .errors import CapabilityError, NumericalError, ParameterError
from .icfg import DeltaLOracle, ThetaSchedule, icfg_run
from .problem import ConicProblem, Counters, KnownSolution
from .report import SolveReport, finalize, history_entry

__all__ = ["NsConfig", "NsParams", "SmoothedLagEval", "smoothed_lag_eval",
           "ns_inner_budget", "inner_solve_ns", "ns_params", "ns_outer_count", "ns_run"]

SIMPLE, SMOOTH = "simple", "smooth"


@dataclass
class NsConfig:
    """``K_outer`` is fixed in advance since ``mu`` is tuned to it.

    ``path`` selects the inner solver: ``"simple"`` (closed-form prox,
    requires a simple f, ``delta`` ignored) or ``"smooth"`` (iterative,
    requires ``L_f > 0`` and ``delta > 0``); ``None`` prefers the former.
    """

    mu: float
    delta: float
    K_outer: int
    u0: Optional[np.ndarray] = None
    path: Optional[str] = None
    use_fast: bool = True
    record_history: bool = True

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError("mu must be positive")
        if self.delta < 0:
            raise ParameterError("delta must be nonnegative")
        if self.K_outer < 1:
            raise ParameterError("K_outer must be at least 1")


@dataclass(frozen=True)
class NsParams:
    mu: float
    delta: float
    n_out: int


@dataclass(frozen=True)
class SmoothedLagEval:
    value: float
    grad_x: np.ndarray


def smoothed_lag_eval(problem: ConicProblem, u, x, mu, u0=None,
                      counters: Optional[Counters] = None) -> SmoothedLagEval:
    """``f(u) + <x, G u + g> + mu/2 ||u - u0||^2`` and its x-gradient ``G u + g``."""
    if mu < 0:
        raise ParameterError("mu must be nonnegative")
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.m,):
        raise ParameterError(f"multiplier has shape {x.shape}, expected ({problem.m},)")
    u0 = problem.U.center if u0 is None else np.asarray(u0, dtype=float)
    s = problem.residual(u, counters)
    du = u - u0
    value = problem.objective(u) + float(x @ s) + 0.5 * mu * float(du @ du)
    return SmoothedLagEval(value, s)


def ns_inner_budget(L_f, mu, D_U, delta) -> int:
    """Iterations of the strongly convex accelerated method for accuracy delta.

    The count is clamped below at 1 (the log can be nonpositive for large delta).
    """
    if not L_f > 0:
        raise ParameterError("smooth inner path needs L_f > 0")
    if not mu > 0 or not delta > 0:
        raise ParameterError("mu and delta must be positive")
    if not math.isfinite(D_U):
        raise ParameterError("inner budget needs a bounded set U")
    raw = math.sqrt(L_f / mu) * math.log(L_f * D_U ** 2 / (4.0 * delta))
    return max(1, math.ceil(raw))


def _resolve_path(problem, path):
    if path is None:
        if problem.f_is_simple:
            return SIMPLE
        if problem.f.is_smooth and problem.f.L_f > 0:
            return SMOOTH
        raise CapabilityError("objective is neither simple on U nor smooth with L_f > 0")
    if path == SIMPLE and not problem.f_is_simple:
        raise CapabilityError("objective is not simple on U")
    if path == SMOOTH and not (problem.f.is_smooth and problem.f.L_f > 0):
        raise CapabilityError("smooth inner path needs a gradient with L_f > 0")
    if path not in (SIMPLE, SMOOTH):
        raise ParameterError(f"unknown inner path {path!r}")
    return path


def inner_solve_ns(problem: ConicProblem, x, mu, delta, u0=None,
                   counters: Optional[Counters] = None, path: Optional[str] = None,
                   use_fast: bool = True, budget: Optional[int] = None):
    """Minimizer (exact or delta-accurate) of the regularized Lagrangian over U."""
    path = _resolve_path(problem, path)
    if not mu > 0:
        raise ParameterError("mu must be positive")
    c = counters if counters is not None else Counters()
    u0 = problem.U.center if u0 is None else np.asarray(u0, dtype=float)
    cvec = problem.apply_Gt(np.asarray(x, dtype=float), c)
    if path == SIMPLE:
        return problem.prox_f(u0 - cvec / mu, 1.0 / mu, c)

    L_f = problem.f.L_f
    if budget is None:
        budget = ns_inner_budget(L_f, mu, problem.D_U, delta)
    data = _kernels.fast_data(problem) if use_fast else None
    if data is not None:
        _, _, d, q, lo, hi, _ = data
        z, bad = _kernels.ns_inner_smooth(cvec, float(mu), d, q, lo, hi, u0, float(L_f),
                                          int(budget), u0)
        if bad:
            raise NumericalError(f"non-finite iterate at inner iteration {bad}")
        c.grad_f += budget
        c.proj_U += budget
        return z

    Lt = L_f + mu
    beta = (math.sqrt(Lt) - math.sqrt(mu)) / (math.sqrt(Lt) + math.sqrt(mu))
    z_prev = u0.copy()
    y = u0.copy()
    z = u0.copy()
    for k in range(1, budget + 1):
        v = y - (problem.grad_f(y, c) + cvec) / L_f
        z = problem.proj_U((mu * u0 + L_f * v) / Lt, c)
        if not np.all(np.isfinite(z)):
            raise NumericalError(f"non-finite iterate at inner iteration {k}")
        y = z + beta * (z - z_prev)
        z_prev = z
    return z


def ns_outer_count(norm_G, R_d, D_U, eps) -> int:
    return math.ceil(6.0 * norm_G * D_U * R_d / eps)


def ns_params(K_outer, norm_G, R_d, D_U, eps) -> NsParams:
    """Smoothing parameter tuned to ``K_outer`` and the inner accuracy for eps."""
    for name, val in (("K_outer", K_outer), ("norm_G", norm_G), ("R_d", R_d),
                      ("D_U", D_U), ("eps", eps)):
        if not val > 0:
            raise ParameterError(f"{name} must be positive")
    mu = 2.0 ** 1.5 * norm_G * R_d / (D_U * K_outer)
    n_out = ns_outer_count(norm_G, R_d, D_U, eps)
    delta = min(eps ** 2 / (8.0 * norm_G * D_U * R_d), eps / (6.0 * n_out))
    return NsParams(mu, delta, n_out)


def ns_run(problem: ConicProblem, config: NsConfig,
           known: Optional[KnownSolution] = None) -> SolveReport:
    """Accelerated engine on the negated smoothed dual, prox = polar projection.

    Runs exactly ``K_outer`` outer iterations (one polar projection each) and
    returns the theta-weighted average of the inner solutions.
    """
    if not math.isfinite(problem.D_U):
        raise ParameterError("smoothing needs a bounded set U")
    path = _resolve_path(problem, config.path)
    mu, delta = config.mu, config.delta
    if path == SMOOTH:
        if not delta > 0:
            raise ParameterError("smooth inner path needs delta > 0")
        budget = ns_inner_budget(problem.f.L_f, mu, problem.D_U, delta)
    else:
        budget = 1
        delta = 0.0
    u0 = problem.U.center if config.u0 is None else np.asarray(config.u0, dtype=float)
    c = Counters()
    L_d = problem.norm_G ** 2 / mu
    if not L_d > 0:
        raise ParameterError("smoothed dual needs ||G|| > 0")

    def evaluate(y):
        u = inner_solve_ns(problem, y, mu, delta, u0, c, path, config.use_fast, budget)
        ev = smoothed_lag_eval(problem, u, y, mu, u0, c)
        oracle.last_u = u
        return -ev.value, -ev.grad_x

    oracle = DeltaLOracle(evaluate, 2.0 * L_d, 3.0 * delta)
    oracle.last_u = None

    def prox(v, t):
        return problem.proj_Kstar(v, c)

    avg = PrimalAverage(problem.n)
    history = []

    def on_step(state):
        avg.add(oracle.last_u, state.theta_cur)
        if config.record_history:
            z = state.z_cur
            history.append(history_entry(
                problem, known, state.k, avg.value, c,
                x_polar_dist=float(np.linalg.norm(z - problem.K.project_polar(z)))))
        return False

    res = icfg_run(oracle, prox, np.zeros(problem.m), ThetaSchedule.ACCELERATED,
                   config.K_outer, stop=on_step)
    report = SolveReport(
        method="ns", u=avg.value, x=res.last, counters=c, outer_iters=res.iterations,
        inner_iters=res.iterations * budget, history=history,
        params={"mu": mu, "delta": delta, "L_d": L_d, "K_outer": config.K_outer,
                "inner_budget": budget, "path": path},
    )
    return finalize(report, problem, known)
