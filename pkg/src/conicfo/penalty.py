"""Penalty methods that need no Lagrange multiplier.

Quadratic penalty  ``psi_rho = f + rho/2 dist_K(G u + g)^2`` and smoothed
exact penalty ``phi_{rho,mu} = f + rho sqrt(dist_K(G u + g)^2 + mu^2)``,
minimized by the accelerated engine over U, plus an adaptive driver that
doubles ``rho`` until the iterate is eps-feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import CapabilityError, NonConvergenceError, NumericalError, ParameterError
from .icfg import DeltaLOracle, ThetaSchedule, icfg_run
from .problem import ConicProblem, Counters, KnownSolution
from .report import SolveReport, finalize, history_entry

__all__ = ["PenaltyConfig", "PenaltyEval", "PenaltyParams", "quad_penalty_eval",
           "smooth_ndp_eval", "penalty_params", "penalty_budget", "quad_penalty_budget",
           "penalty_lipschitz", "penalty_run", "a_pm_run", "apm_outer_bound"]

QUADRATIC, SMOOTHED = "D", "N"


def _check_kind(kind):
    if kind not in (QUADRATIC, SMOOTHED):
        raise ParameterError(f"penalty kind must be 'D' or 'N', got {kind!r}")
    return kind


@dataclass
class PenaltyConfig:
    """``budget=None`` uses the a-priori iteration count for the target eps.

    ``u_start`` warm-starts the run (default: center of U).
    """

    rho: float
    kind: str = QUADRATIC
    mu_smooth: Optional[float] = None
    budget: Optional[int] = None
    u_start: Optional[np.ndarray] = None
    use_fast: bool = True

    def __post_init__(self):
        _check_kind(self.kind)
        if not self.rho > 0:
            raise ParameterError("rho must be positive")
        if self.kind == SMOOTHED and not (self.mu_smooth is not None and self.mu_smooth > 0):
            raise ParameterError("smoothed penalty needs mu_smooth > 0")
        if self.budget is not None and self.budget < 1:
            raise ParameterError("budget must be at least 1")

    def L_psi(self, L_f, norm_G):
        return L_f + self.rho * norm_G ** 2

    def L_phi(self, L_f, norm_G):
        return L_f + self.rho * norm_G ** 2 / self.mu_smooth


@dataclass(frozen=True)
class PenaltyEval:
    value: float
    grad: Optional[np.ndarray]


@dataclass(frozen=True)
class PenaltyParams:
    rho: float
    mu_smooth: Optional[float] = None
    flags: tuple = ()


def _dist_parts(problem, u, counters):
    s = problem.residual(np.asarray(u, dtype=float), counters)
    r = s - problem.proj_K(s, counters)
    return r, float(r @ r)


def quad_penalty_eval(problem: ConicProblem, u, rho, counters: Optional[Counters] = None,
                      with_grad: bool = True) -> PenaltyEval:
    """``f + rho/2 dist^2`` and, if requested, its gradient."""
    if not rho > 0:
        raise ParameterError("rho must be positive")
    if with_grad and not problem.f.is_smooth:
        raise CapabilityError("objective has no gradient; use with_grad=False")
    r, d2 = _dist_parts(problem, u, counters)
    value = problem.objective(u) + 0.5 * rho * d2
    grad = None
    if with_grad:
        grad = problem.grad_f(u, counters) + rho * problem.apply_Gt(r, counters)
    return PenaltyEval(value, grad)


def smooth_ndp_eval(problem: ConicProblem, u, rho, mu, counters: Optional[Counters] = None,
                    with_grad: bool = True) -> PenaltyEval:
    """``f + rho sqrt(dist^2 + mu^2)`` and, if requested, its gradient."""
    if not rho > 0:
        raise ParameterError("rho must be positive")
    if not mu > 0:
        raise ParameterError("smoothing mu must be positive")
    if with_grad and not problem.f.is_smooth:
        raise CapabilityError("objective has no gradient; use with_grad=False")
    r, d2 = _dist_parts(problem, u, counters)
    root = math.sqrt(d2 + mu * mu)
    value = problem.objective(u) + rho * root
    grad = None
    if with_grad:
        grad = problem.grad_f(u, counters) + (rho / root) * problem.apply_Gt(r, counters)
    return PenaltyEval(value, grad)


def penalty_params(kind, eps, delta_star) -> PenaltyParams:
    """Penalty parameter guaranteeing eps-optimality of an eps-solution.

    ``D``: ``rho = 4 delta*/eps^2`` (flagged when ``eps >= delta*/2``; set to
    1 when ``delta* = 0``).  ``N``: ``rho = 2 delta*/eps + 1`` and
    ``mu = eps/2`` (flagged when ``delta* < eps``).
    """
    _check_kind(kind)
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if delta_star is None or delta_star < 0:
        raise ParameterError("delta_star must be a nonnegative number")
    flags = []
    if kind == QUADRATIC:
        rho = 4.0 * delta_star / eps ** 2
        if delta_star == 0:
            rho = 1.0
            flags.append("delta_star_zero")
        if eps >= delta_star / 2.0:
            flags.append("eps_not_below_half_delta_star")
        return PenaltyParams(rho, None, tuple(flags))
    if delta_star < eps:
        flags.append("delta_star_below_eps")
    return PenaltyParams(2.0 * delta_star / eps + 1.0, eps / 2.0, tuple(flags))


def penalty_lipschitz(problem: ConicProblem, kind, rho, mu_smooth=None, split=False):
    """Gradient constant of the smooth part (f excluded when ``split``)."""
    L_f = 0.0 if split else problem.f.L_f
    pen = rho * problem.norm_G ** 2
    if kind == SMOOTHED:
        pen /= mu_smooth
    return L_f + pen


def penalty_budget(kind, eps, rho, L_f, norm_G, D_U, mu_smooth=None) -> int:
    """Accelerated-engine iterations that bring the penalty gap below eps.

    ``ceil(sqrt(2 L_f D^2/eps) + sqrt(2 L_pen D^2/eps))`` with ``L_pen``
    equal to ``rho ||G||^2`` (quadratic) or ``rho ||G||^2 / mu`` (smoothed).
    """
    _check_kind(kind)
    if not eps > 0 or not rho > 0:
        raise ParameterError("eps and rho must be positive")
    if not math.isfinite(D_U):
        raise ParameterError("penalty budget needs a bounded set U")
    L_pen = rho * norm_G ** 2
    if kind == SMOOTHED:
        if not (mu_smooth and mu_smooth > 0):
            raise ParameterError("smoothed penalty needs mu_smooth > 0")
        L_pen /= mu_smooth
    raw = math.sqrt(2.0 * L_f * D_U ** 2 / eps) + math.sqrt(2.0 * L_pen * D_U ** 2 / eps)
    return max(1, math.ceil(raw))


def quad_penalty_budget(eps, delta_star, L_f, norm_G, D_U) -> int:
    """Iteration count written in terms of delta* for ``rho = 4 delta*/eps^2``."""
    raw = (math.sqrt(2.0 * L_f * D_U ** 2 / eps)
           + math.sqrt(8.0 * delta_star) * norm_G * D_U / eps ** 1.5)
    return max(1, math.ceil(raw))


def _penalty_solve(problem, kind, rho, mu_smooth, budget, z0, c, use_fast):
    split = problem.f_is_simple
    if not split and not problem.f.is_smooth:
        raise CapabilityError("objective is neither simple on U nor smooth")
    L = max(penalty_lipschitz(problem, kind, rho, mu_smooth, split), 1e-12)
    smoothed = kind == SMOOTHED
    musm = float(mu_smooth) if smoothed else 0.0
    data = _kernels.fast_data(problem) if use_fast else None
    if data is not None:
        G, g, d, q, lo, hi, code = data
        z, bad = _kernels.penalty_run(G, g, d, q, lo, hi, code, smoothed, split, float(rho),
                                      musm, float(L), int(budget), z0)
        if bad:
            raise NumericalError(f"non-finite iterate at penalty iteration {bad}")
        c.matvec_G += budget
        c.matvec_Gt += budget
        c.proj_K += budget
        c.proj_U += budget
        if not split:
            c.grad_f += budget
        return z

    def phi(u):
        r, d2 = _dist_parts(problem, u, c)
        if smoothed:
            root = math.sqrt(d2 + musm * musm)
            val, scale = rho * root, rho / root
        else:
            val, scale = 0.5 * rho * d2, rho
        grad = scale * problem.apply_Gt(r, c)
        if not split:
            grad = grad + problem.grad_f(u, c)
            val += problem.objective(u)
        return val, grad

    if split:
        def prox(v, t):
            return problem.prox_f(v, t, c)
    else:
        def prox(v, t):
            return problem.proj_U(v, c)

    return icfg_run(DeltaLOracle(phi, L), prox, z0, ThetaSchedule.ACCELERATED, int(budget)).last


def penalty_run(problem: ConicProblem, config: PenaltyConfig, eps: Optional[float] = None,
                known: Optional[KnownSolution] = None) -> SolveReport:
    """Minimize the penalty function with the accelerated engine.

    A simple f stays in the prox; otherwise f is linearized together with
    the penalty term.  The last iterate is returned.
    """
    budget = config.budget
    L_f = 0.0 if problem.f_is_simple else problem.f.L_f
    if budget is None:
        if eps is None:
            raise ParameterError("penalty_run needs eps or an explicit budget")
        budget = penalty_budget(config.kind, eps, config.rho, L_f, problem.norm_G,
                                problem.D_U, config.mu_smooth)
    z0 = problem.U.center if config.u_start is None else \
        problem.U.project(np.asarray(config.u_start, dtype=float))
    c = Counters()
    u = _penalty_solve(problem, config.kind, config.rho, config.mu_smooth, budget, z0, c,
                       config.use_fast)
    report = SolveReport(
        method="qp" if config.kind == QUADRATIC else "np", u=u, counters=c, outer_iters=1,
        inner_iters=budget, history=[history_entry(problem, known, 1, u, c, rho=config.rho)],
        params={"rho": config.rho, "mu_smooth": config.mu_smooth, "budget": budget,
                "kind": config.kind, "eps": eps},
    )
    return finalize(report, problem, known)


def apm_outer_bound(kind, eps, delta_star, rho0) -> int:
    """Doublings after which rho reaches the value prescribed for eps."""
    target = 4.0 * delta_star / eps ** 2 if kind == QUADRATIC else 3.0 * delta_star / eps
    if target <= rho0:
        return 0
    return math.ceil(math.log2(target / rho0))


def a_pm_run(problem: ConicProblem, rho0, eps, kind=QUADRATIC,
             known: Optional[KnownSolution] = None, max_doublings: int = 60,
             use_fast: bool = True, max_inner: int = 10 ** 7) -> SolveReport:
    """Adaptive penalty: solve, test ``dist_K <= eps``, else double rho.

    Stages are warm-started from the previous stage's point; the smoothed
    variant keeps ``mu = eps/2``.  The feasibility test costs one
    K-projection.  A stage that would push the inner total past
    ``max_inner`` raises instead of running.
    """
    _check_kind(kind)
    if not rho0 > 0 or not eps > 0:
        raise ParameterError("rho0 and eps must be positive")
    mu_smooth = eps / 2.0 if kind == SMOOTHED else None
    L_f = 0.0 if problem.f_is_simple else problem.f.L_f
    c = Counters()
    rho = float(rho0)
    u = problem.U.center
    history = []
    doublings = 0
    inner_total = 0
    k = 0
    while True:
        k += 1
        budget = penalty_budget(kind, eps, rho, L_f, problem.norm_G, problem.D_U, mu_smooth)
        if inner_total + budget > max_inner:
            raise NonConvergenceError(
                f"A-PM: inner iteration cap {max_inner} reached at rho={rho:g} "
                f"after {doublings} doublings")
        u = _penalty_solve(problem, kind, rho, mu_smooth, budget, u, c, use_fast)
        inner_total += budget
        infeas = problem.K.dist(problem.residual(u, c))
        c.proj_K += 1
        history.append(history_entry(problem, known, k, u, c, rho=rho))
        if infeas <= eps:
            break
        if doublings >= max_doublings:
            raise NonConvergenceError(
                f"A-PM: infeasibility {infeas:.3e} > eps after {doublings} doublings of rho")
        rho *= 2.0
        doublings += 1
    report = SolveReport(
        method="apm", u=u, counters=c, outer_iters=k, inner_iters=inner_total,
        history=history, params={"rho0": float(rho0), "rho_final": rho, "eps": eps,
                                 "kind": kind, "doublings": doublings},
    )
    return finalize(report, problem, known)
