"""Inexact augmented Lagrangian methods.

The augmented dual ``d_mu(x) = min_{u in U} L_mu(u, x)`` with

    L_mu(u, x) = f(u) + mu/2 dist_K(G u + g + x/mu)^2 - ||x||^2 / (2 mu)

is smooth with constant ``1/mu``.  Solving the inner problem to accuracy
``delta`` yields a ``(3 delta, 2/mu)`` oracle for ``-d_mu`` that drives the
fast gradient engine; the primal answer is a weighted average of the inner
solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (CapabilityError, NonConvergenceError, NumericalError,
                     ParameterError)
from .icfg import DeltaLOracle, ThetaSchedule, icfg_run, identity_prox
from .problem import ConicProblem, Counters, KnownSolution
from .report import SolveReport, finalize, history_entry

__all__ = [
    "AugLagConfig", "AugLagEval", "AugLagParams", "PrimalAverage",
    "auglag_eval", "inner_budget", "inner_solve", "dual_oracle_auglag",
    "optimal_params_auglag", "outer_count", "sweep_params_auglag",
    "ial_run", "a_ial_run",
]

SIMPLE_F, SMOOTH_F = "simple_f", "smooth_f"


@dataclass
class AugLagConfig:
    """Parameters of one augmented Lagrangian run.

    ``inner_mode`` picks the inner splitting (``"simple_f"`` keeps f in the
    prox, ``"smooth_f"`` linearizes it); ``None`` prefers the former.
    """

    mu: float
    delta: float
    outer_budget: int
    schedule: ThetaSchedule = ThetaSchedule.CONSTANT
    x0: Optional[np.ndarray] = None
    inner_mode: Optional[str] = None
    use_fast: bool = True
    record_history: bool = True
    L_d: float = field(init=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError("mu must be positive")
        if self.delta < 0:
            raise ParameterError("delta must be nonnegative")
        if self.outer_budget < 1:
            raise ParameterError("outer_budget must be at least 1")
        self.schedule = ThetaSchedule(self.schedule)
        self.L_d = 1.0 / self.mu


@dataclass(frozen=True)
class AugLagEval:
    value: float
    grad_x: np.ndarray


@dataclass(frozen=True)
class AugLagParams:
    mu: float
    delta: float
    n_out: int


class PrimalAverage:
    """Running weighted average ``sum(w_i u_i) / sum(w_i)``."""

    def __init__(self, n):
        self.total = np.zeros(n)
        self.weight = 0.0
        self.count = 0

    def add(self, u, weight=1.0):
        self.total += weight * u
        self.weight += weight
        self.count += 1

    @property
    def value(self):
        if self.weight == 0:
            raise ParameterError("empty average")
        return self.total / self.weight


def auglag_eval(problem: ConicProblem, u, x, mu, counters: Optional[Counters] = None):
    """Value of ``L_mu(u, x)`` and its gradient in ``x``.

    Uses one projection onto K and one product with G.
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.m,):
        raise ParameterError(f"multiplier has shape {x.shape}, expected ({problem.m},)")
    s = problem.residual(np.asarray(u, dtype=float), counters)
    v = s + x / mu
    p = problem.proj_K(v, counters)
    r = v - p
    value = problem.objective(u) + 0.5 * mu * float(r @ r) - float(x @ x) / (2.0 * mu)
    return AugLagEval(value, s - p)


def inner_budget(mode, norm_G, D_U, mu, L_f, delta) -> int:
    """Iterations of the accelerated engine certifying inner accuracy ``delta``."""
    if not delta > 0:
        raise ParameterError("inner accuracy delta must be positive")
    if not mu > 0:
        raise ParameterError("mu must be positive")
    if not math.isfinite(D_U):
        raise ParameterError("inner budget needs a bounded set U")
    if mode == SIMPLE_F:
        L = mu * norm_G ** 2
    elif mode == SMOOTH_F:
        L = L_f + mu * norm_G ** 2
    else:
        raise ParameterError(f"unknown inner mode {mode!r}")
    return max(1, math.ceil(D_U * math.sqrt(2.0 * L / delta)))


def _resolve_mode(problem, mode):
    if mode is None:
        if problem.f_is_simple:
            return SIMPLE_F
        if problem.f.is_smooth:
            return SMOOTH_F
        raise CapabilityError("objective is neither simple on U nor smooth")
    if mode == SIMPLE_F and not problem.f_is_simple:
        raise CapabilityError("objective is not simple on U")
    if mode == SMOOTH_F and not problem.f.is_smooth:
        raise CapabilityError("objective has no gradient")
    if mode not in (SIMPLE_F, SMOOTH_F):
        raise ParameterError(f"unknown inner mode {mode!r}")
    return mode


def _inner_L(problem, mode, mu):
    L = mu * problem.norm_G ** 2
    if mode == SMOOTH_F:
        L += problem.f.L_f
    return max(L, 1e-12)


def inner_solve(problem: ConicProblem, x, mu, delta, counters: Optional[Counters] = None,
                mode: Optional[str] = None, use_fast: bool = True, budget: Optional[int] = None):
    """Approximate minimizer of ``L_mu(., x)`` over U.

    Runs the accelerated engine from the center of U for
    :func:`inner_budget` iterations (or ``budget`` if given).
    """
    mode = _resolve_mode(problem, mode)
    if budget is None:
        budget = inner_budget(mode, problem.norm_G, problem.D_U, mu, problem.f.L_f, delta)
    x = np.asarray(x, dtype=float)
    L = _inner_L(problem, mode, mu)
    z0 = problem.U.center
    c = counters if counters is not None else Counters()
    simple = mode == SIMPLE_F
    data = _kernels.fast_data(problem) if use_fast else None
    if data is not None:
        G, g, d, q, lo, hi, code = data
        z, bad = _kernels.auglag_inner(G, g, x / mu, float(mu), d, q, lo, hi, code,
                                       simple, float(L), int(budget), z0)
        if bad:
            raise NumericalError(f"non-finite iterate at inner iteration {bad}")
        c.matvec_G += budget
        c.matvec_Gt += budget
        c.proj_K += budget
        c.proj_U += budget
        if not simple:
            c.grad_f += budget
        return z

    shift = x / mu

    def phi(u):
        v = problem.residual(u, c) + shift
        r = v - problem.proj_K(v, c)
        grad = mu * problem.apply_Gt(r, c)
        val = 0.5 * mu * float(r @ r)
        if not simple:
            grad = grad + problem.grad_f(u, c)
            val += problem.objective(u)
        return val, grad

    if simple:
        def prox(v, t):
            return problem.prox_f(v, t, c)
    else:
        def prox(v, t):
            return problem.proj_U(v, c)

    res = icfg_run(DeltaLOracle(phi, L), prox, z0, ThetaSchedule.ACCELERATED, int(budget))
    return res.last


def dual_oracle_auglag(problem: ConicProblem, mu, delta, counters: Optional[Counters] = None,
                       mode: Optional[str] = None, use_fast: bool = True) -> DeltaLOracle:
    """``(3 delta, 2/mu)`` oracle for the negated augmented dual.

    The inner solution of the latest call is kept in ``oracle.last_u``.
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    mode = _resolve_mode(problem, mode)
    c = counters if counters is not None else Counters()
    budget = inner_budget(mode, problem.norm_G, problem.D_U, mu, problem.f.L_f, delta) \
        if delta > 0 else None
    if budget is None:
        raise ParameterError("inner accuracy delta must be positive")

    def evaluate(y):
        u = inner_solve(problem, y, mu, delta, c, mode, use_fast, budget)
        ev = auglag_eval(problem, u, y, mu, c)
        oracle.last_u = u
        return -ev.value, -ev.grad_x

    oracle = DeltaLOracle(evaluate, 2.0 / mu, 3.0 * delta)
    oracle.last_u = None
    oracle.inner_budget = budget
    return oracle


def outer_count(variant, mu, eps, R_d) -> int:
    """Outer iterations after which the averaged point is eps-optimal."""
    if variant == "gradient":
        return max(1, math.ceil(16.0 * R_d ** 2 / (mu * eps)))
    if variant == "fast":
        return max(1, math.ceil(4.0 * R_d / math.sqrt(mu * eps)))
    raise ParameterError(f"unknown variant {variant!r}")


def optimal_params_auglag(variant, eps, R_d, L_f=0.0, norm_G=1.0) -> AugLagParams:
    """Smoothing parameter and inner accuracy minimizing the total work."""
    if not eps > 0 or not R_d > 0:
        raise ParameterError("eps and R_d must be positive")
    if variant == "gradient":
        if L_f > 0 and norm_G == 0:
            raise ParameterError("norm_G = 0 with L_f > 0")
        mu = 16.0 * R_d ** 2 / eps
        if L_f > 0:
            mu = max(mu, L_f / norm_G ** 2)
        delta = eps / 3.0
    elif variant == "fast":
        mu = 16.0 * R_d ** 2 / eps
        delta = eps / 24.0
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    return AugLagParams(mu, delta, outer_count(variant, mu, eps, R_d))


def sweep_params_auglag(variant, eps, R_d, L_f=0.0, norm_G=1.0, factor=4.0) -> AugLagParams:
    """Parameters with ``mu`` a fixed fraction ``1/factor`` of the optimal one.

    The outer count then stays constant across eps while the inner work
    keeps the optimal order.
    """
    opt = optimal_params_auglag(variant, eps, R_d, L_f, norm_G)
    mu = opt.mu / factor
    n_out = outer_count(variant, mu, eps, R_d)
    if variant == "gradient":
        delta = eps / 3.0
    else:
        delta = min(eps / n_out, eps ** 2 * n_out * mu / (384.0 * R_d ** 2))
    return AugLagParams(mu, delta, n_out)


def ial_run(problem: ConicProblem, config: AugLagConfig,
            known: Optional[KnownSolution] = None) -> SolveReport:
    """Gradient (constant schedule) or fast (accelerated) augmented Lagrangian.

    History row ``k`` refers to the primal average with the index used by
    the rate bounds: after ``j`` oracle calls it is ``k = j`` for the
    constant schedule and ``k = j + 1`` for the accelerated one, whose
    first weight is zero.
    """
    c = Counters()
    oracle = dual_oracle_auglag(problem, config.mu, config.delta, c,
                                config.inner_mode, config.use_fast)
    accelerated = config.schedule is ThetaSchedule.ACCELERATED
    avg = PrimalAverage(problem.n)
    history = []

    def on_step(state):
        avg.add(oracle.last_u, state.theta_cur if accelerated else 1.0)
        if config.record_history:
            label = state.k + 1 if accelerated else state.k
            history.append(history_entry(problem, known, label, avg.value, c,
                                         outer=state.k, weight_sum=avg.weight,
                                         theta=state.theta_cur))
        return False

    x0 = np.zeros(problem.m) if config.x0 is None else np.asarray(config.x0, dtype=float)
    res = icfg_run(oracle, identity_prox, x0, config.schedule, config.outer_budget, stop=on_step)
    report = SolveReport(
        method="fial" if accelerated else "ial",
        u=avg.value, x=res.last, counters=c, outer_iters=res.iterations,
        inner_iters=res.iterations * oracle.inner_budget, history=history,
        params={"mu": config.mu, "delta": config.delta, "L_d": config.L_d,
                "inner_budget": oracle.inner_budget, "schedule": config.schedule.value},
    )
    return finalize(report, problem, known)


def a_ial_run(problem: ConicProblem, mu0, eps, known: Optional[KnownSolution] = None,
              max_doublings: int = 60, inner_mode: Optional[str] = None,
              use_fast: bool = True, x0=None, max_inner: int = 10 ** 7) -> SolveReport:
    """Adaptive augmented Lagrangian: double ``mu`` until ``dist_K <= eps``.

    Each step solves the inner problem to accuracy ``eps/3``, takes the
    multiplier step ``x <- x + mu grad_x`` and tests feasibility of the
    last inner solution (one extra K-projection).  Inner budgets grow with
    ``mu``, so a stage that would push the inner total past ``max_inner``
    raises instead of running.
    """
    if not mu0 > 0 or not eps > 0:
        raise ParameterError("mu0 and eps must be positive")
    mode = _resolve_mode(problem, inner_mode)
    c = Counters()
    x = np.zeros(problem.m) if x0 is None else np.array(x0, dtype=float)
    mu = float(mu0)
    delta = eps / 3.0
    history = []
    doublings = 0
    inner_total = 0
    k = 0
    while True:
        k += 1
        budget = inner_budget(mode, problem.norm_G, problem.D_U, mu, problem.f.L_f, delta)
        if inner_total + budget > max_inner:
            raise NonConvergenceError(
                f"A-IAL: inner iteration cap {max_inner} reached at mu={mu:g} "
                f"after {doublings} doublings")
        u = inner_solve(problem, x, mu, delta, c, mode, use_fast, budget)
        inner_total += budget
        ev = auglag_eval(problem, u, x, mu, c)
        x = x + mu * ev.grad_x
        infeas = problem.K.dist(problem.residual(u, c))
        c.proj_K += 1
        history.append(history_entry(problem, known, k, u, c, mu=mu))
        if infeas <= eps:
            break
        if doublings >= max_doublings:
            raise NonConvergenceError(
                f"A-IAL: infeasibility {infeas:.3e} > eps after {doublings} doublings of mu")
        mu *= 2.0
        doublings += 1
    report = SolveReport(
        method="aial", u=u, x=x, counters=c, outer_iters=k, inner_iters=inner_total,
        history=history, params={"mu0": float(mu0), "mu_final": mu, "eps": eps,
                                 "doublings": doublings},
    )
    return finalize(report, problem, known)
