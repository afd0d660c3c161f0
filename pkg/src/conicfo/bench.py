"""Instances with known solutions, eps sweeps and scaling-slope fits.

Generators build each instance backward from a chosen primal-dual pair so
the optimal value and a multiplier are known exactly.  :func:`sweep_run`
solves one instance for a list of tolerances and records operation counts;
:func:`fit_slope` estimates the exponent ``a`` in ``count ~ eps^(-a)``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .auglag import AugLagConfig, a_ial_run, ial_run, optimal_params_auglag, \
    outer_count, sweep_params_auglag
from .cones import Box, NonnegOrthant, PPowerEpigraph, SecondOrder, Zero
from .errors import ConfigurationError, ConicError, DataIOError, ParameterError
from .icfg import ThetaSchedule
from .nsmooth import NsConfig, ns_outer_count, ns_params, ns_run
from .penalty import PenaltyConfig, a_pm_run, penalty_params, penalty_run
from .problem import (ConicProblem, DiagonalQuadratic, KnownSolution, check_eps_optimal,
                      kkt_residual, linear)

__all__ = [
    "gen_equality_qp", "gen_orthant_lp", "gen_soc_feasibility", "gen_example42",
    "sweep_qp", "make_instance", "GENERATORS", "METHODS",
    "SweepRecord", "solve_method", "sweep_run", "fit_slope", "emit_csv", "read_csv",
    "kkt_residual",
]

METHODS = ("ial", "fial", "aial", "ns", "qp", "np", "apm")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _qp_objective(q):
    q = np.asarray(q, dtype=float)
    return DiagonalQuadratic(np.ones_like(q), q)


def _box_min_qp(q, lower, upper):
    # min over a box of 0.5||u||^2 + q^T u is attained at clip(-q)
    u = np.clip(-q, lower, upper)
    return float(0.5 * u @ u + q @ u)


def gen_equality_qp(n=2, seed=None, A=None, b=None, q=None):
    """``min 0.5||u||^2 + q^T u  s.t.  A u = b,  u in [-r, r]^n``.

    With explicit ``A, b, q`` the KKT system is solved directly.  Without
    them, ``n=2`` and no seed give the instance ``A = [1 1], b = 1, q = 0``;
    otherwise a random instance is built from ``seed`` with ``m = n // 2``
    rows and ``||x*|| >= 1``.
    """
    if A is None and seed is None and n == 2:
        A, b, q = [[1.0, 1.0]], [1.0], [0.0, 0.0]
    if A is not None:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        m, n = A.shape
        b = np.asarray(b, dtype=float)
        q = np.zeros(n) if q is None else np.asarray(q, dtype=float)
        kkt = np.block([[np.eye(n), A.T], [A, np.zeros((m, m))]])
        sol = np.linalg.solve(kkt, np.concatenate([-q, b]))
        u_star, x_star = sol[:n], sol[n:]
    else:
        if n < 2:
            raise ParameterError("equality_qp needs n >= 2")
        rng = np.random.default_rng(seed if seed is not None else 0)
        m = max(1, n // 2)
        A = rng.standard_normal((m, n))
        u_star = rng.uniform(-0.5, 0.5, n)
        x_star = rng.standard_normal(m)
        nx = np.linalg.norm(x_star)
        if nx < 1.0:
            x_star *= 1.5 / nx
        q = -u_star - A.T @ x_star
        b = A @ u_star
    r = max(1.0, 2.0 * float(np.max(np.abs(u_star))))
    U = Box(-r * np.ones(n), r * np.ones(n))
    f = _qp_objective(q)
    problem = ConicProblem(f, U, A, -b, Zero(A.shape[0]))
    known = KnownSolution(f_star=f.value(u_star), x_star=x_star,
                          f_lower=_box_min_qp(q, U.lower, U.upper), u_star=u_star)
    return problem, known


def sweep_qp():
    """Two-variable equality QP with ``||x*|| = 1``, ``||G|| > 1``, ``D_U > 1``."""
    return gen_equality_qp(A=[[1.0, 1.0]], b=[1.0], q=[-1.5, -1.5])


def gen_orthant_lp(n=20, m=None, seed=0):
    """``min c^T u  s.t.  G u + g >= 0,  u in [-1, 1]^n`` with half the
    constraints active at the constructed solution."""
    if n < 1:
        raise ParameterError("orthant_lp needs n >= 1")
    m = max(1, n // 2) if m is None else int(m)
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, n))
    u_star = rng.uniform(-0.5, 0.5, n)
    active = rng.permutation(m)[: (m + 1) // 2]
    s_star = rng.uniform(0.5, 1.5, m)
    s_star[active] = 0.0
    x_star = np.zeros(m)
    x_star[active] = -rng.uniform(0.5, 1.5, active.size)
    g = s_star - G @ u_star
    c = -G.T @ x_star
    problem = ConicProblem(linear(c), Box(-np.ones(n), np.ones(n)), G, g, NonnegOrthant(m))
    known = KnownSolution(f_star=float(c @ u_star), x_star=x_star,
                          f_lower=-float(np.abs(c).sum()), u_star=u_star)
    return problem, known


def gen_soc_feasibility(n=6, seed=0, m=3):
    """``min 0.5||u||^2 + q^T u  s.t.  G u + g in SOC(m),  u in [-1, 1]^n``
    with the constraint active on the cone boundary."""
    if n < 1 or m < 2:
        raise ParameterError("soc_feasibility needs n >= 1 and m >= 2")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, n))
    u_star = rng.uniform(-0.5, 0.5, n)
    y = rng.standard_normal(m - 1)
    ny = np.linalg.norm(y)
    s_star = np.append(y, ny)
    lam = rng.uniform(0.5, 1.5)
    x_star = lam * np.append(y / ny, -1.0)
    g = s_star - G @ u_star
    q = -u_star - G.T @ x_star
    U = Box(-np.ones(n), np.ones(n))
    f = _qp_objective(q)
    problem = ConicProblem(f, U, G, g, SecondOrder(m))
    known = KnownSolution(f_star=f.value(u_star), x_star=x_star,
                          f_lower=_box_min_qp(q, U.lower, U.upper), u_star=u_star)
    return problem, known


def gen_example42(p=2.0, bound=10.0):
    """``min u_2  s.t.  u_1 = 0,  |u_2|^p <= u_1 <= bound``.

    The feasible set is the origin and no multiplier exists.  The cut at
    ``u_1 <= bound`` keeps ``min_U f = -bound^(1/p)`` finite.
    """
    if p < 2:
        raise ParameterError("example42 needs p >= 2")
    U = PPowerEpigraph(p, bound)
    problem = ConicProblem(linear([0.0, 1.0]), U, [[1.0, 0.0]], [0.0], Zero(1))
    f_lower = -bound ** (1.0 / p)
    known = KnownSolution(f_star=0.0, f_lower=f_lower, u_star=np.zeros(2))
    return problem, known


GENERATORS = ("equality_qp", "orthant_lp", "soc_feasibility", "example42")


def make_instance(name, n=None, seed=None, p=None, m=None):
    """Dispatch by generator id."""
    if name == "equality_qp":
        return gen_equality_qp(2 if n is None else n, seed)
    if name == "orthant_lp":
        return gen_orthant_lp(20 if n is None else n, m, 0 if seed is None else seed)
    if name == "soc_feasibility":
        return gen_soc_feasibility(6 if n is None else n, 0 if seed is None else seed,
                                   3 if m is None else m)
    if name == "example42":
        return gen_example42(2.0 if p is None else p)
    raise ParameterError(f"unknown instance {name!r}; choose from {', '.join(GENERATORS)}")


# ---------------------------------------------------------------------------
# method dispatch
# ---------------------------------------------------------------------------

def _need(value, what, method):
    if value is None:
        raise ConfigurationError(f"method {method!r} needs {what}")
    return value


def _lf_for(problem):
    # L_f enters the parameter formulas only when f is linearized
    return 0.0 if problem.f_is_simple else problem.f.L_f


def solve_method(problem: ConicProblem, known: Optional[KnownSolution], method: str,
                 eps: float, rd=None, mu=None, delta=None, rho=None, mu0=None,
                 rho0=None, kouter=None, ns_path=None, mu_factor=4.0, use_fast=True):
    """Run ``method`` at tolerance ``eps`` with a-priori parameter defaults.

    ``ial``/``fial`` default to ``mu = mu*/mu_factor`` (``mu_factor=1``
    gives the optimal parameters); ``ns`` defaults to ``K = ceil(6 ||G|| D_U
    R_d / eps)`` outer steps and the smooth inner path when f is smooth.
    """
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if rd is None and known is not None:
        rd = known.R_d
    delta_star = None if known is None else known.delta_star
    if method in ("ial", "fial"):
        variant = "gradient" if method == "ial" else "fast"
        R_d = _need(rd, "R_d (--rd)", method)
        if mu is None:
            par = sweep_params_auglag(variant, eps, R_d, _lf_for(problem), problem.norm_G,
                                      mu_factor)
        else:
            n_out = outer_count(variant, mu, eps, R_d)
            d = eps / 3.0 if variant == "gradient" else \
                min(eps / n_out, eps ** 2 * n_out * mu / (384.0 * R_d ** 2))
            par = optimal_params_auglag(variant, eps, R_d, _lf_for(problem), problem.norm_G)
            par = type(par)(mu, d, n_out)
        cfg = AugLagConfig(par.mu, par.delta if delta is None else delta, par.n_out,
                           ThetaSchedule.CONSTANT if method == "ial" else
                           ThetaSchedule.ACCELERATED, use_fast=use_fast, record_history=False)
        return ial_run(problem, cfg, known)
    if method == "aial":
        if mu0 is None:
            mu0 = 1.0 if mu is None else mu
        return a_ial_run(problem, mu0, eps, known, use_fast=use_fast)
    if method == "ns":
        R_d = _need(rd, "R_d (--rd)", method)
        K = ns_outer_count(problem.norm_G, R_d, problem.D_U, eps) if kouter is None else kouter
        par = ns_params(K, problem.norm_G, R_d, problem.D_U, eps)
        path = ns_path
        if path is None:
            path = "smooth" if problem.f.is_smooth and problem.f.L_f > 0 else "simple"
        cfg = NsConfig(par.mu if mu is None else mu, par.delta if delta is None else delta,
                       int(K), path=path, use_fast=use_fast, record_history=False)
        return ns_run(problem, cfg, known)
    if method in ("qp", "np"):
        kind = "D" if method == "qp" else "N"
        par = penalty_params(kind, eps, _need(delta_star, "delta_star (known f_lower)", method)) \
            if rho is None else None
        r = rho if rho is not None else par.rho
        musm = (eps / 2.0 if mu is None else mu) if kind == "N" else None
        rep = penalty_run(problem, PenaltyConfig(r, kind, musm, use_fast=use_fast), eps, known)
        if par is not None:
            rep.flags.extend(par.flags)
        return rep
    # apm
    return a_pm_run(problem, 1.0 if rho0 is None else rho0, eps, "D", known,
                    use_fast=use_fast)


# ---------------------------------------------------------------------------
# sweep records
# ---------------------------------------------------------------------------

@dataclass
class SweepRecord:
    """One ``(method, eps)`` data point; ``passed`` is not part of the CSV."""

    method: str
    eps: float
    proj_U: int
    proj_K: int
    proj_Kstar: int
    matvec: int
    outer_iters: int
    subopt_gap: float
    infeas: float
    wall_ms: float
    passed: Optional[bool] = field(default=None, compare=False)

    @property
    def total(self) -> int:
        return self.proj_U + self.proj_K + self.proj_Kstar


CSV_FIELDS = [f.name for f in fields(SweepRecord) if f.name != "passed"]
_INT_FIELDS = {"proj_U", "proj_K", "proj_Kstar", "matvec", "outer_iters"}


def _check_mode(method):
    return "two_sided" if method in ("ial", "fial", "ns") else "one_sided"


def sweep_run(instance, method, eps_list, params=None):
    """Solve ``instance = (problem, known)`` for each eps; counters are fresh
    per record.  Solver errors are re-raised with the eps in the message."""
    problem, known = instance
    params = dict(params or {})
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError("eps_list must be strictly decreasing")
    records = []
    for eps in eps_list:
        t0 = time.perf_counter()
        try:
            rep = solve_method(problem, known, method, eps, **params)
        except ConicError as exc:
            raise type(exc)(f"{method} at eps={eps:g}: {exc}") from exc
        wall = 1e3 * (time.perf_counter() - t0)
        c = rep.counters
        passed = None
        gap = math.nan
        if known is not None and known.f_star is not None:
            chk = check_eps_optimal(problem, known, rep.u, eps, mode=_check_mode(method))
            passed, gap = chk.passed, chk.subopt_gap
        records.append(SweepRecord(method, eps, c.proj_U, c.proj_K, c.proj_Kstar, c.matvec,
                                   rep.outer_iters, gap, problem.infeasibility(
                                       problem.U.project(rep.u)), wall, passed))
    return records


def fit_slope(records, field="total", only_passed=False) -> float:
    """Least-squares slope of ``log(count)`` against ``log(1/eps)``."""
    recs = [r for r in records if not only_passed or r.passed]
    if len(recs) < 3:
        raise ParameterError("fit_slope needs at least 3 records")
    counts = np.array([getattr(r, field) for r in recs], dtype=float)
    if np.any(counts <= 0):
        raise ParameterError(f"all {field} counts must be positive")
    x = np.log(1.0 / np.array([r.eps for r in recs], dtype=float))
    if np.ptp(x) == 0:
        raise ParameterError("all eps equal: slope undefined")
    slope, _ = np.polyfit(x, np.log(counts), 1)
    return float(slope)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(records, path):
    """Header plus one row per record, full precision, locale independent."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            for r in records:
                w.writerow([_fmt(getattr(r, k)) for k in CSV_FIELDS])
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    out = []
    for row in rows:
        try:
            kw = {k: (int(row[k]) if k in _INT_FIELDS else
                      row[k] if k == "method" else float(row[k])) for k in CSV_FIELDS}
        except (KeyError, ValueError) as exc:
            raise DataIOError(f"malformed row in {path}: {exc}") from exc
        out.append(SweepRecord(**kw))
    return out
