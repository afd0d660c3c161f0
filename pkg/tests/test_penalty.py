import math

import numpy as np
import pytest

from conicfo.bench import gen_equality_qp, gen_example42, gen_orthant_lp, gen_soc_feasibility, \
    sweep_qp
from conicfo.cones import Box, Zero
from conicfo.errors import CapabilityError, NonConvergenceError, ParameterError
from conicfo.penalty import (PenaltyConfig, a_pm_run, apm_outer_bound, penalty_budget,
                             penalty_params, penalty_run, quad_penalty_budget,
                             quad_penalty_eval, smooth_ndp_eval)
from conicfo.problem import CallableObjective, ConicProblem, Counters, check_eps_optimal, zero
from oracles import fd_grad, ref_penalty_min

GENS = [gen_equality_qp, gen_orthant_lp, gen_soc_feasibility,
        lambda: gen_equality_qp(6, seed=4)]


def _random_instances(count):
    rng = np.random.default_rng(0)
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            out.append(gen_equality_qp(2 * (2 + i % 4), seed=i)[0])
        elif kind == 1:
            out.append(gen_orthant_lp(3 + i % 5, seed=i)[0])
        else:
            out.append(gen_soc_feasibility(3 + i % 4, seed=i, m=2 + i % 3)[0])
    return out, rng


# --- evaluations ----------------------------------------------------------------

def test_quad_eval_examples():
    P, known = gen_soc_feasibility()
    ev = quad_penalty_eval(P, known.u_star, 3.0)
    assert ev.value == pytest.approx(P.f.value(known.u_star), abs=1e-14)
    assert np.allclose(ev.grad, P.f.gradient(known.u_star), atol=1e-12)
    rng = np.random.default_rng(1)
    G, g = rng.standard_normal((2, 3)), rng.standard_normal(2)
    Q = ConicProblem(zero(3), Box(-np.ones(3), np.ones(3)), G, g, Zero(2))
    u = rng.uniform(-1, 1, 3)
    assert np.allclose(quad_penalty_eval(Q, u, 2.5).grad, 2.5 * G.T @ (G @ u + g))


def test_smooth_eval_examples():
    P, known = gen_soc_feasibility()
    ev = smooth_ndp_eval(P, known.u_star, 3.0, 0.1)
    assert ev.value == pytest.approx(P.f.value(known.u_star) + 0.3, abs=1e-14)
    u = np.ones(P.n)
    d = P.infeasibility(u)
    assert d > 10 * 0.01
    ev = smooth_ndp_eval(P, u, 2.0, 0.01)
    assert abs(ev.value - (P.f.value(u) + 2.0 * d)) <= 2.0 * 0.01 ** 2 / (2 * d) + 1e-14
    with pytest.raises(ParameterError):
        smooth_ndp_eval(P, u, 2.0, 0.0)
    with pytest.raises(ParameterError):
        quad_penalty_eval(P, u, 0.0)


def test_gradients_match_finite_differences():
    problems, rng = _random_instances(100)
    for P in problems:
        u = P.U.project(rng.standard_normal(P.n))
        rho = rng.uniform(0.1, 10)
        mu = rng.uniform(0.05, 1)
        fd_q = fd_grad(lambda w: quad_penalty_eval(P, w, rho, with_grad=False).value, u)
        fd_n = fd_grad(lambda w: smooth_ndp_eval(P, w, rho, mu, with_grad=False).value, u)
        assert np.allclose(quad_penalty_eval(P, u, rho).grad, fd_q, atol=1e-5, rtol=0)
        assert np.allclose(smooth_ndp_eval(P, u, rho, mu).grad, fd_n, atol=1e-5, rtol=0)


def test_smoothing_sandwich():
    problems, rng = _random_instances(30)
    for P in problems:
        for _ in range(20):
            u = P.U.project(rng.standard_normal(P.n) * 2)
            rho, mu = rng.uniform(0.1, 10), rng.uniform(1e-3, 1)
            exact = P.f.value(u) + rho * P.infeasibility(u)
            smooth = smooth_ndp_eval(P, u, rho, mu, with_grad=False).value
            assert smooth >= exact - 1e-12
            assert exact >= smooth - rho * mu - 1e-12


def test_gradient_needs_smooth_objective():
    f = CallableObjective(lambda u: float(np.abs(u).sum()))
    P = ConicProblem(f, Box([-1.0], [1.0]), [[1.0]], [0.0], Zero(1))
    with pytest.raises(CapabilityError):
        quad_penalty_eval(P, np.zeros(1), 1.0)
    assert quad_penalty_eval(P, np.zeros(1), 1.0, with_grad=False).grad is None
    with pytest.raises(CapabilityError):
        smooth_ndp_eval(P, np.zeros(1), 1.0, 0.1)


def test_eval_counts():
    P, _ = gen_equality_qp()
    c = Counters()
    quad_penalty_eval(P, np.zeros(2), 1.0, c)
    assert (c.proj_K, c.matvec_G, c.matvec_Gt, c.grad_f) == (1, 1, 1, 1)


# --- parameters ---------------------------------------------------------------

def test_params_examples():
    p = penalty_params("D", 0.1, 1.0)
    assert abs(p.rho - 400.0) <= 1e-12 and p.flags == ()
    p = penalty_params("N", 0.1, 1.0)
    assert abs(p.rho - 21.0) <= 1e-12 and abs(p.mu_smooth - 0.05) <= 1e-12
    p = penalty_params("D", 0.1, 0.0)
    assert p.rho == 1.0 and "delta_star_zero" in p.flags
    assert "eps_not_below_half_delta_star" in penalty_params("D", 0.6, 1.0).flags
    assert "delta_star_below_eps" in penalty_params("N", 0.5, 0.25).flags
    with pytest.raises(ParameterError):
        penalty_params("X", 0.1, 1.0)
    with pytest.raises(ParameterError):
        penalty_params("D", 0.0, 1.0)
    with pytest.raises(ParameterError):
        penalty_params("D", 0.1, -1.0)


def test_config_constants():
    cfg = PenaltyConfig(rho=4.0, kind="N", mu_smooth=0.5)
    assert cfg.L_psi(2.0, 3.0) == 2.0 + 4.0 * 9.0
    assert cfg.L_phi(2.0, 3.0) == 2.0 + 4.0 * 9.0 / 0.5
    with pytest.raises(ParameterError):
        PenaltyConfig(rho=1.0, kind="N")
    with pytest.raises(ParameterError):
        PenaltyConfig(rho=0.0)
    with pytest.raises(ParameterError):
        PenaltyConfig(rho=1.0, budget=0)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
@pytest.mark.parametrize("L_f", [0.0, 1.0, 7.5])
def test_quadratic_budget_equals_closed_form(eps, L_f):
    delta_star, norm_G, D_U = 0.75, math.sqrt(2), 2 * math.sqrt(2)
    rho = penalty_params("D", eps, delta_star).rho
    direct = penalty_budget("D", eps, rho, L_f, norm_G, D_U)
    closed = math.ceil(math.sqrt(2 * L_f * D_U ** 2 / eps)
                       + math.sqrt(8 * delta_star) * norm_G * D_U / eps ** 1.5)
    assert abs(direct - closed) <= 1
    assert quad_penalty_budget(eps, delta_star, L_f, norm_G, D_U) == closed


def test_smoothed_budget_formula():
    b = penalty_budget("N", 0.1, 21.0, 1.0, 2.0, 3.0, 0.05)
    assert b == math.ceil(math.sqrt(2 * 9 / 0.1) + math.sqrt(2 * 21 * 4 / 0.05 * 9 / 0.1))
    with pytest.raises(ParameterError):
        penalty_budget("N", 0.1, 21.0, 1.0, 2.0, 3.0)
    with pytest.raises(ParameterError):
        penalty_budget("D", 0.1, 1.0, 0.0, 1.0, math.inf)


# --- runs -------------------------------------------------------------------------

@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
@pytest.mark.parametrize("rho", [1.0, 4.0, 16.0])
def test_example42_closed_form(p, rho):
    P, _ = gen_example42(p)
    rep = penalty_run(P, PenaltyConfig(rho=rho, budget=800))
    u2 = -(1.0 / (p * rho)) ** (1.0 / (2 * p - 1))
    assert abs(rep.u[1] - u2) <= 1e-4
    assert abs(rep.u[0] - abs(u2) ** p) <= 1e-4


def test_example42_worked_value():
    P, _ = gen_example42(2.0)
    rep = penalty_run(P, PenaltyConfig(rho=4.0, budget=800))
    assert np.allclose(rep.u, [0.25, -0.5], atol=1e-6)


def test_example42_infeasibility_monotone_in_rho():
    P, _ = gen_example42(2.0)
    prev = math.inf
    for j in range(8):
        u = penalty_run(P, PenaltyConfig(rho=2.0 ** j, budget=1500)).u
        assert abs(u[0]) <= prev + 1e-10
        prev = abs(u[0])


def test_compiled_and_generic_paths_agree():
    for P, _ in (gen_equality_qp(), gen_orthant_lp(6, seed=1), gen_soc_feasibility()):
        for kind, mu in (("D", None), ("N", 0.05)):
            cfg = dict(rho=7.0, kind=kind, mu_smooth=mu, budget=300)
            r1 = penalty_run(P, PenaltyConfig(**cfg, use_fast=True))
            r2 = penalty_run(P, PenaltyConfig(**cfg, use_fast=False))
            assert np.allclose(r1.u, r2.u, rtol=0, atol=1e-10)
            assert r1.counters == r2.counters


@pytest.mark.parametrize("gen", [gen_equality_qp, lambda: gen_equality_qp(6, seed=4), sweep_qp])
def test_penalty_minimizer_against_reference(gen):
    P, _ = gen()
    for rho in (1.0, 10.0, 100.0):
        val_ref, _ = ref_penalty_min(P, rho)
        rep = penalty_run(P, PenaltyConfig(rho=rho), eps=1e-4)
        gap = quad_penalty_eval(P, rep.u, rho, with_grad=False).value - val_ref
        assert -1e-10 <= gap <= 1e-4


@pytest.mark.parametrize("gen", GENS + [sweep_qp])
@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_quadratic_guarantee_parameters(gen, eps):
    P, known = gen()
    assert eps <= known.delta_star / 2
    prm = penalty_params("D", eps, known.delta_star)
    rep = penalty_run(P, PenaltyConfig(rho=prm.rho), eps=eps, known=known)
    chain = eps ** 1.5 / math.sqrt(2 * known.delta_star) + eps / 2
    assert rep.infeas <= chain <= eps
    assert -known.delta_star <= rep.subopt_gap <= eps
    assert check_eps_optimal(P, known, rep.u, eps, mode="one_sided").passed


@pytest.mark.parametrize("gen", GENS + [sweep_qp])
@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_smoothed_guarantee_parameters(gen, eps):
    P, known = gen()
    assert known.delta_star >= eps
    prm = penalty_params("N", eps, known.delta_star)
    rep = penalty_run(P, PenaltyConfig(rho=prm.rho, kind="N", mu_smooth=prm.mu_smooth),
                      eps=eps, known=known)
    assert check_eps_optimal(P, known, rep.u, eps, mode="one_sided").passed


def test_run_needs_budget_or_eps():
    P, _ = gen_equality_qp()
    with pytest.raises(ParameterError):
        penalty_run(P, PenaltyConfig(rho=1.0))


# --- adaptive -----------------------------------------------------------------

def test_apm_single_stage_above_threshold():
    P, known = gen_equality_qp()
    eps = 1e-2
    rep = a_pm_run(P, 4 * known.delta_star / eps ** 2, eps, known=known)
    assert rep.outer_iters == 1 and rep.params["doublings"] == 0


@pytest.mark.parametrize("kind", ["D", "N"])
@pytest.mark.parametrize("gen", GENS + [sweep_qp])
def test_apm_doublings_and_final_point(gen, kind):
    P, known = gen()
    eps = 1e-2
    rep = a_pm_run(P, 1.0, eps, kind, known)
    assert rep.infeas <= eps and rep.subopt_gap <= eps
    assert rep.params["doublings"] <= apm_outer_bound(kind, eps, known.delta_star, 1.0)
    assert rep.params["rho_final"] == 2.0 ** rep.params["doublings"]
    assert rep.params["doublings"] == math.ceil(math.log2(rep.params["rho_final"] / 1.0))


def test_apm_example42():
    P, _ = gen_example42(2.0)
    eps = 0.05
    rep = a_pm_run(P, 1.0, eps)
    assert abs(rep.u[0]) <= eps
    rho_needed = 0.5 * (1 / eps) ** 1.5
    assert rep.params["rho_final"] >= rho_needed * (1 - 1e-3)
    assert rep.params["rho_final"] / 2 < rho_needed * 1.05


def test_apm_counts_feasibility_test():
    P, known = gen_equality_qp()
    rep = a_pm_run(P, 1.0, 1e-2, known=known, use_fast=False)
    assert rep.counters.proj_K == rep.inner_iters + rep.outer_iters


def test_apm_nonconvergence():
    P = ConicProblem(zero(1), Box([0.0], [1.0]), [[1.0]], [2.0], Zero(1))
    with pytest.raises(NonConvergenceError):
        a_pm_run(P, 1.0, 1e-3, max_doublings=4)
    with pytest.raises(ParameterError):
        a_pm_run(P, 0.0, 1e-3)


def test_apm_inner_cap():
    P = ConicProblem(zero(1), Box([0.0], [1.0]), [[1.0]], [2.0], Zero(1))
    with pytest.raises(NonConvergenceError, match="cap"):
        a_pm_run(P, 1.0, 1e-3)
    Q, known = gen_equality_qp()
    with pytest.raises(NonConvergenceError, match="cap"):
        a_pm_run(Q, 1.0, 1e-3, known=known, max_inner=5)
