"""Infeasibility of the averaged primal point along the outer iterations,
for the gradient and the fast augmented Lagrangian and for Nesterov
smoothing, on a random equality-constrained QP.

Run: python3 demos/dual_trajectories.py
"""

from conicfo.auglag import AugLagConfig, ial_run
from conicfo.bench import gen_equality_qp
from conicfo.icfg import ThetaSchedule
from conicfo.nsmooth import NsConfig, ns_params, ns_run

problem, known = gen_equality_qp(8, seed=1)
mu = 1.0
slow = ial_run(problem, AugLagConfig(mu=mu, delta=1e-8, outer_budget=200), known)
fast = ial_run(problem, AugLagConfig(mu=mu, delta=1e-8, outer_budget=200,
                                     schedule=ThetaSchedule.ACCELERATED), known)
print(f"R_d = {known.R_d:.3f}, ||G|| = {problem.norm_G:.3f}, D_U = {problem.D_U:.3f}")
print("   k   infeas(ial)  infeas(fial)")
# the fast method labels its average k = j + 1 after j dual steps
by_k = {r["k"]: r for r in fast.history}
for k in (2, 5, 10, 20, 50, 100, 200):
    a = next(r for r in slow.history if r["k"] == k)
    print(f"{k:4d}   {a['infeas']:.3e}    {by_k[k]['infeas']:.3e}")

print("\nsmoothing with mu tuned to K")
for K in (10, 40, 160):
    prm = ns_params(K, problem.norm_G, known.R_d, problem.D_U, 1e-2)
    rep = ns_run(problem, NsConfig(mu=prm.mu, delta=0.0, K_outer=K), known)
    print(f"  K {K:4d}  infeas {rep.infeas:.3e}  gap {rep.subopt_gap: .3e}")
