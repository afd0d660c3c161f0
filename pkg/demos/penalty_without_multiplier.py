"""Quadratic penalty on a problem with no Lagrange multiplier.

The only feasible point of ``min u_2 s.t. u_1 = 0, |u_2|^p <= u_1`` is the
origin.  Penalty minimizers approach it like rho^(-1/(2p-1)), so reaching
|u_1| <= eps needs rho of order eps^-(2 - 1/p).

Run: python3 demos/penalty_without_multiplier.py
"""

import math

import numpy as np

from conicfo.bench import gen_example42
from conicfo.penalty import PenaltyConfig, a_pm_run, penalty_run

for p in (2.0, 3.0, 4.0):
    problem, _ = gen_example42(p)
    print(f"p = {p:g}")
    for rho in (1.0, 4.0, 16.0, 64.0, 256.0):
        u = penalty_run(problem, PenaltyConfig(rho=rho, budget=int(30 * math.sqrt(rho)) + 1000)).u
        closed = -(1.0 / (p * rho)) ** (1.0 / (2 * p - 1))
        print(f"  rho {rho:6g}  u = ({u[0]: .6f}, {u[1]: .6f})  closed-form u_2 {closed: .6f}")

problem, known = gen_example42(2.0)
print("\nadaptive penalty, p = 2")
for eps in (1e-1, 1e-2, 1e-3):
    rep = a_pm_run(problem, 1.0, eps, known=known)
    print(f"  eps {eps:6g}  rho_final {rep.params['rho_final']:10g}  "
          f"(rho needed {0.5 * eps ** -1.5:10.1f})  |u_1| {abs(rep.u[0]):.2e}  "
          f"inner iterations {rep.inner_iters}")
print("log-log slope of rho needed vs 1/eps:",
      np.polyfit(np.log([10, 100, 1000]), np.log([0.5 * e ** -1.5 for e in (1e-1, 1e-2, 1e-3)]), 1)[0])
