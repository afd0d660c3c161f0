"""Projection counts against 1/eps for every method on the two-variable QP.

Run: python3 demos/scaling_sweep.py
"""

from conicfo.bench import fit_slope, gen_equality_qp, sweep_run

EPS = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]

for method in ("ial", "fial", "aial", "ns", "qp", "np", "apm"):
    records = sweep_run(gen_equality_qp(), method, EPS)
    field = "proj_U" if method == "ns" else "total"
    counts = " ".join(f"{getattr(r, field):>8d}" for r in records)
    ok = all(r.passed for r in records)
    print(f"{method:5s} {counts}   slope {fit_slope(records, field):5.2f}   all passed: {ok}")
