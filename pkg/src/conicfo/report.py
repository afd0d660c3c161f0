"""Run record shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problem import Counters


@dataclass
class SolveReport:
    """Outcome of one solver run.

    ``history`` holds one dict per outer iteration with at least ``k``,
    ``infeas`` and, when the optimal value is known, ``subopt``; plus a
    snapshot of the cumulative counters.
    """

    method: str
    u: np.ndarray
    x: Optional[np.ndarray] = None
    counters: Counters = field(default_factory=Counters)
    outer_iters: int = 0
    inner_iters: int = 0
    history: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    infeas: float = float("nan")
    subopt_gap: Optional[float] = None

    def to_dict(self):
        return {
            "method": self.method,
            "u": np.asarray(self.u).tolist(),
            "x": None if self.x is None else np.asarray(self.x).tolist(),
            "counters": self.counters.snapshot(),
            "outer_iters": self.outer_iters,
            "inner_iters": self.inner_iters,
            "params": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                       for k, v in self.params.items()},
            "flags": list(self.flags),
            "infeas": self.infeas,
            "subopt_gap": self.subopt_gap,
        }


def history_entry(problem, known, k, u, counters, **extra):
    """Monitoring row (uncounted evaluations)."""
    row = {"k": k, "infeas": problem.infeasibility(u), "f": problem.objective(u)}
    if known is not None and known.f_star is not None:
        row["subopt"] = row["f"] - known.f_star
    row.update(counters.snapshot())
    row.update(extra)
    return row


def finalize(report: SolveReport, problem, known):
    report.infeas = problem.infeasibility(report.u)
    if known is not None and known.f_star is not None:
        report.subopt_gap = problem.objective(report.u) - known.f_star
    return report
