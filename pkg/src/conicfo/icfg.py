"""Inexact composite fast gradient engine.

Minimizes ``F(z) = phi(z) + psi(z)`` where ``phi`` is reachable only through
an inexact first-order oracle with constants ``(delta, L)`` and ``psi`` has an
exact prox.  Two momentum schedules are supported: ``CONSTANT`` (no
momentum, averaged output) and ``ACCELERATED`` (FISTA-type, last iterate).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError, ParameterError

__all__ = ["DeltaLOracle", "ThetaSchedule", "IcfgState", "IcfgResult",
           "theta_next", "composite_step", "icfg_run", "identity_prox"]


@dataclass
class DeltaLOracle:
    """Inexact first-order oracle.

    ``eval(y)`` returns ``(value, grad)`` such that, for all ``x``,
    ``0 <= phi(x) - value - <grad, x - y> <= L/2 ||x - y||^2 + delta``.
    """

    eval: Callable
    L: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ParameterError("oracle constant L must be positive")
        if self.delta < 0:
            raise ParameterError("oracle inaccuracy delta must be nonnegative")

    def __call__(self, y):
        return self.eval(y)


class ThetaSchedule(enum.Enum):
    CONSTANT = "constant"
    ACCELERATED = "accelerated"


def theta_next(theta: float) -> float:
    """``(1 + sqrt(1 + 4 theta^2)) / 2``."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))


def identity_prox(v, t):
    """Prox of the zero function."""
    return v


def composite_step(oracle: DeltaLOracle, psi_prox: Callable, w, evaluated=None):
    """One prox-gradient step ``prox_{psi/L}(w - grad/L)``.

    ``evaluated`` lets callers pass a precomputed ``oracle(w)`` pair.
    """
    value, grad = oracle(w) if evaluated is None else evaluated
    step = 1.0 / oracle.L
    return psi_prox(w - step * grad, step)


@dataclass
class IcfgState:
    """Engine state after iteration ``k``.

    ``w_cur`` is the point queried at iteration ``k`` and ``theta_cur`` its
    weight; ``z_cur`` the prox output.
    """

    k: int
    z_prev: np.ndarray
    z_cur: np.ndarray
    w_cur: np.ndarray
    theta_cur: float
    theta_next: float
    value: float
    grad: np.ndarray
    z_sum: np.ndarray


@dataclass
class IcfgResult:
    last: np.ndarray
    average: np.ndarray
    iterations: int
    stopped: bool
    history: list = field(default_factory=list)

    @property
    def output(self):
        """The iterate the rate guarantee is about."""
        return self.last if self._accelerated else self.average

    _accelerated: bool = False


def icfg_run(oracle: DeltaLOracle, psi_prox: Callable, z0, schedule: ThetaSchedule,
             budget: int, stop: Optional[Callable] = None, record_history: bool = False,
             history_fn: Optional[Callable] = None) -> IcfgResult:
    """Run the engine for at most ``budget`` iterations.

    Parameters
    ----------
    oracle : DeltaLOracle
    psi_prox : callable
        ``psi_prox(v, t)`` returns ``argmin psi(z) + ||z - v||^2 / (2 t)``.
    z0 : array
        Starting point (also the first query point).
    schedule : ThetaSchedule
    budget : int
        Maximum number of iterations (oracle calls).
    stop : callable, optional
        ``stop(state)`` is called after every iteration; a truthy return
        ends the run.
    record_history : bool
        Store one entry per iteration, either ``history_fn(state)`` or a copy
        of the last and averaged iterates.
    """
    if budget < 1:
        raise ParameterError("icfg budget must be at least 1")
    accelerated = ThetaSchedule(schedule) is ThetaSchedule.ACCELERATED
    z_prev = np.array(z0, dtype=float)
    w = z_prev.copy()
    theta = 1.0
    z_sum = np.zeros_like(z_prev)
    history = []
    stopped = False
    z = z_prev
    k = 0
    for k in range(1, budget + 1):
        value, grad = oracle(w)
        z = composite_step(oracle, psi_prox, w, (value, grad))
        if not np.all(np.isfinite(z)):
            raise NumericalError(f"non-finite iterate at icfg iteration {k}")
        th_next = theta_next(theta) if accelerated else 1.0
        w_next = z + ((theta - 1.0) / th_next) * (z - z_prev)
        z_sum += z
        state = IcfgState(k, z_prev, z, w, theta, th_next, value, grad, z_sum)
        if record_history:
            if history_fn is not None:
                history.append(history_fn(state))
            else:
                history.append({"k": k, "last": z.copy(), "average": z_sum / k})
        if stop is not None and stop(state):
            stopped = True
            break
        z_prev, w, theta = z, w_next, th_next
    res = IcfgResult(z.copy(), z_sum / k, k, stopped, history)
    res._accelerated = accelerated
    return res
