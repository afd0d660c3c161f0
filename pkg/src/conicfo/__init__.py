"""First-order methods for conic convex programs.

``min f(u)  s.t.  u in U,  G u + g in K`` solved by inexact augmented
Lagrangian, smoothed dual and penalty methods, all built on one inexact
accelerated gradient engine with operation counters.
"""

from .cones import (Ball, Box, FullSpace, NonnegOrthant, PPowerEpigraph, Product,
                    SecondOrder, Zero, dist_cone, half_sq_dist_grad, project_cone,
                    project_polar_cone, project_set)
from .errors import (CapabilityError, ConfigurationError, ConicError, DataIOError,
                     DimensionError, NonConvergenceError, NumericalError, ParameterError)
from .problem import (CallableObjective, ConicProblem, Counters, DiagonalQuadratic,
                      KnownSolution, check_eps_optimal, kkt_residual, linear,
                      load_problem, prox_simple, save_problem, zero)
from .icfg import DeltaLOracle, ThetaSchedule, composite_step, icfg_run, theta_next
from .auglag import (AugLagConfig, a_ial_run, auglag_eval, dual_oracle_auglag, ial_run,
                     inner_budget, inner_solve, optimal_params_auglag)
from .nsmooth import NsConfig, inner_solve_ns, ns_params, ns_run, smoothed_lag_eval
from .penalty import (PenaltyConfig, a_pm_run, penalty_params, penalty_run,
                      quad_penalty_eval, smooth_ndp_eval)
from .report import SolveReport

__version__ = "0.1.0"
