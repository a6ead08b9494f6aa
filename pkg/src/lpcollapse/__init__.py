"""Numerical construction of the Larson-Penston self-similar collapse profile.

The solver expands the flow in power series at the sonic point and at the
centre, integrates between them with an adaptive Runge-Kutta method, and
bisects on the sonic parameter until the inner solution reaches the centre
regularly.
"""
from .config import SolverConfig, load_config
from .errors import *  # noqa: F401,F403
from .integrate import (EventSpec, IntegrationOutcome, integrate, integrate_inner,
                        integrate_left, integrate_outer)
from .model import (FlowState, PhysicalSnapshot, SonicParameter, eval_rhs, farfield_state,
                    friedman_state, sonic_indicator, to_physical)
from .origin import (OriginSeries, eval_origin_series, extend_origin_series,
                     origin_param_derivative)
from .profile import SolutionProfile
from .shooting import (Classification, LPSolution, bisect_y, classify, find_rho1, find_y_bar,
                       match_left_right, solve_lp)
from .sonic import (SonicSeries, coeff_matrix, eval_series, extend_series, hunter_seed,
                    lp_seed, param_derivative_series, source_terms)
from .verify import InvariantReport, run_suite

__version__ = "0.1.0"
