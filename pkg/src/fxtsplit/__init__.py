"""Fixed-time forward-backward splitting for generalized-monotone inclusions.

Solve ``0 in A(x) + B(x)`` where ``A`` is maximal and ``B`` Lipschitz, both with
possibly negative monotonicity moduli. The package provides the fixed-point
solver, the nominal and fixed-time dynamics (Euler and RK4), settling-time
bounds, and adapters for optimization and variational inequality problems.
"""

from .dynamics import (
    CSV_COLUMNS,
    SolutionCertificate,
    SolverConfig,
    Trace,
    certify,
    empirical_settling_time,
    euler_modified,
    euler_nominal,
    integrate_continuous,
    solve_fixed_point,
)
from .errors import (
    AssumptionError,
    FxtError,
    IllPosedParameterError,
    InfeasibleError,
    InputError,
    InvalidSpecError,
    NonConvergenceError,
    OperatorEvaluationError,
    WindowError,
)
from .fb_core import ProblemInstance, ScalingParams, fb_map, residual
from .feasibility import (
    check_assumption_A,
    classify,
    contraction_factor,
    feasible_interval,
    report,
)
from .operators import (
    ConvexSet,
    Function,
    linear_forward,
    linear_operator,
    normal_cone,
    scaled_identity,
    subdifferential,
    zero_operator,
)
from .problems import CopSpec, MviSpec, ViSpec, to_inclusion
from .settling import SettlingBound, build_bound

__version__ = "0.1.0"
