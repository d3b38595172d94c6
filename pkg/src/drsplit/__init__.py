"""Douglas-Rachford splitting and ADMM with adaptive stepsizes.

Solvers for monotone inclusions 0 in (A+B)x built from resolvents only,
the non-stationary scheme with safeguarded adaptive stepsize rules, the
matching adaptive ADMM, and a spectral toolkit for the linear case.
"""

from .admm import (
    AdmmState,
    SplitProblem,
    admm_step_adaptive,
    admm_step_rb,
    admm_step_vanilla,
    dual_correspondence_check,
    dual_operator_pair,
    solve_admm,
)
from .analysis import (
    SpectrumReport,
    disk_check,
    disk_depth,
    optimal_constant_stepsize,
    relaxed_eigenvalue,
    spectrum,
    stepsize_sweep,
    u_iteration_matrix,
    y_iteration_matrix,
)
from .dr import (
    DRResult,
    DRState,
    SolveTrace,
    StopRule,
    dr_step_nonstationary,
    dr_step_pairs,
    dr_step_u,
    dr_step_y,
    fejer_monitor,
    solve_dr,
)
from .errors import (
    IncompatibleForm,
    InvalidName,
    NoConvergence,
    NotOrthonormal,
    NotSingleValued,
    RankDeficient,
    SingularSystem,
    ZeroVector,
)
from .operators import (
    MonotoneOperator,
    l1_operator,
    least_squares_operator,
    linear_operator,
    linear_resolvent,
    operator_norm,
    project_ball_inf_pairs,
    prox_l1,
    prox_least_squares_orthorows,
    shift_operator,
    zero_operator,
)
from .problems import (
    ProblemInstance,
    fista_baseline,
    gen_admm_suite,
    gen_lasso,
    gen_linear_toy,
    gen_rof_saddle,
    gen_strongly_convex_qp,
)
from .stepsize import (
    ConservationSchedule,
    StepsizeController,
    default_schedule,
    raw_kappa_multivalued,
    raw_quotient_single_valued,
    verify_summable_increments,
)

__version__ = "0.1.0"
