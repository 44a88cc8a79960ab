"""Strongly convergent operator splitting with Tikhonov regularization.

Krasnosel'skii-Mann, forward-backward, Douglas-Rachford and two primal-dual
schemes whose iterates are damped by a factor ``beta_n -> 1``, which drives
them to the minimal-norm solution. Also ships a split-feasibility benchmark
on a discretized L^2([0, 2 pi]).
"""
from .errors import (
    CertificateRejected,
    ConfigurationError,
    DimensionError,
    DomainError,
    EstimateFailed,
    ScheduleError,
    StrongSplitError,
)
from .hilbert import (
    LinearMap,
    Space,
    Vector,
    axpby,
    coordinate,
    grid,
    identity_map,
    inner,
    matrix_map,
    norm,
    operator_norm_estimate,
    product,
    zero_map,
)
from .operators import (
    Operator,
    ProxFunction,
    Resolvent,
    compose_averaged_alpha,
    conjugate,
    distance_sq_gradient,
    inverse_resolvent,
    moreau_conjugate_prox,
    project_ball,
    project_halfspace,
    reflected_resolvent,
    resolvent_of_inverse,
)
from .schedules import (
    ParamSchedules,
    StepSizeCertificate,
    make_custom_schedules,
    make_default_schedules,
    make_unregularized_schedules,
    validate_pd_dr_stepsizes,
    validate_pd_fb_stepsizes,
)
from .solvers import (
    SolveTrace,
    StoppingRule,
    custom_residual,
    fixed_point_residual,
    solve_dr,
    solve_dr_opt,
    solve_fb,
    solve_km,
    solve_km_averaged,
    solve_prox_grad,
)
from .primal_dual import (
    PdBlock,
    PdProblem,
    PdState,
    solve_pd_dr,
    solve_pd_dr_opt,
    solve_pd_fb,
    solve_pd_fb_opt,
)

__version__ = "0.1.0"
