"""Numerical solutions of ``Laplacian(u) + K e^{2u} = 0`` on the plane with ``K <= 0``."""

__version__ = "0.1.0"

from .alphap import AlphaPReport, alpha_p_report, annular_moment, estimate_alpha_p
from .asymptotics import (
    AsymptoticsReport,
    anisotropy_probe,
    fit_log_growth,
    growth_probe,
    layer_check,
    remainder_decay_exponent,
)
from .curvature import (
    BumpSpec,
    BumpSum,
    CurvatureField,
    ExactFamily,
    GridSampled,
    RadialPower,
    eta0,
    eval_curvature,
    make_exact_family,
    make_k0,
)
from .errors import *  # noqa: F401,F403
from .growth import laplacian_w0, w0
from .potential import (
    PotentialEvaluation,
    SourceField,
    bump_far_field,
    ground_state_decay_check,
    laplacian_residual,
    log_potential,
)
from .solver import (
    SolutionField,
    SolverOptions,
    normalize_t,
    picard_solve,
    radial_shoot,
    radial_solve_for_alpha,
    super_sub_bracket,
    total_curvature,
)
