"""Numerical laboratory for inverse mean curvature flow of star-shaped surfaces."""

from .ambient import MetricSpec, curvature_at, make_metric, metric_at
from .errors import (
    DegenerateSurface,
    DomainError,
    ImcfLabError,
    IncompleteTrace,
    InvalidConfig,
    NonPositiveMeanCurvature,
    NonStarShaped,
)
from .flow import FlowConfig, FlowTrace, box_monitor, imcf_step, mcf_step, run_imcf, run_mcf, run_mcf_smoothing
from .sphere import SphereGrid
from .surface import (
    RadialSurface,
    build_round_sphere,
    eccentricity,
    enclosed_volume,
    geometry,
    hawking_mass,
    star_margin,
)
from .sweepout import (
    ac_functional,
    hyperbolic_ball,
    hyperbolic_isoperimetric_profile,
    omega_c_reference,
    poincare_radius,
    sweepout_report,
)

__version__ = "0.1.0"
