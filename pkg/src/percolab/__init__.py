"""Percolation laboratory: spatial random graph models, decay exponents,
and seeded Monte Carlo verification of annulus-crossing behaviour."""

from .errors import (
    ConfigError,
    NumericError,
    ParameterError,
    PercolabError,
    ResourceError,
)
from .events import annulus_crossing, local_annulus_crossing, long_edge_present
from .exponents import (
    AnnealedInterference,
    ExponentReport,
    PhaseScan,
    ZetaResult,
    delta_eff,
    exponent_report,
    phase_scan,
    psi_analytic,
    psi_numeric,
    translate_params,
    translate_params_inverse,
    zeta_closed_form,
    zeta_numeric,
)
from .geometry import (
    Vertex,
    VertexSet,
    Window,
    cox_normalizer,
    sample_cox_boolean_field,
    sample_ellipse_field,
    sample_lattice_bernoulli,
    sample_poisson_marked,
    sample_worm_vertices,
    unit_ball_volume,
)
from .graph import ComponentLabeling, GraphSample, build_graph, components, dump_graph
from .kernels import (
    FAMILIES,
    ModelSpec,
    annealed_interference_prob,
    connect_prob_interference,
    connect_prob_wdrcm,
    ellipse_edge,
    ellipses_intersect,
    interference_count,
    interpolation_kernel,
    profile,
    wdrcm_prob,
)
from .montecarlo import (
    Estimate,
    MixingResult,
    SlopeFit,
    estimate_event,
    estimate_long_edge_conditional,
    mixing_covariance,
    radius_sweep,
    slope_fit,
    write_estimates_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealedInterference",
    "ComponentLabeling",
    "ConfigError",
    "Estimate",
    "ExponentReport",
    "FAMILIES",
    "GraphSample",
    "MixingResult",
    "ModelSpec",
    "NumericError",
    "ParameterError",
    "PercolabError",
    "PhaseScan",
    "ResourceError",
    "SlopeFit",
    "Vertex",
    "VertexSet",
    "Window",
    "ZetaResult",
    "annealed_interference_prob",
    "annulus_crossing",
    "build_graph",
    "components",
    "connect_prob_interference",
    "connect_prob_wdrcm",
    "cox_normalizer",
    "delta_eff",
    "dump_graph",
    "ellipse_edge",
    "ellipses_intersect",
    "estimate_event",
    "estimate_long_edge_conditional",
    "exponent_report",
    "interference_count",
    "interpolation_kernel",
    "local_annulus_crossing",
    "long_edge_present",
    "mixing_covariance",
    "phase_scan",
    "profile",
    "psi_analytic",
    "psi_numeric",
    "radius_sweep",
    "sample_cox_boolean_field",
    "sample_ellipse_field",
    "sample_lattice_bernoulli",
    "sample_poisson_marked",
    "sample_worm_vertices",
    "slope_fit",
    "translate_params",
    "translate_params_inverse",
    "unit_ball_volume",
    "wdrcm_prob",
    "write_estimates_csv",
    "zeta_closed_form",
    "zeta_numeric",
]
