"""Numerical laboratory for graphical mean curvature flow in any codimension.

Maps between flat tori (or into Euclidean space) are stored as a winding
matrix plus a periodic part on a uniform grid; the graph of the map evolves
by the nonparametric flow, and the library tracks the geometric quantities
whose behavior certifies the run: graph area, projection Jacobian, map
determinant, and two-dilation.
"""

from .analytic import (
    AnalyticMap,
    analytic_jet,
    identity_map,
    linear_map,
    product_sine_map,
    reference_velocity,
    scalar_bump_map,
    shear_composition_map,
)
from .config import ConfigError, ExperimentConfig, config_to_text, parse_config
from .diagnostics import (
    ConvergenceReport,
    DiagnosticsRecord,
    OrderEstimate,
    convergence_report,
    observed_order,
    record,
)
from .flow import (
    FlowState,
    GuardPolicy,
    NonFiniteValueError,
    StopReason,
    StopStatus,
    cfl_dt,
    guard,
    initial_state,
    run,
    step,
)
from .geometry import (
    JetField,
    MetricField,
    area,
    div_form_residual,
    induced_metric,
    j1_field,
    jacobian2,
    jet,
    mss_residual,
    projection_jacobian,
    two_dilation,
    velocity,
)
from .grid import GridSpec, ScalarField, diff1, diff2, integrate, node_coordinates
from .maps import (
    FAMILIES,
    MapField,
    build_family_map,
    family_analytic,
    make_identity,
    make_linear,
    make_product_sine,
    make_scalar_bump,
    make_shear_composition,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticMap",
    "ConfigError",
    "ConvergenceReport",
    "DiagnosticsRecord",
    "ExperimentConfig",
    "FAMILIES",
    "FlowState",
    "GridSpec",
    "GuardPolicy",
    "JetField",
    "MapField",
    "MetricField",
    "NonFiniteValueError",
    "OrderEstimate",
    "ScalarField",
    "StopReason",
    "StopStatus",
    "analytic_jet",
    "area",
    "build_family_map",
    "cfl_dt",
    "config_to_text",
    "convergence_report",
    "diff1",
    "diff2",
    "div_form_residual",
    "family_analytic",
    "guard",
    "identity_map",
    "induced_metric",
    "initial_state",
    "integrate",
    "j1_field",
    "jacobian2",
    "jet",
    "linear_map",
    "make_identity",
    "make_linear",
    "make_product_sine",
    "make_scalar_bump",
    "make_shear_composition",
    "mss_residual",
    "node_coordinates",
    "observed_order",
    "parse_config",
    "product_sine_map",
    "projection_jacobian",
    "record",
    "reference_velocity",
    "run",
    "scalar_bump_map",
    "shear_composition_map",
    "step",
    "two_dilation",
    "velocity",
]
