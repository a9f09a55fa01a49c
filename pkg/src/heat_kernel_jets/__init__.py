"""Exact jets of heat kernel coefficients for generalized Laplacians."""

__version__ = "0.1.0"

from .diffop import DiffOp, apply, compose, ev_sharp, flat_laplacian, op_exponential_series, operator_power
from .heatcoeff import (
    DifferenceOp,
    EvSharpTable,
    HeatJets,
    OrderBoundError,
    difference_operator,
    ev_sharp_from_powers,
    ev_sharp_table,
    graded_heat_jets,
    heat_jet_requirements,
    heat_jets,
    intertwine_check,
    link_check,
    polterovich_ak,
    polterovich_matrix,
)
from .jet_algebra import JetAlgebraError, JetPoly, Role, TruncationError, ZSeries, poly_mul, radial_power, sym_inner
from .laplacian import (
    GaugeError,
    LaplacianSpec,
    MetricJets,
    generalized_laplacian,
    hat_coefficients,
    laplace_beltrami,
    validate_normal_gauge,
)
from .report import CheckReport

__all__ = [
    "CheckReport",
    "DiffOp",
    "DifferenceOp",
    "EvSharpTable",
    "GaugeError",
    "HeatJets",
    "JetAlgebraError",
    "JetPoly",
    "LaplacianSpec",
    "MetricJets",
    "OrderBoundError",
    "Role",
    "TruncationError",
    "ZSeries",
    "__version__",
    "apply",
    "compose",
    "difference_operator",
    "ev_sharp",
    "ev_sharp_from_powers",
    "ev_sharp_table",
    "flat_laplacian",
    "generalized_laplacian",
    "hat_coefficients",
    "graded_heat_jets",
    "heat_jet_requirements",
    "heat_jets",
    "intertwine_check",
    "laplace_beltrami",
    "link_check",
    "op_exponential_series",
    "operator_power",
    "poly_mul",
    "polterovich_ak",
    "polterovich_matrix",
    "radial_power",
    "sym_inner",
    "validate_normal_gauge",
]
