"""Geometric input data and the generalized Laplacians built from it.

Metrics are given as jets in normal coordinates centred at the basepoint.
Every result here is a germ at the origin; nothing is said about the
operator away from it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .diffop import DiffOp
from .heatcoeff import HeatJets
from .jet_algebra import (
    JetAlgebraError,
    JetPoly,
    Role,
    TruncationError,
    format_monomial,
    format_value,
    poly_mul,
    power_series,
    require_degree,
    unit_index,
)
from .report import CheckReport

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[JetPoly, ...], ...]


class GaugeError(ValueError):
    """Raised when a metric is not given in normal coordinates at the origin."""

    def __init__(self, report: CheckReport) -> None:
        super().__init__(f"metric fails the normal-coordinate checks: {report.witness}")
        self.report = report


@dataclass(frozen=True)
class MetricJets:
    """Symmetric array of scalar jets g_ij, all exact to ``degree``."""

    n: int
    degree: int
    components: Matrix

    def __post_init__(self) -> None:
        if len(self.components) != self.n or any(len(row) != self.n for row in self.components):
            raise JetAlgebraError(f"metric must be a {self.n}x{self.n} array")
        rows = []
        for i, row in enumerate(self.components):
            entries = []
            for j, entry in enumerate(row):
                if entry.role is not Role.SCALAR or entry.n != self.n:
                    raise JetAlgebraError(f"metric entry ({i + 1},{j + 1}) must be a scalar jet in {self.n} variables")
                require_degree(entry.degree, self.degree, f"metric entry ({i + 1},{j + 1})")
                entries.append(entry.truncate(self.degree))
            rows.append(tuple(entries))
        object.__setattr__(self, "components", tuple(rows))

    @classmethod
    def flat(cls, n: int, degree: int) -> "MetricJets":
        return cls(n, degree, _identity(n, degree))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[JetPoly]], degree: int) -> "MetricJets":
        return cls(len(rows), degree, tuple(tuple(row) for row in rows))

    def __getitem__(self, index: Tuple[int, int]) -> JetPoly:
        i, j = index
        return self.components[i][j]


@dataclass(frozen=True)
class LaplacianSpec:
    """Data of a generalized Laplacian: metric, first-order term b^i and potential F.

    The lower-order parts are endomorphism jets of rank ``rank`` exact to
    ``metric.degree - 1``, which is what the assembled operator uses.
    """

    metric: MetricJets
    rank: int = 1
    first_order: Tuple[JetPoly, ...] = ()
    potential: Optional[JetPoly] = None

    def __post_init__(self) -> None:
        n = self.metric.n
        degree = self.metric.degree - 1
        if degree < 0:
            raise TruncationError("a generalized Laplacian needs metric jets of degree >= 1", required=1,
                                  available=self.metric.degree)
        first_order = tuple(self.first_order) or tuple(
            JetPoly.zero(n, Role.ENDO, self.rank, degree) for _ in range(n)
        )
        if len(first_order) != n:
            raise JetAlgebraError(f"expected {n} first-order coefficients, got {len(first_order)}")
        potential = self.potential if self.potential is not None else JetPoly.zero(n, Role.ENDO, self.rank, degree)
        normalized = tuple(self._normalize(b, f"b^{i + 1}") for i, b in enumerate(first_order))
        object.__setattr__(self, "first_order", normalized)
        object.__setattr__(self, "potential", self._normalize(potential, "potential"))

    def _normalize(self, jet: JetPoly, what: str) -> JetPoly:
        if jet.n != self.metric.n:
            raise JetAlgebraError(f"{what} has dimension {jet.n}, expected {self.metric.n}")
        jet = jet.as_endomorphism(self.rank)
        require_degree(jet.degree, self.metric.degree - 1, what)
        return jet.truncate(self.metric.degree - 1)

    @property
    def n(self) -> int:
        return self.metric.n


# ----------------------------------------------------------------------
# Matrix helpers on jets
# ----------------------------------------------------------------------

def _identity(n: int, degree: Optional[int]) -> Matrix:
    one = JetPoly.constant(n, 1, degree=degree)
    zero = JetPoly.zero(n, degree=degree)
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def _matrix_mul(a: Matrix, b: Matrix, degree: int) -> Matrix:
    size = len(a)
    rows = []
    for i in range(size):
        row = []
        for j in range(size):
            total = JetPoly.zero(a[0][0].n, degree=degree)
            for k in range(size):
                total = total + poly_mul(a[i][k], b[k][j], degree)
            row.append(total)
        rows.append(tuple(row))
    return tuple(rows)


def _matrix_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _determinant(m: Sequence[Sequence[JetPoly]], degree: int) -> JetPoly:
    size = len(m)
    if size == 1:
        return m[0][0].truncate(degree)
    total = JetPoly.zero(m[0][0].n, degree=degree)
    for j in range(size):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = poly_mul(m[0][j], _determinant(minor, degree), degree)
        total = total + term if j % 2 == 0 else total - term
    return total


def _require_identity_at_origin(g: MetricJets) -> None:
    for i in range(g.n):
        for j in range(g.n):
            if g[i, j].constant_term() != (1 if i == j else 0):
                raise JetAlgebraError(f"metric entry ({i + 1},{j + 1}) is {g[i, j].constant_term()} at the origin")


# ----------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------

def validate_normal_gauge(g: MetricJets) -> CheckReport:
    """Check symmetry, g(0) = I and the radial gauge sum_j g_ij x_j = x_i to degree J + 1."""

    violations: List[str] = []
    checked = 0
    n = g.n
    for i in range(n):
        for j in range(i + 1, n):
            checked += 1
            if g[i, j].terms != g[j, i].terms:
                violations.append(f"g{i + 1}{j + 1} != g{j + 1}{i + 1}")
    for i in range(n):
        for j in range(n):
            checked += 1
            value = g[i, j].constant_term()
            if value != (1 if i == j else 0):
                violations.append(f"g{i + 1}{j + 1}(0) = {value}")
    for i in range(n):
        checked += 1
        contraction = JetPoly.zero(n, degree=g.degree + 1)
        for j in range(n):
            contraction = contraction + g[i, j].times_variable(j)
        residual = contraction - JetPoly.variable(n, i, degree=g.degree + 1)
        for alpha, value in residual.sorted_terms():
            violations.append(f"radial gauge row {i + 1}: coefficient {format_value(value)} at {format_monomial(alpha)}")
    report = CheckReport(
        name="normal_gauge",
        passed=not violations,
        checked=checked,
        witness=violations[0] if violations else None,
        details=violations,
    )
    if violations:
        logger.debug("normal gauge violations: %s", violations)
    return report


# ----------------------------------------------------------------------
# Derived jets
# ----------------------------------------------------------------------

def inverse_metric_jets(g: MetricJets) -> MetricJets:
    """g^{-1} to degree J by the geometric series sum_k (-h)^k, h = g - I."""

    _require_identity_at_origin(g)
    n, degree = g.n, g.degree
    identity = _identity(n, degree)
    minus_h = tuple(tuple((identity[i][j] - g[i, j]) for j in range(n)) for i in range(n))
    result = identity
    power = identity
    for _ in range(degree):
        power = _matrix_mul(power, minus_h, degree)
        if all(entry.is_zero() for row in power for entry in row):
            break
        result = _matrix_add(result, power)
    return MetricJets(n, degree, result)


def det_metric_jets(g: MetricJets) -> JetPoly:
    return _determinant(g.components, g.degree)


def sqrt_det_jets(g: MetricJets) -> JetPoly:
    """The Jacobian j = (det g)^{1/2} to degree J."""

    _require_identity_at_origin(g)
    return power_series(det_metric_jets(g) - JetPoly.constant(g.n, 1), Fraction(1, 2), g.degree)


def reciprocal_sqrt_det_jets(g: MetricJets, degree: Optional[int] = None) -> JetPoly:
    _require_identity_at_origin(g)
    target = g.degree if degree is None else degree
    require_degree(g.degree, target, "metric")
    return power_series(det_metric_jets(g) - JetPoly.constant(g.n, 1), Fraction(-1, 2), target)


# ----------------------------------------------------------------------
# Operators
# ----------------------------------------------------------------------

def laplace_beltrami(g: MetricJets, rank: int = 1) -> DiffOp:
    """The operator -(1/j) sum_ij d_i (j g^{ij} d_j) tensored with the identity.

    Coefficients are exact to degree J - 1.  The mixed second derivative
    d_i d_j (i != j) collects both orderings, so its coefficient is -2 g^{ij}.
    """

    report = validate_normal_gauge(g)
    if not report.passed:
        raise GaugeError(report)
    n, degree = g.n, g.degree
    if degree < 1:
        raise TruncationError("the Laplace-Beltrami operator needs metric jets of degree >= 1", required=1,
                              available=degree)
    out = degree - 1
    ginv = inverse_metric_jets(g)
    jac = sqrt_det_jets(g)
    jac_inv = reciprocal_sqrt_det_jets(g)

    coefficients = {}
    for i in range(n):
        for j in range(i, n):
            alpha = tuple(a + b for a, b in zip(unit_index(n, i), unit_index(n, j)))
            weight = -1 if i == j else -2
            coefficients[alpha] = ginv[i, j].truncate(out).scale(weight)
    for k in range(n):
        divergence = JetPoly.zero(n, degree=out)
        for i in range(n):
            divergence = divergence + poly_mul(jac, ginv[i, k], degree).derivative(unit_index(n, i))
        first = poly_mul(jac_inv, divergence, out).scale(-1)
        if not first.is_zero():
            coefficients[unit_index(n, k)] = first
    scalar_op = {alpha: c.as_endomorphism(rank) for alpha, c in coefficients.items()}
    logger.debug("Laplace-Beltrami operator in n=%d built to coefficient degree %d", n, out)
    return DiffOp(n, rank, out, scalar_op)


def generalized_laplacian(spec: LaplacianSpec) -> DiffOp:
    """laplace_beltrami(g) + sum_i b^i d_i + F."""

    n = spec.n
    degree = spec.metric.degree - 1
    lower = {tuple([0] * n): spec.potential}
    for i, b in enumerate(spec.first_order):
        lower[unit_index(n, i)] = b
    return laplace_beltrami(spec.metric, spec.rank) + DiffOp(n, spec.rank, degree, lower)


def hat_coefficients(a: HeatJets, g: MetricJets) -> HeatJets:
    """Divide every heat jet by the Jacobian j, i.e. multiply by the jet of (det g)^{-1/2}."""

    if a.n != g.n:
        raise JetAlgebraError(f"heat jets in n={a.n} do not match a metric in n={g.n}")
    require_degree(g.degree, a.degree, "metric")
    factor = reciprocal_sqrt_det_jets(g, a.degree)
    return HeatJets(tuple(poly_mul(factor, coefficient, a.degree) for coefficient in a.coefficients), a.degree, a.n,
                    a.rank)
