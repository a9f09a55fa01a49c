"""Differential operators with jet coefficients."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Tuple

from .jet_algebra import (
    Degree,
    JetAlgebraError,
    JetPoly,
    MultiIndex,
    Role,
    TruncationError,
    ZSeries,
    add_indices,
    format_monomial,
    index_binomial,
    lower_indices,
    meet,
    poly_mul,
    require_degree,
    sub_indices,
    total_degree,
    unit_index,
    zero_index,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiffOp:
    """The operator psi -> sum_alpha c_alpha(x) * (d^alpha psi)(x).

    Coefficients are endomorphism jets of rank ``rank``, all exact to the
    coefficient degree ``degree`` (``None`` for polynomial coefficients).
    """

    n: int
    rank: int = 1
    degree: Degree = None
    coefficients: Mapping[MultiIndex, JetPoly] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: Dict[MultiIndex, JetPoly] = {}
        for alpha, coefficient in self.coefficients.items():
            alpha = tuple(alpha)
            if len(alpha) != self.n:
                raise JetAlgebraError(f"derivative index {alpha} does not match dimension {self.n}")
            if coefficient.n != self.n:
                raise JetAlgebraError(f"coefficient dimension {coefficient.n} != {self.n}")
            coefficient = coefficient.as_endomorphism(self.rank)
            require_degree(coefficient.degree, self.degree, f"coefficient of d^{alpha}")
            coefficient = coefficient.truncate(self.degree)
            if not coefficient.is_zero():
                cleaned[alpha] = coefficient
        object.__setattr__(self, "coefficients", cleaned)

    @classmethod
    def _trusted(cls, n: int, rank: int, degree: Degree, coefficients: Dict[MultiIndex, JetPoly]) -> "DiffOp":
        op = object.__new__(cls)
        object.__setattr__(op, "n", n)
        object.__setattr__(op, "rank", rank)
        object.__setattr__(op, "degree", degree)
        object.__setattr__(op, "coefficients", {a: c for a, c in coefficients.items() if not c.is_zero()})
        return op

    @classmethod
    def build(cls, n: int, rank: int, coefficients: Mapping[MultiIndex, JetPoly]) -> "DiffOp":
        """Build an operator whose coefficient degree is the smallest degree among the coefficients."""

        degree = meet(*(c.degree for c in coefficients.values()))
        return cls(n, rank, degree, coefficients)

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, n: int, rank: int = 1, degree: Degree = None) -> "DiffOp":
        return cls._trusted(n, rank, degree, {})

    @classmethod
    def identity(cls, n: int, rank: int = 1) -> "DiffOp":
        return cls._trusted(n, rank, None, {zero_index(n): JetPoly.identity(n, rank)})

    @classmethod
    def multiplication(cls, p: JetPoly, rank: int = 1) -> "DiffOp":
        """The order-zero operator psi -> p * psi."""

        if p.role is Role.ENDO:
            rank = p.rank
        return cls(p.n, rank, p.degree, {zero_index(p.n): p})

    # -- inspection -----------------------------------------------------
    @property
    def order(self) -> int:
        return max((total_degree(alpha) for alpha in self.coefficients), default=0)

    def coefficient(self, alpha: MultiIndex) -> JetPoly:
        found = self.coefficients.get(tuple(alpha))
        if found is None:
            return JetPoly.zero(self.n, Role.ENDO, self.rank, self.degree)
        return found

    def is_zero(self) -> bool:
        return not self.coefficients

    # -- arithmetic -----------------------------------------------------
    def _check_compatible(self, other: "DiffOp") -> None:
        if self.n != other.n or self.rank != other.rank:
            raise JetAlgebraError(
                f"operators on (n={self.n}, m={self.rank}) and (n={other.n}, m={other.rank}) do not combine"
            )

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if not isinstance(other, DiffOp):
            return NotImplemented
        self._check_compatible(other)
        degree = meet(self.degree, other.degree)
        combined: Dict[MultiIndex, JetPoly] = {}
        for source in (self.coefficients, other.coefficients):
            for alpha, coefficient in source.items():
                coefficient = coefficient.truncate(degree)
                combined[alpha] = combined[alpha] + coefficient if alpha in combined else coefficient
        return DiffOp._trusted(self.n, self.rank, degree, combined)

    def __neg__(self) -> "DiffOp":
        return self.scale(-1)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self + (-other)

    def scale(self, factor: Any) -> "DiffOp":
        factor = Fraction(factor)
        return DiffOp._trusted(
            self.n, self.rank, self.degree, {a: c.scale(factor) for a, c in self.coefficients.items()}
        )

    def truncate(self, degree: Degree) -> "DiffOp":
        new_degree = meet(self.degree, degree)
        if new_degree == self.degree:
            return self
        return DiffOp._trusted(
            self.n, self.rank, new_degree, {a: c.truncate(new_degree) for a, c in self.coefficients.items()}
        )

    def __str__(self) -> str:
        parts = []
        for alpha in sorted(self.coefficients, key=lambda a: (total_degree(a), tuple(-x for x in a))):
            derivative = "" if total_degree(alpha) == 0 else " d[" + format_monomial(alpha) + "]"
            parts.append(f"({self.coefficients[alpha]}){derivative}")
        return " + ".join(parts) if parts else "0"


# ----------------------------------------------------------------------
# Model operators
# ----------------------------------------------------------------------

def flat_laplacian(n: int, rank: int = 1) -> DiffOp:
    """The constant-coefficient operator -sum_mu d_mu^2 tensored with the identity."""

    if n < 1:
        raise ValueError("the flat Laplacian needs n >= 1")
    minus_one = JetPoly.identity(n, rank).scale(-1)
    return DiffOp._trusted(n, rank, None, {tuple(2 * e for e in unit_index(n, i)): minus_one for i in range(n)})


def euler_operator(n: int, rank: int = 1) -> DiffOp:
    """The degree-counting operator N = sum_mu x_mu d_mu."""

    return DiffOp._trusted(
        n,
        rank,
        None,
        {unit_index(n, i): JetPoly.identity(n, rank).times_variable(i) for i in range(n)},
    )


def partial_operator(alpha: MultiIndex, rank: int = 1) -> DiffOp:
    n = len(alpha)
    return DiffOp._trusted(n, rank, None, {tuple(alpha): JetPoly.identity(n, rank)})


# ----------------------------------------------------------------------
# Application and composition
# ----------------------------------------------------------------------

def _output_degree(op_degree: Degree, input_degree: Degree, order: int, requested: Degree, what: str) -> Degree:
    available = meet(op_degree, None if input_degree is None else input_degree - order)
    if available is not None and available < 0:
        raise TruncationError(
            f"{what}: input exact to degree {input_degree} cannot feed an operator of order {order}",
            required=order,
            available=input_degree,
        )
    if requested is None:
        return available
    require_degree(available, requested, what)
    return requested


def apply(op: DiffOp, psi: JetPoly, degree: Degree = None) -> JetPoly:
    """The jet of op(psi), exact to ``degree``.

    Without an explicit degree the largest exactly determined degree is used.
    Requesting more than the inputs determine raises :class:`TruncationError`.
    """

    if psi.n != op.n:
        raise JetAlgebraError(f"dimension mismatch: {psi.n} != {op.n}")
    if psi.role is not Role.SCALAR and psi.rank != op.rank:
        raise JetAlgebraError(f"section rank {psi.rank} does not match operator rank {op.rank}")
    target = _output_degree(op.degree, psi.degree, op.order, degree, "operator application")
    role = Role.ENDO if psi.role is Role.SCALAR else psi.role
    result = JetPoly.zero(op.n, role, op.rank, target)
    for alpha, coefficient in op.coefficients.items():
        order = total_degree(alpha)
        source = psi if target is None else psi.truncate(target + order)
        term = poly_mul(coefficient, source.derivative(alpha), target)
        result = result + term
    return result


def compose(a: DiffOp, b: DiffOp, degree: Degree = None) -> DiffOp:
    """The operator a o b with coefficients exact to ``degree``.

    Uses the Leibniz expansion
    c_alpha d^alpha (c_beta d^beta) = sum_{gamma <= alpha} C(alpha, gamma) c_alpha (d^gamma c_beta) d^{alpha - gamma + beta};
    the coefficients of ``b`` must be exact to ``degree + a.order``.
    """

    a._check_compatible(b)
    target = _output_degree(a.degree, b.degree, a.order, degree, "operator composition")
    derivatives: Dict[Tuple[MultiIndex, MultiIndex], JetPoly] = {}
    combined: Dict[MultiIndex, JetPoly] = {}
    for alpha, left in a.coefficients.items():
        left = left.truncate(target)
        for gamma in lower_indices(alpha):
            weight = index_binomial(alpha, gamma)
            rest = sub_indices(alpha, gamma)
            shift = total_degree(gamma)
            for beta, right in b.coefficients.items():
                key = (beta, gamma)
                derived = derivatives.get(key)
                if derived is None:
                    source = right if target is None else right.truncate(target + shift)
                    derived = source.derivative(gamma)
                    derivatives[key] = derived
                if derived.is_zero():
                    continue
                term = poly_mul(left, derived, target)
                if weight != 1:
                    term = term.scale(weight)
                out = add_indices(rest, beta)
                combined[out] = combined[out] + term if out in combined else term
    return DiffOp._trusted(a.n, a.rank, target, combined)


def commutator(a: DiffOp, b: DiffOp, degree: Degree = None) -> DiffOp:
    return compose(a, b, degree) - compose(b, a, degree)


def ev_sharp(op: DiffOp) -> JetPoly:
    """The polynomial sum_alpha c_alpha(0) x^alpha representing psi -> [op psi](0)."""

    terms = {}
    origin = zero_index(op.n)
    for alpha, coefficient in op.coefficients.items():
        value = coefficient.terms.get(origin)
        if value is not None:
            terms[alpha] = value
    return JetPoly(op.n, Role.ENDO, op.rank, None, terms)


# ----------------------------------------------------------------------
# Powers and exponential series
# ----------------------------------------------------------------------

def _power_targets(op: DiffOp, count: int, final: Degree) -> List[Degree]:
    """Coefficient degrees for op^1..op^count so that op^count is exact to ``final``."""

    step = op.order
    if final is None:
        if op.degree is not None:
            final = op.degree - step * (count - 1)
            if final < 0:
                raise TruncationError(
                    f"coefficients exact to degree {op.degree} cannot determine power {count} at the origin",
                    required=step * (count - 1),
                    available=op.degree,
                )
        else:
            return [None] * count
    targets = [final + step * (count - j) for j in range(1, count + 1)]
    require_degree(op.degree, targets[0], f"operator coefficients for power {count}")
    return targets


def operator_power(op: DiffOp, mu: int, degree: Degree = None) -> DiffOp:
    """op^mu with coefficients exact to ``degree``; needs op exact to degree + ord*(mu - 1)."""

    if mu < 0:
        raise ValueError(f"operator power needs mu >= 0, got {mu}")
    if mu == 0:
        return DiffOp.identity(op.n, op.rank)
    return operator_powers(op, mu, degree)[mu].truncate(degree)


def operator_powers(op: DiffOp, count: int, degree: Degree = 0) -> List[DiffOp]:
    """[op^0, ..., op^count], each exact to at least ``degree``."""

    if count < 0:
        raise ValueError(f"operator powers need count >= 0, got {count}")
    powers = [DiffOp.identity(op.n, op.rank)]
    if count == 0:
        return powers
    targets = _power_targets(op, count, degree)
    current = op.truncate(targets[0])
    powers.append(current)
    for j in range(2, count + 1):
        current = compose(op, current, targets[j - 1])
        powers.append(current)
        logger.debug("operator power %d: order %d, coefficient degree %s", j, current.order, current.degree)
    return powers


def op_exponential_series(op: DiffOp, sign: int, order: int, degree: Degree = 0) -> ZSeries:
    """The truncated series e^{-sign*z*op}: entry r is (-sign)^r op^r / r!, exact to ``degree``."""

    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if order < 0:
        raise ValueError(f"series order must be >= 0, got {order}")
    powers = operator_powers(op, order, degree)
    return ZSeries(
        tuple(p.truncate(degree).scale(Fraction((-sign) ** r, math.factorial(r))) for r, p in enumerate(powers))
    )


def flat_laplace(p: JetPoly, times: int = 1) -> JetPoly:
    """Apply the flat Laplacian ``times`` times to a jet of any role; each application costs two degrees."""

    if times < 0:
        raise ValueError(f"flat Laplacian power must be >= 0, got {times}")
    n = p.n
    seconds = [tuple(2 * e for e in unit_index(n, i)) for i in range(n)]
    result = p
    for _ in range(times):
        if result.degree is not None and result.degree < 2:
            raise TruncationError(
                f"flat Laplacian of a jet exact to degree {result.degree}", required=2, available=result.degree
            )
        total = JetPoly.zero(n, result.role, result.rank, None if result.degree is None else result.degree - 2)
        for second in seconds:
            total = total - result.derivative(second)
        result = total
    return result
