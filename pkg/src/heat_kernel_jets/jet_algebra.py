"""Exact truncated polynomial arithmetic for jets at the origin.

A :class:`JetPoly` is a polynomial in ``n`` variables whose coefficients are
exact rationals, fiber vectors or fiber endomorphisms.  It carries the degree
up to which it is known exactly; ``None`` marks a polynomial that is exact in
every degree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Any, Callable, Dict, Generic, Iterator, List, Mapping, Optional, Tuple, TypeVar

logger = logging.getLogger(__name__)

Scalar = Fraction
MultiIndex = Tuple[int, ...]
Degree = Optional[int]

T = TypeVar("T")


class JetAlgebraError(ValueError):
    """Raised when jets of incompatible dimension, role or rank are combined."""


class TruncationError(JetAlgebraError):
    """Raised when a requested jet degree exceeds what the inputs determine exactly."""

    def __init__(self, message: str, *, required: Optional[int] = None, available: Degree = None) -> None:
        super().__init__(message)
        self.required = required
        self.available = available


# ----------------------------------------------------------------------
# Truncation degrees
# ----------------------------------------------------------------------

def meet(*degrees: Degree) -> Degree:
    """Return the smallest truncation degree, treating ``None`` as unbounded."""

    bounded = [degree for degree in degrees if degree is not None]
    return min(bounded) if bounded else None


def covers(available: Degree, required: Degree) -> bool:
    if available is None:
        return True
    if required is None:
        return False
    return available >= required


def require_degree(available: Degree, required: Degree, what: str) -> None:
    """Raise :class:`TruncationError` unless ``available`` covers ``required``."""

    if not covers(available, required):
        wanted = "every degree" if required is None else f"degree {required}"
        raise TruncationError(
            f"{what} is exact only to degree {available}, but {wanted} is required",
            required=required,
            available=available,
        )


# ----------------------------------------------------------------------
# Multi-indices
# ----------------------------------------------------------------------

def total_degree(alpha: MultiIndex) -> int:
    return sum(alpha)


def index_factorial(alpha: MultiIndex) -> int:
    """Return alpha! = alpha_1! * ... * alpha_n!."""

    return math.prod(math.factorial(a) for a in alpha)


def index_binomial(alpha: MultiIndex, gamma: MultiIndex) -> int:
    return math.prod(math.comb(a, g) for a, g in zip(alpha, gamma))


def zero_index(n: int) -> MultiIndex:
    return (0,) * n


def unit_index(n: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(n))


def add_indices(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub_indices(alpha: MultiIndex, beta: MultiIndex) -> Optional[MultiIndex]:
    """Return alpha - beta, or ``None`` when some entry would be negative."""

    diff = tuple(a - b for a, b in zip(alpha, beta))
    if any(d < 0 for d in diff):
        return None
    return diff


def lower_indices(alpha: MultiIndex) -> Iterator[MultiIndex]:
    """Iterate over all gamma <= alpha componentwise."""

    return product(*(range(a + 1) for a in alpha))


def graded_key(alpha: MultiIndex) -> Tuple[int, Tuple[int, ...]]:
    """Sort key for graded lexicographic order (x1 > x2 > ... within a degree)."""

    return (sum(alpha), tuple(-a for a in alpha))


@lru_cache(maxsize=None)
def multi_indices(n: int, degree: int) -> Tuple[MultiIndex, ...]:
    """All multi-indices of length ``n`` and total degree ``degree``, lexicographically descending."""

    if degree < 0:
        return ()
    if n == 1:
        return ((degree,),)
    indices: List[MultiIndex] = []
    for first in range(degree, -1, -1):
        for rest in multi_indices(n - 1, degree - first):
            indices.append((first,) + rest)
    return tuple(indices)


def indices_up_to(n: int, degree: int) -> List[MultiIndex]:
    """All multi-indices with total degree at most ``degree`` in graded order."""

    return [alpha for d in range(degree + 1) for alpha in multi_indices(n, d)]


# ----------------------------------------------------------------------
# Coefficient roles
# ----------------------------------------------------------------------

class Role(str, Enum):
    """What a jet coefficient is: a number, a fiber vector or a fiber endomorphism."""

    SCALAR = "scalar"
    VECTOR = "vector"
    ENDO = "endo"


def identity_matrix(rank: int) -> Tuple[Tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(int(i == j)) for j in range(rank)) for i in range(rank))


def zero_value(role: Role, rank: int) -> Any:
    if role is Role.SCALAR:
        return Fraction(0)
    if role is Role.VECTOR:
        return (Fraction(0),) * rank
    return tuple((Fraction(0),) * rank for _ in range(rank))


def coerce_value(role: Role, rank: int, value: Any) -> Any:
    """Convert ints, strings or nested sequences into the canonical exact value of ``role``."""

    if role is Role.SCALAR:
        return Fraction(value)
    if role is Role.VECTOR:
        entries = tuple(Fraction(v) for v in value)
        if len(entries) != rank:
            raise JetAlgebraError(f"expected a fiber vector of rank {rank}, got {len(entries)} entries")
        return entries
    if isinstance(value, (int, str, Fraction)):
        scalar = Fraction(value)
        return tuple(tuple(scalar if i == j else Fraction(0) for j in range(rank)) for i in range(rank))
    rows = tuple(tuple(Fraction(v) for v in row) for row in value)
    if len(rows) != rank or any(len(row) != rank for row in rows):
        raise JetAlgebraError(f"expected a {rank}x{rank} endomorphism")
    return rows


def is_zero_value(role: Role, value: Any) -> bool:
    if role is Role.SCALAR:
        return value == 0
    if role is Role.VECTOR:
        return all(v == 0 for v in value)
    return all(v == 0 for row in value for v in row)


def _adder(role: Role) -> Callable[[Any, Any], Any]:
    if role is Role.SCALAR:
        return lambda a, b: a + b
    if role is Role.VECTOR:
        return lambda a, b: tuple(x + y for x, y in zip(a, b))
    return lambda a, b: tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale_value(role: Role, value: Any, factor: Fraction) -> Any:
    if role is Role.SCALAR:
        return value * factor
    if role is Role.VECTOR:
        return tuple(v * factor for v in value)
    return tuple(tuple(v * factor for v in row) for row in value)


def _matmul(a: Any, b: Any) -> Any:
    columns = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in columns) for row in a)


def _matvec(a: Any, v: Any) -> Any:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def product_role(left: Role, right: Role) -> Role:
    """Role of a product; only scalar*any, endo*vector and endo*endo are defined."""

    if left is Role.SCALAR:
        return right
    if right is Role.SCALAR:
        return left
    if left is Role.ENDO:
        return right
    raise JetAlgebraError(f"product of {left.value} and {right.value} coefficients is undefined")


def _multiplier(left: Role, right: Role) -> Callable[[Any, Any], Any]:
    product_role(left, right)
    if left is Role.SCALAR and right is Role.SCALAR:
        return lambda a, b: a * b
    if left is Role.SCALAR:
        return lambda a, b: scale_value(right, b, a)
    if right is Role.SCALAR:
        return lambda a, b: scale_value(left, a, b)
    if right is Role.VECTOR:
        return _matvec
    return _matmul


def multiply_values(left: Role, a: Any, right: Role, b: Any) -> Any:
    return _multiplier(left, right)(a, b)


def format_value(value: Any) -> str:
    if isinstance(value, tuple):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    return str(value)


def format_monomial(alpha: MultiIndex) -> str:
    factors = []
    for i, a in enumerate(alpha):
        if a == 1:
            factors.append(f"x{i + 1}")
        elif a > 1:
            factors.append(f"x{i + 1}^{a}")
    return "*".join(factors) if factors else "1"


# ----------------------------------------------------------------------
# Jets
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class JetPoly:
    """Truncated polynomial in ``n`` variables with tagged coefficients.

    ``terms`` maps multi-indices to coefficients; absent entries are zero and no
    stored multi-index exceeds ``degree``.  Instances are immutable.
    """

    n: int
    role: Role = Role.SCALAR
    rank: int = 1
    degree: Degree = None
    terms: Mapping[MultiIndex, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "role", Role(self.role))
        except ValueError as exc:
            raise JetAlgebraError(f"unknown coefficient role {self.role!r}") from exc
        if self.n < 1:
            raise JetAlgebraError("jets need at least one variable")
        if self.role is Role.SCALAR and self.rank != 1:
            raise JetAlgebraError("scalar jets have rank 1")
        if self.degree is not None and self.degree < 0:
            raise JetAlgebraError(f"negative truncation degree {self.degree}")
        cleaned: Dict[MultiIndex, Any] = {}
        for alpha, value in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise JetAlgebraError(f"invalid multi-index {alpha} for dimension {self.n}")
            if self.degree is not None and sum(alpha) > self.degree:
                continue
            value = coerce_value(self.role, self.rank, value)
            if not is_zero_value(self.role, value):
                cleaned[alpha] = value
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def _trusted(cls, n: int, role: Role, rank: int, degree: Degree, terms: Dict[MultiIndex, Any]) -> "JetPoly":
        # Callers guarantee canonical values, no zeros and no entries above degree.
        poly = object.__new__(cls)
        object.__setattr__(poly, "n", n)
        object.__setattr__(poly, "role", role)
        object.__setattr__(poly, "rank", rank)
        object.__setattr__(poly, "degree", degree)
        object.__setattr__(poly, "terms", terms)
        return poly

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, n: int, role: Role = Role.SCALAR, rank: int = 1, degree: Degree = None) -> "JetPoly":
        return cls._trusted(n, Role(role), rank, degree, {})

    @classmethod
    def constant(
        cls, n: int, value: Any = 1, role: Role = Role.SCALAR, rank: int = 1, degree: Degree = None
    ) -> "JetPoly":
        return cls(n, role, rank, degree, {zero_index(n): value})

    @classmethod
    def monomial(
        cls, alpha: MultiIndex, value: Any = 1, role: Role = Role.SCALAR, rank: int = 1, degree: Degree = None
    ) -> "JetPoly":
        return cls(len(alpha), role, rank, degree, {tuple(alpha): value})

    @classmethod
    def variable(cls, n: int, i: int, degree: Degree = None) -> "JetPoly":
        """The coordinate function x_{i+1}."""

        return cls.monomial(unit_index(n, i), 1, degree=degree)

    @classmethod
    def identity(cls, n: int, rank: int, degree: Degree = None) -> "JetPoly":
        return cls._trusted(n, Role.ENDO, rank, degree, {zero_index(n): identity_matrix(rank)})

    # -- inspection -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def top_degree(self) -> int:
        """Largest total degree of a stored term, -1 for the zero jet."""

        return max((sum(alpha) for alpha in self.terms), default=-1)

    def coefficient(self, alpha: MultiIndex) -> Any:
        value = self.terms.get(tuple(alpha))
        return zero_value(self.role, self.rank) if value is None else value

    def constant_term(self) -> Any:
        return self.coefficient(zero_index(self.n))

    def sorted_terms(self) -> List[Tuple[MultiIndex, Any]]:
        return sorted(self.terms.items(), key=lambda item: graded_key(item[0]))

    def equal_to_degree(self, other: "JetPoly", degree: int) -> bool:
        return self.truncate(degree).terms == other.truncate(degree).terms

    # -- arithmetic -----------------------------------------------------
    def _check_same_shape(self, other: "JetPoly") -> None:
        if self.n != other.n:
            raise JetAlgebraError(f"dimension mismatch: {self.n} != {other.n}")
        if self.role is not other.role or self.rank != other.rank:
            raise JetAlgebraError(
                f"cannot add {self.role.value}[{self.rank}] and {other.role.value}[{other.rank}] jets"
            )

    def __add__(self, other: "JetPoly") -> "JetPoly":
        if not isinstance(other, JetPoly):
            return NotImplemented
        self._check_same_shape(other)
        degree = meet(self.degree, other.degree)
        add = _adder(self.role)
        terms: Dict[MultiIndex, Any] = {}
        for source in (self.terms, other.terms):
            for alpha, value in source.items():
                if degree is not None and sum(alpha) > degree:
                    continue
                terms[alpha] = add(terms[alpha], value) if alpha in terms else value
        return JetPoly._trusted(self.n, self.role, self.rank, degree, _prune(self.role, terms))

    def __neg__(self) -> "JetPoly":
        return self.scale(-1)

    def __sub__(self, other: "JetPoly") -> "JetPoly":
        if not isinstance(other, JetPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: Any) -> "JetPoly":
        if isinstance(other, JetPoly):
            return poly_mul(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other: Any) -> "JetPoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, factor: Any) -> "JetPoly":
        factor = Fraction(factor)
        if factor == 0:
            return JetPoly.zero(self.n, self.role, self.rank, self.degree)
        terms = {alpha: scale_value(self.role, value, factor) for alpha, value in self.terms.items()}
        return JetPoly._trusted(self.n, self.role, self.rank, self.degree, terms)

    def truncate(self, degree: Degree) -> "JetPoly":
        """Forget everything above ``degree`` (never raises the known degree)."""

        new_degree = meet(self.degree, degree)
        if new_degree == self.degree:
            return self
        terms = {alpha: value for alpha, value in self.terms.items() if sum(alpha) <= new_degree}
        return JetPoly._trusted(self.n, self.role, self.rank, new_degree, terms)

    def homogeneous(self, s: int) -> "JetPoly":
        """The exact homogeneous piece of degree ``s``."""

        require_degree(self.degree, s, "jet")
        terms = {alpha: value for alpha, value in self.terms.items() if sum(alpha) == s}
        return JetPoly._trusted(self.n, self.role, self.rank, None, terms)

    def derivative(self, gamma: MultiIndex) -> "JetPoly":
        """The partial derivative d^gamma; the known degree drops by |gamma|."""

        order = sum(gamma)
        if order == 0:
            return self
        degree = None
        if self.degree is not None:
            degree = self.degree - order
            if degree < 0:
                raise TruncationError(
                    f"derivative of order {order} of a jet exact to degree {self.degree}",
                    required=order,
                    available=self.degree,
                )
        terms: Dict[MultiIndex, Any] = {}
        for alpha, value in self.terms.items():
            rest = sub_indices(alpha, gamma)
            if rest is None:
                continue
            weight = math.prod(math.perm(a, g) for a, g in zip(alpha, gamma))
            terms[rest] = scale_value(self.role, value, Fraction(weight))
        return JetPoly._trusted(self.n, self.role, self.rank, degree, terms)

    def times_variable(self, i: int) -> "JetPoly":
        """Multiply by x_{i+1}; the known degree grows by one."""

        shift = unit_index(self.n, i)
        degree = None if self.degree is None else self.degree + 1
        terms = {add_indices(alpha, shift): value for alpha, value in self.terms.items()}
        return JetPoly._trusted(self.n, self.role, self.rank, degree, terms)

    def as_endomorphism(self, rank: int) -> "JetPoly":
        """View a scalar jet as scalar multiples of the identity of the given rank."""

        if self.role is Role.ENDO:
            if self.rank != rank:
                raise JetAlgebraError(f"rank mismatch: {self.rank} != {rank}")
            return self
        if self.role is not Role.SCALAR:
            raise JetAlgebraError("only scalar jets can be promoted to endomorphisms")
        ident = JetPoly.identity(self.n, rank)
        return poly_mul(self, ident)

    def as_scalar(self) -> "JetPoly":
        """Unwrap a rank-one vector or endomorphism jet into a scalar jet."""

        if self.role is Role.SCALAR:
            return self
        if self.rank != 1:
            raise JetAlgebraError(f"cannot view a rank {self.rank} {self.role.value} jet as a scalar")
        if self.role is Role.VECTOR:
            terms = {alpha: value[0] for alpha, value in self.terms.items()}
        else:
            terms = {alpha: value[0][0] for alpha, value in self.terms.items()}
        return JetPoly._trusted(self.n, Role.SCALAR, 1, self.degree, terms)

    def __str__(self) -> str:
        parts = [
            format_value(value) if sum(alpha) == 0 else f"{format_value(value)}*{format_monomial(alpha)}"
            for alpha, value in self.sorted_terms()
        ]
        text = " + ".join(parts) if parts else "0"
        if self.degree is not None:
            text += f" + O(|x|^{self.degree + 1})"
        return text


def _prune(role: Role, terms: Dict[MultiIndex, Any]) -> Dict[MultiIndex, Any]:
    return {alpha: value for alpha, value in terms.items() if not is_zero_value(role, value)}


def poly_mul(p: JetPoly, q: JetPoly, degree: Degree = None) -> JetPoly:
    """Exact product of two jets, discarding every term above the common degree."""

    if p.n != q.n:
        raise JetAlgebraError(f"dimension mismatch: {p.n} != {q.n}")
    role = product_role(p.role, q.role)
    if p.role is not Role.SCALAR and q.role is not Role.SCALAR and p.rank != q.rank:
        raise JetAlgebraError(f"rank mismatch: {p.rank} != {q.rank}")
    rank = q.rank if p.role is Role.SCALAR else p.rank
    limit = meet(p.degree, q.degree, degree)
    multiply = _multiplier(p.role, q.role)
    add = _adder(role)

    by_degree: Dict[int, List[Tuple[MultiIndex, Any]]] = {}
    for beta, value in q.terms.items():
        by_degree.setdefault(sum(beta), []).append((beta, value))

    acc: Dict[MultiIndex, Any] = {}
    for alpha, left in p.terms.items():
        room = None if limit is None else limit - sum(alpha)
        if room is not None and room < 0:
            continue
        for d, bucket in by_degree.items():
            if room is not None and d > room:
                continue
            for beta, right in bucket:
                key = tuple(a + b for a, b in zip(alpha, beta))
                value = multiply(left, right)
                acc[key] = add(acc[key], value) if key in acc else value
    return JetPoly._trusted(p.n, role, rank, limit, _prune(role, acc))


def radial_power(n: int, l: int, degree: Degree = None) -> JetPoly:
    """The polynomial |x|^{2l} = (x_1^2 + ... + x_n^2)^l, truncated at ``degree``."""

    if l < 0:
        raise ValueError(f"radial power needs l >= 0, got {l}")
    if degree is not None and 2 * l > degree:
        return JetPoly.zero(n, degree=degree)
    terms = {}
    for beta in multi_indices(n, l):
        weight = math.factorial(l) // index_factorial(beta)
        terms[tuple(2 * b for b in beta)] = Fraction(weight)
    return JetPoly._trusted(n, Role.SCALAR, 1, degree, terms)


def number_scale(p: JetPoly, base: Any) -> JetPoly:
    """Apply base^N: multiply the homogeneous piece of degree s by base**s."""

    base = Fraction(base)
    terms = {alpha: scale_value(p.role, value, base ** sum(alpha)) for alpha, value in p.terms.items()}
    return JetPoly._trusted(p.n, p.role, p.rank, p.degree, _prune(p.role, terms))


def sym_inner(p: JetPoly, q: JetPoly) -> Any:
    """The Sym V* scalar product sum_alpha alpha! * p_alpha * q_alpha.

    ``p`` supplies the left factor of every coefficient product, so an
    endomorphism jet paired with a section jet yields a fiber vector.
    """

    if p.n != q.n:
        raise JetAlgebraError(f"dimension mismatch: {p.n} != {q.n}")
    role = product_role(p.role, q.role)
    rank = q.rank if p.role is Role.SCALAR else p.rank
    if p.degree is not None and q.top_degree > p.degree:
        raise TruncationError("left jet is too short to pair with the right jet", required=q.top_degree,
                              available=p.degree)
    if q.degree is not None and p.top_degree > q.degree:
        raise TruncationError("right jet is too short to pair with the left jet", required=p.top_degree,
                              available=q.degree)
    multiply = _multiplier(p.role, q.role)
    add = _adder(role)
    total = zero_value(role, rank)
    for alpha, left in p.terms.items():
        right = q.terms.get(alpha)
        if right is None:
            continue
        weight = Fraction(index_factorial(alpha))
        total = add(total, scale_value(role, multiply(left, right), weight))
    return total


def power_series(u: JetPoly, exponent: Any, degree: Degree = None) -> JetPoly:
    """Binomial series (1 + u)^exponent for a scalar jet ``u`` vanishing at the origin."""

    if u.role is not Role.SCALAR:
        raise JetAlgebraError("power series are defined for scalar jets only")
    if u.constant_term() != 0:
        raise JetAlgebraError("power series needs u(0) = 0")
    limit = meet(u.degree, degree)
    if limit is None:
        if u.is_zero():
            return JetPoly.constant(u.n, 1)
        raise TruncationError("an infinite power series needs a truncation degree")
    exponent = Fraction(exponent)
    result = JetPoly.constant(u.n, 1, degree=limit)
    power = result
    for k in range(1, limit + 1):
        power = poly_mul(power, u, limit)
        if power.is_zero():
            break
        result = result + power.scale(rational_binomial(exponent, k))
    return result


# ----------------------------------------------------------------------
# Rational combinatorics
# ----------------------------------------------------------------------

def falling_factorial(x: Any, r: int) -> Fraction:
    """The factorial polynomial [x]_r = x (x - 1) ... (x - r + 1)."""

    if r < 0:
        raise ValueError(f"factorial polynomial needs r >= 0, got {r}")
    x = Fraction(x)
    result = Fraction(1)
    for i in range(r):
        result *= x - i
    return result


def rational_binomial(x: Any, r: int) -> Fraction:
    """Binomial coefficient (x choose r) = [x]_r / r! for rational ``x``."""

    if r < 0:
        raise ValueError(f"binomial coefficient needs r >= 0, got {r}")
    return falling_factorial(x, r) / math.factorial(r)


def binomial_inversion_sum(n: int, r: int, mu: int) -> Fraction:
    """sum_l (r + n/2 choose r - l) (-n/2 - mu choose l); equals 1 for mu = 0 and 0 otherwise."""

    if not r >= mu >= 0:
        raise ValueError(f"binomial inversion needs r >= mu >= 0, got r={r}, mu={mu}")
    half = Fraction(n, 2)
    return sum(
        (rational_binomial(r + half, r - l) * rational_binomial(-half - mu, l) for l in range(r + 1)),
        Fraction(0),
    )


# ----------------------------------------------------------------------
# Formal series in z
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ZSeries(Generic[T]):
    """A formal power series in z known through z**order."""

    coefficients: Tuple[T, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, r: int) -> T:
        return self.coefficients[r]

    def __iter__(self) -> Iterator[T]:
        return iter(self.coefficients)

    def __len__(self) -> int:
        return len(self.coefficients)
