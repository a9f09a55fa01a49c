"""Heat kernel coefficient jets and their independent cross-checks.

The difference operator D(z) = exp(-zL) exp(z Delta) of a generalized
Laplacian L determines the jets of all heat coefficients at the origin
through its value there.  This module computes D(z) by recursion, reads off
the jets of a_k, and provides the inversion formula for a_k(0) together
with the intertwining and link identities used to verify results.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .diffop import DiffOp, apply, compose, ev_sharp, flat_laplace, flat_laplacian, operator_powers
from .jet_algebra import (
    Degree,
    JetPoly,
    Role,
    TruncationError,
    ZSeries,
    format_value,
    poly_mul,
    radial_power,
    rational_binomial,
    require_degree,
)
from .report import CheckReport

logger = logging.getLogger(__name__)

STABILITY_EXTRA = 3


class OrderBoundError(RuntimeError):
    """Raised when the value of D_r has a nonzero homogeneous piece of degree s > r."""

    def __init__(self, r: int, s: int, piece: JetPoly) -> None:
        super().__init__(f"value of D_{r} has a nonzero piece of degree {s}: {piece}")
        self.r = r
        self.s = s
        self.piece = piece


@dataclass(frozen=True)
class HeatJets:
    """Jets a_0..a_K at the origin, each an endomorphism jet exact to ``degree``."""

    coefficients: Tuple[JetPoly, ...]
    degree: int
    n: int
    rank: int

    @property
    def max_k(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, k: int) -> JetPoly:
        return self.coefficients[k]

    def __iter__(self) -> Iterator[JetPoly]:
        return iter(self.coefficients)

    def __len__(self) -> int:
        return len(self.coefficients)

    def constant_terms(self) -> List[Any]:
        return [coefficient.constant_term() for coefficient in self.coefficients]

    def replace(self, k: int, jet: JetPoly) -> "HeatJets":
        coefficients = list(self.coefficients)
        coefficients[k] = jet.truncate(self.degree)
        return HeatJets(tuple(coefficients), self.degree, self.n, self.rank)


@dataclass(frozen=True)
class DifferenceOp:
    """Truncated series D_0 + z D_1 + ... + z^R D_R; every entry is exact to at least ``degree``."""

    terms: ZSeries
    provenance: str = "recursion"
    degree: Degree = 0

    @property
    def order(self) -> int:
        return self.terms.order

    def __getitem__(self, r: int) -> DiffOp:
        return self.terms[r]

    @property
    def n(self) -> int:
        return self.terms[0].n

    @property
    def rank(self) -> int:
        return self.terms[0].rank


@dataclass(frozen=True)
class EvSharpTable:
    """Homogeneous pieces (r, s) of the value at the origin of D_r, for s <= r <= order."""

    n: int
    rank: int
    order: int
    pieces: Mapping[Tuple[int, int], JetPoly] = field(default_factory=dict)
    provenance: str = "recursion"

    def piece(self, r: int, s: int) -> JetPoly:
        if r > self.order:
            raise TruncationError(f"table stops at order {self.order}, piece ({r}, {s}) requested",
                                  required=r, available=self.order)
        found = self.pieces.get((r, s))
        if found is None:
            return JetPoly.zero(self.n, Role.ENDO, self.rank)
        return found

    def value(self, r: int) -> JetPoly:
        total = JetPoly.zero(self.n, Role.ENDO, self.rank)
        for s in range(r + 1):
            total = total + self.piece(r, s)
        return total

    def mismatches(self, other: "EvSharpTable") -> List[Tuple[int, int]]:
        top = min(self.order, other.order)
        keys = {key for key in list(self.pieces) + list(other.pieces) if key[0] <= top}
        return sorted(key for key in keys if self.piece(*key).terms != other.piece(*key).terms)


@dataclass(frozen=True)
class HeatJetRequirements:
    """Input sizes needed to deliver a_0..a_K exact to degree D."""

    max_k: int
    max_degree: int
    level: str
    order: int
    operator_degree: int
    metric_degree: int
    lower_order_degree: int
    intertwining_depth: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ----------------------------------------------------------------------
# Difference operator
# ----------------------------------------------------------------------

def difference_operator(L: DiffOp, order: int, degree: int = 0) -> DifferenceOp:
    """Run the recursion r D_r = D_{r-1} Delta - L D_{r-1} up to ``order``.

    Entry r is computed with coefficients exact to degree + 2(order - r), so
    every entry is exact to at least ``degree``.  L must be exact to
    degree + 2(order - 1).
    """

    if order < 0:
        raise ValueError(f"difference operator order must be >= 0, got {order}")
    step = max(L.order, 2)
    if order >= 1:
        require_degree(L.degree, degree + step * (order - 1), "generalized Laplacian coefficients")
    flat = flat_laplacian(L.n, L.rank)
    terms = [DiffOp.identity(L.n, L.rank)]
    for r in range(1, order + 1):
        target = degree + step * (order - r)
        previous = terms[-1]
        right = compose(previous, flat, target)
        left = compose(L, previous, target)
        terms.append((right - left).scale(Fraction(1, r)))
        logger.debug("D_%d: order %d, coefficient degree %d", r, terms[-1].order, target)
    logger.info("difference operator built to order %d (n=%d, m=%d)", order, L.n, L.rank)
    return DifferenceOp(ZSeries(tuple(terms)), "recursion", degree)


def _table_from_values(values: Sequence[JetPoly], n: int, rank: int, provenance: str) -> EvSharpTable:
    pieces: Dict[Tuple[int, int], JetPoly] = {}
    for r, value in enumerate(values):
        for s in range(value.top_degree + 1):
            piece = value.homogeneous(s)
            if piece.is_zero():
                continue
            if s > r:
                raise OrderBoundError(r, s, piece)
            pieces[(r, s)] = piece
    return EvSharpTable(n, rank, len(values) - 1, pieces, provenance)


def ev_sharp_table(difference: DifferenceOp) -> EvSharpTable:
    """Split the value of each D_r into homogeneous pieces, enforcing that none exceeds degree r."""

    values = [ev_sharp(entry) for entry in difference.terms]
    return _table_from_values(values, difference.n, difference.rank, difference.provenance)


def ev_sharp_from_powers(L: DiffOp, order: int) -> EvSharpTable:
    """The same table computed from the values at the origin of L^0..L^order alone.

    Uses value(D_r) = (-1)^r sum_mu |x|^{2 mu} / mu! * value(L^{r - mu}) / (r - mu)!.
    """

    powers = operator_powers(L, order, 0)
    values = [ev_sharp(power) for power in powers]
    results = []
    for r in range(order + 1):
        total = JetPoly.zero(L.n, Role.ENDO, L.rank)
        for mu in range(r + 1):
            weight = Fraction((-1) ** r, math.factorial(mu) * math.factorial(r - mu))
            total = total + poly_mul(radial_power(L.n, mu), values[r - mu]).scale(weight)
        results.append(total)
    return _table_from_values(results, L.n, L.rank, "from_powers")


# ----------------------------------------------------------------------
# Heat jets
# ----------------------------------------------------------------------

def _assemble_heat_jets(table: EvSharpTable, degrees: Sequence[int]) -> List[JetPoly]:
    """Jets of a_0..a_{len(degrees)-1}, a_k exact to ``degrees[k]``.

    Inverts (2z)^N piecewise on the table (piece (r, s) moves to z^{r - s}
    with weight 2^{-s}) and then applies exp(z Delta) termwise.
    """

    n, rank = table.n, table.rank
    top = len(degrees) - 1
    # preimage j feeds a_k through Delta^{k - j}, which costs 2(k - j) degrees
    reaches = [max(degrees[k] + 2 * (k - j) for k in range(j, top + 1)) for j in range(top + 1)]
    order = max(j + reach for j, reach in enumerate(reaches))
    if table.order < order:
        raise TruncationError(f"table of order {table.order} cannot determine the requested heat jets",
                              required=order, available=table.order)

    preimage: List[JetPoly] = []
    for j, reach in enumerate(reaches):
        total = JetPoly.zero(n, Role.ENDO, rank, reach)
        for s in range(reach + 1):
            total = total + table.piece(j + s, s).scale(Fraction(1, 2**s))
        preimage.append(total)

    coefficients = []
    for k, degree in enumerate(degrees):
        total = JetPoly.zero(n, Role.ENDO, rank, degree)
        for t in range(k + 1):
            term = flat_laplace(preimage[k - t], t).truncate(degree)
            total = total + term.scale(Fraction(1, math.factorial(t)))
        coefficients.append(total)
    return coefficients


def heat_jets(L: DiffOp, max_k: int, max_degree: int, table: Optional[EvSharpTable] = None) -> HeatJets:
    """Jets of a_0..a_K exact to ``max_degree``."""

    if max_k < 0 or max_degree < 0:
        raise ValueError("max_k and max_degree must be non-negative")
    order = 2 * max_k + max_degree
    if table is None:
        table = ev_sharp_table(difference_operator(L, order))
    elif table.order < order:
        raise TruncationError(f"table of order {table.order} cannot determine a_{max_k} to degree {max_degree}",
                              required=order, available=table.order)
    coefficients = _assemble_heat_jets(table, [max_degree] * (max_k + 1))
    logger.info("heat jets computed for k <= %d to degree %d", max_k, max_degree)
    return HeatJets(tuple(coefficients), max_degree, L.n, L.rank)


def graded_heat_jets(L: DiffOp, top: int, table: Optional[EvSharpTable] = None) -> Tuple[JetPoly, ...]:
    """Jets of a_0..a_top with a_k exact to 2(top - k), all from one table of order 2 top.

    These are exactly the degrees intertwining up to mu = top reads.
    """

    if top < 0:
        raise ValueError(f"top index must be >= 0, got {top}")
    if table is None or table.order < 2 * top:
        table = ev_sharp_table(difference_operator(L, 2 * top))
    coefficients = _assemble_heat_jets(table, [2 * (top - k) for k in range(top + 1)])
    logger.debug("graded heat jets computed for k <= %d", top)
    return tuple(coefficients)


def splice_heat_jets(stored: HeatJets, graded: Sequence[JetPoly]) -> Tuple[JetPoly, ...]:
    """Stored a_0..a_K up to their degree, completed above it and beyond K by ``graded``."""

    if len(graded) <= stored.max_k:
        raise ValueError(f"graded jets stop at k={len(graded) - 1}, stored jets reach k={stored.max_k}")
    spliced = []
    for k, jet in enumerate(graded):
        if k > stored.max_k:
            spliced.append(jet)
            continue
        require_degree(jet.degree, stored.degree, f"graded jet of a_{k}")
        terms = {alpha: value for alpha, value in jet.terms.items() if sum(alpha) > stored.degree}
        terms.update(stored[k].terms)
        spliced.append(JetPoly(jet.n, Role.ENDO, jet.rank, jet.degree, terms))
    return tuple(spliced)


def intertwining_depth(max_k: int, max_degree: int, dimension: Optional[int] = None) -> int:
    """Largest mu intertwining needs to read every coefficient of a_0..a_K up to degree D.

    The x^alpha coefficient of a_k first enters at mu = k + (|alpha| + number of
    odd entries of alpha) / 2.  Without a dimension the bound K + D is used.
    """

    odd = max_degree if dimension is None else min(dimension, max_degree)
    return max_k + (max_degree + odd) // 2


def heat_jet_requirements(
    max_k: int, max_degree: int, level: str = "none", dimension: Optional[int] = None
) -> HeatJetRequirements:
    """Difference-operator order and input jet degrees needed for a computation.

    a_k to degree D needs D_r for r <= 2K + D, which needs L exact to
    2(2K + D - 1).  Verification can ask for more: the inversion formula with
    r = k + extra needs L exact to 2(k + r - 1), and the full intertwining
    check to depth M needs a table of order 2M.
    """

    if max_k < 0 or max_degree < 0:
        raise ValueError("max_k and max_degree must be non-negative")
    order = 2 * max_k + max_degree
    depth = intertwining_depth(max_k, max_degree, dimension)
    operator_degree = 2 * (order - 1) if order >= 1 else 0
    if level in ("fast", "full"):
        operator_degree = max(operator_degree, polterovich_degree(max_k, max_k))
    if level == "full":
        operator_degree = max(operator_degree, polterovich_degree(max_k, max_k + STABILITY_EXTRA))
        if depth >= 1:
            operator_degree = max(operator_degree, 2 * (2 * depth - 1))
    return HeatJetRequirements(
        max_k=max_k,
        max_degree=max_degree,
        level=level,
        order=order,
        operator_degree=operator_degree,
        metric_degree=max(operator_degree + 1, max_degree),
        lower_order_degree=operator_degree,
        intertwining_depth=depth,
    )


# ----------------------------------------------------------------------
# Inversion formula
# ----------------------------------------------------------------------

def polterovich_degree(k: int, r: int) -> int:
    """Coefficient degree of L needed to evaluate the inversion formula for (k, r)."""

    return max(0, 2 * (k + r - 1))


def power_value(L: DiffOp, mu: int, psi: JetPoly) -> JetPoly:
    """[L^mu psi](0) as a degree-0 jet; psi must be exact to degree 2 mu."""

    current = psi
    for i in range(1, mu + 1):
        current = apply(L, current, 2 * (mu - i))
    if mu == 0 and psi.role is Role.SCALAR:
        current = poly_mul(JetPoly.identity(L.n, L.rank), psi)
    return current.truncate(0)


def polterovich_ak(L: DiffOp, k: int, r: int, psi: JetPoly) -> Any:
    """The fiber value [a_k psi](0) from powers of L alone.

    Evaluates sum_{l=0}^{r} (-1/4)^l (r + n/2 choose r - l)
    [(-1)^{k+l} / (k+l)! L^{k+l}(|x|^{2l} psi / l!)](0); the result does not
    depend on r >= k.
    """

    if k < 0 or r < k:
        raise ValueError(f"inversion formula needs r >= k >= 0, got k={k}, r={r}")
    require_degree(psi.degree, 2 * (k + r), "test section")
    n = L.n
    half = Fraction(n, 2)
    total: Optional[JetPoly] = None
    for l in range(r + 1):
        weight = Fraction(-1, 4) ** l * rational_binomial(r + half, r - l)
        weight *= Fraction((-1) ** (k + l), math.factorial(k + l) * math.factorial(l))
        phi = poly_mul(radial_power(n, l), psi)
        term = power_value(L, k + l, phi).scale(weight)
        total = term if total is None else total + term
    return total.constant_term()


def polterovich_matrix(L: DiffOp, k: int, r: Optional[int] = None) -> Any:
    """a_k(0) as an m x m matrix, from the inversion formula applied to the identity section."""

    return polterovich_ak(L, k, k if r is None else r, JetPoly.identity(L.n, L.rank))


# ----------------------------------------------------------------------
# Checks
# ----------------------------------------------------------------------

def intertwine_check(
    L: DiffOp, a: Sequence[JetPoly], mu_max: int, psi: JetPoly, label: Optional[str] = None
) -> CheckReport:
    """Compare (-1)^mu/mu! [L^mu psi](0) with sum_nu (-1)^nu/nu! [Delta^nu (a_{mu-nu} psi)](0) for mu <= mu_max.

    ``a`` is a :class:`HeatJets` or any sequence of jets with a_k exact to 2(mu_max - k).
    """

    if mu_max > len(a) - 1:
        raise TruncationError(f"heat jets stop at k={len(a) - 1}, mu_max={mu_max} requested",
                              required=mu_max, available=len(a) - 1)
    for k in range(mu_max + 1):
        require_degree(a[k].degree, 2 * (mu_max - k), f"heat jet a_{k}")
    require_degree(psi.degree, 2 * mu_max, "test section")
    label = label or str(psi)
    values = [power_value(L, 0, psi)]
    current = psi
    for i in range(1, mu_max + 1):
        current = apply(L, current, 2 * (mu_max - i))
        values.append(current.truncate(0))
    for mu in range(mu_max + 1):
        lhs = values[mu].scale(Fraction((-1) ** mu, math.factorial(mu)))
        rhs: Optional[JetPoly] = None
        for nu in range(mu + 1):
            product = poly_mul(a[mu - nu], psi, 2 * nu)
            term = flat_laplace(product, nu).truncate(0).scale(Fraction((-1) ** nu, math.factorial(nu)))
            rhs = term if rhs is None else rhs + term
        if lhs.terms != rhs.terms:
            witness = (f"mu={mu}, psi={label}: lhs {format_value(lhs.constant_term())}"
                       f" != rhs {format_value(rhs.constant_term())}")
            return CheckReport("intertwining", False, mu + 1, witness)
    return CheckReport("intertwining", True, mu_max + 1)


def lemma_mi_rhs(n: int, k: int, l: int, psi: JetPoly) -> Any:
    """(-4)^k (-n/2 - l choose k) [(-1)^l / l! Delta^l psi](0)."""

    if psi.n != n:
        raise ValueError(f"section lives in dimension {psi.n}, expected {n}")
    weight = Fraction(-4) ** k * rational_binomial(Fraction(-n, 2) - l, k)
    weight *= Fraction((-1) ** l, math.factorial(l))
    return flat_laplace(psi, l).truncate(0).scale(weight).constant_term()


def lemma_mi_lhs(n: int, k: int, l: int, psi: JetPoly) -> Any:
    """[(-1)^{k+l} / (k+l)! Delta^{k+l} (|x|^{2k} psi / k!)](0), computed directly."""

    if psi.n != n:
        raise ValueError(f"section lives in dimension {psi.n}, expected {n}")
    phi = poly_mul(radial_power(n, k), psi)
    weight = Fraction((-1) ** (k + l), math.factorial(k + l) * math.factorial(k))
    return flat_laplace(phi, k + l).truncate(0).scale(weight).constant_term()


def excess_vanishing_check(L: DiffOp, psi: JetPoly, degree: int, label: Optional[str] = None) -> CheckReport:
    """[L^mu psi](0) = 0 for mu < degree, for psi harmonic and homogeneous of that degree."""

    label = label or str(psi)
    for mu in range(degree):
        value = power_value(L, mu, psi)
        if not value.is_zero():
            witness = f"mu={mu}, psi={label}: [L^mu psi](0) = {format_value(value.constant_term())}"
            return CheckReport("excess_vanishing", False, mu + 1, witness)
    return CheckReport("excess_vanishing", True, degree)


def link_check(L: DiffOp, a: HeatJets, order: int) -> CheckReport:
    """Compare value(exp(-zL)) with exp(z|x|^2) (2z)^N exp(-z Delta) a(z) piece by piece.

    Only the pieces (r, d) the heat jets determine are compared: r <= min(order, K)
    and 2r - D <= d <= 2r.
    """

    n, rank, degree = a.n, a.rank, a.degree
    top = min(order, a.max_k)
    powers = operator_powers(L, top, 0)

    # w_j = sum_t (-1)^t / t! Delta^t a_{j-t}, exact to degree D - 2j
    shifted: Dict[int, JetPoly] = {}
    for j in range(min(top, degree // 2) + 1):
        reach = degree - 2 * j
        total = JetPoly.zero(n, Role.ENDO, rank, reach)
        for t in range(j + 1):
            term = flat_laplace(a[j - t], t).truncate(reach)
            total = total + term.scale(Fraction((-1) ** t, math.factorial(t)))
        shifted[j] = total

    checked = 0
    for r in range(top + 1):
        lhs = ev_sharp(powers[r]).scale(Fraction((-1) ** r, math.factorial(r)))
        for d in range(max(0, 2 * r - degree), 2 * r + 1):
            rhs = JetPoly.zero(n, Role.ENDO, rank)
            for mu in range(d // 2 + 1):
                s = d - 2 * mu
                j = r - mu - s
                if j < 0:
                    continue
                piece = shifted[j].homogeneous(s).scale(Fraction(2**s, math.factorial(mu)))
                rhs = rhs + poly_mul(radial_power(n, mu), piece)
            checked += 1
            left = lhs.homogeneous(d)
            if left.terms != rhs.terms:
                witness = f"z^{r}, degree {d}: lhs {left} != rhs {rhs}"
                return CheckReport("link", False, checked, witness)
    return CheckReport("link", True, checked)
