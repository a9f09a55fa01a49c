"""Named verification suites.

Self-test suites exercise the flat-model identities with no input.
Operator suites check a computed set of heat jets against the operator
it came from.  Every suite returns a :class:`CheckReport` and stops at the
first counterexample.
"""

from __future__ import annotations

import itertools
import logging
import math
import random
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .diffop import (
    DiffOp,
    apply,
    commutator,
    euler_operator,
    ev_sharp,
    flat_laplacian,
    operator_power,
)
from .heatcoeff import (
    STABILITY_EXTRA,
    EvSharpTable,
    HeatJets,
    OrderBoundError,
    difference_operator,
    ev_sharp_from_powers,
    ev_sharp_table,
    excess_vanishing_check,
    graded_heat_jets,
    heat_jets,
    intertwine_check,
    intertwining_depth,
    lemma_mi_lhs,
    lemma_mi_rhs,
    link_check,
    polterovich_matrix,
    splice_heat_jets,
)
from .jet_algebra import (
    JetPoly,
    MultiIndex,
    Role,
    binomial_inversion_sum,
    falling_factorial,
    format_monomial,
    format_value,
    indices_up_to,
    number_scale,
    radial_power,
    sym_inner,
    unit_index,
)
from .oracles import exponential_series, mehler_series
from .report import CheckReport

logger = logging.getLogger(__name__)

DEFAULT_SEED = 1729
CLOSED_FORM_SHIFTS = (Fraction(1), Fraction(-3, 2))
VERIFY_LEVELS = ("none", "fast", "full")

Harmonic = Tuple[str, JetPoly, int]


# ----------------------------------------------------------------------
# Random inputs
# ----------------------------------------------------------------------

def random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-6, 6), rng.randint(1, 4))


def _random_value(rng: random.Random, role: Role, rank: int) -> Any:
    if role is Role.SCALAR:
        return random_rational(rng)
    if role is Role.VECTOR:
        return tuple(random_rational(rng) for _ in range(rank))
    return tuple(tuple(random_rational(rng) for _ in range(rank)) for _ in range(rank))


def random_polynomial(
    rng: random.Random,
    n: int,
    degree: int,
    role: Role = Role.SCALAR,
    rank: int = 1,
    density: float = 0.6,
) -> JetPoly:
    """A random exact polynomial of total degree at most ``degree``."""

    terms = {alpha: _random_value(rng, role, rank) for alpha in indices_up_to(n, degree) if rng.random() < density}
    return JetPoly(n, role, rank, None, terms)


def random_operator(rng: random.Random, n: int, order: int, coefficient_degree: int, rank: int = 1) -> DiffOp:
    coefficients = {
        alpha: random_polynomial(rng, n, coefficient_degree, Role.ENDO, rank, density=0.4)
        for alpha in indices_up_to(n, order)
        if rng.random() < 0.5
    }
    return DiffOp(n, rank, None, coefficients)


def harmonic_polynomials(n: int) -> List[Harmonic]:
    """Homogeneous harmonic polynomials (label, polynomial, degree) available in dimension n."""

    x = [JetPoly.variable(n, i) for i in range(n)]
    battery: List[Harmonic] = [("x1", x[0], 1)]
    if n >= 2:
        x1, x2 = x[0], x[1]
        battery += [
            ("x1*x2", x1 * x2, 2),
            ("x1^2 - x2^2", x1 * x1 - x2 * x2, 2),
            ("x1^3 - 3*x1*x2^2", x1 * x1 * x1 - (x1 * x2 * x2).scale(3), 3),
            ("3*x1^2*x2 - x2^3", (x1 * x1 * x2).scale(3) - x2 * x2 * x2, 3),
        ]
    if n >= 3:
        x1, x2, x3 = x[0], x[1], x[2]
        battery += [
            ("x1*x3", x1 * x3, 2),
            ("x1*x2*x3", x1 * x2 * x3, 3),
        ]
    laplacian = flat_laplacian(n)
    for label, polynomial, _ in battery:
        if not apply(laplacian, polynomial).is_zero():
            raise ValueError(f"{label} is not harmonic")
    return battery


# ----------------------------------------------------------------------
# Self-test suites
# ----------------------------------------------------------------------

def classical_formula_suite(max_r: int = 4, dims: Sequence[int] = (1, 2, 3, 4)) -> CheckReport:
    """[Delta^r |x|^{2r}](0) = 4^r r! [-n/2]_r."""

    checked = 0
    for n in dims:
        laplacian = flat_laplacian(n)
        for r in range(max_r + 1):
            value = apply(operator_power(laplacian, r), radial_power(n, r), 0).as_scalar().constant_term()
            expected = 4**r * math.factorial(r) * falling_factorial(Fraction(-n, 2), r)
            checked += 1
            if value != expected:
                return CheckReport("classical_formula", False, checked, f"n={n}, r={r}: {value} != {expected}")
    return CheckReport("classical_formula", True, checked)


def binomial_inversion_suite(max_r: int = 6, dims: Sequence[int] = (1, 2, 3, 4)) -> CheckReport:
    checked = 0
    for n in dims:
        for r in range(max_r + 1):
            for mu in range(r + 1):
                value = binomial_inversion_sum(n, r, mu)
                checked += 1
                if value != (1 if mu == 0 else 0):
                    return CheckReport("binomial_inversion", False, checked, f"n={n}, r={r}, mu={mu}: {value}")
    return CheckReport("binomial_inversion", True, checked)


def lemma_mi_suite(
    rng: random.Random, samples: int = 30, max_total: int = 4, dims: Sequence[int] = (1, 2, 3), degree: int = 6
) -> CheckReport:
    checked = 0
    for sample in range(samples):
        n = dims[sample % len(dims)]
        psi = random_polynomial(rng, n, degree)
        for k in range(max_total + 1):
            for l in range(max_total + 1 - k):
                lhs = lemma_mi_lhs(n, k, l, psi)
                rhs = lemma_mi_rhs(n, k, l, psi)
                checked += 1
                if lhs != rhs:
                    return CheckReport("lemma_mi", False, checked, f"n={n}, k={k}, l={l}, psi={psi}: {lhs} != {rhs}")
    return CheckReport("lemma_mi", True, checked)


def sl2_suite(rng: random.Random, samples: int = 4, dims: Sequence[int] = (1, 2, 3), degree: int = 6) -> CheckReport:
    """[Delta, |x|^2] = -4 (N + n/2) on random polynomials, and b^N commutes with N."""

    checked = 0
    for n in dims:
        bracket = commutator(flat_laplacian(n), DiffOp.multiplication(radial_power(n, 1)))
        euler = euler_operator(n)
        for _ in range(samples):
            psi = random_polynomial(rng, n, degree)
            left = apply(bracket, psi)
            right = (apply(euler, psi) + psi.as_endomorphism(1).scale(Fraction(n, 2))).scale(-4)
            checked += 1
            if left.terms != right.terms:
                return CheckReport("sl2_relation", False, checked, f"n={n}, psi={psi}")
            base = random_rational(rng)
            scaled = apply(euler, number_scale(psi, base))
            checked += 1
            if scaled.terms != number_scale(apply(euler, psi), base).terms:
                return CheckReport("sl2_relation", False, checked, f"n={n}, base={base}, psi={psi}")
    return CheckReport("sl2_relation", True, checked)


def green_identity_suite(
    rng: random.Random, samples: int = 4, dims: Sequence[int] = (1, 2, 3), degree: int = 5
) -> CheckReport:
    """Delta(psi phi) = (Delta psi) phi - 2 sum d psi d phi + psi Delta phi."""

    checked = 0
    for n in dims:
        laplacian = flat_laplacian(n)
        for _ in range(samples):
            psi = random_polynomial(rng, n, degree)
            phi = random_polynomial(rng, n, degree)
            lhs = apply(laplacian, psi * phi).as_scalar()
            cross = JetPoly.zero(n)
            for i in range(n):
                e = unit_index(n, i)
                cross = cross + psi.derivative(e) * phi.derivative(e)
            rhs = apply(laplacian, psi).as_scalar() * phi - cross.scale(2) + psi * apply(laplacian, phi).as_scalar()
            checked += 1
            if lhs.terms != rhs.terms:
                return CheckReport("green_identity", False, checked, f"n={n}, psi={psi}, phi={phi}")
    return CheckReport("green_identity", True, checked)


def derivative_profile(p: JetPoly, top: int) -> Dict[Tuple[int, ...], Fraction]:
    """Nonzero values (d_mu1 ... d_mur p)(0) over all words mu_1..mu_r with r <= top."""

    n = p.n
    profile: Dict[Tuple[int, ...], Fraction] = {}
    for r in range(top + 1):
        for word in itertools.product(range(n), repeat=r):
            gamma = tuple(word.count(i) for i in range(n))
            value = p.derivative(gamma).constant_term()
            if value != 0:
                profile[word] = value
    return profile


def _profile_inner(left: Dict[Tuple[int, ...], Fraction], right: Dict[Tuple[int, ...], Fraction]) -> Fraction:
    total = Fraction(0)
    for word, value in left.items():
        other = right.get(word)
        if other is not None:
            total += value * other / math.factorial(len(word))
    return total


def derivative_sum_inner(p: JetPoly, q: JetPoly, top: int) -> Fraction:
    """sum_r 1/r! sum over words mu_1..mu_r of (d_mu1..d_mur p)(0) (d_mu1..d_mur q)(0), for r <= top."""

    return _profile_inner(derivative_profile(p, top), derivative_profile(q, top))


def orthogonality_suite(dims: Sequence[int] = (1, 2, 3), max_degree: int = 4) -> CheckReport:
    """<x^alpha, x^beta> = alpha! delta_{alpha beta}, against the derivative-sum definition."""

    checked = 0
    for n in dims:
        monomials = {alpha: JetPoly.monomial(alpha) for alpha in indices_up_to(n, max_degree)}
        profiles = {alpha: derivative_profile(p, max_degree) for alpha, p in monomials.items()}
        for alpha, beta in itertools.product(monomials, repeat=2):
            inner = sym_inner(monomials[alpha], monomials[beta])
            reference = _profile_inner(profiles[alpha], profiles[beta])
            checked += 1
            if inner != reference:
                witness = f"<{format_monomial(alpha)}, {format_monomial(beta)}> = {inner}, expected {reference}"
                return CheckReport("monomial_orthogonality", False, checked, witness)
    return CheckReport("monomial_orthogonality", True, checked)


def ev_sharp_identity_suite(rng: random.Random, samples: int = 20) -> CheckReport:
    """<value(D), psi> = [D psi](0) for random operators and sections."""

    checked = 0
    for _ in range(samples):
        n = rng.randint(1, 3)
        rank = rng.choice((1, 2))
        op = random_operator(rng, n, rng.randint(0, 4), rng.randint(0, 4), rank)
        psi = random_polynomial(rng, n, 6, Role.VECTOR, rank)
        paired = sym_inner(ev_sharp(op), psi)
        direct = apply(op, psi, 0).constant_term()
        checked += 1
        if paired != direct:
            witness = f"n={n}, m={rank}: {format_value(paired)} != {format_value(direct)}"
            return CheckReport("ev_sharp_identity", False, checked, witness)
    return CheckReport("ev_sharp_identity", True, checked)


def closed_form_suite(max_k: int = 3, max_degree: int = 4, shifts: Sequence[Any] = CLOSED_FORM_SHIFTS) -> CheckReport:
    """Heat jets of Delta + c and of -d^2/dx^2 + x^2 on the line against their closed forms."""

    checked = 0
    for c in shifts:
        L = flat_laplacian(1) + DiffOp.multiplication(JetPoly.constant(1, c))
        heat = heat_jets(L, max_k, max_degree)
        for k, value in enumerate(exponential_series(c, max_k)):
            expected = {(0,): ((value,),)} if value else {}
            checked += 1
            if heat[k].terms != expected:
                witness = f"Delta + {c}: a_{k} = {heat[k]}, expected {value}"
                return CheckReport("closed_forms", False, checked, witness)
    oscillator = flat_laplacian(1) + DiffOp.multiplication(radial_power(1, 1))
    heat = heat_jets(oscillator, max_k, max_degree)
    for k, jet in enumerate(mehler_series(max_k, max_degree)):
        expected = {(d,): ((value,),) for d, value in jet.items()}
        checked += 1
        if heat[k].terms != expected:
            return CheckReport("closed_forms", False, checked, f"oscillator: a_{k} = {heat[k]}, expected {jet}")
    return CheckReport("closed_forms", True, checked)


def run_selftest(seed: int = DEFAULT_SEED) -> List[CheckReport]:
    rng = random.Random(seed)
    reports = [
        classical_formula_suite(),
        lemma_mi_suite(rng),
        binomial_inversion_suite(),
        sl2_suite(rng),
        green_identity_suite(rng),
        orthogonality_suite(),
        ev_sharp_identity_suite(rng),
        closed_form_suite(),
    ]
    for report in reports:
        logger.info("%s", report.summary_line())
    return reports


# ----------------------------------------------------------------------
# Operator suites
# ----------------------------------------------------------------------

def order_bound_suite(L: DiffOp, order: int) -> Tuple[CheckReport, Optional[EvSharpTable]]:
    """Build the table by recursion; the order bound holds iff construction succeeds."""

    try:
        table = ev_sharp_table(difference_operator(L, order))
    except OrderBoundError as exc:
        return CheckReport("order_bound", False, exc.r + 1, f"r={exc.r}, s={exc.s}: {exc.piece}"), None
    return CheckReport("order_bound", True, order + 1), table


def dual_path_suite(L: DiffOp, table: EvSharpTable) -> CheckReport:
    """Recursion table against the table computed from powers of L."""

    try:
        other = ev_sharp_from_powers(L, table.order)
    except OrderBoundError as exc:
        return CheckReport("dual_path", False, 0, f"powers path: r={exc.r}, s={exc.s}")
    mismatches = other.mismatches(table)
    checked = (table.order + 1) * (table.order + 2) // 2
    if mismatches:
        r, s = mismatches[0]
        witness = f"piece ({r}, {s}): recursion {table.piece(r, s)} != powers {other.piece(r, s)}"
        return CheckReport("dual_path", False, checked, witness, [str(key) for key in mismatches])
    return CheckReport("dual_path", True, checked)


def section_basis(n: int, rank: int, degree: int) -> List[Tuple[str, JetPoly]]:
    """Monomial sections x^alpha e_i with |alpha| <= degree."""

    basis = []
    for alpha in indices_up_to(n, degree):
        for i in range(rank):
            value = tuple(Fraction(int(i == j)) for j in range(rank))
            basis.append((f"{format_monomial(alpha)}*e{i + 1}", JetPoly.monomial(alpha, value, Role.VECTOR, rank)))
    return basis


def _intertwine_basis(L: DiffOp, jets: Sequence[JetPoly], mu_max: int) -> CheckReport:
    basis = section_basis(L.n, L.rank, 2 * mu_max)
    for index, (label, psi) in enumerate(basis):
        report = intertwine_check(L, jets, mu_max, psi, label)
        if not report.passed:
            return CheckReport("intertwining", False, index + 1, report.witness)
    return CheckReport("intertwining", True, len(basis))


def intertwining_suite(L: DiffOp, heat: HeatJets, mu_max: Optional[int] = None) -> CheckReport:
    """Intertwining on monomial sections, by default up to mu = min(K, D // 2), where the stored jets suffice."""

    if mu_max is None:
        mu_max = min(heat.max_k, heat.degree // 2)
    return _intertwine_basis(L, heat, mu_max)


def complete_intertwining_suite(L: DiffOp, heat: HeatJets, table: Optional[EvSharpTable] = None) -> CheckReport:
    """Intertwining up to the depth at which every stored coefficient of a_0..a_K enters.

    Coefficients above the stored degree and beyond K are recomputed from L;
    the stored ones are used as given, so changing any of them fails some mu.
    """

    depth = intertwining_depth(heat.max_k, heat.degree, heat.n)
    jets = splice_heat_jets(heat, graded_heat_jets(L, depth, table))
    logger.debug("intertwining to depth %d on stored jets of degree %d", depth, heat.degree)
    return _intertwine_basis(L, jets, depth)


def polterovich_consistency_suite(L: DiffOp, heat: HeatJets) -> CheckReport:
    """Constant terms of the heat jets against the inversion formula with r = k."""

    for k in range(heat.max_k + 1):
        expected = polterovich_matrix(L, k)
        value = heat[k].constant_term()
        if value != expected:
            witness = f"a_{k}(0): heat jets {format_value(value)} != inversion formula {format_value(expected)}"
            return CheckReport("inversion_formula", False, k + 1, witness)
    return CheckReport("inversion_formula", True, heat.max_k + 1)


def r_stability_suite(L: DiffOp, max_k: int, extra: int = STABILITY_EXTRA) -> CheckReport:
    checked = 0
    for k in range(max_k + 1):
        reference = polterovich_matrix(L, k, k)
        for r in range(k + 1, k + extra + 1):
            value = polterovich_matrix(L, k, r)
            checked += 1
            if value != reference:
                witness = f"k={k}, r={r}: {format_value(value)} != {format_value(reference)} at r={k}"
                return CheckReport("r_stability", False, checked, witness)
    return CheckReport("r_stability", True, checked)


def link_suite(L: DiffOp, heat: HeatJets, order: Optional[int] = None) -> CheckReport:
    return link_check(L, heat, heat.max_k if order is None else order)


def excess_vanishing_suite(L: DiffOp) -> CheckReport:
    checked = 0
    for label, polynomial, degree in harmonic_polynomials(L.n):
        report = excess_vanishing_check(L, polynomial.as_endomorphism(L.rank), degree, label)
        checked += report.checked
        if not report.passed:
            return CheckReport("excess_vanishing", False, checked, report.witness)
    return CheckReport("excess_vanishing", True, checked)


def run_verification(
    L: DiffOp,
    heat: HeatJets,
    level: str = "fast",
    table: Optional[EvSharpTable] = None,
    complete_intertwining: Optional[bool] = None,
) -> List[CheckReport]:
    """Run the suites of a verification level (none, fast or full).

    Intertwining reads every stored coefficient when ``complete_intertwining``
    is set, which is the default at the full level; otherwise it stops at
    mu = min(K, D // 2).
    """

    if level not in VERIFY_LEVELS:
        raise ValueError(f"unknown verification level {level!r}; expected one of {VERIFY_LEVELS}")
    if level == "none":
        return []
    order = 2 * heat.max_k + heat.degree
    if table is None or table.order < order:
        bound, table = order_bound_suite(L, order)
    else:
        bound = CheckReport("order_bound", True, table.order + 1)
    reports = [bound]
    if table is None:
        return reports
    if complete_intertwining is None:
        complete_intertwining = level == "full"
    if complete_intertwining:
        reports.append(complete_intertwining_suite(L, heat, table))
    else:
        reports.append(intertwining_suite(L, heat))
    reports.append(polterovich_consistency_suite(L, heat))
    if level == "full":
        reports.append(dual_path_suite(L, table))
        reports.append(r_stability_suite(L, heat.max_k))
        reports.append(link_suite(L, heat))
        reports.append(excess_vanishing_suite(L))
    for report in reports:
        logger.info("%s", report.summary_line())
    return reports


# ----------------------------------------------------------------------
# Falsifiability
# ----------------------------------------------------------------------

def corrupt_heat_jets(heat: HeatJets, k: int, alpha: MultiIndex, delta: Any = 1) -> HeatJets:
    """Copy of ``heat`` with ``delta`` added to entry (1, 1) of the x^alpha coefficient of a_k."""

    if sum(alpha) > heat.degree:
        raise ValueError(f"monomial {format_monomial(alpha)} lies above the jet degree {heat.degree}")
    jet = heat[k]
    matrix = [list(row) for row in jet.coefficient(alpha)]
    matrix[0][0] += Fraction(delta)
    terms: Dict[MultiIndex, Any] = dict(jet.terms)
    terms[tuple(alpha)] = matrix
    return heat.replace(k, JetPoly(jet.n, Role.ENDO, jet.rank, jet.degree, terms))
