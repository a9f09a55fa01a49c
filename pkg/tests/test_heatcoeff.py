import math
import random
from fractions import Fraction

import pytest

from conftest import CASES, make_operator
from heat_kernel_jets.diffop import DiffOp, flat_laplacian, partial_operator
from heat_kernel_jets.heatcoeff import (
    DifferenceOp,
    OrderBoundError,
    difference_operator,
    ev_sharp_from_powers,
    ev_sharp_table,
    excess_vanishing_check,
    graded_heat_jets,
    heat_jet_requirements,
    heat_jets,
    intertwine_check,
    intertwining_depth,
    lemma_mi_lhs,
    lemma_mi_rhs,
    link_check,
    polterovich_ak,
    polterovich_matrix,
    splice_heat_jets,
)
from heat_kernel_jets.jet_algebra import JetPoly, Role, TruncationError, ZSeries, indices_up_to, radial_power
from heat_kernel_jets.oracles import exponential_series, mehler_diagonal_series, mehler_series
from heat_kernel_jets.verification import (
    complete_intertwining_suite,
    corrupt_heat_jets,
    dual_path_suite,
    excess_vanishing_suite,
    intertwining_suite,
    lemma_mi_suite,
    order_bound_suite,
    polterovich_consistency_suite,
    r_stability_suite,
)


def shifted_laplacian(c, degree: int = 18) -> DiffOp:
    return make_operator(1, degree, potential=JetPoly.constant(1, c))


def matrix(value) -> tuple:
    return ((Fraction(value),),)


# ----------------------------------------------------------------------
# Difference operator
# ----------------------------------------------------------------------

def test_flat_difference_operator_vanishes():
    difference = difference_operator(make_operator(2, 6), 4)
    assert difference.order == 4
    assert difference[0] == DiffOp.identity(2)
    for r in range(1, 5):
        assert difference[r].is_zero()


@pytest.mark.parametrize("c", [Fraction(1), Fraction(-3, 2)])
def test_difference_operator_of_shifted_laplacian(c):
    table = ev_sharp_table(difference_operator(shifted_laplacian(c, 6), 4))
    for r in range(5):
        assert table.value(r).terms == ({(0,): matrix((-c) ** r / math.factorial(r))} if (-c) ** r else {})
    assert table.piece(1, 0).terms == {(0,): matrix(-c)}


def test_difference_operator_first_term_with_drift():
    difference = difference_operator(CASES["drift_n1"].build(6), 4)
    first = difference[1]
    assert first.coefficient((1,)).as_scalar().terms == {(1,): -1}
    assert first.coefficient((0,)).as_scalar().terms == {(1,): Fraction(-1, 2)}
    assert first.order == 1


def test_difference_operator_needs_operator_degree():
    with pytest.raises(TruncationError):
        difference_operator(make_operator(1, 4), 4)


def test_order_bound_violation_is_reported():
    fake = DifferenceOp(ZSeries((DiffOp.identity(1), partial_operator((2,)))))
    with pytest.raises(OrderBoundError) as excinfo:
        ev_sharp_table(fake)
    assert (excinfo.value.r, excinfo.value.s) == (1, 2)


def test_order_bound_holds_on_battery(battery_case):
    L = battery_case.build(2 * (battery_case.order - 1))
    report, table = order_bound_suite(L, battery_case.order)
    assert report.passed
    assert table is not None and table.order == battery_case.order


def test_dual_paths_agree_on_battery(battery_case):
    L = battery_case.build(2 * (battery_case.order - 1))
    table = ev_sharp_table(difference_operator(L, battery_case.order))
    assert ev_sharp_from_powers(L, battery_case.order).mismatches(table) == []
    assert dual_path_suite(L, table).passed


# ----------------------------------------------------------------------
# Heat jets
# ----------------------------------------------------------------------

def test_flat_heat_jets():
    L = make_operator(2, 18)
    heat = heat_jets(L, 3, 4)
    assert heat.degree == 4
    assert heat[0].terms == {(0, 0): matrix(1)}
    for k in range(1, 4):
        assert heat[k].is_zero()
        assert polterovich_matrix(L, k) == matrix(0)


@pytest.mark.parametrize("c", [Fraction(1), Fraction(-3, 2)])
def test_shifted_laplacian_heat_jets_match_exponential(c):
    L = shifted_laplacian(c)
    heat = heat_jets(L, 4, 2)
    expected = exponential_series(c, 4)
    for k in range(5):
        assert heat[k].terms == {(0,): matrix(expected[k])}
        assert polterovich_matrix(L, k) == matrix(expected[k])


def test_oscillator_matches_mehler_formula():
    heat = heat_jets(CASES["oscillator"].build(14), 4, 0)
    assert heat.constant_terms() == [matrix(v) for v in mehler_diagonal_series(4)]


def test_oracle_series_values():
    assert mehler_diagonal_series(4) == [1, 0, Fraction(-1, 3), 0, Fraction(1, 10)]
    assert exponential_series(1, 3) == [1, -1, Fraction(1, 2), Fraction(-1, 6)]


def test_oscillator_first_coefficient_averages_potential_along_ray():
    # a_1(x, 0) = -integral_0^1 V(sx) ds, the y = 0 slice of the Mehler kernel
    heat = heat_jets(CASES["oscillator"].build(10), 1, 2)
    assert heat[1].as_scalar().terms == {(2,): Fraction(-1, 3)}
    assert mehler_series(1, 2)[1] == {2: Fraction(-1, 3)}


def test_heat_jets_reject_short_tables():
    L = shifted_laplacian(1, 6)
    table = ev_sharp_table(difference_operator(L, 3))
    with pytest.raises(TruncationError):
        heat_jets(L, 2, 2, table=table)


def test_requirements_bookkeeping():
    plain = heat_jet_requirements(2, 2)
    assert (plain.order, plain.operator_degree, plain.metric_degree, plain.lower_order_degree) == (6, 10, 11, 10)
    assert heat_jet_requirements(2, 2, "fast").operator_degree == 10
    full = heat_jet_requirements(2, 2, "full", dimension=1)
    assert (full.operator_degree, full.metric_degree, full.intertwining_depth) == (12, 13, 3)
    unknown = heat_jet_requirements(2, 2, "full")
    assert (unknown.operator_degree, unknown.intertwining_depth) == (14, 4)
    assert heat_jet_requirements(1, 2, "full", dimension=2).operator_degree == 10
    empty = heat_jet_requirements(0, 0)
    assert (empty.order, empty.operator_degree, empty.metric_degree) == (0, 0, 1)
    assert heat_jet_requirements(4, 0, "fast").operator_degree == 14


# ----------------------------------------------------------------------
# Inversion formula
# ----------------------------------------------------------------------

def test_inversion_formula_on_shifted_laplacian():
    L = shifted_laplacian(Fraction(-3, 2))
    assert polterovich_matrix(L, 0) == matrix(1)
    assert polterovich_matrix(L, 1) == matrix(Fraction(3, 2))
    assert polterovich_matrix(L, 2) == matrix(Fraction(9, 8))
    assert polterovich_matrix(L, 2, 4) == matrix(Fraction(9, 8))


def test_inversion_formula_on_flat_laplacian():
    L = flat_laplacian(3)
    assert polterovich_matrix(L, 0) == matrix(1)
    for k in range(1, 3):
        assert polterovich_matrix(L, k) == matrix(0)


def test_inversion_formula_needs_r_at_least_k():
    with pytest.raises(ValueError):
        polterovich_ak(flat_laplacian(1), 2, 1, JetPoly.identity(1, 1))


def test_r_stability_on_battery(battery_case):
    assert r_stability_suite(battery_case.stability_operator(), battery_case.stability_k).passed


# ----------------------------------------------------------------------
# Cross-checks on computed jets
# ----------------------------------------------------------------------

def test_checks_pass_on_battery(battery_case):
    L = battery_case.operator()
    heat = heat_jets(L, battery_case.heat_k, battery_case.heat_degree)
    assert polterovich_consistency_suite(L, heat).passed
    assert intertwining_suite(L, heat).passed
    assert link_check(L, heat, battery_case.heat_k).passed
    assert excess_vanishing_suite(L).passed


def test_intertwining_with_single_section():
    L = shifted_laplacian(1)
    heat = heat_jets(L, 2, 4)
    psi = JetPoly.monomial((2,), [1], Role.VECTOR, 1)
    report = intertwine_check(L, heat, 2, psi, "x1^2*e1")
    assert report.passed and report.checked == 3
    with pytest.raises(TruncationError):
        intertwine_check(L, heat, 3, psi)


def test_excess_vanishing_detects_non_harmonic_input():
    L = make_operator(2, 4)
    assert excess_vanishing_check(L, JetPoly.monomial((1, 1)).as_endomorphism(1), 2).passed
    report = excess_vanishing_check(L, radial_power(2, 1).as_endomorphism(1), 2)
    assert not report.passed
    assert report.witness.startswith("mu=1")


@pytest.mark.parametrize(
    "k, alpha, suite",
    [
        (1, (1,), "intertwining"),
        (0, (0,), "intertwining"),
        (2, (0,), "inversion_formula"),
        (1, (1,), "link"),
    ],
)
def test_corrupted_jets_are_caught(k, alpha, suite):
    L = shifted_laplacian(1)
    heat = heat_jets(L, 2, 4)
    bad = corrupt_heat_jets(heat, k, alpha)
    if suite == "intertwining":
        report = intertwining_suite(L, bad)
    elif suite == "inversion_formula":
        report = polterovich_consistency_suite(L, bad)
    else:
        report = link_check(L, bad, 2)
    assert report.name == suite
    assert not report.passed
    assert report.witness


def test_every_stored_coefficient_is_read_by_complete_intertwining():
    L = shifted_laplacian(1)
    heat = heat_jets(L, 2, 4)
    table = ev_sharp_table(difference_operator(L, 2 * intertwining_depth(2, 4, 1)))
    assert complete_intertwining_suite(L, heat, table).passed
    for k in range(3):
        for d in range(5):
            report = complete_intertwining_suite(L, corrupt_heat_jets(heat, k, (d,)), table)
            assert report.name == "intertwining"
            assert not report.passed, (k, d)


def test_mixed_monomials_are_read_through_odd_sections():
    L = CASES["matrix_n2"].build(10)
    heat = heat_jets(L, 1, 2)
    table = ev_sharp_table(difference_operator(L, 2 * intertwining_depth(1, 2, 2)))
    assert complete_intertwining_suite(L, heat, table).passed
    for k in range(2):
        for alpha in indices_up_to(2, 2):
            assert not complete_intertwining_suite(L, corrupt_heat_jets(heat, k, alpha), table).passed, (k, alpha)
    report = complete_intertwining_suite(L, corrupt_heat_jets(heat, 1, (1, 1)), table)
    assert report.witness.startswith("mu=3, psi=x1*x2*e1")


def test_intertwining_depth():
    assert intertwining_depth(2, 2, 1) == 3
    assert intertwining_depth(2, 2) == 4
    assert intertwining_depth(1, 2, 2) == 3
    assert intertwining_depth(2, 3, 1) == 4
    assert intertwining_depth(3, 0, 2) == 3


def test_graded_jets_extend_fixed_degree_jets():
    L = CASES["oscillator"].build(14)
    graded = graded_heat_jets(L, 3)
    assert [jet.degree for jet in graded] == [6, 4, 2, 0]
    reference = mehler_series(3, 6)
    for k, jet in enumerate(graded):
        assert jet.as_scalar().terms == {(d,): v for d, v in reference[k].items() if d <= 2 * (3 - k)}
    heat = heat_jets(L, 1, 4)
    assert graded[0].truncate(4) == heat[0]
    assert graded[1] == heat[1]


def test_splice_keeps_stored_coefficients():
    L = shifted_laplacian(1)
    heat = corrupt_heat_jets(heat_jets(L, 1, 2), 1, (2,), 5)
    graded = graded_heat_jets(L, 3)
    spliced = splice_heat_jets(heat, graded)
    assert len(spliced) == 4
    assert spliced[1].degree == 4
    assert spliced[1].truncate(2) == heat[1]
    assert spliced[3] == graded[3]
    with pytest.raises(ValueError):
        splice_heat_jets(heat_jets(L, 2, 0), graded_heat_jets(L, 1))


def test_radial_lowering_examples():
    one = JetPoly.constant(2, 1)
    assert lemma_mi_lhs(2, 1, 0, one) == 4
    assert lemma_mi_rhs(2, 1, 0, one) == 4
    square = JetPoly.monomial((2, 0))
    for k in range(3):
        for l in range(3):
            assert lemma_mi_lhs(2, k, l, square) == lemma_mi_rhs(2, k, l, square)


def test_radial_lowering_on_random_sections():
    assert lemma_mi_suite(random.Random(7), samples=10).passed


@pytest.mark.slow
def test_oscillator_intertwines_through_fourth_power():
    L = CASES["oscillator"].build(30)
    heat = heat_jets(L, 4, 8)
    assert intertwining_suite(L, heat, 4).passed
    assert link_check(L, heat, 4).passed
    assert heat.constant_terms() == [matrix(v) for v in mehler_diagonal_series(4)]


@pytest.mark.slow
@pytest.mark.parametrize("name", ["constant_potential", "drift_n1"])
def test_one_dimensional_battery_intertwines_through_fourth_power(name):
    L = CASES[name].build(30)
    heat = heat_jets(L, 4, 8)
    assert intertwining_suite(L, heat, 4).passed
    assert link_check(L, heat, 4).passed


@pytest.mark.slow
def test_battery_intertwines_through_second_power(battery_case):
    L = battery_case.build(14)
    heat = heat_jets(L, 2, 4)
    assert intertwining_suite(L, heat, 2).passed
    assert link_check(L, heat, 2).passed
    assert polterovich_consistency_suite(L, heat).passed


@pytest.mark.slow
@pytest.mark.parametrize("name", ["flat_n2", "curved_n2", "matrix_n2", "curved_matrix_n2"])
def test_plane_battery_intertwines_through_fourth_power(name):
    L = CASES[name].build(30)
    heat = heat_jets(L, 4, 8)
    assert intertwining_suite(L, heat, 4).passed
    assert link_check(L, heat, 4).passed
