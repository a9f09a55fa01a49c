import random
from fractions import Fraction

import pytest

from heat_kernel_jets.diffop import (
    DiffOp,
    apply,
    commutator,
    compose,
    euler_operator,
    ev_sharp,
    flat_laplace,
    flat_laplacian,
    op_exponential_series,
    operator_power,
    operator_powers,
    partial_operator,
)
from heat_kernel_jets.jet_algebra import JetPoly, Role, TruncationError, radial_power
from heat_kernel_jets.verification import (
    classical_formula_suite,
    ev_sharp_identity_suite,
    green_identity_suite,
    random_operator,
    random_polynomial,
    sl2_suite,
)


def scalar(op_coefficient: JetPoly) -> JetPoly:
    return op_coefficient.as_scalar()


def test_flat_laplacian_of_radial_square():
    assert scalar(apply(flat_laplacian(3), radial_power(3, 1))).terms == {(0, 0, 0): -6}


def test_euler_operator_counts_degree():
    square = JetPoly.monomial((2,))
    assert scalar(apply(euler_operator(1), square)).terms == {(2,): 2}


def test_apply_respects_requested_degree():
    psi = JetPoly(1, Role.SCALAR, 1, 3, {(0,): 1, (2,): 1, (3,): 1})
    result = apply(flat_laplacian(1), psi)
    assert result.degree == 1
    assert scalar(result).terms == {(0,): -2, (1,): -6}
    assert apply(flat_laplacian(1), psi, 0).degree == 0
    with pytest.raises(TruncationError):
        apply(flat_laplacian(1), psi, 2)
    with pytest.raises(TruncationError):
        apply(flat_laplacian(1), JetPoly(1, Role.SCALAR, 1, 1, {(1,): 1}))


def test_compose_squares_the_laplacian():
    square = compose(flat_laplacian(1), flat_laplacian(1))
    assert set(square.coefficients) == {(4,)}
    assert square.coefficient((4,)).constant_term() == ((1,),)


def test_compose_with_multiplication_uses_leibniz():
    x_squared = DiffOp.multiplication(JetPoly.monomial((2,)))
    composed = compose(flat_laplacian(1), x_squared)
    assert scalar(composed.coefficient((2,))).terms == {(2,): -1}
    assert scalar(composed.coefficient((1,))).terms == {(1,): -4}
    assert scalar(composed.coefficient((0,))).terms == {(0,): -2}


def test_compose_needs_long_enough_right_factor():
    short = DiffOp.multiplication(JetPoly(1, Role.SCALAR, 1, 1, {(1,): 1}))
    with pytest.raises(TruncationError):
        compose(flat_laplacian(1), short, 0)


def test_coefficients_must_cover_the_operator_degree():
    with pytest.raises(TruncationError):
        DiffOp(1, 1, 3, {(0,): JetPoly(1, Role.SCALAR, 1, 1, {(1,): 1})})


@pytest.mark.parametrize("n", [1, 2, 3])
def test_laplacian_radial_commutator(n):
    bracket = commutator(flat_laplacian(n), DiffOp.multiplication(radial_power(n, 1)))
    assert scalar(bracket.coefficient((0,) * n)).terms == {(0,) * n: -2 * n}
    for i in range(n):
        e = tuple(int(i == j) for j in range(n))
        assert scalar(bracket.coefficient(e)).terms == {e: -4}
    assert bracket.order == 1


def test_ev_sharp_keeps_values_at_origin():
    x = JetPoly.monomial((1,))
    op = DiffOp(1, 1, None, {(1,): x, (2,): JetPoly.constant(1, 3), (0,): JetPoly.constant(1, 2)})
    assert ev_sharp(op).as_scalar().terms == {(2,): 3, (0,): 2}


def test_exponential_series_of_shifted_laplacian():
    c = Fraction(2)
    L = flat_laplacian(1) + DiffOp.multiplication(JetPoly.constant(1, c))
    series = op_exponential_series(L, 1, 3)
    assert series.order == 3
    second = series[2]
    assert scalar(second.coefficient((0,))).terms == {(0,): c * c / 2}
    assert scalar(second.coefficient((2,))).terms == {(0,): -c}
    assert scalar(second.coefficient((4,))).terms == {(0,): Fraction(1, 2)}
    assert scalar(series[1].coefficient((0,))).terms == {(0,): -c}
    assert scalar(series[3].coefficient((0,))).terms == {(0,): -c**3 / 6}

    growing = op_exponential_series(L, -1, 3)
    assert scalar(growing[1].coefficient((0,))).terms == {(0,): c}
    assert scalar(growing[3].coefficient((0,))).terms == {(0,): c**3 / 6}


def test_exponential_series_of_order_zero_is_identity():
    series = op_exponential_series(flat_laplacian(2), 1, 0)
    assert len(series) == 1
    assert series[0].order == 0
    assert series[0].coefficient((0, 0)).constant_term() == ((1,),)


def test_operator_powers_need_coefficient_degree():
    x = JetPoly(1, Role.SCALAR, 1, 2, {(1,): 1})
    L = flat_laplacian(1) + DiffOp(1, 1, 2, {(1,): x})
    assert operator_power(L, 2, 0).degree == 0
    with pytest.raises(TruncationError):
        operator_power(L, 3, 0)


def test_operator_powers_match_repeated_composition():
    L = flat_laplacian(2) + DiffOp.multiplication(radial_power(2, 1))
    powers = operator_powers(L, 3, None)
    assert powers[0] == DiffOp.identity(2)
    assert powers[3] == compose(L, compose(L, L))


@pytest.mark.parametrize("seed", range(5))
def test_composition_matches_successive_application(seed):
    rng = random.Random(seed)
    n, rank = rng.randint(1, 2), rng.choice((1, 2))
    a = random_operator(rng, n, 2, 2, rank)
    b = random_operator(rng, n, 2, 2, rank)
    psi = random_polynomial(rng, n, 5, Role.VECTOR, rank)
    assert apply(compose(a, b), psi) == apply(a, apply(b, psi))


@pytest.mark.parametrize("seed", range(3))
def test_composition_is_associative(seed):
    rng = random.Random(100 + seed)
    a, b, c = (random_operator(rng, 2, 2, 2, 2) for _ in range(3))
    assert compose(compose(a, b), c) == compose(a, compose(b, c))


def test_flat_laplace_agrees_with_operator():
    rng = random.Random(3)
    p = random_polynomial(rng, 3, 5)
    assert flat_laplace(p) == scalar(apply(flat_laplacian(3), p))
    assert flat_laplace(p, 0) is p
    with pytest.raises(TruncationError):
        flat_laplace(JetPoly(1, Role.SCALAR, 1, 1, {(1,): 1}))


def test_partial_operator_differentiates():
    p = JetPoly.monomial((2, 1))
    assert scalar(apply(partial_operator((1, 1)), p)).terms == {(1, 0): 2}


def test_flat_model_suites_pass():
    rng = random.Random(11)
    assert classical_formula_suite().passed
    assert sl2_suite(rng).passed
    assert green_identity_suite(rng).passed
    assert ev_sharp_identity_suite(rng).passed


def test_classical_formula_spot_value():
    quartic = radial_power(2, 2)
    value = apply(operator_power(flat_laplacian(2), 2), quartic, 0)
    assert scalar(value).terms == {(0, 0): 64}
