"""Closed-form series used as independent references for heat coefficients."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Any, Dict, List

import sympy as sp

logger = logging.getLogger(__name__)

_t = sp.Symbol("t")
_x = sp.Symbol("x")


def _to_fraction(value: Any) -> Fraction:
    rational = sp.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def _taylor_coefficients(expression: sp.Expr, order: int) -> List[Fraction]:
    logger.debug("expanding %s through t^%d", expression, order)
    expansion = sp.series(expression, _t, 0, order + 1).removeO()
    expansion = sp.expand(expansion)
    return [_to_fraction(expansion.coeff(_t, k)) for k in range(order + 1)]


def mehler_diagonal_series(order: int) -> List[Fraction]:
    """Taylor coefficients of (2t / sinh 2t)^{1/2} through t**order.

    These are a_k(0) for the harmonic oscillator -d^2/dx^2 + x^2 on the line.
    """

    if order < 0:
        raise ValueError(f"series order must be >= 0, got {order}")
    return _taylor_coefficients(sp.sqrt(2 * _t / sp.sinh(2 * _t)), order)


def exponential_series(c: Any, order: int) -> List[Fraction]:
    """Taylor coefficients of exp(-c t) through t**order."""

    if order < 0:
        raise ValueError(f"series order must be >= 0, got {order}")
    c = Fraction(c)
    return _taylor_coefficients(sp.exp(-sp.Rational(c.numerator, c.denominator) * _t), order)


def mehler_series(max_k: int, max_degree: int) -> List[Dict[int, Fraction]]:
    """Jets in x of a_k(x, 0) for -d^2/dx^2 + x^2, k <= max_k, to degree max_degree.

    Expands (2t / sinh 2t)^{1/2} exp(-x^2 (coth(2t)/2 - 1/(4t))), the Mehler kernel
    at y = 0 divided by the flat kernel.  Entry k maps d to the x^d coefficient.
    """

    if max_k < 0 or max_degree < 0:
        raise ValueError("max_k and max_degree must be non-negative")
    drift = sp.series(sp.coth(2 * _t) / 2 - 1 / (4 * _t), _t, 0, max_k + 1).removeO()
    expression = sp.sqrt(2 * _t / sp.sinh(2 * _t)) * sp.exp(-(_x**2) * drift)
    logger.debug("expanding the Mehler kernel through t^%d", max_k)
    expansion = sp.expand(sp.series(expression, _t, 0, max_k + 1).removeO())
    jets = []
    for k in range(max_k + 1):
        coefficient = sp.expand(expansion.coeff(_t, k))
        jet = {}
        for d in range(max_degree + 1):
            value = _to_fraction(coefficient.coeff(_x, d))
            if value:
                jet[d] = value
        jets.append(jet)
    return jets
