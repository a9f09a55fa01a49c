"""Shared operator battery for the heat coefficient tests."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

import pytest

from heat_kernel_jets.diffop import DiffOp
from heat_kernel_jets.heatcoeff import polterovich_degree
from heat_kernel_jets.jet_algebra import JetPoly, Role, radial_power
from heat_kernel_jets.laplacian import LaplacianSpec, MetricJets, generalized_laplacian

CURVATURE = Fraction(-1, 3)


def curved_metric(n: int, degree: int, t: Fraction = CURVATURE) -> MetricJets:
    """g = I + t (|x|^2 I - x x^T), exactly in normal coordinates."""

    radial = radial_power(n, 1)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            entry = (JetPoly.variable(n, i) * JetPoly.variable(n, j)).scale(-t)
            if i == j:
                entry = entry + JetPoly.constant(n, 1) + radial.scale(t)
            row.append(entry)
        rows.append(row)
    return MetricJets.from_rows(rows, degree)


def endo(n: int, rank: int, terms: Dict[tuple, object]) -> JetPoly:
    return JetPoly(n, Role.ENDO, rank, None, terms)


def make_operator(
    n: int,
    degree: int,
    *,
    rank: int = 1,
    curved: bool = False,
    first_order: Sequence[JetPoly] = (),
    potential: Optional[JetPoly] = None,
) -> DiffOp:
    """A generalized Laplacian with coefficients exact to ``degree``."""

    metric = curved_metric(n, degree + 1) if curved else MetricJets.flat(n, degree + 1)
    return generalized_laplacian(LaplacianSpec(metric, rank, tuple(first_order), potential))


@dataclass(frozen=True)
class BatteryCase:
    name: str
    n: int
    rank: int
    order: int
    heat_k: int
    heat_degree: int
    stability_k: int
    build: Callable[[int], DiffOp]

    def operator(self, degree: Optional[int] = None) -> DiffOp:
        if degree is None:
            order = 2 * self.heat_k + self.heat_degree
            degree = max(2 * (order - 1), 2 * (self.order - 1))
        return self.build(degree)

    def stability_operator(self) -> DiffOp:
        return self.build(polterovich_degree(self.stability_k, self.stability_k + 3))


def _x(n: int, i: int) -> JetPoly:
    return JetPoly.variable(n, i)


MATRIX_POTENTIAL = endo(2, 2, {(0, 0): [[1, 0], [0, -1]], (1, 0): [[0, 1], [0, 0]], (0, 1): [[0, 0], [1, 0]]})
ROTATION_DRIFT = endo(2, 2, {(0, 1): [[0, 1], [-1, 0]]})
CURVED_POTENTIAL = endo(2, 2, {(0, 0): [[0, 1], [0, 0]], (1, 0): [[1, 0], [0, 0]], (0, 2): [[0, 0], [0, 1]]})

BATTERY = [
    BatteryCase("flat_n2", 2, 1, 4, 1, 2, 1, lambda d: make_operator(2, d)),
    BatteryCase("constant_potential", 1, 1, 6, 2, 4, 2, lambda d: make_operator(1, d, potential=JetPoly.constant(1, 1))),
    BatteryCase("oscillator", 1, 1, 6, 2, 4, 2, lambda d: make_operator(1, d, potential=radial_power(1, 1))),
    BatteryCase(
        "drift_n1",
        1,
        1,
        6,
        2,
        4,
        2,
        lambda d: make_operator(1, d, first_order=[_x(1, 0)], potential=_x(1, 0).scale(Fraction(1, 2))),
    ),
    BatteryCase("curved_n2", 2, 1, 4, 1, 2, 1, lambda d: make_operator(2, d, curved=True, potential=_x(2, 0))),
    BatteryCase(
        "matrix_n2",
        2,
        2,
        4,
        1,
        2,
        1,
        lambda d: make_operator(
            2, d, rank=2, first_order=[ROTATION_DRIFT, JetPoly.zero(2, Role.ENDO, 2)], potential=MATRIX_POTENTIAL
        ),
    ),
    BatteryCase(
        "curved_matrix_n2",
        2,
        2,
        4,
        1,
        2,
        1,
        lambda d: make_operator(2, d, rank=2, curved=True, potential=CURVED_POTENTIAL),
    ),
]

CASES = {case.name: case for case in BATTERY}


@pytest.fixture(params=BATTERY, ids=lambda case: case.name)
def battery_case(request) -> BatteryCase:
    return request.param


@pytest.fixture
def cases() -> Dict[str, BatteryCase]:
    return CASES


@pytest.fixture
def write_problem(tmp_path: Path) -> Callable[..., Path]:
    """Write a problem file into tmp_path and return its path."""

    def _write(name: str = "problem.json", **payload) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return path

    return _write
