import logging
from fractions import Fraction

import pytest

from heat_kernel_jets.jet_algebra import Role, TruncationError
from heat_kernel_jets.problem import (
    DEFAULT_VERIFY_LEVEL,
    ProblemSpecError,
    load_problem,
    parse_problem,
    parse_rational,
    parse_value,
)


def test_parse_rational():
    assert parse_rational("-3/2") == Fraction(-3, 2)
    assert parse_rational(4) == 4
    for bad in (True, 0.5, "three", "1/0"):
        with pytest.raises(ProblemSpecError):
            parse_rational(bad)


def test_parse_endomorphism_values():
    assert parse_value("2", Role.ENDO, 2) == ((2, 0), (0, 2))
    assert parse_value([["1", "1/2"], [0, -1]], Role.ENDO, 2) == ((1, Fraction(1, 2)), (0, -1))
    with pytest.raises(ProblemSpecError):
        parse_value([["1"]], Role.ENDO, 2)


def test_minimal_problem_defaults():
    problem = parse_problem({"dimension": 2, "max_k": 1, "max_degree": 0})
    assert problem.rank == 1
    assert problem.verify_level == DEFAULT_VERIFY_LEVEL
    assert problem.metric is None and problem.potential is None
    spec = problem.laplacian_spec()
    assert spec.metric.degree == problem.requirements().metric_degree
    assert spec.potential.is_zero()


def test_matrix_problem():
    problem = parse_problem(
        {
            "dimension": 1,
            "rank": 2,
            "max_k": 1,
            "max_degree": 0,
            "potential": [{"exponents": [0], "value": [["0", "1"], ["1", "0"]]}, {"exponents": [2], "value": "3"}],
        }
    )
    assert problem.potential.role is Role.ENDO
    assert problem.potential.coefficient((2,)) == ((3, 0), (0, 3))


@pytest.mark.parametrize(
    "payload, message",
    [
        ([], "JSON object"),
        ({"dimension": 1, "max_k": 1}, "max_degree"),
        ({"dimension": 0, "max_k": 1, "max_degree": 0}, "at least 1"),
        ({"dimension": 1, "max_k": -1, "max_degree": 0}, "non-negative"),
        ({"dimension": 2, "max_k": 1, "max_degree": 0, "metric": [[1, 0]]}, "2x2"),
        ({"dimension": 1, "max_k": 1, "max_degree": 0, "first_order": []}, "first_order"),
        (
            {"dimension": 1, "max_k": 1, "max_degree": 0, "potential": [{"exponents": [0, 1], "value": 1}]},
            "exponents",
        ),
        (
            {
                "dimension": 1,
                "max_k": 1,
                "max_degree": 0,
                "potential": [{"exponents": [1], "value": 1}, {"exponents": [1], "value": 2}],
            },
            "repeated",
        ),
    ],
)
def test_malformed_problems(payload, message):
    with pytest.raises(ProblemSpecError) as excinfo:
        parse_problem(payload)
    assert message in str(excinfo.value)


def test_unknown_fields_are_reported(caplog):
    with caplog.at_level(logging.WARNING, logger="heat_kernel_jets.problem"):
        problem = parse_problem({"dimension": 1, "max_k": 0, "max_degree": 0, "comment": "hi"})
    assert problem.extra == {"comment": "hi"}
    assert "Ignoring unknown problem fields: comment" in caplog.text


def test_declared_jet_degree_is_checked(caplog):
    base = {"dimension": 1, "max_k": 1, "max_degree": 0, "potential": "1"}
    with pytest.raises(TruncationError) as excinfo:
        parse_problem({**base, "jet_degree": 1}).check_sufficiency()
    assert (excinfo.value.required, excinfo.value.available) == (2, 1)

    with caplog.at_level(logging.WARNING, logger="heat_kernel_jets.problem"):
        needed = parse_problem({**base, "jet_degree": 9}).check_sufficiency()
    assert needed.order == 2
    assert "exceed the required degree" in caplog.text


def test_metric_needs_one_more_degree():
    problem = parse_problem(
        {
            "dimension": 1,
            "max_k": 1,
            "max_degree": 0,
            "jet_degree": 2,
            "metric": [[[{"exponents": [0], "value": 1}]]],
        }
    )
    with pytest.raises(TruncationError):
        problem.check_sufficiency()


def test_overrides():
    problem = parse_problem({"dimension": 1, "max_k": 1, "max_degree": 0})
    changed = problem.with_overrides(max_k=3, verify_level="full", reinstate_4pi=True)
    assert (changed.max_k, changed.verify_level, changed.reinstate_4pi) == (3, "full", True)
    assert problem.max_k == 1
    with pytest.raises(ProblemSpecError):
        problem.with_overrides(max_degree=-2)


def test_load_problem_records_hash(write_problem):
    path = write_problem(dimension=1, max_k=0, max_degree=0)
    problem = load_problem(path)
    assert len(problem.source_hash) == 64
    assert problem.with_overrides(max_k=1).source_hash == problem.source_hash
