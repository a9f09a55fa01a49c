"""Problem files: the operator data and targets of one computation.

A problem file is JSON::

    {
      "dimension": 2,
      "rank": 1,
      "max_k": 2,
      "max_degree": 2,
      "jet_degree": null,
      "metric": [[POLY, POLY], [POLY, POLY]],
      "first_order": [POLY, POLY],
      "potential": POLY,
      "options": {"reinstate_4pi": false, "verify_level": "fast"}
    }

A POLY is a list of ``{"exponents": [...], "value": ...}`` entries or a bare
rational constant.  Values are rational strings such as ``"-3/2"``; for
rank m > 1 an endomorphism value is an m x m array of such strings, and a
single rational stands for that multiple of the identity.  Without
``jet_degree`` the polynomials are taken as exact; with it they are known
only to that degree.  Omitted metric, first-order or potential data mean
the flat metric and zero.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, List, Mapping, Optional

from .heatcoeff import HeatJetRequirements, heat_jet_requirements
from .jet_algebra import JetAlgebraError, JetPoly, Role, TruncationError, covers
from .laplacian import LaplacianSpec, MetricJets
from .verification import VERIFY_LEVELS

logger = logging.getLogger(__name__)

DEFAULT_VERIFY_LEVEL = "fast"


class ProblemSpecError(ValueError):
    """Raised when a problem file cannot be read or is malformed."""


@dataclass
class ProblemSpec:
    """Operator data and computation targets loaded from a problem file."""

    dimension: int
    rank: int
    max_k: int
    max_degree: int
    metric: Optional[List[List[JetPoly]]] = None
    first_order: Optional[List[JetPoly]] = None
    potential: Optional[JetPoly] = None
    jet_degree: Optional[int] = None
    reinstate_4pi: bool = False
    verify_level: str = DEFAULT_VERIFY_LEVEL
    source_hash: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict)

    def with_overrides(
        self,
        *,
        max_k: Optional[int] = None,
        max_degree: Optional[int] = None,
        verify_level: Optional[str] = None,
        reinstate_4pi: Optional[bool] = None,
    ) -> "ProblemSpec":
        """Copy with command-line overrides applied."""

        changes: dict = {}
        if max_k is not None:
            changes["max_k"] = _non_negative(max_k, "max_k")
        if max_degree is not None:
            changes["max_degree"] = _non_negative(max_degree, "max_degree")
        if verify_level is not None:
            changes["verify_level"] = _verify_level(verify_level)
        if reinstate_4pi is not None:
            changes["reinstate_4pi"] = bool(reinstate_4pi)
        return replace(self, **changes)

    # ------------------------------------------------------------------
    # Degree sufficiency
    # ------------------------------------------------------------------
    def requirements(self, level: Optional[str] = None) -> HeatJetRequirements:
        return heat_jet_requirements(self.max_k, self.max_degree, level or self.verify_level, self.dimension)

    def check_sufficiency(self, level: Optional[str] = None) -> HeatJetRequirements:
        """Raise :class:`TruncationError` when the declared jet degree is too small."""

        needed = self.requirements(level)
        if self.jet_degree is None:
            return needed
        required = needed.lower_order_degree
        if self.metric is not None:
            required = max(required, needed.metric_degree)
        if not covers(self.jet_degree, required):
            raise TruncationError(
                f"inputs are declared exact to degree {self.jet_degree}; a_k for k <= {self.max_k} to degree "
                f"{self.max_degree} needs metric jets to degree {needed.metric_degree} and first-order/potential "
                f"jets to degree {needed.lower_order_degree}",
                required=required,
                available=self.jet_degree,
            )
        if self.jet_degree > required:
            logger.warning("Input jets exceed the required degree %d; truncating from %d", required, self.jet_degree)
        return needed

    def laplacian_spec(self, level: Optional[str] = None) -> LaplacianSpec:
        """Assemble the operator data truncated to the degrees the computation needs."""

        needed = self.check_sufficiency(level)
        n, degree = self.dimension, needed.metric_degree
        if self.metric is None:
            metric = MetricJets.flat(n, degree)
        else:
            metric = MetricJets.from_rows([[entry.truncate(degree) for entry in row] for row in self.metric], degree)
        lower = needed.metric_degree - 1
        first_order = tuple(b.truncate(lower) for b in self.first_order) if self.first_order else ()
        potential = self.potential.truncate(lower) if self.potential is not None else None
        logger.debug("Operator data truncated to metric degree %d, lower-order degree %d", degree, lower)
        return LaplacianSpec(metric, self.rank, first_order, potential)


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------

def _non_negative(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ProblemSpecError(f"{name} must be a non-negative integer, got {value!r}")
    return value


def _verify_level(value: Any) -> str:
    if value not in VERIFY_LEVELS:
        raise ProblemSpecError(f"verify_level must be one of {', '.join(VERIFY_LEVELS)}, got {value!r}")
    return value


def parse_rational(value: Any) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise ProblemSpecError(f"rationals must be integers or strings like '3/2', got {value!r}")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ProblemSpecError(f"invalid rational {value!r}") from exc


def parse_value(value: Any, role: Role, rank: int) -> Any:
    """Parse a coefficient value of the given role from its JSON form."""

    if role is Role.SCALAR:
        return parse_rational(value)
    if role is Role.VECTOR:
        if not isinstance(value, list) or len(value) != rank:
            raise ProblemSpecError(f"expected a vector of {rank} rationals, got {value!r}")
        return tuple(parse_rational(v) for v in value)
    if not isinstance(value, list):
        scalar = parse_rational(value)
        return tuple(tuple(scalar if i == j else Fraction(0) for j in range(rank)) for i in range(rank))
    if len(value) != rank or any(not isinstance(row, list) or len(row) != rank for row in value):
        raise ProblemSpecError(f"expected a {rank}x{rank} array of rationals, got {value!r}")
    return tuple(tuple(parse_rational(v) for v in row) for row in value)


def parse_polynomial(payload: Any, n: int, role: Role, rank: int, degree: Optional[int], what: str) -> JetPoly:
    if not isinstance(payload, list):
        payload = [{"exponents": [0] * n, "value": payload}]
    terms = {}
    for entry in payload:
        if not isinstance(entry, Mapping) or "exponents" not in entry or "value" not in entry:
            raise ProblemSpecError(f"{what}: each term needs 'exponents' and 'value', got {entry!r}")
        exponents = entry["exponents"]
        if (
            not isinstance(exponents, list)
            or len(exponents) != n
            or any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in exponents)
        ):
            raise ProblemSpecError(f"{what}: exponents must be {n} non-negative integers, got {exponents!r}")
        alpha = tuple(exponents)
        if alpha in terms:
            raise ProblemSpecError(f"{what}: repeated monomial {exponents}")
        terms[alpha] = parse_value(entry["value"], role, rank)
    try:
        return JetPoly(n, role, rank, degree, terms)
    except JetAlgebraError as exc:
        raise ProblemSpecError(f"{what}: {exc}") from exc


def parse_problem(payload: Any) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from decoded JSON."""

    if not isinstance(payload, Mapping):
        raise ProblemSpecError("problem file must contain a JSON object")
    for key in ("dimension", "max_k", "max_degree"):
        if key not in payload:
            raise ProblemSpecError(f"missing required field '{key}'")
    n = _non_negative(payload["dimension"], "dimension")
    if n < 1:
        raise ProblemSpecError("dimension must be at least 1")
    rank = _non_negative(payload.get("rank", 1), "rank")
    if rank < 1:
        raise ProblemSpecError("rank must be at least 1")
    jet_degree = payload.get("jet_degree")
    if jet_degree is not None:
        jet_degree = _non_negative(jet_degree, "jet_degree")

    metric = None
    if payload.get("metric") is not None:
        rows = payload["metric"]
        if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
            raise ProblemSpecError(f"metric must be a {n}x{n} array of polynomials")
        metric = [
            [parse_polynomial(entry, n, Role.SCALAR, 1, jet_degree, f"metric[{i + 1}][{j + 1}]")
             for j, entry in enumerate(row)]
            for i, row in enumerate(rows)
        ]

    first_order = None
    if payload.get("first_order") is not None:
        entries = payload["first_order"]
        if not isinstance(entries, list) or len(entries) != n:
            raise ProblemSpecError(f"first_order must list {n} polynomials")
        first_order = [
            parse_polynomial(entry, n, Role.ENDO, rank, jet_degree, f"first_order[{i + 1}]")
            for i, entry in enumerate(entries)
        ]

    potential = None
    if payload.get("potential") is not None:
        potential = parse_polynomial(payload["potential"], n, Role.ENDO, rank, jet_degree, "potential")

    options = payload.get("options") or {}
    if not isinstance(options, Mapping):
        raise ProblemSpecError("options must be an object")
    reinstate = options.get("reinstate_4pi", False)
    if not isinstance(reinstate, bool):
        raise ProblemSpecError("options.reinstate_4pi must be true or false")

    known = {"dimension", "rank", "max_k", "max_degree", "jet_degree", "metric", "first_order", "potential", "options"}
    extra = {key: value for key, value in payload.items() if key not in known}
    if extra:
        logger.warning("Ignoring unknown problem fields: %s", ", ".join(sorted(extra)))

    return ProblemSpec(
        dimension=n,
        rank=rank,
        max_k=_non_negative(payload["max_k"], "max_k"),
        max_degree=_non_negative(payload["max_degree"], "max_degree"),
        metric=metric,
        first_order=first_order,
        potential=potential,
        jet_degree=jet_degree,
        reinstate_4pi=reinstate,
        verify_level=_verify_level(options.get("verify_level", DEFAULT_VERIFY_LEVEL)),
        extra=extra,
    )


def load_problem(path: Path) -> ProblemSpec:
    """Read and parse a problem file, recording the SHA-256 of its bytes."""

    path = Path(path).expanduser()
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ProblemSpecError(f"cannot read problem file {path}: {exc}") from exc
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProblemSpecError(f"{path} is not valid JSON: {exc}") from exc
    problem = parse_problem(payload)
    problem.source_hash = hashlib.sha256(raw).hexdigest()
    logger.info("Loaded problem %s (n=%d, m=%d, K=%d, D=%d)", path, problem.dimension, problem.rank,
                problem.max_k, problem.max_degree)
    return problem
