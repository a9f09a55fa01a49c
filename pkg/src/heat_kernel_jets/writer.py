"""Utility helpers for exporting and re-reading computed heat jets."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

from .heatcoeff import HeatJets
from .jet_algebra import JetPoly, Role
from .report import CheckReport

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CSV_FIELDS = ["coefficient", "k", "exponents", "row", "column", "value"]


class ResultFormatError(ValueError):
    """Raised when a result document cannot be decoded."""


@dataclass
class ResultDoc:
    """Everything a computation produces, in a form that serializes exactly."""

    heat: HeatJets
    hat: Optional[HeatJets] = None
    verification: List[CheckReport] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)
    reinstate_4pi: bool = False

    def normalization(self) -> Dict[str, Any]:
        if self.reinstate_4pi:
            return {"prefactor": "(4*pi)^(-n/2)", "n": self.heat.n, "applied": True}
        return {"prefactor": "1", "n": self.heat.n, "applied": False}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "dimension": self.heat.n,
            "rank": self.heat.rank,
            "max_k": self.heat.max_k,
            "max_degree": self.heat.degree,
            "normalization": self.normalization(),
            "heat_coefficients": heat_jets_to_payload(self.heat),
            "hat_coefficients": None if self.hat is None else heat_jets_to_payload(self.hat),
            "verification": [report.to_dict() for report in self.verification],
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ResultDoc":
        try:
            n = int(payload["dimension"])
            rank = int(payload["rank"])
            degree = int(payload["max_degree"])
            heat = heat_jets_from_payload(payload["heat_coefficients"], n, rank, degree)
            hat_payload = payload.get("hat_coefficients")
            hat = None if hat_payload is None else heat_jets_from_payload(hat_payload, n, rank, degree)
            reports = [CheckReport.from_dict(item) for item in payload.get("verification", [])]
            normalization = payload.get("normalization") or {}
        except (KeyError, TypeError, ValueError) as exc:
            raise ResultFormatError(f"malformed result document: {exc}") from exc
        return cls(
            heat=heat,
            hat=hat,
            verification=reports,
            provenance=dict(payload.get("provenance") or {}),
            reinstate_4pi=bool(normalization.get("applied", False)),
        )


# ----------------------------------------------------------------------
# Exact value encoding
# ----------------------------------------------------------------------

def encode_value(value: Any) -> Any:
    if isinstance(value, tuple):
        return [encode_value(v) for v in value]
    return str(value)


def jet_to_entries(jet: JetPoly) -> List[Dict[str, Any]]:
    return [{"exponents": list(alpha), "value": encode_value(value)} for alpha, value in jet.sorted_terms()]


def jet_from_entries(entries: List[Dict[str, Any]], n: int, rank: int, degree: int) -> JetPoly:
    terms = {}
    for entry in entries:
        rows = entry["value"]
        terms[tuple(int(e) for e in entry["exponents"])] = tuple(tuple(Fraction(v) for v in row) for row in rows)
    return JetPoly(n, Role.ENDO, rank, degree, terms)


def heat_jets_to_payload(heat: HeatJets) -> List[Dict[str, Any]]:
    return [{"k": k, "terms": jet_to_entries(jet)} for k, jet in enumerate(heat.coefficients)]


def heat_jets_from_payload(payload: List[Dict[str, Any]], n: int, rank: int, degree: int) -> HeatJets:
    ordered = sorted(payload, key=lambda item: int(item["k"]))
    if [int(item["k"]) for item in ordered] != list(range(len(ordered))):
        raise ResultFormatError("heat coefficients must be listed for k = 0, 1, ..., K")
    coefficients = tuple(jet_from_entries(item["terms"], n, rank, degree) for item in ordered)
    return HeatJets(coefficients, degree, n, rank)


# ----------------------------------------------------------------------
# Files
# ----------------------------------------------------------------------

def write_result(doc: ResultDoc, destination: Path, fmt: str = "json") -> Path:
    """Persist a result document in the requested format and return the resolved path."""

    destination = Path(destination).expanduser().resolve()
    destination.parent.mkdir(parents=True, exist_ok=True)
    fmt = fmt.lower()
    logger.info("Writing a_0..a_%d to %s as %s", doc.heat.max_k, destination, fmt)

    if fmt == "json":
        _write_json(doc, destination)
    elif fmt == "csv":
        _write_csv(doc, destination)
    else:
        raise ValueError(f"Unsupported output format: {fmt}")
    return destination


def read_result(source: Path) -> ResultDoc:
    source = Path(source).expanduser()
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ResultFormatError(f"cannot read result document {source}: {exc}") from exc
    return ResultDoc.from_dict(payload)


def dumps_result(doc: ResultDoc) -> str:
    return json.dumps(doc.to_dict(), indent=2, sort_keys=True) + "\n"


def _write_json(doc: ResultDoc, destination: Path) -> None:
    destination.write_text(dumps_result(doc), encoding="utf-8")


def _csv_rows(name: str, heat: HeatJets) -> List[Dict[str, Any]]:
    rows = []
    for k, jet in enumerate(heat.coefficients):
        for alpha, matrix in jet.sorted_terms():
            for i, row in enumerate(matrix):
                for j, value in enumerate(row):
                    if value == 0:
                        continue
                    rows.append(
                        {
                            "coefficient": name,
                            "k": k,
                            "exponents": " ".join(str(a) for a in alpha),
                            "row": i + 1,
                            "column": j + 1,
                            "value": str(value),
                        }
                    )
    return rows


def _write_csv(doc: ResultDoc, destination: Path) -> None:
    with destination.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in _csv_rows("a", doc.heat):
            writer.writerow(row)
        if doc.hat is not None:
            for row in _csv_rows("a_hat", doc.hat):
                writer.writerow(row)
