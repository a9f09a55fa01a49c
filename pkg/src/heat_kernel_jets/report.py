"""Pass/fail records produced by the checks and verification suites."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class CheckReport:
    """Outcome of one named check, with the first counterexample when it fails."""

    name: str
    passed: bool
    checked: int = 0
    witness: Optional[str] = None
    details: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "CheckReport":
        return cls(
            name=str(payload["name"]),
            passed=bool(payload["passed"]),
            checked=int(payload.get("checked", 0)),
            witness=payload.get("witness"),
            details=[str(item) for item in payload.get("details", [])],
        )

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status}  {self.name} ({self.checked} checked)"
        if self.witness:
            line += f": {self.witness}"
        return line


def all_passed(reports: List[CheckReport]) -> bool:
    return all(report.passed for report in reports)


def first_failure(reports: List[CheckReport]) -> Optional[CheckReport]:
    return next((report for report in reports if not report.passed), None)
