"""Shared report structures: named checks with margins, canonical serialization.

Every analysis in the package funnels its verdicts through CriteriaReport so
the CLI can serialize uniformly and exit nonzero when a hard check fails.
Serialization is canonical (sorted keys, trailing newline, repr-floats) so
repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Any, Dict, List, Optional

__all__ = [
    "CheckResult",
    "CriteriaReport",
    "canonical_json",
    "config_hash",
    "jsonable",
]


def jsonable(obj: Any) -> Any:
    """Recursively convert report values into JSON-stable primitives.

    Fractions become exact "num/den" strings; numpy scalars/arrays become
    Python scalars/lists; floats stay floats (json uses repr, which is
    deterministic and round-trips).
    """
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):  # numpy array or scalar
        return jsonable(obj.tolist())
    if hasattr(obj, "item") and not isinstance(obj, (int, float, str, bool)):
        return obj.item()
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 over the canonical JSON encoding of a config mapping."""
    payload = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class CheckResult:
    """One named check: pass/fail plus a numeric margin (positive = slack)."""

    name: str
    passed: bool
    margin: float = 0.0
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "detail": self.detail,
        }


@dataclass
class CriteriaReport:
    """A bundle of checks with context (exponents, decision rules, tables)."""

    title: str
    checks: List[CheckResult] = field(default_factory=list)
    context: Dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, passed: bool, margin: float = 0.0, detail: str = "") -> CheckResult:
        result = CheckResult(name=name, passed=bool(passed), margin=float(margin), detail=detail)
        self.checks.append(result)
        return result

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "title": self.title,
            "all_passed": self.all_passed,
            "checks": [c.to_dict() for c in self.checks],
            "context": jsonable(self.context),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def write_json(self, fh: IO[str]) -> None:
        fh.write(self.to_json())

    def write_checks_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh)
        writer.writerow(["name", "passed", "margin", "detail"])
        for c in self.checks:
            writer.writerow([c.name, int(c.passed), repr(float(c.margin)), c.detail])

    def summary_lines(self) -> List[str]:
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"[{tag}] {c.name} (margin={c.margin:.6g}) {c.detail}".rstrip())
        return lines


def fraction_from_string(s: str) -> Optional[Fraction]:
    """Inverse of the Fraction encoding used by jsonable()."""
    try:
        num, den = s.split("/")
        return Fraction(int(num), int(den))
    except (ValueError, AttributeError):
        return None
