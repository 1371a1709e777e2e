"""Structured audit records shared by the library and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .scalar import to_float


@dataclass
class Check:
    name: str
    passed: Optional[bool]  # None: reported ratio, never a failure
    measured: Any = None
    bound: Any = None
    detail: str = ""

    @property
    def hard(self) -> bool:
        return self.passed is not None

    def status(self) -> str:
        if self.passed is None:
            return "REPORT"
        return "PASS" if self.passed else "FAIL"


@dataclass
class AuditReport:
    title: str
    checks: List[Check] = field(default_factory=list)
    values: Dict[str, Any] = field(default_factory=dict)

    def check(self, name: str, passed: bool, measured=None, bound=None, detail: str = "") -> Check:
        c = Check(name, bool(passed), measured, bound, detail)
        self.checks.append(c)
        return c

    def ratio(self, name: str, measured, envelope, detail: str = "") -> Check:
        """Record ``measured / envelope`` for an O(.) claim; informational only."""
        ratio = measured / envelope if envelope else None
        c = Check(name, None, measured, envelope, detail)
        self.values[f"{name}.ratio"] = ratio
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.hard)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if c.passed is False]

    def extend(self, other: "AuditReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.measured, c.bound, c.detail))
        for k, v in other.values.items():
            self.values[prefix + k] = v

    def lines(self) -> List[str]:
        out = [f"report = {self.title}"]
        for k, v in self.values.items():
            out.append(f"{k} = {_fmt(v)}")
        for c in self.checks:
            line = f"check.{c.name} = {c.status()}"
            if c.measured is not None:
                line += f" measured={_fmt(c.measured)}"
            if c.bound is not None:
                line += f" bound={_fmt(c.bound)}"
            if c.detail:
                line += f" ({c.detail})"
            out.append(line)
        out.append(f"overall = {'PASS' if self.passed else 'FAIL'}")
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "title": self.title,
            "values": {k: _fmt(v) for k, v in self.values.items()},
            "checks": [
                {"name": c.name, "status": c.status(), "measured": _fmt(c.measured),
                 "bound": _fmt(c.bound), "detail": c.detail}
                for c in self.checks
            ],
            "overall": "PASS" if self.passed else "FAIL",
        }


def _fmt(v) -> Any:
    if v is None or isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    try:
        f = to_float(v)
    except (TypeError, ValueError):
        return str(v)
    return f"{f:.12g}"
