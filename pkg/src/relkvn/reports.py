"""Machine-readable check results and run reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict


@dataclass(frozen=True)
class CheckResult:
    """One verified relation or numeric check."""

    check_id: str
    residual: float
    passed: bool
    lhs: str = ""
    rhs: str = ""
    probes: int = 0
    detail: str = ""
    informational: bool = False

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        if self.informational:
            mark = "info"
        out = f"[{mark}] {self.check_id}  residual={self.residual:.3e}"
        if self.detail:
            out += f"  ({self.detail})"
        return out


@dataclass
class RunReport:
    """Full record of one command invocation.

    Embeds the resolved configuration so every number is reproducible from
    the report alone.  ``all_passed`` ignores informational entries.
    """

    command: str
    config: dict
    checks: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config,
            "checks": [asdict(c) for c in self.checks],
            "notes": self.notes,
            "artifacts": self.artifacts,
            "wall_time_s": self.wall_time_s,
            "all_passed": self.all_passed,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunReport":
        data = json.loads(text)
        report = RunReport(command=data["command"], config=data["config"])
        report.checks = [
            CheckResult(**{k: v for k, v in c.items()}) for c in data["checks"]
        ]
        report.notes = list(data.get("notes", []))
        report.artifacts = list(data.get("artifacts", []))
        report.wall_time_s = float(data.get("wall_time_s", 0.0))
        return report

    def render_text(self) -> str:
        lines = [f"# {self.command}"]
        lines += [c.line() for c in self.checks]
        for note in self.notes:
            lines.append(f"note: {note}")
        n_hard = sum(1 for c in self.checks if not c.informational)
        n_pass = sum(1 for c in self.checks if not c.informational and c.passed)
        lines.append(
            f"{n_pass}/{n_hard} checks passed"
            + (" -- OK" if self.all_passed else " -- FAILURES PRESENT")
        )
        return "\n".join(lines)
