"""Non-fatal problem reporting shared by all analyzers.

Analyzers never raise for recoverable input problems; they record a
diagnostic and keep going.  The sink is append-only and order-preserving
so reports stay deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

WARNING = "warning"
ERROR = "error"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    path: str = ""
    line: int = 0

    def render(self) -> str:
        where = self.path or "<project>"
        if self.line:
            where = f"{where}:{self.line}"
        return f"{self.severity}: {where}: {self.message}"


class DiagnosticSink:
    """Collects diagnostics from every analysis pass."""

    def __init__(self) -> None:
        self._items: list[Diagnostic] = []

    def warn(self, message: str, path: str = "", line: int = 0) -> None:
        self._items.append(Diagnostic(WARNING, message, path, line))

    def error(self, message: str, path: str = "", line: int = 0) -> None:
        self._items.append(Diagnostic(ERROR, message, path, line))

    def extend(self, other: "DiagnosticSink") -> None:
        self._items.extend(other._items)

    @property
    def items(self) -> tuple[Diagnostic, ...]:
        return tuple(self._items)

    def count(self, severity: str | None = None) -> int:
        if severity is None:
            return len(self._items)
        return sum(1 for d in self._items if d.severity == severity)

    def as_dicts(self) -> list[dict]:
        return [
            {"severity": d.severity, "message": d.message, "path": d.path, "line": d.line}
            for d in self._items
        ]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Diagnostic]:
        return iter(self._items)
