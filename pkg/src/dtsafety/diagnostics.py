"""Positioned diagnostics shared by the front end and the validator."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int | None = None
    end_column: int | None = None

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    span: Span | None = None
    automaton: str | None = None
    state: str | None = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self, source_name: str | None = None) -> str:
        prefix = source_name or "<model>"
        if self.span is not None:
            prefix = f"{prefix}:{self.span}"
        return f"{prefix}: {self.severity.value}: {self.message}"


def error(message: str, span: Span | None = None, **where: str | None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, message, span, where.get("automaton"), where.get("state"))


def warning(message: str, span: Span | None = None, **where: str | None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, message, span, where.get("automaton"), where.get("state"))


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(diagnostic.is_error for diagnostic in diagnostics)
