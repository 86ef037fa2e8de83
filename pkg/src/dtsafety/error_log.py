"""Per-model JSON error logs.

``errors/<model-slug>.json`` keeps the failures of the latest run on a
model: parse and validation diagnostics, state-cap overflows and analysis
errors, each with the command step that hit it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
import json
from pathlib import Path
from typing import Any, Iterable, Mapping
import traceback

from .diagnostics import Diagnostic
from .utils import ensure_dir, slugify


class ErrorCategory(Enum):
    PARSE = "parse"
    RESOLVE = "resolve"
    VALIDATION = "validation"
    COMPOSITION = "composition"
    STATE_CAP = "state_cap"
    FAILURE_MODEL = "failure_model"
    ANALYSIS = "analysis"
    FILE_IO = "file_io"
    UNKNOWN = "unknown"

    @classmethod
    def of(cls, exc: BaseException) -> ErrorCategory:
        """Category of an exception, by the nearest known class in its MRO."""
        for klass in type(exc).__mro__:
            category = _CATEGORY_BY_EXCEPTION.get(klass.__name__)
            if category is not None:
                return category
        return cls.UNKNOWN


# Matched by name so the model layers need not be imported here.
_CATEGORY_BY_EXCEPTION = {
    "ParseError": ErrorCategory.PARSE,
    "StateCapExceeded": ErrorCategory.STATE_CAP,
    "ValidationError": ErrorCategory.VALIDATION,
    "CompositionError": ErrorCategory.COMPOSITION,
    "FailureModelError": ErrorCategory.FAILURE_MODEL,
    "InjectionError": ErrorCategory.FAILURE_MODEL,
    "ModelError": ErrorCategory.ANALYSIS,
    "OSError": ErrorCategory.FILE_IO,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class ErrorEntry:
    category: ErrorCategory
    message: str
    timestamp: str
    step: str | None = None
    diagnostics: tuple[str, ...] = ()
    exception_type: str | None = None
    traceback: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "step": self.step,
            "category": self.category.value,
            "message": self.message,
            "diagnostics": list(self.diagnostics),
            "exception_type": self.exception_type,
            "traceback": self.traceback,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ErrorEntry:
        return cls(
            category=ErrorCategory(data["category"]),
            message=data["message"],
            timestamp=data["timestamp"],
            step=data.get("step"),
            diagnostics=tuple(data.get("diagnostics") or ()),
            exception_type=data.get("exception_type"),
            traceback=data.get("traceback"),
        )


@dataclass
class ErrorLog:
    """Errors recorded for one model during one run."""

    model_slug: str
    run_id: str
    entries: list[ErrorEntry] = field(default_factory=list)

    def record(
        self,
        category: ErrorCategory,
        message: str,
        *,
        step: str | None = None,
        diagnostics: Iterable[Diagnostic] = (),
    ) -> ErrorEntry:
        rendered = tuple(item.render() for item in diagnostics if item.is_error)
        entry = ErrorEntry(category, message, _now(), step, rendered)
        self.entries.append(entry)
        return entry

    def record_exception(self, exc: BaseException, step: str) -> ErrorEntry:
        """Record ``exc`` with its traceback and any diagnostics it carries."""
        diagnostics = getattr(exc, "diagnostics", ())
        entry = ErrorEntry(
            category=ErrorCategory.of(exc),
            message=str(exc),
            timestamp=_now(),
            step=step,
            diagnostics=tuple(item.render() for item in diagnostics if item.is_error),
            exception_type=type(exc).__name__,
            traceback="".join(traceback.format_exception(type(exc), exc, exc.__traceback__)).strip(),
        )
        self.entries.append(entry)
        return entry

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_slug": self.model_slug,
            "run_id": self.run_id,
            "error_count": len(self.entries),
            "errors": [entry.to_dict() for entry in self.entries],
        }


class ErrorLogStore:
    """Directory of error logs, one file per model slug."""

    def __init__(self, root: Path) -> None:
        self.root = root

    def path_for(self, model_slug: str) -> Path:
        return self.root / f"{slugify(model_slug)}.json"

    def load(self, model_slug: str) -> ErrorLog | None:
        """The stored log, or None when it is missing or unreadable."""
        path = self.path_for(model_slug)
        try:
            data = json.loads(path.read_text("utf-8"))
            entries = [ErrorEntry.from_dict(item) for item in data.get("errors", [])]
            return ErrorLog(data["model_slug"], data["run_id"], entries)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError):
            return None

    def open(self, model_slug: str, run_id: str) -> ErrorLog:
        """Continue the stored log of ``run_id``; a log of an older run is replaced."""
        stored = self.load(model_slug)
        if stored is not None and stored.run_id == run_id:
            return stored
        return ErrorLog(slugify(model_slug), run_id)

    def save(self, log: ErrorLog) -> Path:
        path = self.path_for(log.model_slug)
        ensure_dir(path.parent)
        staging = path.with_name(path.name + ".tmp")
        staging.write_text(json.dumps(log.to_dict(), indent=2) + "\n", "utf-8")
        staging.replace(path)
        return path
