"""Tests for error_log module."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from dtsafety.composition import StateCapExceeded
from dtsafety.diagnostics import Span, error, warning
from dtsafety.error_log import ErrorCategory, ErrorEntry, ErrorLog, ErrorLogStore
from dtsafety.model import AnalysisError, ValidationError
from dtsafety.modellang import ParseError


class TestErrorCategory:
    @pytest.mark.parametrize(
        ("exc", "category"),
        [
            (ParseError([error("unexpected ';'", Span(1, 2))]), ErrorCategory.PARSE),
            (ValidationError([error("deadlock")]), ErrorCategory.VALIDATION),
            (AnalysisError("horizon must be non-negative"), ErrorCategory.ANALYSIS),
            (FileNotFoundError("absent.ssm"), ErrorCategory.FILE_IO),
            (KeyError("x"), ErrorCategory.UNKNOWN),
        ],
    )
    def test_of_follows_the_exception_class(self, exc: BaseException, category: ErrorCategory) -> None:
        assert ErrorCategory.of(exc) is category

    def test_state_cap_is_not_a_plain_analysis_error(self) -> None:
        assert ErrorCategory.of(StateCapExceeded(2)) is ErrorCategory.STATE_CAP


class TestErrorEntry:
    def test_to_dict_layout(self) -> None:
        entry = ErrorEntry(
            category=ErrorCategory.COMPOSITION,
            message="deadlock",
            timestamp="2024-01-01T12:00:00+00:00",
            step="hazard",
            diagnostics=("<model>: error: deadlock in A2.idle",),
            exception_type="CompositionError",
            traceback="line 1\nline 2",
        )
        assert entry.to_dict() == {
            "timestamp": "2024-01-01T12:00:00+00:00",
            "step": "hazard",
            "category": "composition",
            "message": "deadlock",
            "diagnostics": ["<model>: error: deadlock in A2.idle"],
            "exception_type": "CompositionError",
            "traceback": "line 1\nline 2",
        }
        assert ErrorEntry.from_dict(entry.to_dict()) == entry

    def test_entry_is_immutable(self) -> None:
        entry = ErrorEntry(ErrorCategory.UNKNOWN, "test", "2024-01-01T00:00:00+00:00")
        with pytest.raises(Exception):
            entry.message = "modified"  # type: ignore[misc]


class TestErrorLog:
    def test_record_keeps_only_error_diagnostics(self) -> None:
        log = ErrorLog(model_slug="backup-system", run_id="run-123")
        entry = log.record(
            ErrorCategory.VALIDATION,
            "1 validation error(s)",
            step="validate",
            diagnostics=[error("guards overlap", Span(4, 5)), warning("unreachable state")],
        )
        assert log.entries == [entry]
        assert entry.diagnostics == ("<model>:4:5: error: guards overlap",)
        assert entry.exception_type is None
        assert entry.timestamp.endswith("+00:00")

    def test_record_exception(self) -> None:
        log = ErrorLog(model_slug="m", run_id="r")
        try:
            raise ValidationError([error("probabilities sum to 0.5", Span(3, 1))])
        except ValidationError as exc:
            entry = log.record_exception(exc, "hazard")

        assert entry.category is ErrorCategory.VALIDATION
        assert entry.step == "hazard"
        assert entry.exception_type == "ValidationError"
        assert entry.diagnostics == ("<model>:3:1: error: probabilities sum to 0.5",)
        assert entry.traceback is not None
        assert "probabilities sum to 0.5" in entry.traceback

    def test_to_dict_counts_entries(self) -> None:
        log = ErrorLog(model_slug="chain3", run_id="run-456")
        log.record(ErrorCategory.PARSE, "unexpected ';'")
        log.record(ErrorCategory.STATE_CAP, "too many states")

        result = log.to_dict()
        assert (result["model_slug"], result["run_id"], result["error_count"]) == ("chain3", "run-456", 2)
        assert [item["category"] for item in result["errors"]] == ["parse", "state_cap"]


class TestErrorLogStore:
    def test_save_and_load(self, tmp_path: Path) -> None:
        store = ErrorLogStore(tmp_path / "errors")
        log = store.open("Backup System", "run-1")
        log.record(ErrorCategory.FAILURE_MODEL, "step probability >= 1", step="hazard")
        path = store.save(log)

        assert path == tmp_path / "errors" / "backup-system.json"
        assert not path.with_name("backup-system.json.tmp").exists()
        loaded = store.load("Backup System")
        assert loaded is not None
        assert loaded.run_id == "run-1"
        assert loaded.entries == log.entries

    def test_load_missing_or_corrupt_returns_none(self, tmp_path: Path) -> None:
        (tmp_path / "broken.json").write_text("{not json", "utf-8")
        store = ErrorLogStore(tmp_path)
        assert store.load("nothing") is None
        assert store.load("broken") is None

    def test_open_continues_the_same_run_only(self, tmp_path: Path) -> None:
        store = ErrorLogStore(tmp_path)
        log = store.open("m", "run-1")
        log.record(ErrorCategory.FILE_IO, "cannot write")
        store.save(log)

        assert len(store.open("m", "run-1").entries) == 1
        assert store.open("m", "run-2").entries == []

    def test_saved_file_is_plain_json(self, tmp_path: Path) -> None:
        store = ErrorLogStore(tmp_path)
        store.save(ErrorLog(model_slug="m", run_id="r"))
        data = json.loads((tmp_path / "m.json").read_text("utf-8"))
        assert data == {"model_slug": "m", "run_id": "r", "error_count": 0, "errors": []}
