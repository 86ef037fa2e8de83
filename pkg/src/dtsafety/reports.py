"""JSON and CSV reports.

Reports carry ``"schema": 1``, keep the key order in which they are built and
render floats with ``%.17g``, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .composition import StateSpace
from .diagnostics import Diagnostic
from .failures import ApproximationPoint, max_absolute_error
from .qualitative import DccaResult
from .quantitative import FtaBoundReport, HazardCurve
from .simulation import MonteCarloEstimate
from .utils import ensure_dir, format_float

SCHEMA_VERSION = 1

CURVE_COLUMNS = ("k", "t_seconds", "probability")
APPROX_COLUMNS = ("t_hours", "exp_cdf", "geom_cdf", "abs_err", "rel_err")


def to_json(payload: Any) -> str:
    return _render(payload, 0) + "\n"


def _render(value: Any, depth: int) -> str:
    indent = "  " * (depth + 1)
    closing = "  " * depth
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else "null"
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = [f"{indent}{json.dumps(str(key))}: {_render(item, depth + 1)}" for key, item in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + closing + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(isinstance(item, (str, int, float)) and not isinstance(item, bool) for item in value):
            return "[" + ", ".join(_render(item, depth + 1) for item in value) + "]"
        return "[\n" + ",\n".join(indent + _render(item, depth + 1) for item in value) + "\n" + closing + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_text_atomic(path: Path, text: str) -> None:
    ensure_dir(path.parent)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_text(text, "utf-8")
    tmp_path.replace(path)


def write_json(path: Path, payload: Mapping[str, Any]) -> None:
    write_text_atomic(path, to_json(payload))


def _header(kind: str, model: str | None) -> dict[str, Any]:
    header: dict[str, Any] = {"schema": SCHEMA_VERSION, "report": kind}
    if model is not None:
        header["model"] = model
    return header


def _diagnostic(item: Diagnostic, source_name: str | None) -> dict[str, Any]:
    payload: dict[str, Any] = {"severity": item.severity.value, "message": item.message}
    if item.span is not None:
        payload["line"] = item.span.line
        payload["column"] = item.span.column
    if item.automaton is not None:
        payload["automaton"] = item.automaton
    if item.state is not None:
        payload["state"] = item.state
    payload["text"] = item.render(source_name)
    return payload


def validation_report(
    model: str | None, diagnostics: Sequence[Diagnostic], source_name: str | None = None
) -> dict[str, Any]:
    payload = _header("validate", model)
    payload["valid"] = not any(item.is_error for item in diagnostics)
    payload["errors"] = sum(1 for item in diagnostics if item.is_error)
    payload["warnings"] = sum(1 for item in diagnostics if not item.is_error)
    payload["diagnostics"] = [_diagnostic(item, source_name) for item in diagnostics]
    return payload


def dcca_report(model: str, result: DccaResult, occurrence: str) -> dict[str, Any]:
    payload = _header("dcca", model)
    payload["hazard"] = result.hazard
    payload["occurrence"] = occurrence
    payload["failure_modes"] = list(result.failure_modes)
    payload["functional_violation"] = result.functional_violation
    payload["minimal_critical_sets"] = [list(item.failures) for item in result.sets]
    payload["witnesses"] = [
        {
            "set": list(item.failures),
            "path": [result.witness_states[state] for state in item.witness],
        }
        for item in result.sets
    ]
    payload["stats"] = {
        "states": result.stats.states,
        "checks": result.stats.checks,
        "pruned": result.stats.pruned,
    }
    return payload


def hazard_report(
    model: str,
    space: StateSpace,
    k: int,
    probability: float,
    *,
    curve: HazardCurve | None = None,
    runtime_ms: float | None = None,
) -> dict[str, Any]:
    payload = _header("hazard", model)
    payload["hazard"] = space.model.hazard_name
    payload["flavor"] = space.flavor.value
    payload["k"] = k
    payload["t"] = k * space.model.dt_seconds
    payload["probability"] = probability
    payload["states"] = space.size
    if curve is not None:
        payload["curve_points"] = len(curve.points)
    if runtime_ms is not None:
        payload["runtime_ms"] = runtime_ms
    return payload


def fta_report(
    model: str, k: int, report: FtaBoundReport, probabilities: Mapping[str, float]
) -> dict[str, Any]:
    payload = _header("fta-bound", model)
    payload["k"] = k
    payload["failure_probabilities"] = {name: probabilities[name] for name in sorted(probabilities)}
    payload["terms"] = [{"set": list(term.failures), "product": term.product} for term in report.terms]
    payload["bound"] = report.total
    payload["model_checked"] = report.model_checked
    payload["bound_violated"] = report.violated
    return payload


def approx_report(rate_per_hour: float, dt_seconds: float, points: Sequence[ApproximationPoint]) -> dict[str, Any]:
    payload = _header("approx-error", None)
    payload["rate_per_hour"] = rate_per_hour
    payload["dt_seconds"] = dt_seconds
    payload["points"] = [
        {
            "t_hours": point.t_hours,
            "steps": point.steps,
            "exp_cdf": point.exp_cdf,
            "geom_cdf": point.geom_cdf,
            "abs_err": point.absolute,
            "rel_err": point.relative,
        }
        for point in points
    ]
    worst = max_absolute_error(points)
    payload["max_abs_err"] = None if worst is None else {"t_hours": worst.t_hours, "abs_err": worst.absolute}
    return payload


def simulation_report(
    model: str, k: int, estimate: MonteCarloEstimate, *, model_checked: float | None = None
) -> dict[str, Any]:
    payload = _header("simulate", model)
    payload["k"] = k
    payload["samples"] = estimate.samples
    payload["seed"] = estimate.seed
    payload["hits"] = estimate.hits
    payload["estimate"] = estimate.estimate
    payload["half_width"] = estimate.half_width
    payload["sigma"] = estimate.sigma
    if model_checked is not None:
        payload["model_checked"] = model_checked
        payload["within_3_sigma"] = abs(estimate.estimate - model_checked) <= 3 * estimate.sigma
    return payload


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(cell) for cell in row])
    return buffer.getvalue()


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return value


def curve_csv(curve: HazardCurve) -> str:
    return _csv_text(CURVE_COLUMNS, ((point.k, point.t_seconds, point.probability) for point in curve.points))


def approx_csv(points: Sequence[ApproximationPoint]) -> str:
    return _csv_text(
        APPROX_COLUMNS,
        ((point.t_hours, point.exp_cdf, point.geom_cdf, point.absolute, point.relative) for point in points),
    )
