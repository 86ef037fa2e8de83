"""Text rendering of analysis results for the dtsafety CLI."""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from ..composition import StateSpace
    from ..diagnostics import Diagnostic
    from ..failures import ApproximationPoint
    from ..qualitative import DccaResult
    from ..quantitative import FtaBoundReport
    from ..simulation import MonteCarloEstimate


def render_diagnostics(diagnostics: Sequence["Diagnostic"], source_name: str | None) -> str:
    return "\n".join(item.render(source_name) for item in diagnostics)


def render_validation(model: str, flavors: Sequence[str], diagnostics: Sequence["Diagnostic"]) -> str:
    errors = sum(1 for item in diagnostics if item.is_error)
    warnings = len(diagnostics) - errors
    status = "valid" if not errors else "invalid"
    return f"{model}: {status} ({', '.join(flavors)}; {errors} error(s), {warnings} warning(s))\n"


def _state_line(state: dict[str, str]) -> str:
    return ", ".join(f"{name}={value}" for name, value in state.items())


def render_dcca(result: "DccaResult") -> str:
    lines = [f"Hazard {result.hazard}: {len(result.sets)} minimal critical set(s)"]
    if result.functional_violation:
        lines.append("  the hazard is reachable without any failure")
    for item in result.sets:
        lines.append("  {" + ", ".join(item.failures) + "}")
    lines.append(
        f"Explored {result.stats.states} states, {result.stats.checks} checks, {result.stats.pruned} pruned"
    )
    for item in result.sets:
        if not item.witness:
            continue
        lines.append("")
        lines.append("Witness for {" + ", ".join(item.failures) + "}")
        for step, state in enumerate(item.witness):
            lines.append(f"  {step}: {_state_line(result.witness_states[state])}")
    return "\n".join(lines) + "\n"


def render_hazard(
    space: "StateSpace", k: int, probability: float, runtime_ms: float, curve_points: int | None = None
) -> str:
    t = k * space.model.dt_seconds
    lines = [
        f"P[true U<={k} {space.model.hazard_name}] = {probability:.10g}"
        + (" (maximum over choices)" if space.flavor.value == "mdp" else ""),
        f"  horizon: {k} steps ({t:g} s)",
        f"  states: {space.size}, transitions: {space.edge_count}",
        f"  runtime: {runtime_ms:.0f} ms",
    ]
    if curve_points is not None:
        lines.append(f"  curve: {curve_points} points")
    return "\n".join(lines) + "\n"


def render_fta(report: "FtaBoundReport", k: int) -> str:
    lines = [f"FTA bound at k={k}: {report.total:.10g}"]
    for term in report.terms:
        lines.append(f"  {{{', '.join(term.failures)}}}: {term.product:.6g}")
    if report.model_checked is not None:
        relation = "BELOW" if report.violated else "above"
        lines.append(f"  model-checked probability {report.model_checked:.10g} ({relation} the bound)")
    return "\n".join(lines) + "\n"


def render_approx(points: Sequence["ApproximationPoint"], worst: "ApproximationPoint | None") -> str:
    lines = [f"{'t [h]':>12} {'exp cdf':>14} {'geom cdf':>14} {'abs err':>12} {'rel err':>12}"]
    for point in points:
        relative = f"{point.relative:12.4e}" if point.relative is not None else f"{'-':>12}"
        lines.append(
            f"{point.t_hours:12.4f} {point.exp_cdf:14.8f} {point.geom_cdf:14.8f} {point.absolute:12.4e} {relative}"
        )
    if worst is not None:
        lines.append(f"max abs err {worst.absolute:.6g} at t = {worst.t_hours:g} h")
    return "\n".join(lines) + "\n"


def render_simulation(estimate: "MonteCarloEstimate", k: int, model_checked: float | None) -> str:
    lines = [
        f"Monte Carlo estimate at k={k}: {estimate.estimate:.6g} +/- {estimate.half_width:.3g}",
        f"  {estimate.hits} of {estimate.samples} trajectories hit the hazard (seed {estimate.seed})",
    ]
    if model_checked is not None:
        deviation = abs(estimate.estimate - model_checked)
        sigmas = deviation / estimate.sigma if estimate.sigma > 0 else float("inf") if deviation else 0.0
        lines.append(f"  model-checked {model_checked:.6g}, deviation {sigmas:.2f} sigma")
    return "\n".join(lines) + "\n"
