"""Failure occurrence automata and the discrete-time approximation of failure rates."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
import logging
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import (
    Automaton,
    AutomatonKind,
    FailureModeDecl,
    FailureModelError,
    FailurePattern,
    GuardedTransition,
    SystemModel,
)
from .predicates import FALSE, TRUE, PredicateExpr, assume_failure, negate

_LOGGER = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
FAILURE_STATES = ("no", "yes")


class AnalysisMode(Enum):
    QUALITATIVE = "qualitative"
    PROBABILISTIC = "probabilistic"


def rate_to_step_probability(rate_per_hour: float, dt_seconds: float) -> float:
    """Per-step occurrence probability ``p = rate * dt`` of a per-time failure."""
    if rate_per_hour < 0:
        raise FailureModelError(f"failure rate must be non-negative, got {rate_per_hour}/h")
    if dt_seconds <= 0:
        raise FailureModelError(f"temporal resolution must be positive, got {dt_seconds} s")
    probability = rate_per_hour / SECONDS_PER_HOUR * dt_seconds
    if probability >= 1.0:
        raise FailureModelError(
            f"rate {rate_per_hour}/h at dt {dt_seconds} s gives step probability {probability:g} >= 1; "
            "choose a finer temporal resolution"
        )
    return probability


def geometric_cdf(probability: float, steps: int | np.ndarray) -> float | np.ndarray:
    """``1 - (1 - p)^k`` evaluated without cancellation for tiny ``p``."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    k = np.asarray(steps, dtype=np.float64)
    if np.any(k < 0):
        raise ValueError("step count must be non-negative")
    if probability == 1.0:
        result = np.where(k >= 1, 1.0, 0.0)
    else:
        result = -np.expm1(k * np.log1p(-probability))
    return float(result) if result.ndim == 0 else result


def exponential_cdf(rate_per_hour: float, hours: float | np.ndarray) -> float | np.ndarray:
    result = -np.expm1(-rate_per_hour * np.asarray(hours, dtype=np.float64))
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class ApproximationPoint:
    """Exponential vs. geometric occurrence probability at ``t = k * dt``."""

    t_hours: float
    steps: int
    exp_cdf: float
    geom_cdf: float
    absolute: float
    relative: float | None


def approximation_error(rate_per_hour: float, dt_seconds: float, t_hours: float) -> ApproximationPoint:
    """Compare both CDFs at the step boundary nearest to ``t_hours``.

    The relative error is undefined (None) at t = 0.
    """
    if t_hours < 0:
        raise ValueError(f"time must be non-negative, got {t_hours} h")
    probability = rate_to_step_probability(rate_per_hour, dt_seconds)
    steps = int(round(t_hours * SECONDS_PER_HOUR / dt_seconds))
    hours = steps * dt_seconds / SECONDS_PER_HOUR
    exp_value = exponential_cdf(rate_per_hour, hours)
    geom_value = geometric_cdf(probability, steps)
    absolute = abs(exp_value - geom_value)
    relative = absolute / exp_value if exp_value > 0 else None
    return ApproximationPoint(hours, steps, exp_value, geom_value, absolute, relative)


def approximation_sweep(
    rate_per_hour: float, dt_seconds: float, hours: Iterable[float]
) -> list[ApproximationPoint]:
    return [approximation_error(rate_per_hour, dt_seconds, t) for t in hours]


def sweep_hours(start: float, stop: float, points: int) -> list[float]:
    if points < 1:
        raise ValueError("a sweep needs at least one point")
    if stop < start:
        raise ValueError("sweep end lies before its start")
    return [float(value) for value in np.linspace(start, stop, points)]


def max_absolute_error(points: Sequence[ApproximationPoint]) -> ApproximationPoint | None:
    return max(points, key=lambda point: point.absolute, default=None)


def build_failure_automaton(
    decl: FailureModeDecl,
    mode: AnalysisMode,
    dt_seconds: float,
    *,
    demand: PredicateExpr | None = None,
) -> Automaton:
    """Two-state (no/yes) occurrence automaton of ``decl``.

    Qualitatively, persistent modes latch and every other pattern switches
    freely. Probabilistically, per-time modes leave ``no`` with the step
    probability of their rate and per-demand modes decide afresh on every step
    in which ``demand`` holds and keep their state on every other step.
    """
    if mode is AnalysisMode.QUALITATIVE:
        if decl.pattern is FailurePattern.PERSISTENT:
            transitions = [_t("no", "no"), _t("no", "yes"), _t("yes", "yes")]
        else:
            transitions = [_t("no", "no"), _t("no", "yes"), _t("yes", "no"), _t("yes", "yes")]
        return _failure_automaton(decl.name, transitions)

    if decl.pattern is FailurePattern.PER_DEMAND:
        gate = demand if demand is not None else decl.demand
        if gate is None:
            raise FailureModelError(f"per-demand failure mode '{decl.name}' has no demand predicate")
        if decl.probability is None:
            raise FailureModelError(f"per-demand failure mode '{decl.name}' has no failure probability")
        transitions = []
        for source in FAILURE_STATES:
            transitions.extend(_branch(source, "yes", "no", decl.probability, gate))
            transitions.append(_t(source, source, negate(gate)))
        return _failure_automaton(decl.name, transitions)

    if decl.rate_per_hour is None:
        raise FailureModelError(
            f"failure mode '{decl.name}' ({decl.pattern.value}) has no rate; "
            "probabilistic analysis needs per_time or per_demand occurrence"
        )
    if decl.pattern is FailurePattern.TRANSIENT and decl.repair_per_hour is None:
        raise FailureModelError(f"transient failure mode '{decl.name}' needs a repair rate for probabilistic analysis")
    occurrence = rate_to_step_probability(decl.rate_per_hour, dt_seconds)
    transitions = _branch("no", "yes", "no", occurrence, TRUE)
    if decl.repair_per_hour is None:
        transitions.append(_t("yes", "yes"))
    else:
        repair = rate_to_step_probability(decl.repair_per_hour, dt_seconds)
        transitions.extend(_branch("yes", "no", "yes", repair, TRUE))
    return _failure_automaton(decl.name, transitions)


def attach_failure_automata(
    model: SystemModel,
    mode: AnalysisMode,
    *,
    exclude: Iterable[str] = (),
) -> SystemModel:
    """Append occurrence automata for the declared failure modes.

    Per-demand modes are skipped in probabilistic mode; they are integrated by
    :func:`dtsafety.injection.inject_per_demand`.
    """
    skipped = set(exclude)
    automata = list(model.automata)
    for decl in model.failures:
        if decl.name in skipped or model.has_automaton(decl.name):
            continue
        if mode is AnalysisMode.PROBABILISTIC and decl.pattern is FailurePattern.PER_DEMAND:
            continue
        automata.append(build_failure_automaton(decl, mode, model.dt_seconds))
    return model.with_automata(automata)


def instantiate(model: SystemModel, mode: AnalysisMode, *, elide_decide: bool = True) -> SystemModel:
    """The analysable model: failure automata attached, per-demand modes injected."""
    from .injection import inject_per_demand

    result = attach_failure_automata(model, mode)
    if mode is AnalysisMode.PROBABILISTIC:
        for decl in model.failures:
            if decl.pattern is FailurePattern.PER_DEMAND and not result.has_automaton(decl.name):
                result = inject_per_demand(result, decl, elide_decide=elide_decide)
    _LOGGER.debug(
        "Instantiated %s (%s): %d automata",
        model.name,
        mode.value,
        len(result.automata),
    )
    return result


def pin_failures(model: SystemModel, pins: Mapping[str, str]) -> SystemModel:
    """Replace failure automata by constant ones that stay in the pinned state."""
    result = model
    for name, value in pins.items():
        if value not in FAILURE_STATES:
            raise FailureModelError(f"failure mode '{name}' can only be pinned to 'no' or 'yes', not '{value}'")
        if not result.has_automaton(name) or result.automaton(name).kind is not AutomatonKind.FAILURE:
            raise FailureModelError(f"no failure automaton named '{name}' to pin")
        pinned = Automaton(
            name=name,
            states=FAILURE_STATES,
            initial=value,
            transitions=(_t(value, value),),
            kind=AutomatonKind.FAILURE,
        )
        result = result.replace_automaton(pinned)
    return result


def functional_model(model: SystemModel, drop: Iterable[str] | None = None) -> SystemModel:
    """The model with the given failure modes (default: all) assumed absent.

    Occurrence predicates of dropped modes become ``false`` and their
    declarations are removed. Expects a model without failure automata.
    """
    dropped = set(model.failure_names if drop is None else drop)
    unknown = dropped - set(model.failure_names)
    if unknown:
        raise FailureModelError(f"unknown failure modes: {', '.join(sorted(unknown))}")

    def absent(expr: PredicateExpr) -> PredicateExpr:
        for name in dropped:
            expr = assume_failure(expr, name, False)
        return expr

    automata = []
    for automaton in model.automata:
        if automaton.name in dropped:
            continue
        transitions = []
        for transition in automaton.transitions:
            guard = absent(transition.guard)
            if guard != FALSE:
                transitions.append(replace(transition, guard=guard))
        automata.append(replace(automaton, transitions=tuple(transitions)))

    failures = tuple(
        replace(decl, demand=absent(decl.demand) if decl.demand is not None else None)
        for decl in model.failures
        if decl.name not in dropped
    )
    return replace(
        model,
        automata=tuple(automata),
        failures=failures,
        hazard=absent(model.hazard),
        observables=tuple((name, absent(expr)) for name, expr in model.observables),
    )


def without_failure_probabilities(model: SystemModel) -> SystemModel:
    """Declarations with every rate and per-demand probability set to zero."""
    failures = []
    for decl in model.failures:
        if decl.pattern is FailurePattern.PER_DEMAND:
            failures.append(replace(decl, probability=0.0))
        elif decl.rate_per_hour is not None:
            failures.append(replace(decl, rate_per_hour=0.0))
        else:
            failures.append(decl)
    return replace(model, failures=tuple(failures))


def scale_failure_probabilities(model: SystemModel, factor: float) -> SystemModel:
    """Rates multiplied by ``factor``; per-demand probabilities too, capped at 1."""
    if factor < 0:
        raise FailureModelError(f"scale factor must be non-negative, got {factor}")
    failures = []
    for decl in model.failures:
        if decl.pattern is FailurePattern.PER_DEMAND and decl.probability is not None:
            failures.append(replace(decl, probability=min(1.0, decl.probability * factor)))
        elif decl.rate_per_hour is not None:
            failures.append(replace(decl, rate_per_hour=decl.rate_per_hour * factor))
        else:
            failures.append(decl)
    return replace(model, failures=tuple(failures))


def _failure_automaton(name: str, transitions: list[GuardedTransition]) -> Automaton:
    return Automaton(
        name=name,
        states=FAILURE_STATES,
        initial="no",
        transitions=tuple(transitions),
        kind=AutomatonKind.FAILURE,
    )


def _t(source: str, target: str, guard: PredicateExpr = TRUE) -> GuardedTransition:
    return GuardedTransition(source, target, guard)


def _branch(
    source: str, hit: str, miss: str, probability: float, guard: PredicateExpr
) -> list[GuardedTransition]:
    """A probabilistic group; zero-probability branches are left out."""
    if probability <= 0.0:
        return [GuardedTransition(source, miss, guard)]
    if probability >= 1.0:
        return [GuardedTransition(source, hit, guard)]
    return [
        GuardedTransition(source, hit, guard, probability),
        GuardedTransition(source, miss, guard, 1.0 - probability),
    ]
