"""Static and reachability-based well-formedness checks for system models."""

from __future__ import annotations

from collections import Counter
import logging

from .composition import DEFAULT_STATE_CAP, PROBABILITY_TOLERANCE, Flavor, StateCapExceeded, StateSpace, explore
from .diagnostics import Diagnostic, error, has_errors, warning
from .model import AutomatonKind, FailurePattern, SystemModel, ValidationError
from .predicates import PredicateExpr, check_resolved, render

_LOGGER = logging.getLogger(__name__)


def validate(
    model: SystemModel,
    flavor: Flavor = Flavor.DTMC,
    *,
    state_cap: int = DEFAULT_STATE_CAP,
    cap_as_error: bool = True,
) -> list[Diagnostic]:
    """Return all diagnostics for ``model`` composed as ``flavor``.

    The list is empty iff names and atoms resolve, probabilistic groups sum to
    one, dtmc guards are mutually exclusive and the transition relation is
    total in every reachable global state. Exceeding ``state_cap`` is an error
    diagnostic, or raises StateCapExceeded when ``cap_as_error`` is false.
    """
    diagnostics, _ = _diagnose(model, flavor, state_cap, cap_as_error)
    return diagnostics


def ensure_valid(model: SystemModel, flavor: Flavor = Flavor.DTMC, *, state_cap: int = DEFAULT_STATE_CAP) -> list[Diagnostic]:
    """Validate and raise ValidationError on errors; returns the warnings.

    StateCapExceeded propagates.
    """
    _, warnings = valid_space(model, flavor, state_cap=state_cap)
    return warnings


def valid_space(
    model: SystemModel, flavor: Flavor = Flavor.DTMC, *, state_cap: int = DEFAULT_STATE_CAP
) -> tuple[StateSpace, list[Diagnostic]]:
    """Validate and return the explored state space together with the warnings.

    The space is the one the reachability checks explored, equal to what
    ``compose`` builds for a valid model. Raises ValidationError on errors;
    StateCapExceeded propagates.
    """
    diagnostics, space = _diagnose(model, flavor, state_cap, cap_as_error=False)
    if has_errors(diagnostics) or space is None:
        raise ValidationError(diagnostics)
    return space, diagnostics


def _diagnose(
    model: SystemModel, flavor: Flavor, state_cap: int, cap_as_error: bool
) -> tuple[list[Diagnostic], StateSpace | None]:
    diagnostics = _check_names(model)
    diagnostics.extend(_check_predicates(model))
    if flavor is not Flavor.NONDETERMINISTIC:
        diagnostics.extend(_check_probabilities(model))
    if has_errors(diagnostics):
        return diagnostics, None

    reachable, space = _check_reachable(model, flavor, state_cap, cap_as_error)
    diagnostics.extend(reachable)
    _LOGGER.debug("Validated %s (%s): %d diagnostics", model.name, flavor.value, len(diagnostics))
    return diagnostics, space


def _check_names(model: SystemModel) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []
    for name, count in Counter(automaton.name for automaton in model.automata).items():
        if count > 1:
            diagnostics.append(error(f"automaton name '{name}' declared {count} times", automaton=name))
    for name, count in Counter(model.failure_names).items():
        if count > 1:
            diagnostics.append(error(f"failure mode '{name}' declared {count} times"))
    if model.dt_seconds <= 0:
        diagnostics.append(error(f"temporal resolution must be positive, got {model.dt_seconds} s"))
    if model.horizon is not None and model.horizon < 0:
        diagnostics.append(error(f"horizon must be non-negative, got {model.horizon}"))

    for automaton in model.automata:
        for state, count in Counter(automaton.states).items():
            if count > 1:
                diagnostics.append(
                    error(f"state '{state}' declared {count} times", automaton=automaton.name, state=state)
                )
        if not automaton.has_state(automaton.initial):
            diagnostics.append(
                error(f"initial state '{automaton.initial}' is not declared", automaton=automaton.name)
            )
        for transition in automaton.transitions:
            for endpoint in (transition.source, transition.target):
                if not automaton.has_state(endpoint):
                    diagnostics.append(
                        error(f"transition references undeclared state '{endpoint}'", automaton=automaton.name)
                    )
            if not 0.0 < transition.probability <= 1.0:
                diagnostics.append(
                    error(
                        f"probability {transition.probability} of {transition.source} -> {transition.target} "
                        "is outside (0, 1]",
                        automaton=automaton.name,
                        state=transition.source,
                    )
                )

    for decl in model.failures:
        if decl.rate_per_hour is not None and decl.rate_per_hour < 0:
            diagnostics.append(error(f"failure mode '{decl.name}' has a negative rate"))
        if decl.probability is not None and not 0.0 <= decl.probability <= 1.0:
            diagnostics.append(error(f"failure mode '{decl.name}' has probability {decl.probability} outside [0, 1]"))
        if decl.pattern is FailurePattern.PER_DEMAND and decl.demand is None:
            diagnostics.append(error(f"per-demand failure mode '{decl.name}' declares no demand"))
        if decl.affected is not None and not model.has_automaton(decl.affected):
            diagnostics.append(error(f"failure mode '{decl.name}' is attached to undeclared automaton '{decl.affected}'"))
    return diagnostics


def _check_predicates(model: SystemModel) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []

    def check(expr: PredicateExpr, where: str, automaton: str | None = None, state: str | None = None) -> None:
        for problem in check_resolved(expr, model):
            diagnostics.append(error(f"{where}: {problem}", automaton=automaton, state=state))

    check(model.hazard, f"hazard {model.hazard_name}")
    for name, expr in model.observables:
        check(expr, f"observable {name}")
    for decl in model.failures:
        if decl.demand is not None:
            check(decl.demand, f"demand of {decl.name}")
    for automaton in model.automata:
        if automaton.kind is AutomatonKind.DECIDE:
            continue
        for transition in automaton.transitions:
            check(transition.guard, f"guard of {transition.source} -> {transition.target}", automaton.name, transition.source)
    return diagnostics


def _check_probabilities(model: SystemModel) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []
    for automaton in model.automata:
        sums: dict[tuple[str, PredicateExpr], float] = {}
        for transition in automaton.transitions:
            key = (transition.source, transition.guard)
            sums[key] = sums.get(key, 0.0) + transition.probability
        for (source, guard), total in sums.items():
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                diagnostics.append(
                    error(
                        f"probabilities sum to {total:.12g} for {source} under guard [{render(guard)}]",
                        automaton=automaton.name,
                        state=source,
                    )
                )
    return diagnostics


def _check_reachable(
    model: SystemModel, flavor: Flavor, state_cap: int, cap_as_error: bool
) -> tuple[list[Diagnostic], StateSpace | None]:
    found: dict[tuple[str | None, str | None, str], Diagnostic] = {}

    def collect(diagnostic: Diagnostic) -> None:
        kind = diagnostic.message.split(":", 1)[0]
        found.setdefault((diagnostic.automaton, diagnostic.state, kind), diagnostic)

    try:
        space = explore(model, flavor, state_cap=state_cap, on_issue=collect)
    except StateCapExceeded as exc:
        if not cap_as_error:
            raise
        return [*found.values(), error(str(exc))], None

    diagnostics = list(found.values())
    for decl in model.failures:
        if decl.pattern is FailurePattern.PER_DEMAND and decl.demand is not None:
            if not space.evaluate(decl.demand).any():
                diagnostics.append(warning(f"demand of failure mode '{decl.name}' is never satisfiable"))
    return diagnostics, space
