"""Synchronous automata, failure-mode declarations and the system model."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .diagnostics import Diagnostic
from .predicates import TRUE, GlobalState, PredicateExpr


class ModelError(RuntimeError):
    """Base class for model construction and analysis failures."""


class ValidationError(ModelError):
    """Raised when a model fails validation; carries the diagnostics."""

    def __init__(self, diagnostics: Sequence[Diagnostic]) -> None:
        messages = "; ".join(diagnostic.message for diagnostic in diagnostics if diagnostic.is_error)
        super().__init__(messages or "model is invalid")
        self.diagnostics = list(diagnostics)


class FailureModelError(ModelError):
    """Raised for failure declarations that cannot be turned into automata."""


class AnalysisError(ModelError):
    """Raised when an analysis is asked something the state space cannot answer."""


class AutomatonKind(Enum):
    FUNCTIONAL = "functional"
    FAILURE = "failure"
    DECIDE = "decide"


class FailurePattern(Enum):
    PERSISTENT = "persistent"
    TRANSIENT = "transient"
    PER_TIME = "per_time"
    PER_DEMAND = "per_demand"


@dataclass(frozen=True)
class GuardedTransition:
    source: str
    target: str
    guard: PredicateExpr = TRUE
    probability: float = 1.0


@dataclass(frozen=True)
class Automaton:
    name: str
    states: tuple[str, ...]
    initial: str
    transitions: tuple[GuardedTransition, ...]
    kind: AutomatonKind = AutomatonKind.FUNCTIONAL
    _positions: Mapping[str, int] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_positions", {state: i for i, state in enumerate(self.states)})

    def state_index(self, state: str) -> int:
        return self._positions[state]

    def has_state(self, state: str) -> bool:
        return state in self._positions

    def transitions_from(self, state: str) -> list[GuardedTransition]:
        return [transition for transition in self.transitions if transition.source == state]


@dataclass(frozen=True)
class FailureModeDecl:
    """A failure mode with its occurrence pattern.

    Rates are per hour; ``probability`` is the per-demand failure probability.
    ``demand`` is the demand condition of a per-demand mode, ``affected`` the
    automaton whose demand transition the mode gates.
    """

    name: str
    pattern: FailurePattern
    rate_per_hour: float | None = None
    repair_per_hour: float | None = None
    probability: float | None = None
    demand: PredicateExpr | None = None
    affected: str | None = None


@dataclass(frozen=True)
class SystemModel:
    name: str
    automata: tuple[Automaton, ...]
    failures: tuple[FailureModeDecl, ...]
    hazard: PredicateExpr
    dt_seconds: float
    horizon: int | None = None
    hazard_name: str = "H"
    observables: tuple[tuple[str, PredicateExpr], ...] = ()
    in_predicates: tuple[tuple[tuple[str, str], PredicateExpr], ...] = ()
    _automaton_positions: Mapping[str, int] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]
    _in_map: Mapping[tuple[str, str], PredicateExpr] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_automaton_positions", {automaton.name: i for i, automaton in enumerate(self.automata)}
        )
        object.__setattr__(self, "_in_map", dict(self.in_predicates))

    # AtomIndex protocol
    def automaton_position(self, name: str) -> int:
        return self._automaton_positions[name]

    def state_position(self, automaton: str, state: str) -> int:
        return self.automata[self._automaton_positions[automaton]].state_index(state)

    def in_expansion(self, automaton: str, state: str) -> PredicateExpr | None:
        if automaton not in self._automaton_positions:
            raise KeyError(automaton)
        return self._in_map.get((automaton, state))

    def automaton(self, name: str) -> Automaton:
        return self.automata[self._automaton_positions[name]]

    def has_automaton(self, name: str) -> bool:
        return name in self._automaton_positions

    def failure(self, name: str) -> FailureModeDecl:
        for decl in self.failures:
            if decl.name == name:
                return decl
        raise KeyError(name)

    @property
    def failure_names(self) -> tuple[str, ...]:
        return tuple(decl.name for decl in self.failures)

    def initial_state(self) -> GlobalState:
        return tuple(automaton.state_index(automaton.initial) for automaton in self.automata)

    def describe(self, state: GlobalState) -> dict[str, str]:
        return {automaton.name: automaton.states[local] for automaton, local in zip(self.automata, state)}

    def with_automata(self, automata: Iterable[Automaton]) -> "SystemModel":
        return replace(self, automata=tuple(automata))

    def replace_automaton(self, automaton: Automaton) -> "SystemModel":
        automata = list(self.automata)
        automata[self._automaton_positions[automaton.name]] = automaton
        return replace(self, automata=tuple(automata))
