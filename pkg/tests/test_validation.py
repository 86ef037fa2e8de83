from __future__ import annotations

import pytest

from dtsafety.composition import Flavor, StateCapExceeded
from dtsafety.diagnostics import Severity
from dtsafety.failures import AnalysisMode, instantiate
from dtsafety.model import (
    Automaton,
    FailureModeDecl,
    FailurePattern,
    GuardedTransition,
    SystemModel,
    ValidationError,
)
from dtsafety.predicates import FALSE, StateIs
from dtsafety.validation import ensure_valid, validate


def _system(*automata: Automaton, failures=(), hazard=FALSE, dt: float = 1.0) -> SystemModel:
    return SystemModel(name="t", automata=tuple(automata), failures=tuple(failures), hazard=hazard, dt_seconds=dt)


def _messages(model: SystemModel, flavor: Flavor = Flavor.DTMC) -> list[str]:
    return [item.message for item in validate(model, flavor)]


def test_case_study_is_valid_in_both_modes(backup_model) -> None:
    assert validate(instantiate(backup_model, AnalysisMode.QUALITATIVE), Flavor.NONDETERMINISTIC) == []
    assert validate(instantiate(backup_model, AnalysisMode.PROBABILISTIC), Flavor.DTMC) == []


def test_probabilities_must_sum_to_one() -> None:
    automaton = Automaton(
        "A",
        ("s", "t"),
        "s",
        (GuardedTransition("s", "t", probability=0.5), GuardedTransition("s", "s", probability=0.4), GuardedTransition("t", "t")),
    )
    messages = _messages(_system(automaton))
    assert messages == ["probabilities sum to 0.9 for s under guard [true]"]
    # The qualitative reading ignores the weights.
    assert _messages(_system(automaton), Flavor.NONDETERMINISTIC) == []


def test_undeclared_names() -> None:
    automaton = Automaton("A", ("s",), "z", (GuardedTransition("s", "w"),))
    messages = _messages(_system(automaton, hazard=StateIs("B", "s")))
    assert "initial state 'z' is not declared" in messages
    assert "transition references undeclared state 'w'" in messages
    assert any(message.startswith("hazard H: unresolved atom B.state == s") for message in messages)


def test_reachable_deadlock_and_overlap_are_collected() -> None:
    stuck = Automaton("A", ("s", "t"), "s", (GuardedTransition("s", "t"),))
    overlapping = Automaton(
        "B",
        ("u", "v"),
        "u",
        (
            GuardedTransition("u", "v", StateIs("A", "s")),
            GuardedTransition("u", "u", StateIs("B", "u")),
            GuardedTransition("v", "v"),
        ),
    )
    diagnostics = validate(_system(stuck, overlapping))
    assert all(item.severity is Severity.ERROR for item in diagnostics)
    kinds = sorted((item.automaton, item.message.split(":", 1)[0]) for item in diagnostics)
    assert kinds == [("A", "deadlock"), ("B", "guards of automaton B overlap in state u")]


def test_never_satisfiable_demand_is_a_warning() -> None:
    automaton = Automaton("A", ("s", "t"), "s", (GuardedTransition("s", "s"), GuardedTransition("t", "t")))
    decl = FailureModeDecl("F", FailurePattern.PER_DEMAND, probability=0.1, demand=StateIs("A", "t"))
    diagnostics = validate(_system(automaton, failures=[decl]))
    assert [(item.severity, item.message) for item in diagnostics] == [
        (Severity.WARNING, "demand of failure mode 'F' is never satisfiable")
    ]


def test_ensure_valid_raises_with_diagnostics() -> None:
    with pytest.raises(ValidationError) as info:
        ensure_valid(_system(Automaton("A", ("s",), "s", (GuardedTransition("s", "s"),)), dt=0.0))
    assert info.value.diagnostics[0].message == "temporal resolution must be positive, got 0.0 s"


def test_state_cap_is_a_diagnostic_or_raises(chain_model) -> None:
    assert [item.message for item in validate(chain_model, Flavor.DTMC, state_cap=2)] == [
        "state space exceeds the cap of 2 states"
    ]
    with pytest.raises(StateCapExceeded):
        ensure_valid(chain_model, Flavor.DTMC, state_cap=2)
