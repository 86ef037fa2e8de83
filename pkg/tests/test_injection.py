from __future__ import annotations

import numpy as np
import pytest

from dtsafety.composition import Flavor, compose, failure_label
from dtsafety.failures import AnalysisMode, instantiate
from dtsafety.injection import InjectionError, demand_states, inject_per_demand
from dtsafety.model import AutomatonKind
from dtsafety.modellang import lower, parse
from dtsafety.predicates import InState
from dtsafety.quantitative import bounded_until, hazard_probability
from dtsafety.validation import validate

TWO_SUCCESSORS = """
const dt = 1s;
automaton E { states p, q; init p; p -> { 0.5: p, 0.5: q }; q -> { 0.5: p, 0.5: q }; }
automaton A {
    states wait, idle, a, b, c;
    init wait;
    wait -> idle;
    idle -> a [E.state == p & !F];
    idle -> b [E.state == q & !F];
    idle -> c [F];
    a -> a;
    b -> b;
    c -> c;
}
failure F per_demand(0.2) on A demand(A.state == idle);
hazard H = A.state == c;
"""


def _model(text: str):
    return lower(parse(text, "test.ssm"))


def test_demand_states_split_success_and_failure() -> None:
    model = _model(TWO_SUCCESSORS)
    (item,) = demand_states(model.automaton("A"), "F")
    assert item.state == "idle"
    assert item.merged == "idle'"
    assert item.success_targets == ("a", "b")
    assert item.failure_targets == ("c",)
    assert item.pairs() == [("a", "c"), ("b", "c")]


def test_general_case_builds_a_decide_automaton() -> None:
    injected = instantiate(_model(TWO_SUCCESSORS), AnalysisMode.PROBABILISTIC)
    kinds = {automaton.name: automaton.kind for automaton in injected.automata}
    assert kinds["A_F_decide"] is AutomatonKind.DECIDE
    assert kinds["F"] is AutomatonKind.FAILURE
    assert "idle'" in injected.automaton("A").states
    assert injected.hazard == InState("A", "c")
    assert validate(injected, Flavor.DTMC) == []


def test_successor_observed_through_in_predicates() -> None:
    space = compose(instantiate(_model(TWO_SUCCESSORS), AnalysisMode.PROBABILISTIC), Flavor.DTMC)
    everywhere = np.ones(space.size, dtype=bool)
    # One demand at step 1: the failure successor with probability 0.2 and
    # each success successor with half of the remaining mass.
    assert hazard_probability(space, 1) == 0.0
    assert hazard_probability(space, 2) == pytest.approx(0.2)
    assert hazard_probability(space, 6) == pytest.approx(0.2)
    assert bounded_until(space, everywhere, InState("A", "a"), 2).initial == pytest.approx(0.4)
    assert bounded_until(space, everywhere, InState("A", "b"), 3).initial == pytest.approx(0.4)


def test_elided_and_general_construction_agree(backup_model) -> None:
    elided = instantiate(backup_model, AnalysisMode.PROBABILISTIC)
    general = instantiate(backup_model, AnalysisMode.PROBABILISTIC, elide_decide=False)
    assert not any(automaton.kind is AutomatonKind.DECIDE for automaton in elided.automata)
    assert any(automaton.kind is AutomatonKind.DECIDE for automaton in general.automata)
    left = compose(elided, Flavor.DTMC)
    right = compose(general, Flavor.DTMC)
    assert hazard_probability(left, 200) == pytest.approx(hazard_probability(right, 200), rel=1e-9)


def test_failure_automaton_only_moves_on_demand(backup_model) -> None:
    injected = instantiate(backup_model, AnalysisMode.PROBABILISTIC)
    decl = injected.failure("A2FailsActivate")
    space = compose(injected, Flavor.DTMC)
    demand = space.evaluate(decl.demand)
    failed = space.label(failure_label("A2FailsActivate"))
    assert demand.any()
    for state in np.flatnonzero(~demand):
        successors = space.successors(int(state))
        assert (failed[successors] == failed[state]).all()
    assert failed.any()


def test_probabilistic_gated_transition_is_rejected() -> None:
    model = _model(
        """
        const dt = 1s;
        automaton A { states s, t; init s; s -> { 0.5: t, 0.5: s } [!F]; s -> s [F]; t -> t; }
        failure F per_demand(0.1) on A demand(A.state == s);
        hazard H = A.state == t;
        """
    )
    with pytest.raises(InjectionError, match="probabilistic transition"):
        inject_per_demand(model, model.failure("F"))


def test_missing_failure_branch_is_rejected() -> None:
    model = _model(
        """
        const dt = 1s;
        automaton A { states s, t; init s; s -> t [!F]; s -> s [A.state == t]; t -> t; }
        failure F per_demand(0.1) on A demand(A.state == s);
        hazard H = A.state == t;
        """
    )
    with pytest.raises(InjectionError, match="no failure transition"):
        inject_per_demand(model, model.failure("F"))


@pytest.mark.parametrize("elide_decide", [True, False])
def test_in_predicates_partition_every_reachable_state(elide_decide: bool) -> None:
    model = instantiate(_model(TWO_SUCCESSORS), AnalysisMode.PROBABILISTIC, elide_decide=elide_decide)
    space = compose(model, Flavor.DTMC)
    original = ("wait", "idle", "a", "b", "c")
    memberships = np.column_stack([space.evaluate(InState("A", state)) for state in original])
    assert (memberships.sum(axis=1) == 1).all()


def test_case_study_in_predicates_partition_the_backup_unit(backup_model) -> None:
    space = compose(instantiate(backup_model, AnalysisMode.PROBABILISTIC), Flavor.DTMC)
    memberships = np.column_stack([space.evaluate(InState("A2", state)) for state in ("idle", "sig", "noSig")])
    assert (memberships.sum(axis=1) == 1).all()


TWO_DEMANDS = """
const dt = 1s;
automaton A { states wait, idle, ok, bad; init wait; wait -> idle; idle -> ok [!F]; idle -> bad [F]; ok -> ok; bad -> bad; }
automaton B { states wait, idle, ok, bad; init wait; wait -> idle; idle -> ok [!G]; idle -> bad [G]; ok -> ok; bad -> bad; }
failure F per_demand(0.2) on A demand(A.state == idle);
failure G per_demand(0.3) on B demand(B.state == idle);
hazard H = A.state == bad | B.state == bad;
"""


def test_injection_order_does_not_matter() -> None:
    model = _model(TWO_DEMANDS)
    f_first = inject_per_demand(model, model.failure("F"))
    f_first = inject_per_demand(f_first, f_first.failure("G"))
    g_first = inject_per_demand(model, model.failure("G"))
    g_first = inject_per_demand(g_first, g_first.failure("F"))

    left = compose(f_first, Flavor.DTMC)
    right = compose(g_first, Flavor.DTMC)
    assert left.size == right.size
    assert {frozenset(left.describe(i).items()) for i in range(left.size)} == {
        frozenset(right.describe(i).items()) for i in range(right.size)
    }
    for k in (2, 5):
        assert hazard_probability(left, k) == pytest.approx(hazard_probability(right, k), abs=1e-15)
    assert hazard_probability(left, 5) == pytest.approx(1 - 0.8 * 0.7)
