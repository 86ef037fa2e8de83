from __future__ import annotations

import pytest

from dtsafety.model import Automaton, GuardedTransition, SystemModel
from dtsafety.predicates import (
    FALSE,
    TRUE,
    And,
    FailureActive,
    InState,
    Not,
    Or,
    PredicateError,
    StateIs,
    assume_failure,
    check_resolved,
    compile_predicate,
    conjoin,
    disjoin,
    negate,
    render,
    simplify,
    syntactically_exclusive,
)


def _index() -> SystemModel:
    lamp = Automaton("L", ("off", "on"), "off", (GuardedTransition("off", "on"), GuardedTransition("on", "off")))
    failure = Automaton("F", ("no", "yes"), "no", (GuardedTransition("no", "no"),))
    return SystemModel(
        name="index",
        automata=(lamp, failure),
        failures=(),
        hazard=FALSE,
        dt_seconds=1.0,
        in_predicates=((("L", "on"), Or((StateIs("L", "on"), FailureActive("F")))),),
    )


def test_constant_folding() -> None:
    a = StateIs("L", "on")
    assert conjoin(TRUE, a) == a
    assert conjoin(a, FALSE) == FALSE
    assert disjoin(FALSE, a) == a
    assert disjoin(a, TRUE) == TRUE
    assert negate(negate(a)) == a
    assert simplify(And((a, Not(FALSE)))) == a


def test_conjoin_flattens_nested_operands() -> None:
    a, b, c = StateIs("L", "on"), FailureActive("F"), StateIs("L", "off")
    assert conjoin(And((a, b)), c) == And((a, b, c))
    assert disjoin(a, Or((b, c))) == Or((a, b, c))


def test_compiled_predicate_reads_local_states() -> None:
    index = _index()
    on = compile_predicate(StateIs("L", "on"), index)
    failed = compile_predicate(FailureActive("F"), index)
    assert on((1, 0)) and not on((0, 0))
    assert failed((0, 1)) and not failed((0, 0))


def test_in_state_uses_the_expansion() -> None:
    index = _index()
    observed_on = compile_predicate(InState("L", "on"), index)
    assert observed_on((0, 1))
    assert not observed_on((0, 0))
    # No expansion registered: plain state test.
    observed_off = compile_predicate(InState("L", "off"), index)
    assert observed_off((0, 1))


def test_unresolved_atoms_are_reported() -> None:
    index = _index()
    with pytest.raises(PredicateError, match="undeclared automaton"):
        compile_predicate(StateIs("X", "on"), index)
    problems = check_resolved(And((StateIs("L", "dim"), FailureActive("G"))), index)
    assert [problem.reason for problem in problems] == [
        "automaton 'L' has no state 'dim'",
        "no failure automaton with this name",
    ]


def test_assume_failure_substitutes_and_simplifies() -> None:
    guard = And((StateIs("L", "on"), Not(FailureActive("F"))))
    assert assume_failure(guard, "F", False) == StateIs("L", "on")
    assert assume_failure(guard, "F", True) == FALSE
    assert assume_failure(guard, "G", True) == guard


def test_syntactic_exclusivity() -> None:
    f = FailureActive("F")
    on, off = StateIs("L", "on"), StateIs("L", "off")
    assert syntactically_exclusive(f, Not(f))
    assert syntactically_exclusive(And((on, f)), And((off, f)))
    assert syntactically_exclusive(And((on, f)), And((on, Not(f))))
    assert not syntactically_exclusive(on, f)


@pytest.mark.parametrize(
    ("expr", "text"),
    [
        (And((Or((StateIs("A", "x"), FailureActive("F"))), Not(FailureActive("G")))), "(A.state == x | F) & !G"),
        (Not(And((FailureActive("F"), FailureActive("G")))), "!(F & G)"),
        (Or((And((FailureActive("F"), FailureActive("G"))), InState("A", "y"))), "F & G | A.in(y)"),
    ],
)
def test_render_uses_minimal_parentheses(expr, text: str) -> None:
    assert render(expr) == text
