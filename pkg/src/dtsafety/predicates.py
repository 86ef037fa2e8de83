"""Boolean state predicates: guards, hazards, demands and observables.

Predicates are immutable trees. They are evaluated against a global state
(a tuple of local-state indices, one per automaton) after being compiled into
plain Python closures, which keeps state-space exploration cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Protocol, Sequence, Union

GlobalState = tuple[int, ...]
CompiledPredicate = Callable[[GlobalState], bool]


class PredicateError(ValueError):
    """Raised when a predicate references an undeclared automaton, state or failure."""

    def __init__(self, atom: "PredicateExpr", reason: str) -> None:
        super().__init__(f"unresolved atom {render(atom)}: {reason}")
        self.atom = atom
        self.reason = reason


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class StateIs:
    automaton: str
    state: str


@dataclass(frozen=True)
class InState:
    """Observable location of a transformed automaton (``M.in(d)``)."""

    automaton: str
    state: str


@dataclass(frozen=True)
class FailureActive:
    """Occurrence predicate of a failure mode: its automaton is not in ``no``."""

    failure: str


@dataclass(frozen=True)
class Not:
    operand: "PredicateExpr"


@dataclass(frozen=True)
class And:
    operands: tuple["PredicateExpr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["PredicateExpr", ...]


PredicateExpr = Union[Const, StateIs, InState, FailureActive, Not, And, Or]
Atom = Union[StateIs, InState, FailureActive]

TRUE = Const(True)
FALSE = Const(False)


class AtomIndex(Protocol):
    """Resolution of atoms against a concrete automaton layout."""

    def automaton_position(self, name: str) -> int:  # pragma: no cover - interface
        ...

    def state_position(self, automaton: str, state: str) -> int:  # pragma: no cover - interface
        ...

    def in_expansion(self, automaton: str, state: str) -> "PredicateExpr | None":  # pragma: no cover
        ...


def negate(expr: PredicateExpr) -> PredicateExpr:
    if isinstance(expr, Const):
        return Const(not expr.value)
    if isinstance(expr, Not):
        return expr.operand
    return Not(expr)


def conjoin(*exprs: PredicateExpr) -> PredicateExpr:
    operands: list[PredicateExpr] = []
    for expr in exprs:
        if expr == TRUE:
            continue
        if expr == FALSE:
            return FALSE
        if isinstance(expr, And):
            operands.extend(expr.operands)
        else:
            operands.append(expr)
    if not operands:
        return TRUE
    if len(operands) == 1:
        return operands[0]
    return And(tuple(operands))


def disjoin(*exprs: PredicateExpr) -> PredicateExpr:
    operands: list[PredicateExpr] = []
    for expr in exprs:
        if expr == FALSE:
            continue
        if expr == TRUE:
            return TRUE
        if isinstance(expr, Or):
            operands.extend(expr.operands)
        else:
            operands.append(expr)
    if not operands:
        return FALSE
    if len(operands) == 1:
        return operands[0]
    return Or(tuple(operands))


def simplify(expr: PredicateExpr) -> PredicateExpr:
    """Fold constants; the result is semantically equal to ``expr``."""
    if isinstance(expr, Not):
        return negate(simplify(expr.operand))
    if isinstance(expr, And):
        return conjoin(*(simplify(item) for item in expr.operands))
    if isinstance(expr, Or):
        return disjoin(*(simplify(item) for item in expr.operands))
    return expr


def atoms(expr: PredicateExpr) -> Iterator[Atom]:
    if isinstance(expr, (StateIs, InState, FailureActive)):
        yield expr
    elif isinstance(expr, Not):
        yield from atoms(expr.operand)
    elif isinstance(expr, (And, Or)):
        for item in expr.operands:
            yield from atoms(item)


def map_atoms(expr: PredicateExpr, fn: Callable[[Atom], PredicateExpr]) -> PredicateExpr:
    """Rebuild ``expr`` with every atom replaced by ``fn(atom)``."""
    if isinstance(expr, (StateIs, InState, FailureActive)):
        return fn(expr)
    if isinstance(expr, Not):
        return Not(map_atoms(expr.operand, fn))
    if isinstance(expr, And):
        return And(tuple(map_atoms(item, fn) for item in expr.operands))
    if isinstance(expr, Or):
        return Or(tuple(map_atoms(item, fn) for item in expr.operands))
    return expr


def references_failure(expr: PredicateExpr, failure: str) -> bool:
    return any(isinstance(atom, FailureActive) and atom.failure == failure for atom in atoms(expr))


def assume_failure(expr: PredicateExpr, failure: str, active: bool) -> PredicateExpr:
    """Substitute a truth value for the occurrence predicate of ``failure``."""

    def replace(atom: Atom) -> PredicateExpr:
        if isinstance(atom, FailureActive) and atom.failure == failure:
            return Const(active)
        return atom

    return simplify(map_atoms(expr, replace))


def syntactically_exclusive(left: PredicateExpr, right: PredicateExpr) -> bool:
    """Cheap sufficient check that two guards can never hold together."""
    if left == FALSE or right == FALSE:
        return True
    if negate(left) == right or negate(right) == left:
        return True
    left_tests = _state_tests(left)
    right_tests = _state_tests(right)
    for automaton, value in left_tests.items():
        other = right_tests.get(automaton)
        if other is not None and other != value:
            return True
    left_literals = _literals(left)
    right_literals = _literals(right)
    return any(negate(literal) in right_literals for literal in left_literals)


def _conjuncts(expr: PredicateExpr) -> Sequence[PredicateExpr]:
    return expr.operands if isinstance(expr, And) else (expr,)


def _literals(expr: PredicateExpr) -> set[PredicateExpr]:
    return {item for item in _conjuncts(expr)}


def _state_tests(expr: PredicateExpr) -> dict[str, str]:
    tests: dict[str, str] = {}
    for item in _conjuncts(expr):
        if isinstance(item, StateIs):
            tests[item.automaton] = item.state
    return tests


def compile_predicate(expr: PredicateExpr, index: AtomIndex) -> CompiledPredicate:
    """Compile ``expr`` into a closure over global states.

    Raises PredicateError for atoms the index cannot resolve.
    """
    if isinstance(expr, Const):
        value = expr.value
        return lambda state: value
    if isinstance(expr, StateIs):
        position, local = _resolve_state(expr, index)
        return lambda state: state[position] == local
    if isinstance(expr, InState):
        expansion = _resolve_in(expr, index)
        if expansion is None:
            position, local = _resolve_state(StateIs(expr.automaton, expr.state), index)
            return lambda state: state[position] == local
        return compile_predicate(expansion, index)
    if isinstance(expr, FailureActive):
        try:
            position = index.automaton_position(expr.failure)
            inactive = index.state_position(expr.failure, "no")
        except KeyError as exc:
            raise PredicateError(expr, "no failure automaton with this name") from exc
        return lambda state: state[position] != inactive
    if isinstance(expr, Not):
        inner = compile_predicate(expr.operand, index)
        return lambda state: not inner(state)
    if isinstance(expr, And):
        parts = tuple(compile_predicate(item, index) for item in expr.operands)
        return lambda state: all(part(state) for part in parts)
    if isinstance(expr, Or):
        parts = tuple(compile_predicate(item, index) for item in expr.operands)
        return lambda state: any(part(state) for part in parts)
    raise TypeError(f"not a predicate: {expr!r}")


def check_resolved(expr: PredicateExpr, index: AtomIndex) -> list[PredicateError]:
    problems: list[PredicateError] = []
    for atom in atoms(expr):
        try:
            compile_predicate(atom, index)
        except PredicateError as exc:
            problems.append(exc)
    return problems


def _resolve_state(atom: StateIs, index: AtomIndex) -> tuple[int, int]:
    try:
        position = index.automaton_position(atom.automaton)
    except KeyError as exc:
        raise PredicateError(atom, f"undeclared automaton '{atom.automaton}'") from exc
    try:
        local = index.state_position(atom.automaton, atom.state)
    except KeyError as exc:
        raise PredicateError(atom, f"automaton '{atom.automaton}' has no state '{atom.state}'") from exc
    return position, local


def _resolve_in(atom: InState, index: AtomIndex) -> PredicateExpr | None:
    try:
        return index.in_expansion(atom.automaton, atom.state)
    except KeyError as exc:
        raise PredicateError(atom, f"undeclared automaton '{atom.automaton}'") from exc


_PRECEDENCE = {Or: 1, And: 2, Not: 3}


def render(expr: PredicateExpr) -> str:
    """Render in modeling-language syntax."""
    return _render(expr, 0)


def _render(expr: PredicateExpr, parent: int) -> str:
    if isinstance(expr, Const):
        return "true" if expr.value else "false"
    if isinstance(expr, StateIs):
        return f"{expr.automaton}.state == {expr.state}"
    if isinstance(expr, InState):
        return f"{expr.automaton}.in({expr.state})"
    if isinstance(expr, FailureActive):
        return expr.failure
    level = _PRECEDENCE[type(expr)]
    if isinstance(expr, Not):
        text = "!" + _render(expr.operand, level + 1)
    else:
        joiner = " | " if isinstance(expr, Or) else " & "
        text = joiner.join(_render(item, level) for item in expr.operands)
    return f"({text})" if level < parent else text
