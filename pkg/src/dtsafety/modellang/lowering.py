"""Lowering of a resolved source model to a SystemModel."""

from __future__ import annotations

from pathlib import Path

from ..diagnostics import has_errors
from ..failures import FAILURE_STATES
from ..model import Automaton, FailureModeDecl, FailurePattern, GuardedTransition, SystemModel
from ..predicates import (
    FALSE,
    TRUE,
    FailureActive,
    InState,
    PredicateExpr,
    StateIs,
    conjoin,
    disjoin,
    negate,
)
from .parser import DT_CONST, ParseError, resolve
from .syntax import (
    AndExpr,
    BoolLit,
    ConstRef,
    Expr,
    InTest,
    NameRef,
    NotExpr,
    OrExpr,
    Quantity,
    SourceModel,
    StateTest,
    Value,
)


class _Lowering:
    def __init__(self, source: SourceModel) -> None:
        self.consts = {decl.name: decl.value for decl in source.consts}
        self.preds = {decl.name: decl.expr for decl in source.preds}
        self.failures = {decl.name for decl in source.failures}
        self._inlined: dict[str, PredicateExpr] = {}

    def quantity(self, value: Value) -> Quantity:
        if isinstance(value, ConstRef):
            return self.consts[value.name]
        return value

    def probability(self, value: Value | None) -> float:
        return 1.0 if value is None else self.quantity(value).value

    def rate(self, value: Value | None) -> float | None:
        return None if value is None else self.quantity(value).per_hour()

    def expr(self, expr: Expr) -> PredicateExpr:
        if isinstance(expr, BoolLit):
            return TRUE if expr.value else FALSE
        if isinstance(expr, StateTest):
            atom = self.state_atom(expr.automaton, expr.state)
            return negate(atom) if expr.negated else atom
        if isinstance(expr, InTest):
            if expr.automaton in self.failures:
                return self.state_atom(expr.automaton, expr.state)
            return InState(expr.automaton, expr.state)
        if isinstance(expr, NameRef):
            if expr.name in self.preds:
                return self.pred(expr.name)
            return FailureActive(expr.name)
        if isinstance(expr, NotExpr):
            return negate(self.expr(expr.operand))
        if isinstance(expr, AndExpr):
            return conjoin(*(self.expr(item) for item in expr.operands))
        if isinstance(expr, OrExpr):
            return disjoin(*(self.expr(item) for item in expr.operands))
        raise TypeError(f"not an expression: {expr!r}")

    def state_atom(self, automaton: str, state: str) -> PredicateExpr:
        if automaton in self.failures:
            active = FailureActive(automaton)
            return active if state == FAILURE_STATES[1] else negate(active)
        return StateIs(automaton, state)

    def pred(self, name: str) -> PredicateExpr:
        if name not in self._inlined:
            self._inlined[name] = self.expr(self.preds[name])
        return self._inlined[name]


def lower(source: SourceModel, name: str | None = None) -> SystemModel:
    """Resolve units, inline predicates and build the SystemModel.

    Rates are converted to per-hour values and ``dt`` to seconds; a horizon
    given as a duration becomes a step count. Transitions without a
    probability get probability 1.
    """
    diagnostics = resolve(source)
    if has_errors(diagnostics):
        raise ParseError([item for item in diagnostics if item.is_error], source.source_name)
    lowering = _Lowering(source)
    dt_seconds = lowering.consts[DT_CONST].seconds()

    automata = []
    for decl in source.automata:
        transitions = []
        for transition in decl.transitions:
            guard = lowering.expr(transition.guard) if transition.guard is not None else TRUE
            for branch in transition.branches:
                transitions.append(
                    GuardedTransition(
                        transition.source,
                        branch.target,
                        guard,
                        lowering.probability(branch.probability),
                    )
                )
        automata.append(Automaton(decl.name, decl.states, decl.initial, tuple(transitions)))

    failures = []
    for decl in source.failures:
        failures.append(
            FailureModeDecl(
                name=decl.name,
                pattern=FailurePattern(decl.pattern),
                rate_per_hour=lowering.rate(decl.rate),
                repair_per_hour=lowering.rate(decl.repair),
                probability=lowering.quantity(decl.probability).value if decl.probability is not None else None,
                demand=lowering.expr(decl.demand) if decl.demand is not None else None,
                affected=decl.on,
            )
        )

    horizon = None
    if source.horizons:
        value = source.horizons[0].value
        steps = value.value if value.unit is None else value.seconds() / dt_seconds
        horizon = int(round(steps))

    hazard = source.hazards[0]
    observables = tuple(
        (decl.name, lowering.pred(decl.name)) for decl in source.preds if decl.observable
    )
    return SystemModel(
        name=name or _model_name(source),
        automata=tuple(automata),
        failures=tuple(failures),
        hazard=lowering.expr(hazard.expr),
        dt_seconds=dt_seconds,
        horizon=horizon,
        hazard_name=hazard.name,
        observables=observables,
    )


def _model_name(source: SourceModel) -> str:
    if source.source_name:
        return Path(source.source_name).stem
    return "model"

