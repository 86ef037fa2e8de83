"""Parsing and name resolution of .ssm model text."""

from __future__ import annotations

from functools import lru_cache
import re
from typing import Iterable

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from ..diagnostics import Diagnostic, Span, error, has_errors
from ..model import ModelError
from .syntax import (
    AndExpr,
    AutomatonDecl,
    BoolLit,
    Branch,
    ConstDecl,
    ConstRef,
    Expr,
    FailureDecl,
    HazardDecl,
    HorizonDecl,
    InTest,
    NameRef,
    NotExpr,
    OrExpr,
    PredDecl,
    Quantity,
    SourceModel,
    StateTest,
    TransitionDecl,
    Value,
)

DT_CONST = "dt"
FAILURE_STATES = ("no", "yes")
PATTERNS = ("persistent", "transient", "per_time", "per_demand")

_QUANTITY = re.compile(r"^([0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?)[ \t]*(.*)$")


class ParseError(ModelError):
    """Syntax or resolution errors, each with a source position."""

    def __init__(self, diagnostics: Iterable[Diagnostic], source_name: str | None = None) -> None:
        self.diagnostics = list(diagnostics)
        self.source_name = source_name
        super().__init__("\n".join(diagnostic.render(source_name) for diagnostic in self.diagnostics))


@lru_cache(maxsize=1)
def _lark() -> Lark:
    return Lark.open("grammar.lark", rel_to=__file__, parser="lalr", propagate_positions=True)


def _meta_span(meta) -> Span | None:
    if getattr(meta, "empty", True):
        return None
    return Span(meta.line, meta.column, meta.end_line, meta.end_column)


def _token_span(token: Token) -> Span:
    return Span(token.line, token.column, token.end_line, token.end_column)


def _quantity(token: Token) -> Quantity:
    match = _QUANTITY.match(str(token))
    assert match is not None
    number, unit = match.groups()
    return Quantity(float(number), unit or None, _token_span(token))


def _flatten(kind: type, operands: Iterable[Expr]) -> tuple[Expr, ...]:
    flat: list[Expr] = []
    for operand in operands:
        flat.extend(operand.operands if isinstance(operand, kind) else (operand,))
    return tuple(flat)


@v_args(meta=True)
class _Builder(Transformer):
    """Turns the parse tree into syntax nodes."""

    def start(self, meta, children):
        return children

    def const_decl(self, meta, children):
        name, quantity = children
        return ConstDecl(str(name), _quantity(quantity), _token_span(name))

    def horizon_decl(self, meta, children):
        return HorizonDecl(_quantity(children[0]), _meta_span(meta))

    def pred_decl(self, meta, children):
        name, expr = children
        return PredDecl(str(name), expr, False, _token_span(name))

    def observe_decl(self, meta, children):
        name, expr = children
        return PredDecl(str(name), expr, True, _token_span(name))

    def hazard_decl(self, meta, children):
        name, expr = children
        return HazardDecl(str(name), expr, _token_span(name))

    def automaton_decl(self, meta, children):
        name, states, initial, *transitions = children
        return AutomatonDecl(
            name=str(name),
            states=tuple(str(state) for state in states),
            initial=str(initial),
            transitions=tuple(transitions),
            span=_token_span(name),
            state_spans=tuple(_token_span(state) for state in states),
        )

    def states_clause(self, meta, children):
        return children

    def init_clause(self, meta, children):
        return children[0]

    def simple_transition(self, meta, children):
        source, target, *rest = children
        guard = next((item[1] for item in rest if item[0] == "guard"), None)
        weight = next((item[1] for item in rest if item[0] == "weight"), None)
        branch = Branch(str(target), weight, _token_span(target))
        return TransitionDecl(str(source), (branch,), guard, False, _meta_span(meta))

    def branch_transition(self, meta, children):
        source, *rest = children
        branches = tuple(item for item in rest if isinstance(item, Branch))
        guard = next((item[1] for item in rest if isinstance(item, tuple) and item[0] == "guard"), None)
        return TransitionDecl(str(source), branches, guard, True, _meta_span(meta))

    def guard(self, meta, children):
        return ("guard", children[0])

    def weight(self, meta, children):
        return ("weight", children[0])

    def branch(self, meta, children):
        value, target = children
        return Branch(str(target), value, _token_span(target))

    def failure_decl(self, meta, children):
        name, pattern, *clauses = children
        kind, rate, repair, probability = pattern
        options = dict(clauses)
        return FailureDecl(
            name=str(name),
            pattern=kind,
            rate=rate,
            repair=repair,
            probability=probability,
            on=options.get("on"),
            demand=options.get("demand"),
            span=_token_span(name),
        )

    def persistent(self, meta, children):
        return ("persistent", None, None, None)

    def transient(self, meta, children):
        return ("transient", None, None, None)

    def per_time(self, meta, children):
        rate = children[0]
        repair = children[1] if len(children) > 1 else None
        return ("per_time", rate, repair, None)

    def per_demand(self, meta, children):
        return ("per_demand", None, None, children[0])

    def on_clause(self, meta, children):
        return ("on", str(children[0]))

    def demand_clause(self, meta, children):
        return ("demand", children[0])

    def literal(self, meta, children):
        return _quantity(children[0])

    def const_ref(self, meta, children):
        return ConstRef(str(children[0]), _token_span(children[0]))

    def disj(self, meta, children):
        return OrExpr(_flatten(OrExpr, children), _meta_span(meta))

    def conj(self, meta, children):
        return AndExpr(_flatten(AndExpr, children), _meta_span(meta))

    def neg(self, meta, children):
        return NotExpr(children[0], _meta_span(meta))

    def true(self, meta, children):
        return BoolLit(True, _meta_span(meta))

    def false(self, meta, children):
        return BoolLit(False, _meta_span(meta))

    def state_eq(self, meta, children):
        automaton, state = children
        return StateTest(str(automaton), str(state), False, _token_span(automaton))

    def state_ne(self, meta, children):
        automaton, state = children
        return StateTest(str(automaton), str(state), True, _token_span(automaton))

    def in_state(self, meta, children):
        automaton, state = children
        return InTest(str(automaton), str(state), _token_span(automaton))

    def ref(self, meta, children):
        return NameRef(str(children[0]), _token_span(children[0]))


def _syntax_error(exc: UnexpectedInput, text: str) -> Diagnostic:
    if isinstance(exc, UnexpectedEOF):
        lines = text.splitlines() or [""]
        return error("unexpected end of input", Span(len(lines), len(lines[-1]) + 1))
    if isinstance(exc, UnexpectedCharacters):
        return error(f"unexpected character {exc.char!r}", Span(exc.line, exc.column))
    if isinstance(exc, UnexpectedToken):
        expected = ", ".join(sorted(exc.expected))
        found = "end of input" if exc.token.type == "$END" else repr(str(exc.token))
        return error(f"unexpected {found}, expected one of: {expected}", Span(exc.line, exc.column))
    return error(str(exc), Span(getattr(exc, "line", 1), getattr(exc, "column", 1)))


def parse_syntax(text: str, source_name: str | None = None) -> SourceModel:
    """Syntax only; raises ParseError with the first syntax error."""
    try:
        tree = _lark().parse(text)
    except UnexpectedInput as exc:
        raise ParseError([_syntax_error(exc, text)], source_name) from exc
    decls = _Builder().transform(tree)
    return SourceModel(tuple(decls), text, source_name)


def parse(text: str, source_name: str | None = None) -> SourceModel:
    """Parse and resolve; raises ParseError carrying every error diagnostic."""
    source = parse_syntax(text, source_name)
    diagnostics = resolve(source)
    if has_errors(diagnostics):
        raise ParseError([item for item in diagnostics if item.is_error], source_name)
    return source


class _Resolver:
    def __init__(self, source: SourceModel) -> None:
        self.source = source
        self.diagnostics: list[Diagnostic] = []
        self.consts: dict[str, ConstDecl] = {}
        self.automata: dict[str, AutomatonDecl] = {}
        self.failures: dict[str, FailureDecl] = {}
        self.preds: dict[str, PredDecl] = {}

    def error(self, message: str, span: Span | None) -> None:
        self.diagnostics.append(error(message, span or Span(1, 1)))

    def run(self) -> list[Diagnostic]:
        self._collect()
        self._check_constants()
        for automaton in self.source.automata:
            self._check_automaton(automaton)
        for failure in self.source.failures:
            self._check_failure(failure)
        for pred in self.source.preds:
            self.check_expr(pred.expr)
        self._check_pred_cycles()
        for hazard in self.source.hazards:
            self.check_expr(hazard.expr)
        return self.diagnostics

    def _collect(self) -> None:
        taken: dict[str, str] = {}

        def claim(name: str, kind: str, span: Span | None) -> bool:
            if name in taken:
                self.error(f"{kind} '{name}' clashes with an earlier {taken[name]} of the same name", span)
                return False
            taken[name] = kind
            return True

        for const in self.source.consts:
            if const.name in self.consts:
                self.error(f"constant '{const.name}' declared twice", const.span)
            else:
                self.consts[const.name] = const
        for automaton in self.source.automata:
            if claim(automaton.name, "automaton", automaton.span):
                self.automata[automaton.name] = automaton
        for failure in self.source.failures:
            if claim(failure.name, "failure mode", failure.span):
                self.failures[failure.name] = failure
        for pred in self.source.preds:
            if claim(pred.name, "predicate", pred.span):
                self.preds[pred.name] = pred
        hazards = self.source.hazards
        if not hazards:
            self.error("model declares no hazard", None)
        for extra in hazards[1:]:
            self.error(f"hazard '{extra.name}' is a second hazard declaration", extra.span)

    def _check_constants(self) -> None:
        dt = self.consts.get(DT_CONST)
        if dt is None:
            self.error(f"model declares no temporal resolution (const {DT_CONST} = <time>;)", None)
        elif not dt.value.is_time or dt.value.value <= 0:
            self.error(f"temporal resolution must be a positive time such as 10ms", dt.span)
        for horizon in self.source.horizons[1:]:
            self.error("horizon declared twice", horizon.span)
        for horizon in self.source.horizons[:1]:
            value = horizon.value
            if value.unit is None:
                if not float(value.value).is_integer():
                    self.error("horizon in steps must be an integer", horizon.span)
            elif not value.is_time:
                self.error(f"horizon unit '{value.unit}' is not a time unit", horizon.span)
            elif dt is not None and dt.value.is_time:
                steps = value.seconds() / dt.value.seconds()
                if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                    self.error("horizon is not an integral multiple of the temporal resolution", horizon.span)

    def value(self, value: Value) -> Quantity | None:
        if isinstance(value, ConstRef):
            const = self.consts.get(value.name)
            if const is None:
                self.error(f"undeclared constant '{value.name}'", value.span)
                return None
            return const.value
        return value

    def _check_probability(self, value: Value | None, span: Span | None, *, allow_zero: bool) -> None:
        if value is None:
            return
        quantity = self.value(value)
        if quantity is None:
            return
        if quantity.unit is not None:
            self.error(f"probability cannot carry the unit '{quantity.unit}'", quantity.span or span)
        low_ok = quantity.value >= 0 if allow_zero else quantity.value > 0
        if not low_ok or quantity.value > 1:
            bounds = "[0, 1]" if allow_zero else "(0, 1]"
            self.error(f"probability {quantity.value:g} outside {bounds}", quantity.span or span)

    def _check_automaton(self, automaton: AutomatonDecl) -> None:
        seen: set[str] = set()
        for state, span in zip(automaton.states, automaton.state_spans or (None,) * len(automaton.states)):
            if state in seen:
                self.error(f"state '{state}' declared twice in automaton {automaton.name}", span)
            seen.add(state)
        if automaton.initial not in seen:
            self.error(f"initial state '{automaton.initial}' of {automaton.name} is not declared", automaton.span)
        for transition in automaton.transitions:
            if transition.source not in seen:
                self.error(f"undeclared state '{transition.source}' in automaton {automaton.name}", transition.span)
            for branch in transition.branches:
                if branch.target not in seen:
                    self.error(f"undeclared state '{branch.target}' in automaton {automaton.name}", branch.span)
                self._check_probability(branch.probability, branch.span, allow_zero=False)
            if transition.branching and any(branch.probability is None for branch in transition.branches):
                self.error("every branch of a probabilistic transition needs a probability", transition.span)
            if transition.guard is not None:
                self.check_expr(transition.guard)

    def _check_failure(self, failure: FailureDecl) -> None:
        if failure.pattern == "per_time":
            for label, value in (("rate", failure.rate), ("repair rate", failure.repair)):
                if value is None:
                    continue
                quantity = self.value(value)
                if quantity is not None and not quantity.is_rate:
                    self.error(f"{label} of {failure.name} needs a rate unit (/h or /s)", quantity.span or failure.span)
                elif quantity is not None and quantity.value < 0:
                    self.error(f"{label} of {failure.name} must be non-negative", quantity.span or failure.span)
        if failure.pattern == "per_demand":
            self._check_probability(failure.probability, failure.span, allow_zero=True)
        if failure.on is not None and failure.on not in self.automata:
            self.error(f"failure mode {failure.name} is attached to undeclared automaton '{failure.on}'", failure.span)
        if failure.demand is not None:
            if failure.pattern != "per_demand":
                self.error(f"only per-demand failure modes take a demand, not {failure.name}", failure.span)
            self.check_expr(failure.demand)

    def _states_of(self, name: str) -> tuple[str, ...] | None:
        if name in self.automata:
            return self.automata[name].states
        if name in self.failures:
            return FAILURE_STATES
        return None

    def check_expr(self, expr: Expr) -> None:
        if isinstance(expr, (StateTest, InTest)):
            states = self._states_of(expr.automaton)
            if states is None:
                self.error(f"undeclared automaton '{expr.automaton}'", expr.span)
            elif expr.state not in states:
                self.error(f"automaton {expr.automaton} has no state '{expr.state}'", expr.span)
        elif isinstance(expr, NameRef):
            if expr.name not in self.preds and expr.name not in self.failures:
                self.error(f"'{expr.name}' is neither a predicate nor a failure mode", expr.span)
        elif isinstance(expr, NotExpr):
            self.check_expr(expr.operand)
        elif isinstance(expr, (AndExpr, OrExpr)):
            for operand in expr.operands:
                self.check_expr(operand)

    def _check_pred_cycles(self) -> None:
        state: dict[str, int] = {}

        def visit(name: str) -> None:
            state[name] = 1
            for ref in _refs(self.preds[name].expr):
                if ref.name not in self.preds:
                    continue
                if state.get(ref.name) == 1:
                    self.error(f"predicate '{ref.name}' is defined in terms of itself", ref.span)
                elif ref.name not in state:
                    visit(ref.name)
            state[name] = 2

        for name in self.preds:
            if name not in state:
                visit(name)


def _refs(expr: Expr) -> Iterable[NameRef]:
    if isinstance(expr, NameRef):
        yield expr
    elif isinstance(expr, NotExpr):
        yield from _refs(expr.operand)
    elif isinstance(expr, (AndExpr, OrExpr)):
        for operand in expr.operands:
            yield from _refs(operand)


def resolve(source: SourceModel) -> list[Diagnostic]:
    """Resolution diagnostics: duplicates, unknown references, units and ranges."""
    return _Resolver(source).run()
