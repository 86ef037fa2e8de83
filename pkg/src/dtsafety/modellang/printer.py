"""Canonical text of a parsed model; parsing the output yields an equal tree."""

from __future__ import annotations

from .syntax import (
    AndExpr,
    AutomatonDecl,
    BoolLit,
    ConstDecl,
    ConstRef,
    Decl,
    Expr,
    FailureDecl,
    HazardDecl,
    HorizonDecl,
    InTest,
    NameRef,
    NotExpr,
    OrExpr,
    PredDecl,
    SourceModel,
    StateTest,
    TransitionDecl,
    Value,
)

INDENT = "    "

_OR, _AND, _NOT = 1, 2, 3


def format_value(value: Value) -> str:
    if isinstance(value, ConstRef):
        return value.name
    number = repr(float(value.value))
    if number.endswith(".0"):
        number = number[:-2]
    return f"{number}{value.unit}" if value.unit else number


def format_expr(expr: Expr) -> str:
    return _expr(expr, 0)


def _expr(expr: Expr, parent: int) -> str:
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, StateTest):
        operator = "!=" if expr.negated else "=="
        return f"{expr.automaton}.state {operator} {expr.state}"
    if isinstance(expr, InTest):
        return f"{expr.automaton}.in({expr.state})"
    if isinstance(expr, NameRef):
        return expr.name
    if isinstance(expr, NotExpr):
        return "!" + _expr(expr.operand, _NOT)
    level = _OR if isinstance(expr, OrExpr) else _AND
    joiner = " | " if level == _OR else " & "
    text = joiner.join(_expr(item, level + 1) for item in expr.operands)
    return f"({text})" if level < parent else text


def _transition(transition: TransitionDecl) -> str:
    guard = f" [{format_expr(transition.guard)}]" if transition.guard is not None else ""
    if transition.branching:
        branches = ", ".join(
            f"{format_value(branch.probability)}: {branch.target}"  # type: ignore[arg-type]
            for branch in transition.branches
        )
        return f"{transition.source} -> {{{branches}}}{guard};"
    branch = transition.branches[0]
    weight = f" : {format_value(branch.probability)}" if branch.probability is not None else ""
    return f"{transition.source} -> {branch.target}{guard}{weight};"


def _automaton(decl: AutomatonDecl) -> list[str]:
    lines = [f"automaton {decl.name} {{"]
    lines.append(f"{INDENT}states {', '.join(decl.states)};")
    lines.append(f"{INDENT}init {decl.initial};")
    lines.extend(INDENT + _transition(transition) for transition in decl.transitions)
    lines.append("}")
    return lines


def _pattern(decl: FailureDecl) -> str:
    if decl.pattern == "per_time":
        repair = f", repair {format_value(decl.repair)}" if decl.repair is not None else ""
        return f"per_time({format_value(decl.rate)}{repair})"  # type: ignore[arg-type]
    if decl.pattern == "per_demand":
        return f"per_demand({format_value(decl.probability)})"  # type: ignore[arg-type]
    return decl.pattern


def _failure(decl: FailureDecl) -> str:
    parts = [f"failure {decl.name} {_pattern(decl)}"]
    if decl.on is not None:
        parts.append(f"on {decl.on}")
    if decl.demand is not None:
        parts.append(f"demand({format_expr(decl.demand)})")
    return " ".join(parts) + ";"


def format_decl(decl: Decl) -> list[str]:
    if isinstance(decl, ConstDecl):
        return [f"const {decl.name} = {format_value(decl.value)};"]
    if isinstance(decl, HorizonDecl):
        return [f"horizon {format_value(decl.value)};"]
    if isinstance(decl, PredDecl):
        keyword = "observe" if decl.observable else "pred"
        return [f"{keyword} {decl.name} = {format_expr(decl.expr)};"]
    if isinstance(decl, HazardDecl):
        return [f"hazard {decl.name} = {format_expr(decl.expr)};"]
    if isinstance(decl, AutomatonDecl):
        return _automaton(decl)
    return [_failure(decl)]


def format_model(source: SourceModel) -> str:
    """Declarations in source order; automata are separated by blank lines."""
    blocks: list[list[str]] = []
    previous: Decl | None = None
    for decl in source.decls:
        lines = format_decl(decl)
        if not blocks or isinstance(decl, AutomatonDecl) or isinstance(previous, AutomatonDecl):
            blocks.append(lines)
        else:
            blocks[-1].extend(lines)
        previous = decl
    return "\n\n".join("\n".join(block) for block in blocks) + "\n"
