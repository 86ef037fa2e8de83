"""Source-level syntax tree of .ssm models.

Nodes keep their source spans for diagnostics; spans are excluded from
equality so that re-parsing printed output compares equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from ..diagnostics import Span

TIME_UNITS = {"ms": 1e-3, "s": 1.0, "min": 60.0, "h": 3600.0}
RATE_UNITS = {"/h": 1.0, "/s": 3600.0}


def _span() -> Any:
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Quantity:
    value: float
    unit: str | None = None
    span: Span | None = _span()

    @property
    def is_time(self) -> bool:
        return self.unit in TIME_UNITS

    @property
    def is_rate(self) -> bool:
        return self.unit in RATE_UNITS

    def seconds(self) -> float:
        return self.value * TIME_UNITS[self.unit]  # type: ignore[index]

    def per_hour(self) -> float:
        return self.value * RATE_UNITS[self.unit]  # type: ignore[index]


@dataclass(frozen=True)
class ConstRef:
    name: str
    span: Span | None = _span()


Value = Union[Quantity, ConstRef]


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span | None = _span()


@dataclass(frozen=True)
class StateTest:
    automaton: str
    state: str
    negated: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class InTest:
    automaton: str
    state: str
    span: Span | None = _span()


@dataclass(frozen=True)
class NameRef:
    """Bare name: a ``pred``/``observe`` definition or a failure mode."""

    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class NotExpr:
    operand: "Expr"
    span: Span | None = _span()


@dataclass(frozen=True)
class AndExpr:
    operands: tuple["Expr", ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class OrExpr:
    operands: tuple["Expr", ...]
    span: Span | None = _span()


Expr = Union[BoolLit, StateTest, InTest, NameRef, NotExpr, AndExpr, OrExpr]


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: Quantity
    span: Span | None = _span()


@dataclass(frozen=True)
class HorizonDecl:
    value: Quantity
    span: Span | None = _span()


@dataclass(frozen=True)
class PredDecl:
    name: str
    expr: Expr
    observable: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class HazardDecl:
    name: str
    expr: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Branch:
    target: str
    probability: Value | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class TransitionDecl:
    """``a -> b [g] : p;`` or ``a -> {p: b, q: c} [g];`` (``branching``)."""

    source: str
    branches: tuple[Branch, ...]
    guard: Expr | None = None
    branching: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class AutomatonDecl:
    name: str
    states: tuple[str, ...]
    initial: str
    transitions: tuple[TransitionDecl, ...]
    span: Span | None = _span()
    state_spans: tuple[Span | None, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class FailureDecl:
    name: str
    pattern: str
    rate: Value | None = None
    repair: Value | None = None
    probability: Value | None = None
    on: str | None = None
    demand: Expr | None = None
    span: Span | None = _span()


Decl = Union[ConstDecl, HorizonDecl, PredDecl, HazardDecl, AutomatonDecl, FailureDecl]


@dataclass(frozen=True)
class SourceModel:
    decls: tuple[Decl, ...]
    text: str = field(default="", compare=False, repr=False)
    source_name: str | None = field(default=None, compare=False)

    def _of(self, kind: type) -> list:
        return [decl for decl in self.decls if isinstance(decl, kind)]

    @property
    def consts(self) -> list[ConstDecl]:
        return self._of(ConstDecl)

    @property
    def horizons(self) -> list[HorizonDecl]:
        return self._of(HorizonDecl)

    @property
    def preds(self) -> list[PredDecl]:
        return self._of(PredDecl)

    @property
    def hazards(self) -> list[HazardDecl]:
        return self._of(HazardDecl)

    @property
    def automata(self) -> list[AutomatonDecl]:
        return self._of(AutomatonDecl)

    @property
    def failures(self) -> list[FailureDecl]:
        return self._of(FailureDecl)
