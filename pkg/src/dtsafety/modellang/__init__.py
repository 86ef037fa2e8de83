"""The .ssm modeling language: grammar, parser, printer and lowering."""

from __future__ import annotations

from pathlib import Path

from ..model import SystemModel
from .lowering import lower
from .parser import ParseError, parse, parse_syntax, resolve
from .printer import format_expr, format_model
from .syntax import SourceModel

MODEL_SUFFIX = ".ssm"


def read_source(path: Path) -> SourceModel:
    """Parse and resolve a model file; OSError and ParseError propagate."""
    text = path.read_text(encoding="utf-8")
    return parse(text, str(path))


def load_model(path: Path) -> SystemModel:
    return lower(read_source(path))


__all__ = [
    "MODEL_SUFFIX",
    "ParseError",
    "SourceModel",
    "format_expr",
    "format_model",
    "load_model",
    "lower",
    "parse",
    "parse_syntax",
    "read_source",
    "resolve",
]
