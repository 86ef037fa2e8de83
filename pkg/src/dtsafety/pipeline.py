"""Model loading and state-space construction shared by the CLI commands."""

from __future__ import annotations

from dataclasses import dataclass
import logging
from pathlib import Path
import re
from typing import Mapping

from .composition import Flavor, StateSpace
from .config import AnalysisConfig
from .diagnostics import Diagnostic
from .failures import AnalysisMode, instantiate, pin_failures
from .model import AnalysisError, SystemModel
from .modellang import SourceModel, lower, read_source
from .modellang.syntax import RATE_UNITS, TIME_UNITS
from .utils import slugify
from .validation import valid_space

_LOGGER = logging.getLogger(__name__)

_DURATION_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?)\s*(ms|min|h|s)\s*$")
_RATE_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?)\s*(/h|/s)\s*$")


@dataclass(frozen=True)
class LoadedModel:
    path: Path
    source: SourceModel
    model: SystemModel

    @property
    def slug(self) -> str:
        return slugify(self.model.name)


@dataclass(frozen=True)
class BuiltSpace:
    model: SystemModel
    space: StateSpace
    warnings: tuple[Diagnostic, ...]


def load(path: Path) -> LoadedModel:
    source = read_source(path)
    model = lower(source)
    _LOGGER.info(
        "Loaded %s: %d automata, %d failure modes", path, len(model.automata), len(model.failures)
    )
    return LoadedModel(path=path, source=source, model=model)


def parse_duration(text: str) -> float:
    """Seconds of a duration such as ``1h``, ``30min``, ``10ms``."""
    match = _DURATION_RE.match(text)
    if match is None:
        raise AnalysisError(f"invalid duration '{text}'; expected a number with unit h, min, s or ms")
    number, unit = match.groups()
    return float(number) * TIME_UNITS[unit]


def parse_rate(text: str) -> float:
    """Per-hour value of a rate such as ``1e-2/h``."""
    match = _RATE_RE.match(text)
    if match is None:
        raise AnalysisError(f"invalid rate '{text}'; expected a number with unit /h or /s")
    number, unit = match.groups()
    return float(number) * RATE_UNITS[unit]


def steps_for_duration(seconds: float, dt_seconds: float) -> int:
    steps = seconds / dt_seconds
    nearest = round(steps)
    if abs(steps - nearest) > 1e-9 * max(1.0, steps):
        raise AnalysisError(
            f"duration {seconds:g} s is not an integral multiple of the temporal resolution {dt_seconds:g} s"
        )
    return int(nearest)


def resolve_horizon(model: SystemModel, k: int | None, time: str | None) -> int:
    """Step horizon from ``-k``, ``--time`` or the model's own horizon declaration."""
    if k is not None and time is not None:
        raise AnalysisError("give the horizon either as steps or as a duration, not both")
    if k is not None:
        if k < 0:
            raise AnalysisError(f"horizon must be non-negative, got {k}")
        return k
    if time is not None:
        return steps_for_duration(parse_duration(time), model.dt_seconds)
    if model.horizon is not None:
        return model.horizon
    raise AnalysisError("no horizon given and the model declares none")


def analysable_model(
    model: SystemModel,
    mode: AnalysisMode,
    *,
    pins: Mapping[str, str] | None = None,
    elide_decide: bool = True,
) -> SystemModel:
    result = instantiate(model, mode, elide_decide=elide_decide)
    if pins:
        result = pin_failures(result, pins)
    return result


def build_space(
    model: SystemModel,
    flavor: Flavor,
    analysis: AnalysisConfig,
    *,
    pins: Mapping[str, str] | None = None,
) -> BuiltSpace:
    """Instantiate failures for ``flavor``, validate and keep the explored space.

    Nondeterministic spaces get the qualitative failure automata, dtmc and
    mdp spaces the probabilistic ones. ValidationError and StateCapExceeded
    propagate.
    """
    mode = AnalysisMode.QUALITATIVE if flavor is Flavor.NONDETERMINISTIC else AnalysisMode.PROBABILISTIC
    analysed = analysable_model(model, mode, pins=pins, elide_decide=analysis.elide_decide)
    space, warnings = valid_space(analysed, flavor, state_cap=analysis.state_cap)
    for item in warnings:
        _LOGGER.warning("%s", item.message)
    _LOGGER.info(
        "Composed %s as %s: %d states, %d transitions",
        model.name,
        flavor.value,
        space.size,
        space.edge_count,
    )
    return BuiltSpace(model=analysed, space=space, warnings=tuple(warnings))


def parse_pins(values: list[str] | None) -> dict[str, str]:
    """``NAME=no`` / ``NAME=yes`` pairs from the command line."""
    pins: dict[str, str] = {}
    for value in values or []:
        name, sep, state = value.partition("=")
        if not sep or not name.strip():
            raise AnalysisError(f"invalid pin '{value}'; expected NAME=no or NAME=yes")
        pins[name.strip()] = state.strip()
    return pins
