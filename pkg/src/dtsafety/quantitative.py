"""Bounded-horizon hazard probabilities by value iteration.

All queries are instances of ``P[phi U<=k psi]``: states satisfying ``psi``
have value 1, states violating ``phi`` value 0, and the remaining states take
the expected value of their successors, ``k`` times over.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy import sparse

from .composition import HAZARD_LABEL, Flavor, StateSpace, failure_label
from .failures import geometric_cdf, rate_to_step_probability
from .model import AnalysisError, FailurePattern, SystemModel
from .predicates import PredicateExpr
from .qualitative import exists_until

_LOGGER = logging.getLogger(__name__)

SUMMATION_PLAIN = "plain"
SUMMATION_COMPENSATED = "compensated"
SUMMATION_MODES = (SUMMATION_PLAIN, SUMMATION_COMPENSATED)

StateMask = Union[PredicateExpr, np.ndarray]


@dataclass(frozen=True)
class ProbabilityVector:
    """Per-state values after ``steps`` iterations (``converged_at`` if the fixpoint came earlier)."""

    values: np.ndarray
    steps: int
    initial_index: int = 0
    converged_at: int | None = None

    @property
    def initial(self) -> float:
        return float(self.values[self.initial_index])


@dataclass(frozen=True)
class CurvePoint:
    k: int
    t_seconds: float
    probability: float


@dataclass(frozen=True)
class HazardCurve:
    points: tuple[CurvePoint, ...]

    @property
    def final(self) -> CurvePoint:
        return self.points[-1]


@dataclass(frozen=True)
class FtaTerm:
    failures: tuple[str, ...]
    product: float


@dataclass(frozen=True)
class FtaBoundReport:
    terms: tuple[FtaTerm, ...]
    total: float
    model_checked: float | None = None

    @property
    def violated(self) -> bool:
        """The bound lies below the model-checked probability."""
        return self.model_checked is not None and self.total < self.model_checked


class _Iteration:
    """Masked sparse products over the undecided rows of a matrix."""

    def __init__(self, matrix: sparse.csr_matrix, rows: np.ndarray, summation: str) -> None:
        if summation not in SUMMATION_MODES:
            raise AnalysisError(f"unknown summation mode '{summation}'")
        self.summation = summation
        self.matrix = matrix[rows] if len(rows) else sparse.csr_matrix((0, matrix.shape[1]))
        if summation == SUMMATION_COMPENSATED:
            self._build_ell()

    def _build_ell(self) -> None:
        matrix = self.matrix
        counts = np.diff(matrix.indptr)
        width = int(counts.max()) if len(counts) else 0
        rows = matrix.shape[0]
        self.cols = np.zeros((rows, width), dtype=np.int64)
        self.vals = np.zeros((rows, width), dtype=np.float64)
        for row in range(rows):
            start, end = matrix.indptr[row], matrix.indptr[row + 1]
            self.cols[row, : end - start] = matrix.indices[start:end]
            self.vals[row, : end - start] = matrix.data[start:end]

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.summation == SUMMATION_PLAIN:
            return self.matrix @ x
        total = np.zeros(self.vals.shape[0])
        carry = np.zeros_like(total)
        for column in range(self.vals.shape[1]):
            term = self.vals[:, column] * x[self.cols[:, column]] - carry
            running = total + term
            carry = (running - total) - term
            total = running
        return total


def _mask(space: StateSpace, value: StateMask) -> np.ndarray:
    if isinstance(value, np.ndarray):
        if value.shape != (space.size,):
            raise AnalysisError("state mask does not match the state space")
        return value.astype(bool)
    return space.evaluate(value)


def _sweep(
    space: StateSpace,
    phi: StateMask,
    psi: StateMask,
    k: int,
    *,
    maximize: bool,
    summation: str,
    record: Sequence[int] = (),
) -> tuple[ProbabilityVector, dict[int, float]]:
    if k < 0:
        raise AnalysisError(f"horizon must be non-negative, got {k}")
    target = _mask(space, psi)
    undecided = _mask(space, phi) & ~target
    x = target.astype(np.float64)
    samples: dict[int, float] = {}
    wanted = set(record)
    if 0 in wanted:
        samples[0] = float(x[space.initial_index])

    if maximize:
        groups = space.group_matrix()
        owner = space.group_owner()
        rows = np.flatnonzero(undecided[owner])
        group_states = owner[rows]
        starts = np.flatnonzero(np.r_[True, group_states[1:] != group_states[:-1]]) if len(rows) else rows
        updated = group_states[starts] if len(rows) else rows
        iteration = _Iteration(groups, rows, summation)
    else:
        matrix = space.transition_matrix()
        updated = np.flatnonzero(undecided)
        iteration = _Iteration(matrix, updated, summation)

    converged_at = None
    for step in range(1, k + 1):
        values = iteration.apply(x)
        if maximize and len(values):
            values = np.maximum.reduceat(values, starts)
        if np.array_equal(values, x[updated]):
            converged_at = step - 1
            _LOGGER.debug("Value iteration reached its fixpoint after %d of %d steps", converged_at, k)
            break
        x[updated] = values
        if step in wanted:
            samples[step] = float(x[space.initial_index])

    for step in wanted:
        samples.setdefault(step, float(x[space.initial_index]))
    np.clip(x, 0.0, 1.0, out=x)
    return ProbabilityVector(x, k, space.initial_index, converged_at), samples


def bounded_until(
    space: StateSpace,
    phi: StateMask,
    psi: StateMask,
    k: int,
    *,
    summation: str = SUMMATION_COMPENSATED,
) -> ProbabilityVector:
    """``P[phi U<=k psi]`` for every state of a DTMC."""
    if space.flavor is not Flavor.DTMC:
        raise AnalysisError("bounded until needs a dtmc state space; use max_bounded_until for mdps")
    vector, _ = _sweep(space, phi, psi, k, maximize=False, summation=summation)
    return vector


def max_bounded_until(
    space: StateSpace,
    phi: StateMask,
    psi: StateMask,
    k: int,
    *,
    summation: str = SUMMATION_COMPENSATED,
) -> ProbabilityVector:
    """Worst-case ``P[phi U<=k psi]``, maximizing over the choice groups of each state."""
    if space.flavor is Flavor.NONDETERMINISTIC:
        raise AnalysisError("maximal probabilities need a probabilistic state space")
    vector, _ = _sweep(space, phi, psi, k, maximize=True, summation=summation)
    return vector


def hazard_probability(space: StateSpace, k: int, *, summation: str = SUMMATION_COMPENSATED) -> float:
    """Probability that the hazard occurs within ``k`` steps (worst case on mdps)."""
    hazard = space.label(HAZARD_LABEL)
    everywhere = np.ones(space.size, dtype=bool)
    if space.flavor is Flavor.MDP:
        return max_bounded_until(space, everywhere, hazard, k, summation=summation).initial
    return bounded_until(space, everywhere, hazard, k, summation=summation).initial


def curve_steps(k_max: int, stride: int) -> list[int]:
    """Sampled horizons: multiples of ``stride`` up to ``k_max``, which is always included."""
    if stride < 1:
        raise AnalysisError(f"stride must be at least 1, got {stride}")
    if k_max < 0:
        raise AnalysisError(f"horizon must be non-negative, got {k_max}")
    steps = list(range(0, k_max + 1, stride))
    if steps[-1] != k_max:
        steps.append(k_max)
    return steps


def hazard_curve(
    space: StateSpace, k_max: int, stride: int, *, summation: str = SUMMATION_COMPENSATED
) -> HazardCurve:
    """Hazard probability at every sampled horizon, from one value-iteration sweep."""
    steps = curve_steps(k_max, stride)
    hazard = space.label(HAZARD_LABEL)
    everywhere = np.ones(space.size, dtype=bool)
    _, samples = _sweep(
        space,
        everywhere,
        hazard,
        k_max,
        maximize=space.flavor is Flavor.MDP,
        summation=summation,
        record=steps,
    )
    dt = space.model.dt_seconds
    return HazardCurve(tuple(CurvePoint(step, step * dt, samples[step]) for step in steps))


def restricted_until_probability(
    space: StateSpace,
    gamma: Iterable[str],
    k: int,
    failures: Sequence[str] | None = None,
) -> float:
    """Diagnostic: ``P[not(others) U<=k hazard]`` where others are the failure modes outside ``gamma``.

    This only measures the traces on which no other failure mode occurs before
    the hazard. It is not the probability that ``gamma`` causes the hazard,
    since it drops every trace on which further failures occur as well.
    """
    names = tuple(failures) if failures is not None else space.model.failure_names
    chosen = set(gamma)
    allowed = np.ones(space.size, dtype=bool)
    for name in names:
        if name not in chosen:
            allowed &= ~space.label(failure_label(name))
    vector = bounded_until(space, allowed, space.label(HAZARD_LABEL), k)
    return vector.initial


def reachability_support(space: StateSpace, phi: StateMask, psi: StateMask) -> np.ndarray:
    """States from which ``phi U psi`` holds on some path; bounded probabilities vanish elsewhere."""
    return exists_until(space.adjacency(), _mask(space, phi), _mask(space, psi))


def horizon_probabilities(
    model: SystemModel,
    k: int,
    supplied: Mapping[str, float] | None = None,
    *,
    single_demand: bool = True,
) -> dict[str, float]:
    """Occurrence probability of every failure mode within ``k`` steps.

    Per-time modes use the geometric CDF of their step probability. Per-demand
    modes default to their per-demand probability when ``single_demand`` is
    set, which only bounds a single demand; otherwise they need a value in
    ``supplied``. Explicit values in ``supplied`` take precedence.
    """
    supplied = dict(supplied or {})
    result: dict[str, float] = {}
    for decl in model.failures:
        if decl.name in supplied:
            result[decl.name] = float(supplied[decl.name])
        elif decl.pattern is FailurePattern.PER_DEMAND:
            if single_demand and decl.probability is not None:
                result[decl.name] = decl.probability
        elif decl.rate_per_hour is not None:
            step = rate_to_step_probability(decl.rate_per_hour, model.dt_seconds)
            result[decl.name] = geometric_cdf(step, k)
    return result


def fta_bound(
    minimal_sets: Iterable[Iterable[str]],
    probabilities: Mapping[str, float],
    *,
    model_checked: float | None = None,
) -> FtaBoundReport:
    """Sum over the minimal critical sets of the product of member probabilities."""
    terms = []
    for members in minimal_sets:
        names = tuple(sorted(members))
        missing = [name for name in names if name not in probabilities]
        if missing:
            raise AnalysisError(f"no horizon probability for failure mode {missing[0]}")
        terms.append(FtaTerm(names, math.prod(probabilities[name] for name in names)))
    total = math.fsum(term.product for term in terms)
    report = FtaBoundReport(tuple(terms), total, model_checked)
    if report.violated:
        _LOGGER.warning("Bound %.6g lies below the model-checked probability %.6g", total, model_checked)
    return report
