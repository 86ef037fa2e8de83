"""Monte Carlo estimate of the bounded hazard probability, as a cross-check."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.stats import norm

from .composition import HAZARD_LABEL, Flavor, StateSpace
from .model import AnalysisError
from .quantitative import reachability_support

_LOGGER = logging.getLogger(__name__)

DEFAULT_CONFIDENCE = 0.95


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    half_width: float
    samples: int
    hits: int
    seed: int

    @property
    def sigma(self) -> float:
        return math.sqrt(self.estimate * (1.0 - self.estimate) / self.samples)


def z_value(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise AnalysisError(f"confidence must lie in (0, 1), got {confidence}")
    if confidence == DEFAULT_CONFIDENCE:
        return 1.96
    return float(norm.ppf(0.5 + confidence / 2.0))


def _global_cumulative(space: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """Row-offset cumulative branch probabilities, monotone over the whole matrix.

    Entry ``j`` of row ``r`` holds ``r + sum(P[r, :j+1])``, so sampling row
    ``r`` with uniform ``u`` is one ``searchsorted`` for ``r + u``.
    """
    matrix = space.transition_matrix()
    cumulative = np.empty_like(matrix.data)
    for row in range(space.size):
        start, end = matrix.indptr[row], matrix.indptr[row + 1]
        cumulative[start:end] = row + np.cumsum(matrix.data[start:end])
    return cumulative, matrix.indptr


def monte_carlo_hazard(
    space: StateSpace,
    k: int,
    samples: int,
    seed: int = 0,
    *,
    confidence: float = DEFAULT_CONFIDENCE,
) -> MonteCarloEstimate:
    """Fraction of ``samples`` trajectories of length ``k`` that hit the hazard.

    Deterministic for a given seed. Trajectories are advanced together and
    retired once they hit the hazard or can no longer reach it.
    """
    if space.flavor is not Flavor.DTMC:
        raise AnalysisError("simulation needs a dtmc state space")
    if samples < 1:
        raise AnalysisError(f"need at least one sample, got {samples}")
    if k < 0:
        raise AnalysisError(f"horizon must be non-negative, got {k}")

    rng = np.random.default_rng(seed)
    hazard = space.label(HAZARD_LABEL)
    alive_states = reachability_support(space, np.ones(space.size, dtype=bool), hazard)
    cumulative, indptr = _global_cumulative(space)
    matrix = space.transition_matrix()

    current = np.full(samples, space.initial_index, dtype=np.int64)
    hit = hazard[current].copy()
    running = ~hit & alive_states[current]
    for step in range(k):
        active = np.flatnonzero(running)
        if not len(active):
            break
        rows = current[active]
        draws = rows + rng.random(len(active))
        positions = np.searchsorted(cumulative, draws, side="right")
        positions = np.clip(positions, indptr[rows], indptr[rows + 1] - 1)
        current[active] = matrix.indices[positions]
        reached = hazard[current[active]]
        hit[active] |= reached
        running[active] = ~reached & alive_states[current[active]]
    else:
        step = k

    hits = int(hit.sum())
    estimate = hits / samples
    half_width = z_value(confidence) * math.sqrt(estimate * (1.0 - estimate) / samples)
    _LOGGER.debug("Simulated %d trajectories, %d hits, stopped after %d steps", samples, hits, step)
    return MonteCarloEstimate(estimate, half_width, samples, hits, seed)
