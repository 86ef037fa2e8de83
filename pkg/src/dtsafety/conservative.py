"""Conservative-extension check: observable trace sets of two models coincide."""

from __future__ import annotations

from collections import deque
import logging

from .composition import Flavor, StateSpace, compose
from .model import ModelError, SystemModel
from .predicates import PredicateExpr

_LOGGER = logging.getLogger(__name__)

CONSERVATIVE_STATE_CAP = 100_000

Observation = tuple[bool, ...]


def observables_of(original: SystemModel, extended: SystemModel) -> tuple[list[PredicateExpr], list[PredicateExpr], list[str]]:
    """Observable predicates shared by both models, in the original's order.

    Models without observables are compared on their hazard predicate.
    """
    if not original.observables:
        return [original.hazard], [extended.hazard], [original.hazard_name]
    names = [name for name, _ in original.observables]
    extended_map = dict(extended.observables)
    missing = [name for name in names if name not in extended_map]
    if missing:
        raise ModelError(f"extended model lacks observables: {', '.join(missing)}")
    original_map = dict(original.observables)
    return [original_map[name] for name in names], [extended_map[name] for name in names], names


def trace_difference(
    original: SystemModel,
    extended: SystemModel,
    *,
    state_cap: int = CONSERVATIVE_STATE_CAP,
) -> list[dict[str, bool]] | None:
    """Shortest observation sequence possible in exactly one of the models, or None.

    Both models are composed nondeterministically and their observation
    languages compared by a joint subset construction.
    """
    left_exprs, right_exprs, names = observables_of(original, extended)
    left = compose(original, Flavor.NONDETERMINISTIC, state_cap=state_cap)
    right = compose(extended, Flavor.NONDETERMINISTIC, state_cap=state_cap)
    left_obs = _observations(left, left_exprs)
    right_obs = _observations(right, right_exprs)

    start = (frozenset({left.initial_index}), frozenset({right.initial_index}))
    if left_obs[left.initial_index] != right_obs[right.initial_index]:
        return [dict(zip(names, left_obs[left.initial_index]))]

    parents: dict[tuple[frozenset[int], frozenset[int]], tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        left_next = _successors_by_observation(left, left_obs, pair[0])
        right_next = _successors_by_observation(right, right_obs, pair[1])
        unmatched = sorted(left_next.keys() ^ right_next.keys())
        if unmatched:
            return _trace(parents, pair, left_obs, names) + [dict(zip(names, unmatched[0]))]
        for observation in sorted(left_next):
            following = (frozenset(left_next[observation]), frozenset(right_next[observation]))
            if following not in parents:
                parents[following] = pair
                queue.append(following)
    _LOGGER.debug("Conservative check explored %d subset pairs", len(parents))
    return None


def check_conservative(
    original: SystemModel,
    extended: SystemModel,
    *,
    state_cap: int = CONSERVATIVE_STATE_CAP,
) -> bool:
    """True iff every observable behaviour of one model is possible in the other."""
    difference = trace_difference(original, extended, state_cap=state_cap)
    if difference is not None:
        _LOGGER.info("Models differ observably after %d steps", len(difference) - 1)
    return difference is None


def _observations(space: StateSpace, exprs: list[PredicateExpr]) -> list[Observation]:
    columns = [space.evaluate(expr) for expr in exprs]
    return [tuple(bool(column[i]) for column in columns) for i in range(space.size)]


def _successors_by_observation(
    space: StateSpace, observations: list[Observation], states: frozenset[int]
) -> dict[Observation, set[int]]:
    grouped: dict[Observation, set[int]] = {}
    for state in sorted(states):
        for successor in space.successors(state):
            grouped.setdefault(observations[successor], set()).add(successor)
    return grouped


def _trace(parents: dict, pair: tuple, observations: list[Observation], names: list[str]) -> list[dict[str, bool]]:
    chain = []
    current = pair
    while current is not None:
        chain.append(current)
        current = parents[current]
    chain.reverse()
    return [dict(zip(names, observations[min(left)])) for left, _ in chain]
