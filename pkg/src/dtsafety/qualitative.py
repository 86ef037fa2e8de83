"""Deductive cause-consequence analysis: minimal critical failure sets.

A set of failure modes is critical when the hazard is reachable on a path on
which no other failure mode occurs before the hazard, i.e. the initial state
satisfies ``E[not(others) U hazard]``. Criticality is monotone, so subsets are
searched by increasing size and supersets of critical sets are skipped.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
import logging
import os
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .composition import HAZARD_LABEL, Flavor, StateCapExceeded, StateSpace, failure_label
from .model import AnalysisError

_LOGGER = logging.getLogger(__name__)

OCCURRENCE_STATE = "state"
OCCURRENCE_HISTORY = "history"
OCCURRENCE_MODES = (OCCURRENCE_STATE, OCCURRENCE_HISTORY)


@dataclass(frozen=True)
class CriticalSet:
    failures: tuple[str, ...]
    minimal: bool = True
    witness: tuple[int, ...] = ()

    def __contains__(self, name: object) -> bool:
        return name in self.failures


@dataclass(frozen=True)
class DccaStats:
    states: int
    checks: int
    pruned: int


@dataclass(frozen=True)
class DccaResult:
    hazard: str
    failure_modes: tuple[str, ...]
    sets: tuple[CriticalSet, ...]
    stats: DccaStats
    functional_violation: bool = False
    witness_states: dict[int, dict[str, str]] = field(default_factory=dict, compare=False)

    def as_name_sets(self) -> list[frozenset[str]]:
        return [frozenset(item.failures) for item in self.sets]


@dataclass(frozen=True)
class UntilGraph:
    """Successor relation with per-state occurrence bit masks over the failure modes."""

    adjacency: sparse.csr_matrix
    hazard: np.ndarray
    occurrence: np.ndarray
    initial: int
    origin: np.ndarray

    @property
    def size(self) -> int:
        return len(self.hazard)


def until_graph(
    space: StateSpace,
    failures: Sequence[str],
    *,
    occurrence: str = OCCURRENCE_STATE,
    state_cap: int | None = None,
) -> UntilGraph:
    """Graph on which the EU fixpoint runs.

    With history occurrence the space is unfolded into (state, occurred-so-far)
    pairs, so a failure mode counts as occurred from its first activation on.
    """
    if occurrence not in OCCURRENCE_MODES:
        raise AnalysisError(f"unknown occurrence semantics '{occurrence}'")
    if len(failures) > 62:
        raise AnalysisError("at most 62 failure modes are supported")
    try:
        hazard = space.label(HAZARD_LABEL)
        columns = [space.label(failure_label(name)) for name in failures]
    except KeyError as exc:
        raise AnalysisError(str(exc)) from exc

    masks = np.zeros(space.size, dtype=np.int64)
    for bit, column in enumerate(columns):
        masks |= column.astype(np.int64) << bit

    if occurrence == OCCURRENCE_STATE:
        return UntilGraph(
            adjacency=space.adjacency(),
            hazard=hazard,
            occurrence=masks,
            initial=space.initial_index,
            origin=np.arange(space.size),
        )
    return _history_graph(space, hazard, masks, state_cap)


def _history_graph(space: StateSpace, hazard: np.ndarray, masks: np.ndarray, state_cap: int | None) -> UntilGraph:
    adjacency = space.adjacency()
    start = (space.initial_index, int(masks[space.initial_index]))
    index = {start: 0}
    nodes = [start]
    rows: list[int] = []
    cols: list[int] = []
    cursor = 0
    while cursor < len(nodes):
        state, seen = nodes[cursor]
        for successor in adjacency.indices[adjacency.indptr[state] : adjacency.indptr[state + 1]]:
            node = (int(successor), seen | int(masks[successor]))
            position = index.get(node)
            if position is None:
                position = len(nodes)
                if state_cap is not None and position >= state_cap:
                    raise StateCapExceeded(state_cap)
                index[node] = position
                nodes.append(node)
            rows.append(cursor)
            cols.append(position)
        cursor += 1
    origin = np.fromiter((state for state, _ in nodes), dtype=np.int64, count=len(nodes))
    size = len(nodes)
    matrix = sparse.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    return UntilGraph(
        adjacency=matrix,
        hazard=hazard[origin],
        occurrence=np.fromiter((seen for _, seen in nodes), dtype=np.int64, count=size),
        initial=0,
        origin=origin,
    )


def exists_until_levels(adjacency: sparse.csr_matrix, allowed: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least fixpoint of ``E[allowed U target]``.

    Returns per state the number of steps after which it joined the fixpoint
    (0 for target states) or -1 for states outside it.
    """
    levels = np.where(target, 0, -1).astype(np.int64)
    frontier = target.copy()
    level = 0
    while frontier.any():
        level += 1
        reaches = (adjacency @ frontier.astype(np.int32)) > 0
        frontier = reaches & allowed & (levels < 0)
        levels[frontier] = level
    return levels


def exists_until(adjacency: sparse.csr_matrix, allowed: np.ndarray, target: np.ndarray) -> np.ndarray:
    return exists_until_levels(adjacency, allowed, target) >= 0


def _allowed_mask(graph: UntilGraph, failures: Sequence[str], gamma: Iterable[str]) -> np.ndarray:
    positions = {name: bit for bit, name in enumerate(failures)}
    forbidden = 0
    chosen = set(gamma)
    unknown = chosen - positions.keys()
    if unknown:
        raise AnalysisError(f"unknown failure modes: {', '.join(sorted(unknown))}")
    for name, bit in positions.items():
        if name not in chosen:
            forbidden |= 1 << bit
    return (graph.occurrence & forbidden) == 0


def _witness(graph: UntilGraph, levels: np.ndarray) -> tuple[int, ...]:
    path = [graph.initial]
    current = graph.initial
    while levels[current] > 0:
        successors = graph.adjacency.indices[graph.adjacency.indptr[current] : graph.adjacency.indptr[current + 1]]
        step = min(int(s) for s in successors if 0 <= levels[s] < levels[current])
        path.append(step)
        current = step
    return tuple(int(graph.origin[node]) for node in path)


def check_critical(
    space: StateSpace,
    gamma: Iterable[str],
    failures: Sequence[str] | None = None,
    *,
    occurrence: str = OCCURRENCE_STATE,
    graph: UntilGraph | None = None,
) -> bool:
    """Whether failure set ``gamma`` can cause the hazard on its own."""
    critical, _ = _check(space, gamma, failures, occurrence, graph)
    return critical


def _check(
    space: StateSpace,
    gamma: Iterable[str],
    failures: Sequence[str] | None,
    occurrence: str,
    graph: UntilGraph | None,
) -> tuple[bool, tuple[int, ...]]:
    if space.flavor is not Flavor.NONDETERMINISTIC:
        raise AnalysisError("critical sets are computed on a nondeterministic state space")
    names = tuple(failures) if failures is not None else space.model.failure_names
    graph = graph or until_graph(space, names, occurrence=occurrence)
    levels = exists_until_levels(graph.adjacency, _allowed_mask(graph, names, gamma), graph.hazard)
    if levels[graph.initial] < 0:
        return False, ()
    return True, _witness(graph, levels)


def resolve_workers(configured: int | None, tasks: int) -> int:
    if configured is not None:
        return max(1, min(int(configured), max(tasks, 1)))
    return max(1, min(os.cpu_count() or 1, tasks))


def minimal_critical_sets(
    space: StateSpace,
    failures: Sequence[str] | None = None,
    *,
    hazard_name: str | None = None,
    occurrence: str = OCCURRENCE_STATE,
    workers: int | None = None,
    state_cap: int | None = None,
) -> DccaResult:
    """All minimal critical sets, by cardinality then lexicographic name order.

    Stops after the empty set when it is already critical (the failure-free
    system reaches the hazard).
    """
    names = tuple(sorted(failures if failures is not None else space.model.failure_names))
    graph = until_graph(space, names, occurrence=occurrence, state_cap=state_cap)
    hazard = hazard_name or space.model.hazard_name
    found: list[CriticalSet] = []
    checks = 0
    pruned = 0

    empty_critical, empty_witness = _check(space, (), names, occurrence, graph)
    checks += 1
    if empty_critical:
        _LOGGER.warning("Hazard %s is reachable without any failure", hazard)
        sets = (CriticalSet((), True, empty_witness),)
        return _result(space, hazard, names, sets, DccaStats(space.size, checks, pruned), True)

    with ThreadPoolExecutor(max_workers=resolve_workers(workers, len(names))) as executor:
        for size in range(1, len(names) + 1):
            candidates = []
            for candidate in combinations(names, size):
                if any(set(item.failures) <= set(candidate) for item in found):
                    pruned += 1
                else:
                    candidates.append(candidate)
            outcomes = list(executor.map(lambda gamma: _check(space, gamma, names, occurrence, graph), candidates))
            checks += len(candidates)
            for candidate, (critical, witness) in zip(candidates, outcomes):
                if critical:
                    found.append(CriticalSet(candidate, True, witness))
            _LOGGER.debug(
                "Level %d: %d checked, %d critical so far, %d pruned",
                size,
                len(candidates),
                len(found),
                pruned,
            )
            if not candidates and size > 1:
                pruned += sum(1 for _ in _remaining(names, size + 1))
                break

    _LOGGER.info("Found %d minimal critical sets for %s (%d checks)", len(found), hazard, checks)
    return _result(space, hazard, names, tuple(found), DccaStats(space.size, checks, pruned), False)


def brute_force_critical_sets(
    space: StateSpace, failures: Sequence[str] | None = None, *, occurrence: str = OCCURRENCE_STATE
) -> list[frozenset[str]]:
    """Minimization of all critical subsets, checked exhaustively."""
    names = tuple(sorted(failures if failures is not None else space.model.failure_names))
    graph = until_graph(space, names, occurrence=occurrence)
    critical = [
        frozenset(subset)
        for size in range(len(names) + 1)
        for subset in combinations(names, size)
        if check_critical(space, subset, names, occurrence=occurrence, graph=graph)
    ]
    return [item for item in critical if not any(other < item for other in critical)]


def _remaining(names: Sequence[str], start: int) -> Iterable[tuple[str, ...]]:
    for size in range(start, len(names) + 1):
        yield from combinations(names, size)


def _result(
    space: StateSpace,
    hazard: str,
    names: tuple[str, ...],
    sets: tuple[CriticalSet, ...],
    stats: DccaStats,
    violation: bool,
) -> DccaResult:
    referenced = sorted({state for item in sets for state in item.witness})
    return DccaResult(
        hazard=hazard,
        failure_modes=names,
        sets=sets,
        stats=stats,
        functional_violation=violation,
        witness_states={state: space.describe(state) for state in referenced},
    )
