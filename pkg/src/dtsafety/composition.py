"""Lock-step composition of synchronous automata into an explicit state space."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
import logging
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
from scipy import sparse

from .diagnostics import Diagnostic, error
from .model import Automaton, ModelError, SystemModel
from .predicates import (
    TRUE,
    CompiledPredicate,
    FailureActive,
    GlobalState,
    PredicateExpr,
    compile_predicate,
    render,
    syntactically_exclusive,
)

_LOGGER = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 10_000_000
PROBABILITY_TOLERANCE = 1e-9

HAZARD_LABEL = "hazard"


def failure_label(name: str) -> str:
    return f"failure:{name}"


def observable_label(name: str) -> str:
    return f"observe:{name}"


class Flavor(Enum):
    NONDETERMINISTIC = "nondeterministic"
    DTMC = "dtmc"
    MDP = "mdp"


class CompositionError(ModelError):
    """Deadlocks and overlapping probabilistic groups found while composing."""

    def __init__(self, diagnostic: Diagnostic) -> None:
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class StateCapExceeded(ModelError):
    def __init__(self, cap: int) -> None:
        super().__init__(f"state space exceeds the cap of {cap} states")
        self.cap = cap


@dataclass(frozen=True)
class TransitionGroup:
    """Transitions of one automaton sharing source state and guard."""

    guard: PredicateExpr
    branches: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class StateSpace:
    """Reachable global states with choice groups and cached labels.

    Successor structure is stored in nested compressed form: the choice groups
    of state ``i`` are ``state_ptr[i]:state_ptr[i+1]``, the entries of group
    ``g`` are ``group_ptr[g]:group_ptr[g+1]`` in ``targets``/``probabilities``.
    Nondeterministic spaces have one group per state whose entries carry
    probability 1.
    """

    model: SystemModel
    flavor: Flavor
    states: tuple[GlobalState, ...]
    state_ptr: np.ndarray
    group_ptr: np.ndarray
    targets: np.ndarray
    probabilities: np.ndarray
    labels: Mapping[str, np.ndarray]
    initial_index: int = 0
    _matrix_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for array in (self.state_ptr, self.group_ptr, self.targets, self.probabilities, *self.labels.values()):
            array.flags.writeable = False

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def group_count(self) -> int:
        return len(self.group_ptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.targets)

    def label(self, name: str) -> np.ndarray:
        try:
            return self.labels[name]
        except KeyError as exc:
            raise KeyError(f"state space has no label '{name}'") from exc

    def evaluate(self, expr: PredicateExpr) -> np.ndarray:
        compiled = compile_predicate(expr, self.model)
        return np.fromiter((compiled(state) for state in self.states), dtype=bool, count=self.size)

    def groups_of(self, index: int) -> range:
        return range(int(self.state_ptr[index]), int(self.state_ptr[index + 1]))

    def entries_of(self, group: int) -> Iterator[tuple[int, float]]:
        start, end = int(self.group_ptr[group]), int(self.group_ptr[group + 1])
        for position in range(start, end):
            yield int(self.targets[position]), float(self.probabilities[position])

    def successors(self, index: int) -> list[int]:
        seen: dict[int, None] = {}
        for group in self.groups_of(index):
            for target, _ in self.entries_of(group):
                seen.setdefault(target, None)
        return list(seen)

    def group_owner(self) -> np.ndarray:
        """State index owning each choice group."""
        counts = np.diff(self.state_ptr)
        return np.repeat(np.arange(self.size), counts)

    def group_matrix(self) -> sparse.csr_matrix:
        """Choice groups x states matrix of branch probabilities."""
        if "groups" not in self._matrix_cache:
            matrix = sparse.csr_matrix(
                (self.probabilities.copy(), self.targets.copy(), self.group_ptr.copy()),
                shape=(self.group_count, self.size),
            )
            matrix.sum_duplicates()
            self._matrix_cache["groups"] = matrix
        return self._matrix_cache["groups"]

    def transition_matrix(self) -> sparse.csr_matrix:
        """State x state probability matrix of a DTMC."""
        if self.flavor is not Flavor.DTMC:
            raise ModelError(f"transition matrix requires a dtmc state space, not {self.flavor.value}")
        return self.group_matrix()

    def adjacency(self) -> sparse.csr_matrix:
        """Boolean successor relation, state x state."""
        if "adjacency" not in self._matrix_cache:
            owner = self.group_owner()
            rows = np.repeat(owner, np.diff(self.group_ptr))
            data = np.ones(len(self.targets), dtype=np.int8)
            matrix = sparse.csr_matrix((data, (rows, self.targets.copy())), shape=(self.size, self.size))
            matrix.data[:] = 1
            self._matrix_cache["adjacency"] = matrix
        return self._matrix_cache["adjacency"]

    def describe(self, index: int) -> dict[str, str]:
        return self.model.describe(self.states[index])


def compile_groups(automaton: Automaton, index: SystemModel) -> list[list[tuple[CompiledPredicate, TransitionGroup]]]:
    """Group an automaton's transitions by (source, guard), per local state."""
    grouped: list[dict[PredicateExpr, list[tuple[int, float]]]] = [{} for _ in automaton.states]
    for transition in automaton.transitions:
        source = automaton.state_index(transition.source)
        target = automaton.state_index(transition.target)
        grouped[source].setdefault(transition.guard, []).append((target, transition.probability))
    compiled: list[list[tuple[CompiledPredicate, TransitionGroup]]] = []
    for groups in grouped:
        compiled.append(
            [
                (compile_predicate(guard, index), TransitionGroup(guard, tuple(branches)))
                for guard, branches in groups.items()
            ]
        )
    return compiled


IssueHandler = Callable[[Diagnostic], None]


def _raise_issue(diagnostic: Diagnostic) -> None:
    raise CompositionError(diagnostic)


def compose(
    model: SystemModel,
    flavor: Flavor = Flavor.DTMC,
    *,
    state_cap: int = DEFAULT_STATE_CAP,
    extra_labels: Mapping[str, PredicateExpr] | None = None,
) -> StateSpace:
    """Explore the reachable lock-step product breadth-first from the initial state.

    Every automaton takes exactly one enabled transition per global step and all
    guards read the pre-step state. Raises CompositionError on deadlock or, for
    dtmc spaces, on two simultaneously enabled transition groups of one automaton;
    StateCapExceeded once more than ``state_cap`` states are discovered.
    """
    return explore(model, flavor, state_cap=state_cap, on_issue=_raise_issue, extra_labels=extra_labels)


def explore(
    model: SystemModel,
    flavor: Flavor,
    *,
    state_cap: int,
    on_issue: IssueHandler,
    extra_labels: Mapping[str, PredicateExpr] | None = None,
) -> StateSpace:
    compiled = [compile_groups(automaton, model) for automaton in model.automata]
    checked = [not _groups_exclusive(groups) for groups in compiled]

    initial = model.initial_state()
    index: dict[GlobalState, int] = {initial: 0}
    states: list[GlobalState] = [initial]
    state_ptr = [0]
    group_ptr = [0]
    targets: list[int] = []
    probabilities: list[float] = []

    cursor = 0
    while cursor < len(states):
        state = states[cursor]
        cursor += 1
        choices = _enabled_choices(model, compiled, checked, state, flavor, on_issue)
        for distribution in _joint_distributions(choices, flavor):
            for successor, probability in distribution.items():
                position = index.get(successor)
                if position is None:
                    position = len(states)
                    if position >= state_cap:
                        raise StateCapExceeded(state_cap)
                    index[successor] = position
                    states.append(successor)
                targets.append(position)
                probabilities.append(probability)
            group_ptr.append(len(targets))
        state_ptr.append(len(group_ptr) - 1)

    _LOGGER.debug(
        "Composed %s (%s): %d states, %d edges",
        model.name,
        flavor.value,
        len(states),
        len(targets),
    )
    labels = compute_labels(model, states, extra_labels)
    return StateSpace(
        model=model,
        flavor=flavor,
        states=tuple(states),
        state_ptr=np.asarray(state_ptr, dtype=np.int64),
        group_ptr=np.asarray(group_ptr, dtype=np.int64),
        targets=np.asarray(targets, dtype=np.int64),
        probabilities=np.asarray(probabilities, dtype=np.float64),
        labels=labels,
    )


def compute_labels(
    model: SystemModel,
    states: Sequence[GlobalState],
    extra_labels: Mapping[str, PredicateExpr] | None = None,
) -> dict[str, np.ndarray]:
    predicates: dict[str, PredicateExpr] = {HAZARD_LABEL: model.hazard}
    for decl in model.failures:
        if model.has_automaton(decl.name):
            predicates[failure_label(decl.name)] = FailureActive(decl.name)
    for name, expr in model.observables:
        predicates[observable_label(name)] = expr
    predicates.update(extra_labels or {})

    labels: dict[str, np.ndarray] = {}
    for name, expr in predicates.items():
        compiled = compile_predicate(expr, model)
        labels[name] = np.fromiter((compiled(state) for state in states), dtype=bool, count=len(states))
    return labels


def _enabled_choices(
    model: SystemModel,
    compiled: list[list[list[tuple[CompiledPredicate, TransitionGroup]]]],
    checked: list[bool],
    state: GlobalState,
    flavor: Flavor,
    on_issue: IssueHandler,
) -> list[list[TransitionGroup]]:
    choices: list[list[TransitionGroup]] = []
    for automaton, groups, check, local in zip(model.automata, compiled, checked, state):
        enabled = [group for predicate, group in groups[local] if predicate(state)]
        if not enabled:
            on_issue(
                error(
                    f"deadlock: automaton {automaton.name} has no enabled transition in state "
                    f"{automaton.states[local]} (global state {_render_state(model, state)})",
                    automaton=automaton.name,
                    state=automaton.states[local],
                )
            )
            enabled = [TransitionGroup(guard=TRUE, branches=((local, 1.0),))]
        elif check and flavor is Flavor.DTMC and len(enabled) > 1:
            guards = ", ".join(f"[{render(group.guard)}]" for group in enabled)
            on_issue(
                error(
                    f"guards of automaton {automaton.name} overlap in state {automaton.states[local]}: "
                    f"{guards} (global state {_render_state(model, state)})",
                    automaton=automaton.name,
                    state=automaton.states[local],
                )
            )
            enabled = enabled[:1]
        choices.append(enabled)
    return choices


def _joint_distributions(
    choices: list[list[TransitionGroup]], flavor: Flavor
) -> Iterator[dict[GlobalState, float]]:
    if flavor is Flavor.NONDETERMINISTIC:
        per_automaton = []
        for groups in choices:
            targets: dict[int, None] = {}
            for group in groups:
                for target, probability in group.branches:
                    if probability > 0.0:
                        targets.setdefault(target, None)
            per_automaton.append(list(targets))
        yield {successor: 1.0 for successor in product(*per_automaton)}
        return

    for selection in product(*choices):
        distribution: dict[GlobalState, float] = {}
        branch_lists = [[branch for branch in group.branches if branch[1] > 0.0] for group in selection]
        for combination in product(*branch_lists):
            successor = tuple(target for target, _ in combination)
            probability = 1.0
            for _, branch_probability in combination:
                probability *= branch_probability
            distribution[successor] = distribution.get(successor, 0.0) + probability
        yield distribution


def _render_state(model: SystemModel, state: GlobalState) -> str:
    return ", ".join(f"{name}={local}" for name, local in model.describe(state).items())


def _groups_exclusive(groups: list[list[tuple[CompiledPredicate, TransitionGroup]]]) -> bool:
    """True when every pair of guards leaving a local state is syntactically exclusive."""
    for local_groups in groups:
        guards = [group.guard for _, group in local_groups]
        for i, left in enumerate(guards):
            for right in guards[i + 1 :]:
                if not syntactically_exclusive(left, right):
                    return False
    return True
