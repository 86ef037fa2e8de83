"""Integration of per-demand failure modes into a functional automaton.

The affected automaton M is rewritten into M': every demand state ``s`` gets a
merged successor ``s'`` standing for "one of the success or failure successors
of s", and the actual successor is recovered by ``in(d)`` predicates from the
failure automaton (and, in the general case, a decide automaton recording the
successor pair). All tests ``M.state == d`` for such successors are replaced by
``M.in(d)`` throughout the model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import logging

from .failures import AnalysisMode, build_failure_automaton
from .model import (
    Automaton,
    AutomatonKind,
    FailureModeDecl,
    FailurePattern,
    GuardedTransition,
    ModelError,
    SystemModel,
)
from .predicates import (
    FALSE,
    TRUE,
    Atom,
    FailureActive,
    InState,
    PredicateExpr,
    StateIs,
    assume_failure,
    conjoin,
    disjoin,
    map_atoms,
    negate,
    references_failure,
)

_LOGGER = logging.getLogger(__name__)

UNDEFINED = "undef"


class InjectionError(ModelError):
    """Raised when a per-demand failure mode cannot be integrated."""


@dataclass(frozen=True)
class DemandState:
    """Gated transitions leaving one demand state ``s`` of M."""

    state: str
    merged: str
    # (condition without the failure literal, target)
    success: tuple[tuple[PredicateExpr, str], ...]
    failure: tuple[tuple[PredicateExpr, str], ...]

    @property
    def success_targets(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(target for _, target in self.success))

    @property
    def failure_targets(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(target for _, target in self.failure))

    @property
    def conditions(self) -> tuple[PredicateExpr, ...]:
        return tuple(dict.fromkeys(condition for condition, _ in (*self.success, *self.failure)))

    def pairs(self) -> list[tuple[str, str]]:
        return [(a, b) for a in self.success_targets for b in self.failure_targets]


def demand_states(automaton: Automaton, failure: str) -> list[DemandState]:
    """Split the transitions of ``automaton`` whose guards test ``failure``."""
    found: dict[str, tuple[list, list]] = {}
    for transition in automaton.transitions:
        if not references_failure(transition.guard, failure):
            continue
        if transition.probability != 1.0:
            raise InjectionError(
                f"automaton {automaton.name}: probabilistic transition {transition.source} -> {transition.target} "
                f"cannot be gated by per-demand failure mode {failure}"
            )
        success, failed = found.setdefault(transition.source, ([], []))
        when_absent = assume_failure(transition.guard, failure, False)
        when_present = assume_failure(transition.guard, failure, True)
        if when_absent != FALSE:
            success.append((when_absent, transition.target))
        if when_present != FALSE:
            failed.append((when_present, transition.target))

    states = []
    taken = set(automaton.states)
    for state in automaton.states:
        if state not in found:
            continue
        success, failed = found[state]
        if not success or not failed:
            branch = "success" if not success else "failure"
            raise InjectionError(
                f"automaton {automaton.name} has no {branch} transition gated by {failure} in state {state}"
            )
        merged = state + "'"
        while merged in taken:
            merged += "'"
        taken.add(merged)
        states.append(DemandState(state, merged, tuple(success), tuple(failed)))
    return states


def inject_per_demand(model: SystemModel, decl: FailureModeDecl, *, elide_decide: bool = True) -> SystemModel:
    """Integrate per-demand failure mode ``decl`` into every automaton gated by it.

    Adds the demand-gated failure automaton and, unless every demand state has
    exactly one success and one failure successor (and ``elide_decide`` is set),
    one decide automaton per transformed automaton.
    """
    if decl.pattern is not FailurePattern.PER_DEMAND:
        raise InjectionError(f"failure mode '{decl.name}' is not a per-demand mode")
    if model.has_automaton(decl.name):
        raise InjectionError(f"failure mode '{decl.name}' already has an automaton")

    affected = [
        automaton
        for automaton in model.automata
        if automaton.kind is AutomatonKind.FUNCTIONAL
        and any(references_failure(transition.guard, decl.name) for transition in automaton.transitions)
    ]
    if decl.affected is not None:
        if decl.affected not in {automaton.name for automaton in affected}:
            raise InjectionError(
                f"automaton {decl.affected} has no transition gated by failure mode '{decl.name}'"
            )
        affected = [automaton for automaton in affected if automaton.name == decl.affected]

    result = model
    demands: list[PredicateExpr] = []
    for automaton in affected:
        result, demand = _transform(result, automaton.name, decl.name, elide_decide)
        demands.append(demand)

    if demands:
        demand = disjoin(*demands)
        if decl.demand is not None and decl.demand != demand:
            _LOGGER.debug("Demand of %s derived from gated transitions replaces the declared one", decl.name)
    elif decl.demand is not None:
        demand = decl.demand
    else:
        raise InjectionError(f"failure mode '{decl.name}' gates no transition and declares no demand")

    failure_automaton = build_failure_automaton(
        decl, AnalysisMode.PROBABILISTIC, result.dt_seconds, demand=demand
    )
    injected = replace(decl, demand=demand, affected=affected[0].name if len(affected) == 1 else decl.affected)
    failures = tuple(injected if item.name == decl.name else item for item in result.failures)
    return replace(result, automata=(*result.automata, failure_automaton), failures=failures)


def _transform(model: SystemModel, name: str, failure: str, elide_decide: bool) -> tuple[SystemModel, PredicateExpr]:
    automaton = model.automaton(name)
    demand_list = demand_states(automaton, failure)
    use_decide = not (
        elide_decide
        and all(len(item.success_targets) == 1 and len(item.failure_targets) == 1 for item in demand_list)
    )
    decide_name = _fresh_name(model, f"{name}_{failure}_decide") if use_decide else None

    absent = negate(FailureActive(failure))
    present = FailureActive(failure)

    # Gated transitions of s are replaced by a single demand transition into s'.
    gated = {item.state for item in demand_list}
    kept = [
        transition
        for transition in automaton.transitions
        if not (transition.source in gated and references_failure(transition.guard, failure))
    ]
    for item in demand_list:
        kept.append(GuardedTransition(item.state, item.merged, disjoin(*item.conditions)))

    # s' behaves like whichever successor d it stands for.
    lifted: list[GuardedTransition] = []
    for item in demand_list:
        for target in dict.fromkeys((*item.success_targets, *item.failure_targets)):
            for transition in kept:
                if transition.source == target:
                    lifted.append(
                        GuardedTransition(
                            item.merged,
                            transition.target,
                            conjoin(transition.guard, InState(name, target)),
                            transition.probability,
                        )
                    )

    # in(d) expansions: success successors see the failure absent, failure successors present.
    expansions: dict[str, list[PredicateExpr]] = {}
    for item in demand_list:
        merged = StateIs(name, item.merged)
        for a in item.success_targets:
            choice = (
                disjoin(*(StateIs(decide_name, _pair_state(item, a, b)) for b in item.failure_targets))
                if decide_name
                else TRUE
            )
            expansions.setdefault(a, []).append(conjoin(merged, choice, absent))
        for b in item.failure_targets:
            choice = (
                disjoin(*(StateIs(decide_name, _pair_state(item, a, b)) for a in item.success_targets))
                if decide_name
                else TRUE
            )
            expansions.setdefault(b, []).append(conjoin(merged, choice, present))

    in_map = dict(model.in_predicates)
    for target, terms in expansions.items():
        previous = in_map.get((name, target), StateIs(name, target))
        in_map[(name, target)] = disjoin(previous, *terms)

    states = (*automaton.states, *(item.merged for item in demand_list))
    transformed = replace(automaton, states=states, transitions=tuple((*kept, *lifted)))
    rewritten = _rewrite_state_tests(model.replace_automaton(transformed), name, set(expansions))

    demand = disjoin(*(conjoin(InState(name, item.state), disjoin(*item.conditions)) for item in demand_list))
    demand = _rewrite_expr(demand, name, set(expansions))

    automata = list(rewritten.automata)
    if decide_name is not None:
        automata.append(_decide_automaton(decide_name, name, demand_list, set(expansions)))
    _LOGGER.debug(
        "Injected %s into %s: %d demand states, decide automaton %s",
        failure,
        name,
        len(demand_list),
        decide_name or "elided",
    )
    return replace(rewritten, automata=tuple(automata), in_predicates=tuple(in_map.items())), demand


def _decide_automaton(
    decide_name: str, name: str, demand_list: list[DemandState], observed: set[str]
) -> Automaton:
    """Records the (success, failure) successor pair chosen when entering s'."""
    states = [UNDEFINED]
    entries: list[tuple[str, PredicateExpr]] = []
    for item in demand_list:
        for a, b in item.pairs():
            when_success = disjoin(*(condition for condition, target in item.success if target == a))
            when_failure = disjoin(*(condition for condition, target in item.failure if target == b))
            guard = conjoin(InState(name, item.state), when_success, when_failure)
            states.append(_pair_state(item, a, b))
            entries.append((_pair_state(item, a, b), _rewrite_expr(guard, name, observed)))

    idle = negate(disjoin(*(guard for _, guard in entries))) if entries else TRUE
    transitions = []
    for source in states:
        for target, guard in entries:
            transitions.append(GuardedTransition(source, target, guard))
        transitions.append(GuardedTransition(source, UNDEFINED, idle))
    return Automaton(
        name=decide_name,
        states=tuple(states),
        initial=UNDEFINED,
        transitions=tuple(transitions),
        kind=AutomatonKind.DECIDE,
    )


def _pair_state(item: DemandState, success: str, failure: str) -> str:
    return f"{item.state}:{success}|{failure}"


def _rewrite_expr(expr: PredicateExpr, name: str, observed: set[str]) -> PredicateExpr:
    def swap(atom: Atom) -> PredicateExpr:
        if isinstance(atom, StateIs) and atom.automaton == name and atom.state in observed:
            return InState(name, atom.state)
        return atom

    return map_atoms(expr, swap)


def _rewrite_state_tests(model: SystemModel, name: str, observed: set[str]) -> SystemModel:
    """Replace ``name.state == d`` by ``name.in(d)`` in guards, hazard, observables and demands."""
    automata = []
    for automaton in model.automata:
        transitions = tuple(
            replace(transition, guard=_rewrite_expr(transition.guard, name, observed))
            for transition in automaton.transitions
        )
        automata.append(replace(automaton, transitions=transitions))
    failures = tuple(
        replace(decl, demand=_rewrite_expr(decl.demand, name, observed)) if decl.demand is not None else decl
        for decl in model.failures
    )
    return replace(
        model,
        automata=tuple(automata),
        failures=failures,
        hazard=_rewrite_expr(model.hazard, name, observed),
        observables=tuple((label, _rewrite_expr(expr, name, observed)) for label, expr in model.observables),
    )


def _fresh_name(model: SystemModel, base: str) -> str:
    candidate = base
    counter = 2
    while model.has_automaton(candidate):
        candidate = f"{base}{counter}"
        counter += 1
    return candidate
