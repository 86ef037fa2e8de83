from __future__ import annotations

import math

import numpy as np
import pytest

from dtsafety.composition import HAZARD_LABEL, Flavor, compose, failure_label
from dtsafety.failures import (
    AnalysisMode,
    approximation_error,
    approximation_sweep,
    build_failure_automaton,
    exponential_cdf,
    functional_model,
    geometric_cdf,
    instantiate,
    max_absolute_error,
    pin_failures,
    rate_to_step_probability,
    scale_failure_probabilities,
    sweep_hours,
    without_failure_probabilities,
)
from dtsafety.model import FailureModeDecl, FailureModelError, FailurePattern, SystemModel
from dtsafety.modellang import lower, parse
from dtsafety.predicates import FailureActive, StateIs
from dtsafety.quantitative import hazard_probability


def test_rate_to_step_probability_case_study_rates() -> None:
    probability = rate_to_step_probability(1e-2, 0.01)
    assert probability == pytest.approx(1e-2 / 3600 * 0.01, rel=1e-12)
    assert probability == pytest.approx(2.7777777777777778e-08, rel=1e-12)


def test_rate_to_step_probability_rejects_coarse_resolution() -> None:
    with pytest.raises(FailureModelError, match="finer temporal resolution"):
        rate_to_step_probability(3600.0, 1.0)
    with pytest.raises(FailureModelError):
        rate_to_step_probability(-1.0, 1.0)


def test_geometric_cdf_edge_cases() -> None:
    assert geometric_cdf(0.0, 10**6) == 0.0
    assert geometric_cdf(1.0, 1) == 1.0
    assert geometric_cdf(1.0, 0) == 0.0
    assert geometric_cdf(0.3, 0) == 0.0


def test_geometric_cdf_matches_series_summation() -> None:
    p = rate_to_step_probability(1e-2, 0.01)
    k = 360_000
    series = math.fsum(p * (1 - p) ** i for i in range(k))
    assert geometric_cdf(p, k) == pytest.approx(series, rel=1e-9)
    assert geometric_cdf(p, k) == pytest.approx(1 - math.exp(k * math.log1p(-p)), rel=1e-9)


def test_approximation_error_at_mean_time_to_failure() -> None:
    point = approximation_error(1e-2, 1.0, 100.0)
    assert point.steps == 360_000
    assert point.exp_cdf == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert point.exp_cdf == pytest.approx(0.63212, abs=1e-5)
    assert point.absolute == pytest.approx(5.1095e-7, rel=5e-3)
    assert point.relative == pytest.approx(point.absolute / point.exp_cdf)


def test_approximation_error_decreases_after_the_peak() -> None:
    at_100, at_200, at_500 = approximation_sweep(1e-2, 1.0, [100.0, 200.0, 500.0])
    assert at_100.absolute > at_200.absolute > at_500.absolute


def test_approximation_error_at_zero_has_no_relative_error() -> None:
    point = approximation_error(1e-2, 1.0, 0.0)
    assert point.absolute == 0.0
    assert point.relative is None
    with pytest.raises(ValueError):
        approximation_error(1e-2, 1.0, -1.0)


def test_approximation_sweep_peak() -> None:
    points = approximation_sweep(1e-2, 1.0, sweep_hours(0.0, 500.0, 101))
    worst = max_absolute_error(points)
    assert worst is not None
    assert worst.t_hours == pytest.approx(100.0)
    assert max_absolute_error([]) is None


def test_exponential_cdf_vectorized() -> None:
    values = exponential_cdf(1.0, np.array([0.0, 1.0]))
    np.testing.assert_allclose(values, [0.0, 1 - math.exp(-1)])


def test_qualitative_automata() -> None:
    transient = build_failure_automaton(FailureModeDecl("F", FailurePattern.TRANSIENT), AnalysisMode.QUALITATIVE, 1.0)
    assert transient.states == ("no", "yes")
    assert transient.initial == "no"
    assert {(t.source, t.target) for t in transient.transitions} == {
        ("no", "no"), ("no", "yes"), ("yes", "no"), ("yes", "yes")
    }
    persistent = build_failure_automaton(FailureModeDecl("F", FailurePattern.PERSISTENT), AnalysisMode.QUALITATIVE, 1.0)
    assert [(t.source, t.target) for t in persistent.transitions_from("yes")] == [("yes", "yes")]


def test_per_time_automaton_probabilities() -> None:
    decl = FailureModeDecl("F", FailurePattern.PER_TIME, rate_per_hour=1e-2)
    automaton = build_failure_automaton(decl, AnalysisMode.PROBABILISTIC, 0.01)
    leaving = {t.target: t.probability for t in automaton.transitions_from("no")}
    assert leaving["yes"] == pytest.approx(2.7777777777777778e-08, rel=1e-12)
    assert leaving["no"] == pytest.approx(1 - leaving["yes"])
    assert [(t.target, t.probability) for t in automaton.transitions_from("yes")] == [("yes", 1.0)]


def test_per_demand_automaton_is_gated() -> None:
    demand = StateIs("A", "idle")
    decl = FailureModeDecl("F", FailurePattern.PER_DEMAND, probability=1e-4, demand=demand)
    automaton = build_failure_automaton(decl, AnalysisMode.PROBABILISTIC, 0.01)
    for source in ("no", "yes"):
        transitions = automaton.transitions_from(source)
        assert {(t.target, t.probability) for t in transitions if t.guard == demand} == {("yes", 1e-4), ("no", 1 - 1e-4)}
        # Without a demand the automaton keeps its state.
        assert [(t.target, t.probability) for t in transitions if t.guard != demand] == [(source, 1.0)]


def test_failed_demand_stays_visible_in_the_failure_successor() -> None:
    model = lower(
        parse(
            """
            const dt = 1s;
            automaton A { states idle, ok, bad; init idle; idle -> ok [!F]; idle -> bad [F]; ok -> ok; bad -> bad; }
            failure F per_demand(0.25) on A demand(A.state == idle);
            hazard H = A.state == bad;
            """,
            "test.ssm",
        )
    )
    space = compose(instantiate(model, AnalysisMode.PROBABILISTIC), Flavor.DTMC)
    failed = space.label(failure_label("F"))
    hazard = space.label(HAZARD_LABEL)
    assert hazard.any()
    assert failed[hazard].all()
    assert hazard_probability(space, 5) == pytest.approx(0.25)


def test_probabilistic_mode_needs_rates() -> None:
    with pytest.raises(FailureModelError, match="has no rate"):
        build_failure_automaton(FailureModeDecl("F", FailurePattern.PERSISTENT), AnalysisMode.PROBABILISTIC, 1.0)
    with pytest.raises(FailureModelError, match="repair rate"):
        build_failure_automaton(
            FailureModeDecl("F", FailurePattern.TRANSIENT, rate_per_hour=1.0), AnalysisMode.PROBABILISTIC, 1.0
        )


@pytest.mark.parametrize("k", [1, 10, 1_000, 100_000])
def test_single_failure_automaton_matches_closed_form(k: int) -> None:
    decl = FailureModeDecl("F", FailurePattern.PER_TIME, rate_per_hour=36.0)
    model = SystemModel("single", (), (decl,), FailureActive("F"), dt_seconds=1.0)
    space = compose(instantiate(model, AnalysisMode.PROBABILISTIC), Flavor.DTMC)
    p = rate_to_step_probability(36.0, 1.0)
    assert hazard_probability(space, k) == pytest.approx(geometric_cdf(p, k), abs=1e-12)


def test_pin_failures(backup_model) -> None:
    qualitative = instantiate(backup_model, AnalysisMode.QUALITATIVE)
    pinned = pin_failures(qualitative, {"MonitorFails": "yes"})
    automaton = pinned.automaton("MonitorFails")
    assert automaton.initial == "yes"
    assert [(t.source, t.target) for t in automaton.transitions] == [("yes", "yes")]
    with pytest.raises(FailureModelError, match="'no' or 'yes'"):
        pin_failures(qualitative, {"MonitorFails": "maybe"})
    with pytest.raises(FailureModelError, match="no failure automaton"):
        pin_failures(qualitative, {"A1": "no"})


def test_functional_model_drops_failures(backup_model) -> None:
    functional = functional_model(backup_model)
    assert functional.failures == ()
    guards = [t.guard for a in functional.automata for t in a.transitions]
    assert not any("Fails" in repr(guard) for guard in guards)
    # Guards that need a failure disappear entirely.
    assert [(t.source, t.target) for t in functional.automaton("S1").transitions] == [("sig", "sig"), ("noSig", "sig")]
    with pytest.raises(FailureModelError, match="unknown failure modes"):
        functional_model(backup_model, ["Nope"])


def test_probability_rewrites(backup_model) -> None:
    zero = without_failure_probabilities(backup_model)
    assert {decl.rate_per_hour for decl in zero.failures if decl.pattern is FailurePattern.PER_TIME} == {0.0}
    assert zero.failure("A2FailsActivate").probability == 0.0

    scaled = scale_failure_probabilities(backup_model, 1e6)
    assert scaled.failure("S1FailsSig").rate_per_hour == pytest.approx(1e4)
    assert scaled.failure("A2FailsActivate").probability == 1.0
    with pytest.raises(FailureModelError):
        scale_failure_probabilities(backup_model, -1.0)
