from __future__ import annotations

import pytest

from dtsafety.composition import Flavor, compose
from dtsafety.failures import AnalysisMode, instantiate, scale_failure_probabilities
from dtsafety.model import AnalysisError
from dtsafety.quantitative import hazard_probability
from dtsafety.simulation import monte_carlo_hazard, z_value


@pytest.fixture(scope="module")
def chain_space(chain_model):
    return compose(chain_model, Flavor.DTMC)


def test_chain_estimate_within_three_sigma(chain_space) -> None:
    estimate = monte_carlo_hazard(chain_space, 3, 100_000, seed=1)
    assert estimate.samples == 100_000
    assert abs(estimate.estimate - 0.75) <= 3 * estimate.sigma
    assert estimate.half_width == pytest.approx(1.96 * estimate.sigma)


def test_same_seed_same_estimate(chain_space) -> None:
    first = monte_carlo_hazard(chain_space, 3, 5_000, seed=42)
    second = monte_carlo_hazard(chain_space, 3, 5_000, seed=42)
    assert first == second


def test_zero_horizon_counts_initial_hazard_only(chain_space) -> None:
    estimate = monte_carlo_hazard(chain_space, 0, 100)
    assert estimate.hits == 0
    assert estimate.estimate == 0.0
    assert estimate.half_width == 0.0


def test_invalid_arguments(chain_space, chain_model) -> None:
    with pytest.raises(AnalysisError, match="dtmc"):
        monte_carlo_hazard(compose(chain_model, Flavor.MDP), 3, 10)
    with pytest.raises(AnalysisError, match="at least one sample"):
        monte_carlo_hazard(chain_space, 3, 0)
    with pytest.raises(AnalysisError, match="non-negative"):
        monte_carlo_hazard(chain_space, -1, 10)


def test_z_value() -> None:
    assert z_value(0.95) == 1.96
    assert z_value(0.99) == pytest.approx(2.5758, abs=1e-4)
    with pytest.raises(AnalysisError):
        z_value(1.0)


@pytest.mark.slow
def test_inflated_case_study_agrees_with_model_checking(backup_model) -> None:
    inflated = scale_failure_probabilities(backup_model, 1e6)
    space = compose(instantiate(inflated, AnalysisMode.PROBABILISTIC), Flavor.DTMC)
    k = 100
    exact = hazard_probability(space, k)
    estimate = monte_carlo_hazard(space, k, 100_000, seed=0)
    assert 0.0 < exact < 1.0
    assert abs(estimate.estimate - exact) <= 3 * estimate.sigma
