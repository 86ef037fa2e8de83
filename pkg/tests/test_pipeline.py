from __future__ import annotations

from dataclasses import replace

import pytest

from dtsafety import validation
from dtsafety.composition import Flavor, compose
from dtsafety.config import load_config
from dtsafety.model import AnalysisError, AutomatonKind
from dtsafety.pipeline import (
    build_space,
    load,
    parse_duration,
    parse_pins,
    parse_rate,
    resolve_horizon,
    steps_for_duration,
)


@pytest.fixture
def analysis(tmp_path):
    return load_config(cwd=tmp_path).analysis


@pytest.mark.parametrize(
    ("text", "seconds"),
    [("1h", 3600.0), ("30min", 1800.0), ("10ms", 0.01), ("2.5 s", 2.5), ("1e2s", 100.0)],
)
def test_parse_duration(text, seconds):
    assert parse_duration(text) == pytest.approx(seconds)


@pytest.mark.parametrize("text", ["", "1", "h", "1d", "-1h", "1 hour"])
def test_parse_duration_rejects(text):
    with pytest.raises(AnalysisError, match="invalid duration"):
        parse_duration(text)


def test_parse_rate():
    assert parse_rate("1e-2/h") == pytest.approx(0.01)
    assert parse_rate("1/s") == pytest.approx(3600.0)
    with pytest.raises(AnalysisError, match="invalid rate"):
        parse_rate("1e-2")


def test_steps_for_duration():
    assert steps_for_duration(3600.0, 0.01) == 360000
    assert steps_for_duration(0.0, 0.01) == 0
    with pytest.raises(AnalysisError, match="not an integral multiple"):
        steps_for_duration(0.015, 0.01)


def test_resolve_horizon(backup_model, chain_model):
    assert resolve_horizon(backup_model, None, None) == 360000
    assert resolve_horizon(backup_model, 12, None) == 12
    assert resolve_horizon(backup_model, None, "1s") == 100
    assert resolve_horizon(chain_model, None, "3s") == 3
    with pytest.raises(AnalysisError, match="declares none"):
        resolve_horizon(chain_model, None, None)
    with pytest.raises(AnalysisError, match="not both"):
        resolve_horizon(chain_model, 3, "3s")
    with pytest.raises(AnalysisError, match="non-negative"):
        resolve_horizon(chain_model, -1, None)


def test_parse_pins():
    assert parse_pins(None) == {}
    assert parse_pins(["A1FailsSig=yes", " MonitorFails = no "]) == {"A1FailsSig": "yes", "MonitorFails": "no"}
    with pytest.raises(AnalysisError, match="invalid pin"):
        parse_pins(["A1FailsSig"])
    with pytest.raises(AnalysisError, match="invalid pin"):
        parse_pins(["=yes"])


def test_load_reports_slug(models_dir):
    loaded = load(models_dir / "backup_system.ssm")
    assert loaded.slug == "backup-system"
    assert loaded.model.name == "backup_system"
    assert loaded.source.hazards[0].name == "H"


def test_build_space_picks_failure_automata_by_flavor(chain_model, backup_model, analysis):
    built = build_space(chain_model, Flavor.DTMC, analysis)
    assert built.space.size == 3
    assert built.warnings == ()

    qualitative = build_space(backup_model, Flavor.NONDETERMINISTIC, analysis)
    kinds = {automaton.kind for automaton in qualitative.model.automata}
    assert AutomatonKind.FAILURE in kinds
    assert qualitative.space.flavor is Flavor.NONDETERMINISTIC


def test_build_space_applies_pins(backup_model, analysis):
    free = build_space(backup_model, Flavor.NONDETERMINISTIC, analysis)
    pinned = build_space(
        backup_model,
        Flavor.NONDETERMINISTIC,
        analysis,
        pins={name: "no" for name in backup_model.failure_names},
    )
    assert pinned.space.size < free.space.size
    assert not pinned.space.label("hazard").any()


def test_build_space_keeps_general_decide_when_asked(backup_model, analysis):
    elided = build_space(backup_model, Flavor.DTMC, analysis)
    general = build_space(backup_model, Flavor.DTMC, replace(analysis, elide_decide=False))
    assert not any(automaton.kind is AutomatonKind.DECIDE for automaton in elided.model.automata)
    assert any(automaton.kind is AutomatonKind.DECIDE for automaton in general.model.automata)


def test_build_space_explores_the_model_once(backup_model, analysis, monkeypatch):
    calls = []
    original = validation.explore

    def counting(*args, **kwargs):
        calls.append(args[1])
        return original(*args, **kwargs)

    monkeypatch.setattr(validation, "explore", counting)
    built = build_space(backup_model, Flavor.DTMC, analysis)

    assert calls == [Flavor.DTMC]
    reference = compose(built.model, Flavor.DTMC)
    assert built.space.states == reference.states
    assert (built.space.probabilities == reference.probabilities).all()
