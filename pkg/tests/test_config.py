from __future__ import annotations

from pathlib import Path

import pytest

from dtsafety.config import (
    CONFIG_FILENAME,
    ConfigError,
    config_summary,
    default_config_text,
    load_config,
    write_default_config,
)


def test_load_config_defaults(tmp_path: Path) -> None:
    config = load_config(cwd=tmp_path)
    assert config.source is None
    assert config.paths.logs == tmp_path / "logs"
    assert config.paths.reports == tmp_path / "reports"
    assert config.paths.errors == tmp_path / "errors"
    assert config.logging.level == "INFO"
    assert config.logging.console_level == "WARNING"
    assert config.analysis.state_cap == 10_000_000
    assert config.analysis.workers is None
    assert config.analysis.mc_samples == 100_000
    assert config.analysis.mc_seed == 0
    assert config.analysis.occurrence == "state"
    assert config.analysis.elide_decide is True
    assert config.analysis.summation == "compensated"
    assert config.analysis.curve_stride is None


def test_load_config_overrides(tmp_path: Path) -> None:
    config_dir = tmp_path / "cfg"
    config_dir.mkdir()
    config_path = config_dir / "custom.toml"
    config_path.write_text(
        """
[paths]
reports = "out"
[logging]
level = "debug"
console_level = "error"
[analysis]
state_cap = 5000
workers = 3
mc_samples = 200
mc_seed = 7
occurrence = "History"
elide_decide = false
summation = "Plain"
curve_stride = 100
""".lstrip()
    )

    config = load_config(config_path, cwd=tmp_path)
    assert config.source == config_path
    assert config.paths.reports == config_dir / "out"
    assert config.paths.logs == config_dir / "logs"
    assert config.logging.level == "DEBUG"
    assert config.logging.console_level == "ERROR"
    assert config.analysis.state_cap == 5000
    assert config.analysis.workers == 3
    assert config.analysis.mc_samples == 200
    assert config.analysis.mc_seed == 7
    assert config.analysis.occurrence == "history"
    assert config.analysis.elide_decide is False
    assert config.analysis.summation == "plain"
    assert config.analysis.curve_stride == 100


def test_config_found_in_working_directory(tmp_path: Path) -> None:
    (tmp_path / CONFIG_FILENAME).write_text("[analysis]\nworkers = \"auto\"\nstate_cap = 0\n")
    config = load_config(cwd=tmp_path)
    assert config.source == tmp_path / CONFIG_FILENAME
    assert config.analysis.workers is None
    assert config.analysis.state_cap == 10_000_000


def test_invalid_choice_raises(tmp_path: Path) -> None:
    config_path = tmp_path / "bad.toml"
    config_path.write_text('[analysis]\noccurrence = "sometimes"\n')
    with pytest.raises(RuntimeError, match="occurrence"):
        load_config(config_path, cwd=tmp_path)


def test_missing_config_raises(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.toml", cwd=tmp_path)


def test_default_config_file_loads_back(tmp_path: Path) -> None:
    path = tmp_path / CONFIG_FILENAME
    write_default_config(path)
    assert load_config(path, cwd=tmp_path).analysis == load_config(cwd=tmp_path / "empty").analysis


def test_config_summary_mentions_source(tmp_path: Path) -> None:
    summary = config_summary(load_config(cwd=tmp_path))
    assert "source: defaults" in summary
    assert "workers: auto" in summary


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("[analysis]\nstate_limit = 5\n", "analysis.state_limit"),
        ("[output]\nformat = \"json\"\n", r"\[output\]"),
        ("[analysis\n", "Cannot parse"),
    ],
)
def test_unusable_config_raises(tmp_path: Path, text: str, message: str) -> None:
    config_path = tmp_path / "bad.toml"
    config_path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        load_config(config_path, cwd=tmp_path)


def test_default_config_text_comments_out_the_curve_stride() -> None:
    text = default_config_text()
    assert "[analysis]\nstate_cap = 10000000\nworkers = \"auto\"\n" in text
    assert "# curve_stride = 1000" in text
    assert "elide_decide = true" in text
