"""Configuration of dtsafety runs (``dtsafety.toml``).

Every section is a frozen dataclass whose field defaults are the built-in
configuration; a TOML table only needs to name the values it changes.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable, Mapping

_TOML = None
try:  # pragma: no cover - module availability depends on Python version
    import tomllib as _TOML
except ModuleNotFoundError:  # pragma: no cover - fallback for older Python
    try:
        import tomli as _TOML
    except ModuleNotFoundError:
        _TOML = None


CONFIG_FILENAME = "dtsafety.toml"
OCCURRENCE_MODES = ("state", "history")
SUMMATION_MODES = ("plain", "compensated")


class ConfigError(RuntimeError):
    """A configuration file that cannot be used."""


def _reject_unknown(section: str, table: Mapping[str, Any], known: set[str]) -> None:
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"Unknown key {section}.{unknown[0]} in configuration.")


@dataclass(frozen=True)
class PathsConfig:
    logs: Path = Path("logs")
    reports: Path = Path("reports")
    errors: Path = Path("errors")

    @classmethod
    def from_table(cls, table: Mapping[str, Any], base_dir: Path) -> PathsConfig:
        """Paths of the table, relative ones resolved against ``base_dir``."""
        names = {item.name for item in fields(cls)}
        _reject_unknown("paths", table, names)
        resolved = {}
        for name in names:
            path = Path(str(table.get(name, getattr(cls, name))))
            resolved[name] = path if path.is_absolute() else base_dir / path
        return cls(**resolved)


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"
    console_level: str = "WARNING"

    @classmethod
    def from_table(cls, table: Mapping[str, Any]) -> LoggingConfig:
        _reject_unknown("logging", table, {"level", "console_level"})
        return cls(
            level=str(table.get("level", cls.level)).upper(),
            console_level=str(table.get("console_level", cls.console_level)).upper(),
        )


def _count(value: Any) -> int | None:
    """A positive integer, or None for blanks, zero and anything unparsable."""
    if isinstance(value, bool):
        return None
    try:
        parsed = int(str(value).strip())
    except ValueError:
        return None
    return parsed if parsed > 0 else None


def _workers(value: Any) -> int | None:
    if isinstance(value, str) and value.strip().lower() in {"", "auto", "none", "null"}:
        return None
    return _count(value)


def _seed(value: Any) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid analysis.mc_seed '{value}'; expected an integer.") from None


def _mode(key: str, allowed: tuple[str, ...]) -> Callable[[Any], str]:
    def parse(value: Any) -> str:
        cleaned = str(value).strip().lower()
        if cleaned not in allowed:
            raise ConfigError(f"Invalid analysis.{key} '{value}'; expected one of {list(allowed)}.")
        return cleaned

    return parse


@dataclass(frozen=True)
class AnalysisConfig:
    state_cap: int = 10_000_000
    workers: int | None = None
    mc_samples: int = 100_000
    mc_seed: int = 0
    occurrence: str = "state"
    elide_decide: bool = True
    summation: str = "compensated"
    curve_stride: int | None = None

    @classmethod
    def from_table(cls, table: Mapping[str, Any]) -> AnalysisConfig:
        """Analysis defaults overridden by ``table``.

        Counts that are zero, negative or unparsable fall back to the default.
        """
        parsers: dict[str, Callable[[Any], Any]] = {
            "state_cap": _count,
            "workers": _workers,
            "mc_samples": _count,
            "mc_seed": _seed,
            "occurrence": _mode("occurrence", OCCURRENCE_MODES),
            "elide_decide": bool,
            "summation": _mode("summation", SUMMATION_MODES),
            "curve_stride": _count,
        }
        _reject_unknown("analysis", table, set(parsers))
        values: dict[str, Any] = {}
        for key, raw in table.items():
            parsed = parsers[key](raw)
            if parsed is not None:
                values[key] = parsed
        return cls(**values)


@dataclass(frozen=True)
class Config:
    paths: PathsConfig
    logging: LoggingConfig
    analysis: AnalysisConfig
    source: Path | None = None


def load_config(config_path: Path | None = None, *, cwd: Path | None = None) -> Config:
    """Read ``config_path``, or ``dtsafety.toml`` in ``cwd`` when it exists.

    Raises FileNotFoundError for a missing explicit path and ConfigError for
    unknown keys or invalid modes.
    """
    cwd = cwd or Path.cwd()
    if config_path is not None and not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    source = config_path
    if source is None and (cwd / CONFIG_FILENAME).exists():
        source = cwd / CONFIG_FILENAME
    raw = _read_toml(source) if source is not None else {}
    for section in raw:
        if section not in {"paths", "logging", "analysis"}:
            raise ConfigError(f"Unknown section [{section}] in configuration.")
    return Config(
        paths=PathsConfig.from_table(raw.get("paths", {}), source.parent if source else cwd),
        logging=LoggingConfig.from_table(raw.get("logging", {})),
        analysis=AnalysisConfig.from_table(raw.get("analysis", {})),
        source=source,
    )


def _read_toml(path: Path) -> Mapping[str, Any]:
    if _TOML is None:  # pragma: no cover - depends on interpreter
        raise ConfigError("TOML parser unavailable. Install tomli or use Python 3.11+.")
    with path.open("rb") as handle:
        try:
            return _TOML.load(handle)
        except _TOML.TOMLDecodeError as exc:
            raise ConfigError(f"Cannot parse {path}: {exc}") from exc


def config_summary(config: Config) -> str:
    analysis = config.analysis
    lines = [
        "Config",
        f"  source: {config.source if config.source is not None else 'defaults'}",
        f"  logs: {config.paths.logs}",
        f"  reports: {config.paths.reports}",
        f"  errors: {config.paths.errors}",
        f"  log level: {config.logging.level}",
        f"  console level: {config.logging.console_level}",
        "Analysis",
    ]
    for item in fields(analysis):
        value = getattr(analysis, item.name)
        if value is None:
            value = "auto" if item.name == "workers" else "none"
        lines.append(f"  {item.name}: {value}")
    return "\n".join(lines)


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    return f'"{value}"'


def default_config_text() -> str:
    """The built-in configuration as a commented ``dtsafety.toml``."""
    lines = ["# dtsafety configuration", ""]
    sections = (("paths", PathsConfig()), ("logging", LoggingConfig()), ("analysis", AnalysisConfig()))
    for name, section in sections:
        lines.append(f"[{name}]")
        for item in fields(section):
            value = getattr(section, item.name)
            if item.name == "workers":
                lines.append('workers = "auto"')
            elif value is None:
                lines.append(f"# {item.name} = 1000")
            else:
                lines.append(f"{item.name} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def write_default_config(path: Path) -> None:
    path.write_text(default_config_text(), encoding="utf-8")
