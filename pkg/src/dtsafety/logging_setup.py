"""Logging for dtsafety runs.

Every run writes ``logs/run-<run_id>.log``. While a command analyses a model,
the records of the analysis modules are also copied to
``logs/<model-slug>/<run_id>.log``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import Iterator

from .config import Config
from .error_log import ErrorLogStore
from .utils import ensure_dir, slugify

ROOT_LOGGER = "dtsafety"
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass
class LoggingContext:
    root_dir: Path
    run_id: str
    log_level: int
    console_level: int
    logger: logging.Logger
    formatter: logging.Formatter
    error_log_store: ErrorLogStore
    handlers: list[logging.Handler] = field(default_factory=list)

    def model_log_path(self, model_slug: str) -> Path:
        return self.root_dir / slugify(model_slug) / f"{self.run_id}.log"

    @contextmanager
    def model_scope(self, model_slug: str) -> Iterator[logging.Logger]:
        """Also write every ``dtsafety`` record to the model's log inside the block."""
        path = self.model_log_path(model_slug)
        ensure_dir(path.parent)
        handler = logging.FileHandler(path, encoding="utf-8")
        handler.setLevel(self.log_level)
        handler.setFormatter(self.formatter)
        self.logger.addHandler(handler)
        try:
            yield self.logger.getChild(f"model.{slugify(model_slug)}")
        finally:
            self.logger.removeHandler(handler)
            handler.close()

    def close(self) -> None:
        for handler in self.handlers:
            self.logger.removeHandler(handler)
            handler.close()
        self.handlers.clear()


def initialize_logging(config: Config, run_id: str) -> LoggingContext:
    root_dir = ensure_dir(config.paths.logs)
    log_level = parse_log_level(config.logging.level)
    console_level = parse_log_level(config.logging.console_level)

    logger = logging.getLogger(ROOT_LOGGER)
    _detach_handlers(logger)
    logger.setLevel(min(log_level, console_level))
    logger.propagate = False
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)

    run_handler = logging.FileHandler(root_dir / f"run-{run_id}.log", encoding="utf-8")
    run_handler.setLevel(log_level)
    run_handler.setFormatter(formatter)

    handlers: list[logging.Handler] = [console_handler, run_handler]
    for handler in handlers:
        logger.addHandler(handler)

    return LoggingContext(
        root_dir=root_dir,
        run_id=run_id,
        log_level=log_level,
        console_level=console_level,
        logger=logger,
        formatter=formatter,
        error_log_store=ErrorLogStore(ensure_dir(config.paths.errors)),
        handlers=handlers,
    )


def parse_log_level(level: str) -> int:
    """Numeric level of a name such as ``DEBUG``; unknown names give INFO."""
    value = logging.getLevelName(level.upper())
    return value if isinstance(value, int) else logging.INFO


def _detach_handlers(logger: logging.Logger) -> None:
    # a previous run in the same process leaves its file handlers open
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
