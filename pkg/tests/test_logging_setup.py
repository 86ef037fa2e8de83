from __future__ import annotations

import logging

from dtsafety.config import load_config
from dtsafety.logging_setup import initialize_logging, parse_log_level


def test_parse_log_level():
    assert parse_log_level("debug") == logging.DEBUG
    assert parse_log_level("WARNING") == logging.WARNING
    assert parse_log_level("loud") == logging.INFO


def test_model_scope_copies_library_records(tmp_path):
    config = load_config(cwd=tmp_path)
    ctx = initialize_logging(config, "run1")
    try:
        with ctx.model_scope("Backup System") as logger:
            logger.info("inside")
            logging.getLogger("dtsafety.composition").info("composed 12 states")
        logging.getLogger("dtsafety.composition").info("after the scope")
    finally:
        ctx.close()

    model_log = tmp_path / "logs" / "backup-system" / "run1.log"
    text = model_log.read_text(encoding="utf-8")
    assert "| INFO | dtsafety.model.backup-system | inside" in text
    assert "composed 12 states" in text
    assert "after the scope" not in text

    run_log = (tmp_path / "logs" / "run-run1.log").read_text(encoding="utf-8")
    assert "after the scope" in run_log
    assert (tmp_path / "errors").is_dir()


def test_reinitializing_replaces_handlers(tmp_path):
    config = load_config(cwd=tmp_path)
    first = initialize_logging(config, "a")
    second = initialize_logging(config, "b")
    try:
        assert first.logger is second.logger
        assert len(second.logger.handlers) == 2
    finally:
        second.close()
    assert second.logger.handlers == []
