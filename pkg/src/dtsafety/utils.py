"""Helpers shared by the CLI, logging and report writers."""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
import re

_NON_SLUG = re.compile(r"[^a-z0-9]+")


def slugify(name: str) -> str:
    """File-system name of a model: ``Backup System`` becomes ``backup-system``."""
    return _NON_SLUG.sub("-", name.lower()).strip("-") or "model"


def generate_run_id(now: datetime | None = None) -> str:
    # milliseconds keep two runs started within one second apart
    stamp = now or datetime.now()
    return f"{stamp:%Y%m%d-%H%M%S}-{stamp.microsecond // 1000:03d}"


def ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def format_float(value: float) -> str:
    """Seventeen significant digits, so ``float()`` reads back the same value."""
    return "%.17g" % value
