"""Test configuration."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

SRC_PATH = Path(__file__).resolve().parents[1] / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

MODELS_DIR = Path(__file__).resolve().parents[1] / "models"


@pytest.fixture
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture(scope="session")
def backup_model():
    from dtsafety.modellang import load_model

    return load_model(MODELS_DIR / "backup_system.ssm")


@pytest.fixture(scope="session")
def chain_model():
    from dtsafety.modellang import load_model

    return load_model(MODELS_DIR / "chain3.ssm")
