"""Shared pytest setup: import path and an isolated STARCH_ environment."""

import os
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """Drop STARCH_* variables and run from a directory without a .env file."""
    for key in list(os.environ):
        if key.upper().startswith("STARCH_"):
            monkeypatch.delenv(key)
    monkeypatch.chdir(tmp_path)
