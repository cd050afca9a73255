import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

TESTS = Path(__file__).parent
GOLDEN = TESTS / "golden"


@pytest.fixture
def golden_dir():
    return GOLDEN


@pytest.fixture(autouse=True)
def _no_registry_env(monkeypatch):
    # a stray FWAUDIT_REGISTRY in the caller's shell must not leak into tests
    monkeypatch.delenv("FWAUDIT_REGISTRY", raising=False)
