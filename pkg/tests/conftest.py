"""Pytest configuration and shared fixtures for parawolff tests.

This conftest.py is at the root of the tests/ directory and provides
fixtures for all test subdirectories (unit/, module/).

Hypothesis profiles:
  dev  = default, 50 examples
  ci   = 200 examples, no deadline (select with HYPOTHESIS_PROFILE=ci)
"""

import os

import numpy as np
import pytest
from dotenv import load_dotenv
from hypothesis import settings

# Load environment variables
load_dotenv()

settings.register_profile("dev", max_examples=50, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))

RUN_ENV_VARS = ("PARAWOLFF_SEED", "PARAWOLFF_OUT", "PARAWOLFF_THREADS")


@pytest.fixture(autouse=True)
def clean_run_env(monkeypatch):
    """Keep a developer's PARAWOLFF_* settings out of the tests."""
    for name in RUN_ENV_VARS:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    """Seeded generator; tests needing another stream seed their own."""
    return np.random.default_rng(20240601)
