"""Shared fixtures for all test suites."""

import numpy as np
import pytest

import symtensor
from symtensor.gamma_engine import GammaCache
from symtensor.models import spin_half, two_spin_site
from tests import SEED


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(SEED)


@pytest.fixture(params=symtensor.SYSTEM_NAMES)
def system_name(request):
    """Run a test once per charge system."""
    return request.param


@pytest.fixture
def half():
    """A single spin one half."""
    return spin_half()


@pytest.fixture
def site():
    """Two spins one half fused: one singlet and one triplet."""
    return two_spin_site()


@pytest.fixture
def cache(tmp_path):
    """Γ-map cache persisting into a per-test directory."""
    return GammaCache(tmp_path / "gamma")


@pytest.fixture
def counters_reset():
    """Zero the instrumentation counters before and after the test."""
    symtensor.reset_counters()
    yield
    symtensor.reset_counters()
