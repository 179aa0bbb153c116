from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from champagne import quantum  # noqa: E402


@pytest.fixture(scope="session")
def default_config() -> quantum.QuantumConfig:
    return quantum.QuantumConfig()


@pytest.fixture(scope="session")
def default_spectrum(default_config):
    """Joint spectrum at h = 0.1, E_max = 1.5 (about 0.3 s, shared by all tests)."""
    return quantum.joint_spectrum(default_config)


@pytest.fixture(scope="session")
def fine_spectrum():
    """Joint spectrum at h = 0.05 (N = 8000, E_max = 1.5), about 1 s."""
    return quantum.joint_spectrum(quantum.QuantumConfig(h=0.05, N=8000, E_max=1.5))
