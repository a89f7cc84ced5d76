"""Shared fixtures for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from cascaded_qubits import SystemParams, build_operators


@pytest.fixture(scope="session")
def ops_cache():
    """Operator bundles keyed by (r, epsilon), shared across tests."""
    cache = {}

    def get(r: float, epsilon: float = 1.0):
        key = (r, epsilon)
        if key not in cache:
            cache[key] = build_operators(SystemParams(r=r, epsilon=epsilon))
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def fidelity(a, b) -> float:
    """|<a|b>|^2 for normalized inputs."""
    a = np.asarray(a) / np.linalg.norm(a)
    b = np.asarray(b) / np.linalg.norm(b)
    return float(abs(np.vdot(a, b)) ** 2)
