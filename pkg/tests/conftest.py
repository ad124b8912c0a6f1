"""
Pytest configuration file.

This module contains pytest fixtures and configuration for all tests.
"""

import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path so tests can import the package
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from flow_rbm.models import FactoredGRBM  # noqa: E402


def random_model(rng, n_input=6, n_output=6, n_hidden=4, n_factors=5, scale=0.5):
    """Random factored model with non-trivial biases."""
    return FactoredGRBM(
        Wxf=rng.normal(0.0, scale, (n_input, n_factors)),
        Wyf=rng.normal(0.0, scale, (n_output, n_factors)),
        Whf=rng.normal(0.0, scale, (n_hidden, n_factors)),
        ybias=rng.normal(0.0, scale, n_output),
        hbias=rng.normal(0.0, scale, n_hidden),
    )


def permutation_model(targets):
    """Model whose max-flow field sends input pixel ``i`` to ``targets[i]``.

    One factor per input pixel and a single mapping unit gating all factors.
    """
    targets = np.asarray(targets)
    n = targets.size
    Wyf = np.zeros((n, n))
    Wyf[targets, np.arange(n)] = 1.0
    return FactoredGRBM(
        Wxf=np.eye(n), Wyf=Wyf, Whf=np.ones((1, n)), ybias=np.zeros(n), hbias=np.zeros(1)
    )


def shift_targets(width, height, dx, dy):
    """Pixel indices reached by a toroidal ``(dx, dy)`` shift."""
    rows, cols = np.divmod(np.arange(width * height), width)
    return ((rows + dy) % height) * width + (cols + dx) % width


@pytest.fixture
def rng():
    """Seeded generator, fresh per test."""
    return np.random.default_rng(1234)


@pytest.fixture
def model_factory(rng):
    """Build random models of any size from the test's generator."""

    def build(**dims):
        return random_model(rng, **dims)

    return build


@pytest.fixture
def small_model(model_factory):
    """I=J=6, K=4, F=5 random model."""
    return model_factory()


@pytest.fixture(name="permutation_model")
def permutation_model_fixture():
    return permutation_model


@pytest.fixture(name="shift_targets")
def shift_targets_fixture():
    return shift_targets


@pytest.fixture
def shift_model():
    """8x8 model whose flow is the toroidal shift (1, 0)."""
    return permutation_model(shift_targets(8, 8, 1, 0))


# Register marks
def pytest_configure(config):
    """Register custom pytest marks."""
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line("markers", "integration: mark test as integration test")


def two_motion_model(targets_a, targets_b, gain=10.0):
    """Model with one mapping unit per motion, each gating a permutation's factors.

    A unit switches on when at least one on-pixel of ``x`` lands on an on-pixel
    of ``y`` under its motion.
    """
    targets_a, targets_b = np.asarray(targets_a), np.asarray(targets_b)
    n = targets_a.size
    Wyf = np.zeros((n, 2 * n))
    Wyf[targets_a, np.arange(n)] = 1.0
    Wyf[targets_b, n + np.arange(n)] = 1.0
    Whf = np.zeros((2, 2 * n))
    Whf[0, :n] = gain
    Whf[1, n:] = gain
    return FactoredGRBM(
        Wxf=np.hstack([np.eye(n), np.eye(n)]),
        Wyf=Wyf,
        Whf=Whf,
        ybias=np.zeros(n),
        hbias=np.full(2, -gain / 2),
    )


@pytest.fixture
def opposing_model():
    """8x8 model that knows the shifts (1, 0) and (-1, 0)."""
    return two_motion_model(shift_targets(8, 8, 1, 0), shift_targets(8, 8, -1, 0))
