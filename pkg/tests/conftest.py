"""Shared fixtures: model factories and seeded random matrices."""
from __future__ import annotations

import numpy as np
import pytest

import gibbsflow as gf


def random_symmetric_psd(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    return (q * (scale * rng.random(dim))) @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


@pytest.fixture
def scalar_linear():
    """a = 1, b(tau) = tau on [0, 1]; exact U(0,1) = e^{-3/2}."""
    return gf.scalar_model(1.0, gf.linear_profile(1.0))


@pytest.fixture
def scalar_const():
    """a = 1, b = 0.4; xi over [0, 1] is 0.4."""
    return gf.scalar_model(1.0, gf.constant_profile(0.4))


@pytest.fixture
def commuting_small():
    """dim 3, lambdas (1, 2, 3), d0 (0.3, 0.2, 0.1), b = 1."""
    return gf.commuting_model([1.0, 2.0, 3.0], [0.3, 0.2, 0.1],
                              gf.constant_profile(1.0))


@pytest.fixture
def commuting_linear():
    """dim 2, lambdas (1, 3), d0 (2, 1), b(tau) = tau."""
    return gf.commuting_model([1.0, 3.0], [2.0, 1.0], gf.linear_profile(1.0))


def make_rotating(dim: int = 6, seed: int = 42, beta: float = 0.5,
                  alpha: float = 0.0, omega: float = np.pi) -> "gf.Model":
    rng = np.random.default_rng(seed)
    b0 = random_symmetric_psd(rng, dim, scale=1.0)
    return gf.rotating_model(np.linspace(1.0, 4.0, dim), b0, omega,
                             beta=beta, t0=0.5, alpha=alpha)


@pytest.fixture
def rotating_small():
    return make_rotating(dim=4, seed=11)
