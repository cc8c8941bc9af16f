"""Shared fixtures: seeded RNG and a session-wide basis cache.

Basis construction caches quadrature node tables, so reusing one spec
per (d, m, level) keeps the suite fast without changing any semantics.
"""

import numpy as np
import pytest

from berezin import hilbert


_SPECS = {}


def get_basis(d, m, level=None):
    key = (d, m, level)
    if key not in _SPECS:
        _SPECS[key] = hilbert.build_basis(d, m, level=level)
    return _SPECS[key]


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)


@pytest.fixture(scope="session")
def basis():
    return get_basis


def sample_ball(rng, d, radius, n):
    """Uniform points in the complex d-ball of the given radius."""
    out = np.empty((n, d), dtype=complex)
    filled = 0
    while filled < n:
        block = rng.uniform(-radius, radius, size=(4 * n, 2 * d))
        pts = block[:, :d] + 1j * block[:, d:]
        keep = pts[np.linalg.norm(pts, axis=1) <= radius]
        take = min(n - filled, keep.shape[0])
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def admissible(mu, nu):
    """Pairs whose pairing cannot lose precision to cancellation."""
    bound = 1.0 + np.sum(np.abs(mu) * np.abs(nu))
    return bound <= 2.0 * abs(1.0 + np.vdot(nu, mu))


@pytest.fixture
def ball_sampler():
    return sample_ball


@pytest.fixture
def admissible_pair():
    return admissible
