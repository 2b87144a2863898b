import mpmath as mp
import numpy as np
import pytest

from hypns import make_grid
from hypns.initial_data import random_divergence_free_field

mp.mp.dps = 50


def oracle_mode(eps, k2, dt, u0, u1):
    """Closed-form damped-oscillator solution at 50 digits; independent of
    the solver's stable-branch evaluation path."""
    disc = mp.mpf(1) - 4 * mp.mpf(eps) * mp.mpf(k2)
    if disc == 0:
        lam = -1 / (2 * mp.mpf(eps))
        a = u1 - lam * u0
        u = mp.e ** (lam * dt) * (u0 + a * dt)
        ut = mp.e ** (lam * dt) * (lam * u0 + a + lam * a * dt)
        return complex(u), complex(ut)
    sq = mp.sqrt(disc)
    lp = (-1 + sq) / (2 * mp.mpf(eps))
    lm = (-1 - sq) / (2 * mp.mpf(eps))
    a = (u1 - lm * u0) / (lp - lm)
    b = (lp * u0 - u1) / (lp - lm)
    u = a * mp.e ** (lp * dt) + b * mp.e ** (lm * dt)
    ut = a * lp * mp.e ** (lp * dt) + b * lm * mp.e ** (lm * dt)
    return complex(u), complex(ut)


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 16)


@pytest.fixture(scope="session")
def grid3():
    return make_grid(3, 8)


def random_field(grid, seed, band=None, scale=1.0, slope=0.0):
    return random_divergence_free_field(grid, seed, band=band, slope=slope) * scale


def single_mode_field(grid, k, component_dir, amp=1.0):
    """Divergence-free real field supported on modes +-k.

    ``component_dir`` must be orthogonal to k for exact divergence-freeness.
    """
    c = np.zeros((grid.dim,) + grid.shape, dtype=np.complex128)
    k = tuple(k)
    neg = tuple((-ki) % grid.n for ki in k)
    for comp, d in enumerate(component_dir):
        c[comp][k] = 0.5 * amp * d
        c[comp][neg] = 0.5 * amp * d
    from hypns.spectral import SpectralField

    return SpectralField(grid, c)
