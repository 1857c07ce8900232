"""Shared fixtures: reference potentials and cached forward solutions."""

from __future__ import annotations

import numpy as np
import pytest

from halfline.forward import forward
from halfline.model import MomentumGrid, RadialGrid
from halfline.potentials import sech2_potential, square_well_potential, zero_potential


@pytest.fixture(scope="session")
def xgrid_default() -> RadialGrid:
    return RadialGrid.make(40.0, 0.01)


@pytest.fixture(scope="session")
def kgrid_fourier() -> MomentumGrid:
    return MomentumGrid.make(200.0, 0.01)


@pytest.fixture(scope="session")
def kgrid_coarse() -> MomentumGrid:
    return MomentumGrid.make(200.0, 0.05)


@pytest.fixture(scope="session")
def q_zero(xgrid_default):
    return zero_potential(xgrid_default)


@pytest.fixture(scope="session")
def q_sech2(xgrid_default):
    return sech2_potential(xgrid_default)


@pytest.fixture(scope="session")
def q_well(xgrid_default):
    return square_well_potential(xgrid_default)


@pytest.fixture(scope="session")
def fw_sech2(q_sech2, kgrid_fourier):
    return forward(q_sech2, kgrid_fourier)


@pytest.fixture(scope="session")
def fw_well(q_well, kgrid_fourier):
    return forward(q_well, kgrid_fourier)


@pytest.fixture(scope="session")
def fw_zero(q_zero, kgrid_fourier):
    return forward(q_zero, kgrid_fourier)


def sech2_jost_exact(x: np.ndarray, k: complex) -> np.ndarray:
    """Closed-form Jost solution for q = -2/cosh^2 x."""
    return np.exp(1j * k * x) * (k + 1j * np.tanh(x)) / (k + 1j)


def well_kappa_oracle(depth: float = 4.0, width: float = 1.0, iters: int = 200) -> float:
    """Bound-state location for the square well by high-resolution bisection
    of omega*cot(omega*width) = -kappa with omega = sqrt(depth - kappa^2)."""

    def g(kappa: float) -> float:
        om = np.sqrt(depth - kappa**2)
        return om / np.tan(om * width) + kappa

    lo, hi = 1e-6, np.sqrt(depth) - 1e-9
    glo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if glo * g(mid) <= 0:
            hi = mid
        else:
            lo, glo = mid, g(mid)
    return 0.5 * (lo + hi)
