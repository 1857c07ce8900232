"""Reference potentials used throughout the tests and CLI examples."""

from __future__ import annotations

import numpy as np

from .model import Potential, RadialGrid

__all__ = ["zero_potential", "sech2_potential", "square_well_potential"]


def zero_potential(grid: RadialGrid) -> Potential:
    return Potential(grid=grid, values=np.zeros(grid.n), support_hint=0.0)


def sech2_potential(grid: RadialGrid, depth: float = 2.0) -> Potential:
    """q(x) = -depth / cosh^2 x.  depth = 2 is the classic transparent-type
    profile with Jost function k/(k+i) and a zero-energy resonance."""
    return Potential(grid=grid, values=-depth / np.cosh(grid.nodes) ** 2, support_hint=min(30.0, grid.x_max))


def square_well_potential(grid: RadialGrid, depth: float = 4.0, width: float = 1.0) -> Potential:
    """q(x) = -depth on [0, width), 0 beyond.  When the well edge falls on a
    grid node the sample there takes the midpoint value -depth/2, which keeps
    composite quadrature across the jump second-order accurate."""
    x = grid.nodes
    v = np.where(x < width, -depth, 0.0)
    edge = np.abs(x - width) < 1e-9 * max(width, 1.0)
    v[edge] = -depth / 2.0
    return Potential(grid=grid, values=v, support_hint=width)


def square_well_jost_oracle(k: complex, depth: float = 4.0, width: float = 1.0) -> tuple[complex, complex]:
    """Closed-form (f(0,k), f'(0,k)) for the square well by plane-wave
    matching at the edge: inside omega = sqrt(k^2 + depth),

        f(0,k)  = e^{ik w} [cos(omega w) - i (k/omega) sin(omega w)]
        f'(0,k) = e^{ik w} [i k cos(omega w) + omega sin(omega w)].
    """
    om = np.sqrt(complex(k) ** 2 + depth)
    w = width
    phase = np.exp(1j * complex(k) * w)
    f0 = phase * (np.cos(om * w) - 1j * (complex(k) / om) * np.sin(om * w))
    fp0 = phase * (1j * complex(k) * np.cos(om * w) + om * np.sin(om * w))
    return complex(f0), complex(fp0)
