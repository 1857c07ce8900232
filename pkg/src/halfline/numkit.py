"""Shared numerical primitives.

Quadrature (trapezoid and composite Simpson), finite-difference
differentiation, truncated oscillatory Fourier integrals with an optional
endpoint taper and an optional analytic 1/k tail correction, dense Nystrom
solves for Fredholm equations of the second kind, backward-marching Volterra
solves, bracketed root finding, winding numbers by nearest-branch phase
continuation, and principal-value Cauchy integrals.

Conventions: both integral-equation solvers use the sign convention of the
Marchenko equation, i.e. they return h satisfying

    h + (integral operator applied to h) = -g,

so a zero kernel gives h = -g.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DataError, GridError, PhaseUnwrapError, SolverError

__all__ = [
    "Quadrature",
    "LinearSystem",
    "quadrature_weights",
    "integrate",
    "differentiate",
    "fourier_kernel_to_space",
    "fourier_space_to_kernel",
    "solve_fredholm",
    "solve_volterra_backward",
    "find_root",
    "winding_number",
    "unwrap_phase",
    "pv_cauchy",
    "pv_cauchy_grid",
    "WindingResult",
    "sine_integral",
]


# ---------------------------------------------------------------------------
# quadrature


def quadrature_weights(n: int, dx: float, rule: str = "trapezoid") -> np.ndarray:
    """Composite quadrature weights for n uniform nodes with spacing dx.

    rule = "trapezoid" or "simpson".  Simpson handles an odd interval count
    by finishing with the 3/8 rule on the last three intervals, which keeps
    fourth order.  Weights are positive and sum to the interval length.
    """
    if n < 2:
        raise GridError("need at least two nodes")
    if rule == "trapezoid" or n == 2:
        w = np.full(n, dx)
        w[0] = w[-1] = dx / 2.0
        return w
    if rule != "simpson":
        raise ValueError(f"unknown rule {rule!r}")
    m = n - 1  # interval count
    w = np.zeros(n)
    if m % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= dx / 3.0
        return w
    if n == 4:
        return dx * np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    # even prefix of m-3 intervals, then 3/8 on the final three
    head = n - 3
    w[0] = 1.0
    w[1 : head - 1 : 2] = 4.0
    w[2 : head - 1 : 2] = 2.0
    w[head - 1] = 1.0
    w *= dx / 3.0
    w[head - 1 :] += dx * np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


@dataclass(frozen=True)
class Quadrature:
    """A composite rule bound to a uniform grid."""

    rule: str
    n: int
    dx: float

    @property
    def weights(self) -> np.ndarray:
        return quadrature_weights(self.n, self.dx, self.rule)


def integrate(samples: np.ndarray, grid, rule: str = "trapezoid"):
    """Composite-rule integral of sampled values over a uniform grid.

    grid may be a node array, a grid object with .nodes/.dx, or a float dx.
    """
    samples = np.asarray(samples)
    if hasattr(grid, "dx"):
        n, dx = grid.n, grid.dx
    elif np.isscalar(grid):
        n, dx = samples.shape[-1], float(grid)
    else:
        nodes = np.asarray(grid, dtype=float)
        n, dx = nodes.size, float(nodes[1] - nodes[0])
    if samples.shape[-1] != n:
        raise GridError("sample count does not match the grid")
    w = quadrature_weights(n, dx, rule)
    return samples @ w


def differentiate(samples: np.ndarray, dx: float, stencil: int = 3) -> np.ndarray:
    """Finite-difference derivative on a uniform grid.

    stencil=3: second-order central differences, one-sided second order at
    the ends.  stencil=5: fourth-order central differences with one-sided
    fourth-order closures (falls back to stencil=3 for short arrays).
    """
    f = np.asarray(samples, dtype=float)
    n = f.size
    if n < 3:
        raise GridError("need at least three samples to differentiate")
    # difference forms: constants cancel exactly, not just to rounding
    if stencil == 5 and n >= 6:
        d = np.empty_like(f)
        d[2:-2] = (8 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12 * dx)
        d[0] = (48 * (f[1] - f[0]) - 36 * (f[2] - f[0]) + 16 * (f[3] - f[0]) - 3 * (f[4] - f[0])) / (12 * dx)
        d[1] = (-10 * (f[1] - f[0]) + 18 * (f[2] - f[0]) - 6 * (f[3] - f[0]) + (f[4] - f[0])) / (12 * dx)
        d[-2] = (-10 * (f[-2] - f[-1]) + 18 * (f[-3] - f[-1]) - 6 * (f[-4] - f[-1]) + (f[-5] - f[-1])) / (-12 * dx)
        d[-1] = (48 * (f[-2] - f[-1]) - 36 * (f[-3] - f[-1]) + 16 * (f[-4] - f[-1]) - 3 * (f[-5] - f[-1])) / (-12 * dx)
        return d
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * dx)
    d[0] = (4 * (f[1] - f[0]) - (f[2] - f[0])) / (2 * dx)
    d[-1] = -(4 * (f[-2] - f[-1]) - (f[-3] - f[-1])) / (2 * dx)
    return d


# ---------------------------------------------------------------------------
# oscillatory Fourier integrals


def _taper_window(n: int, frac: float) -> np.ndarray:
    """Unit window with cosine roll-off over the outer frac of each end."""
    w = np.ones(n)
    m = int(round(frac * n))
    if m < 2:
        return w
    ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(m) / m))
    w[:m] = ramp
    w[-m:] = ramp[::-1]
    return w


def sine_integral(z: np.ndarray) -> np.ndarray:
    """Sine integral Si(z) for z >= 0: Maclaurin series up to 20, asymptotic
    expansion beyond (absolute accuracy ~1e-8, ample for tail corrections)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z <= 20.0
    if np.any(small):
        zs = z[small]
        term = zs.copy()
        total = zs.copy()
        for m in range(1, 40):
            term = -term * zs * zs / ((2 * m) * (2 * m + 1))
            total += term / (2 * m + 1)
        out[small] = total
    if np.any(~small):
        zl = z[~small]
        z2 = zl * zl
        fz = (1.0 - 2.0 / z2 + 24.0 / z2**2 - 720.0 / z2**3) / zl
        gz = (1.0 - 6.0 / z2 + 120.0 / z2**2 - 5040.0 / z2**3) / z2
        out[~small] = np.pi / 2 - fz * np.cos(zl) - gz * np.sin(zl)
    return out


def _oscillatory_sum(weighted: np.ndarray, nodes: np.ndarray, points: np.ndarray, sign: float) -> np.ndarray:
    """sum_j weighted_j e^{sign * i * p * nodes_j} for each p in points.

    For uniformly spaced points the phase rows are built by a running
    product with the unit-modulus step factor instead of a full exp() of
    the outer product (an order of magnitude faster on large grids).
    """
    out = np.empty(points.size, dtype=complex)
    uniform = points.size > 2 and np.ptp(np.diff(points)) < 1e-9 * max(1.0, float(np.ptp(points)))
    chunk = max(1, int(4e6) // max(nodes.size, 1))
    if uniform:
        step = np.exp(sign * 1j * (points[1] - points[0]) * nodes)
        row = np.exp(sign * 1j * points[0] * nodes)
        for i in range(points.size):
            out[i] = row @ weighted
            row = row * step
        return out
    for i in range(0, points.size, chunk):
        pi = points[i : i + chunk]
        out[i : i + chunk] = np.exp(sign * 1j * np.outer(pi, nodes)) @ weighted
    return out


def fourier_kernel_to_space(
    h: np.ndarray,
    kgrid,
    x,
    taper_frac: float = 0.2,
    tail_correction: bool = False,
) -> tuple:
    """(1/2pi) * integral of h(k) e^{ikx} dk over the truncated k grid.

    Returns (value, imag_residual).  For conjugate-symmetric h the result is
    real; the imaginary residual is reported as a diagnostic and the real
    part returned.  A Hann-style endpoint taper (taper_frac of each end)
    suppresses truncation ringing.  With tail_correction=True the O(1/k)
    tail of h beyond k_max is estimated from the endpoint samples and added
    analytically (and the taper is skipped, since the tail is then modeled
    explicitly); at a node x = 0 the O(1/k^2) tail part and the jump
    midpoint are also compensated, so the returned value there is the
    right-sided limit F(0+), the boundary value the Marchenko equation
    needs.
    """
    h = np.asarray(h, dtype=complex)
    k = np.asarray(kgrid.nodes if hasattr(kgrid, "nodes") else kgrid, dtype=float)
    if h.shape != k.shape:
        raise GridError("h samples must match the momentum grid")
    dk = k[1] - k[0]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    w = quadrature_weights(k.size, dk)
    if not tail_correction and taper_frac > 0:
        w = w * _taper_window(k.size, taper_frac)
    vals = _oscillatory_sum(w * h, k, xs, +1.0) / (2 * np.pi)
    if tail_correction:
        # h ~ i*gamma/k + c2/k^2 beyond the grid; add the missing tail of
        # both terms in closed form (gamma and c2 from the endpoint samples)
        k_max = float(k[-1])
        gamma = 0.5 * float(np.imag(k[-1] * h[-1]) + np.imag(k[0] * h[0]))
        c2 = 0.5 * float(np.real(k[-1] ** 2 * h[-1]) + np.real(k[0] ** 2 * h[0]))
        ax = np.abs(xs)
        si_rest = np.pi / 2 - sine_integral(k_max * ax)
        tail1 = -(gamma / np.pi) * np.sign(xs) * si_rest
        tail2 = (c2 / np.pi) * (np.cos(k_max * ax) / k_max - ax * si_rest)
        vals = vals + tail1 + tail2
        at_zero = xs == 0.0
        if np.any(at_zero):
            # restore the right-sided limit at the jump node: F(0+) equals
            # the reconstructed midpoint plus half the jump, which is -gamma
            vals = np.where(at_zero, vals - gamma / 2.0, vals)
    resid = np.abs(vals.imag)
    value = vals.real
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(value[0]), float(resid[0])
    return value, resid


def fourier_space_to_kernel(fs: np.ndarray, xgrid, k) -> np.ndarray:
    """Integral of F_s(x) e^{-ikx} dx over the sample window, i.e. the
    approximation to 1 - S(k).  F_s must decay at the window ends."""
    fs = np.asarray(fs, dtype=float)
    nodes = np.asarray(xgrid.nodes if hasattr(xgrid, "nodes") else xgrid, dtype=float)
    if fs.shape != nodes.shape:
        raise GridError("F_s samples must match the grid")
    dx = nodes[1] - nodes[0]
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    w = quadrature_weights(nodes.size, dx)
    out = _oscillatory_sum(w * fs, nodes, ks, -1.0)
    if np.isscalar(k) or np.asarray(k).ndim == 0:
        return complex(out[0])
    return out


# ---------------------------------------------------------------------------
# integral-equation solvers


@dataclass(frozen=True)
class LinearSystem:
    """Dense Nystrom system (I + K W) h = rhs."""

    matrix: np.ndarray
    rhs: np.ndarray


def build_fredholm_system(
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray],
    g: np.ndarray,
    nodes: np.ndarray,
    rule: str = "trapezoid",
) -> LinearSystem:
    """Collocation system for h(t) + int K(s,t) h(s) ds = -g(t).

    kernel(s, t) must broadcast over outer (s_j, t_i) arrays; row i of the
    matrix discretizes the equation at t_i.
    """
    nodes = np.asarray(nodes, dtype=float)
    g = np.asarray(g)
    if g.shape != nodes.shape:
        raise GridError("rhs samples must match the grid")
    w = quadrature_weights(nodes.size, nodes[1] - nodes[0], rule)
    kmat = kernel(nodes[None, :], nodes[:, None])  # [i_t, j_s] = K(s_j, t_i)
    mat = np.eye(nodes.size, dtype=kmat.dtype) + kmat * w[None, :]
    return LinearSystem(mat, -g)


def solve_fredholm(
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray],
    g: np.ndarray,
    nodes: np.ndarray,
    rule: str = "trapezoid",
    residual_tol: float = 1e-12,
) -> np.ndarray:
    """Solve h(t) + int K(s,t) h(s) ds = -g(t) by Nystrom collocation.

    Raises SolverError with a condition estimate when the discrete system is
    singular or the relative residual exceeds residual_tol (which signals
    data for which the homogeneous equation has nontrivial solutions).
    """
    sys = build_fredholm_system(kernel, g, nodes, rule)
    try:
        h = np.linalg.solve(sys.matrix, sys.rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular Nystrom system: {exc}", condition=float("inf"))
    scale = np.linalg.norm(sys.rhs)
    if scale > 0:
        resid = np.linalg.norm(sys.matrix @ h - sys.rhs) / scale
        if not np.isfinite(resid) or resid > residual_tol:
            cond = float(np.linalg.cond(sys.matrix))
            raise SolverError(
                f"ill-conditioned Nystrom system: relative residual {resid:.2e}",
                condition=cond,
            )
    return h


def solve_volterra_backward(
    kernel: Callable[[float, np.ndarray], np.ndarray],
    g: np.ndarray,
    nodes: np.ndarray,
    rule: str = "trapezoid",
) -> np.ndarray:
    """Solve h(p) + int_p^end K(p,t) h(t) dt = -g(p) by backward marching.

    The kernel must be triangular: K(p,t) = 0 for t < p (only t >= p is ever
    sampled; kernel(p, t_tail) returns the row for the tail nodes).  The
    recursion starts at the far end, where the integral term is empty.
    """
    nodes = np.asarray(nodes, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.shape != nodes.shape:
        raise GridError("rhs samples must match the grid")
    n = nodes.size
    dx = nodes[1] - nodes[0]
    h = np.empty(n)
    h[-1] = -g[-1]
    for i in range(n - 2, -1, -1):
        tail = nodes[i:]
        krow = np.asarray(kernel(nodes[i], tail), dtype=float)
        w = quadrature_weights(tail.size, dx, rule)
        acc = float(np.dot(w[1:] * krow[1:], h[i + 1 :]))
        denom = 1.0 + w[0] * krow[0]
        if abs(denom) < 1e-14:
            raise SolverError(f"Volterra marching broke down at node {i}")
        h[i] = (-g[i] - acc) / denom
    return h


# ---------------------------------------------------------------------------
# roots, winding numbers, phase continuation


def find_root(
    g: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Root of g on [a, b] by bisection with secant refinement.

    Requires a sign change on the bracket; stops when |g| <= tol or the
    bracket is at rounding width.
    """
    fa, fb = g(a), g(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise DataError(f"no sign change on [{a}, {b}]")
    x_prev, f_prev = a, fa
    x_cur, f_cur = b, fb
    lo, hi, flo = a, b, fa
    for _ in range(max_iter):
        # secant candidate, safeguarded by the bracket
        if f_cur != f_prev:
            x_new = x_cur - f_cur * (x_cur - x_prev) / (f_cur - f_prev)
        else:
            x_new = 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        f_new = g(x_new)
        if abs(f_new) <= tol:
            return x_new
        if flo * f_new < 0:
            hi = x_new
        else:
            lo, flo = x_new, f_new
        x_prev, f_prev = x_cur, f_cur
        x_cur, f_cur = x_new, f_new
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


class WindingResult(NamedTuple):
    value: int
    residual: float


def _phase_steps(values: np.ndarray, jump_tol: float) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    mags = np.abs(v)
    if np.any(mags == 0.0):
        raise PhaseUnwrapError("zero sample in phase continuation")
    steps = np.angle(v[1:] * np.conj(v[:-1]))
    bad = np.abs(steps) >= jump_tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PhaseUnwrapError(
            f"phase jump {steps[i]:+.4f} rad at sample {i} is >= pi within "
            "tolerance; grid too coarse for nearest-branch continuation"
        )
    return steps


def unwrap_phase(values: np.ndarray, jump_tol: float = np.pi * (1 - 1e-9)) -> np.ndarray:
    """Continuous argument along a sample path, anchored at the principal
    argument of the first sample.  Refuses (raises) on jumps >= pi."""
    steps = _phase_steps(values, jump_tol)
    theta = np.empty(len(values))
    theta[0] = np.angle(values[0])
    np.cumsum(steps, out=theta[1:])
    theta[1:] += theta[0]
    return theta


def winding_number(values: np.ndarray, jump_tol: float = np.pi * (1 - 1e-9)) -> WindingResult:
    """Winding number of a sampled path: total unwrapped argument increment
    over 2 pi, rounded to the nearest integer.

    The residual (distance from an integer) is returned as a confidence
    measure.  Zero samples and phase jumps >= pi are refused.
    """
    steps = _phase_steps(values, jump_tol)
    total = float(np.sum(steps)) / (2 * np.pi)
    value = int(np.round(total))
    return WindingResult(value, abs(total - value))


# ---------------------------------------------------------------------------
# principal-value Cauchy integrals


def pv_cauchy(phi: np.ndarray, kgrid, k0: float) -> float:
    """v.p. integral of phi(t)/(t - k0) dt over the truncated grid.

    Uses singularity subtraction:
        int (phi(t) - phi(k0))/(t - k0) dt + phi(k0) ln((k_max-k0)/(k_max+k0))
    with the removable point filled by a central-difference slope.  k0 must
    lie strictly inside the grid.
    """
    t = np.asarray(kgrid.nodes if hasattr(kgrid, "nodes") else kgrid, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != t.shape:
        raise GridError("phi samples must match the grid")
    if not (t[0] < k0 < t[-1]):
        raise GridError(f"k0 = {k0} must lie strictly inside the grid")
    dt = t[1] - t[0]
    i0 = int(round((k0 - t[0]) / dt))
    on_node = abs(t[i0] - k0) < 1e-6 * dt
    d = t - k0
    integrand = np.empty_like(phi)
    if on_node:
        phi0 = float(phi[i0])
        mask = np.ones(t.size, dtype=bool)
        mask[i0] = False
        integrand[mask] = (phi[mask] - phi0) / d[mask]
        if 2 <= i0 <= t.size - 3:
            integrand[i0] = (phi[i0 - 2] - 8 * phi[i0 - 1] + 8 * phi[i0 + 1] - phi[i0 + 2]) / (12 * dt)
        else:
            im, ip = max(i0 - 1, 0), min(i0 + 1, t.size - 1)
            integrand[i0] = (phi[ip] - phi[im]) / (t[ip] - t[im])
    else:
        phi0 = float(np.interp(k0, t, phi))
        integrand = (phi - phi0) / d
    w = quadrature_weights(t.size, dt)
    val = float(np.dot(w, integrand))
    val += phi0 * np.log((t[-1] - k0) / (k0 - t[0]))
    return val


def pv_cauchy_grid(phi: np.ndarray, nodes: np.ndarray, tail_coeff: float | None = None) -> np.ndarray:
    """v.p. integral of phi(t)/(t - k) dt evaluated at every interior node k.

    Vectorized (chunked) version of pv_cauchy over the whole grid; the two
    end nodes are copied from their neighbors, where the truncated-domain
    principal value degenerates.  When tail_coeff c is given, the analytic
    tail of phi ~ c/t beyond the grid is added:
        int_{|t|>K} (c/t) dt/(t-k) = (c/k) ln((K+k)/(K-k)),  -> 2c/K at k=0.
    """
    t = np.asarray(nodes, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n = t.size
    dt = t[1] - t[0]
    w = quadrature_weights(n, dt)
    slope = differentiate(phi, dt, stencil=5)
    out = np.empty(n)
    chunk = max(1, int(4e6) // n)
    for start in range(1, n - 1, chunk):
        stop = min(start + chunk, n - 1)
        idx = np.arange(start, stop)
        d = t[None, :] - t[idx, None]
        np.place(d, d == 0.0, 1.0)
        quot = (phi[None, :] - phi[idx, None]) / d
        quot[np.arange(idx.size), idx] = slope[idx]
        out[idx] = quot @ w
        out[idx] += phi[idx] * np.log((t[-1] - t[idx]) / (t[idx] - t[0]))
    if tail_coeff is not None:
        K = t[-1]
        k = t[1:-1].copy()
        small = np.abs(k) < 1e-12 * K
        k[small] = 1.0
        tail = (tail_coeff / k) * np.log(np.abs((K + k) / (K - k)))
        tail[small] = 2.0 * tail_coeff / K
        out[1:-1] += tail
    out[0] = out[1]
    out[-1] = out[-2]
    return out
