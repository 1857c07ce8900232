"""Direct scattering problem on the half-line.

From a sampled real potential q with finite first moment, compute the Jost
solution f(x,k) of

    f(x,k) = e^{ikx} + int_x^inf [sin(k(y-x))/k] q(y) f(y,k) dy,

its boundary values f(k) = f(0,k) and derivative f'(0,k), bound states
(zeros i*kappa of f in the upper half-plane), norming constants via two
independent formulas, the S-matrix S(k) = f(-k)/f(k), the phase shift, and
the transformation kernel A(x,y).

Numerics: the Volterra equation is solved in the reduced variable
n(x,k) = f(x,k) e^{-ikx}, whose kernel (e^{2ik(y-x)} - 1)/(2ik) has modulus
bounded for Im k >= 0, so backward marching from x_max (where n = 1) is
unconditionally stable for real and imaginary momenta alike.  The kernel
vanishes on the diagonal y = x, which makes the trapezoid marching explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, SolverError
from .model import (
    BoundState,
    JostField,
    MomentumGrid,
    Potential,
    ScatteringData,
    TransformationKernel,
    validate_scattering_data,
)
from .numkit import find_root, integrate, unwrap_phase

__all__ = [
    "ForwardResult",
    "BoundStateScan",
    "solve_jost",
    "jost_boundary",
    "jost_field",
    "find_bound_states",
    "norming_constants",
    "s_matrix",
    "phase_shift",
    "kernel_from_potential",
    "forward",
]

RESONANCE_TOL = 1e-3  # |f(0)| below this flags a zero-energy resonance


# ---------------------------------------------------------------------------
# core marcher


def _march(q_vals: np.ndarray, dx: float, ks: np.ndarray, keep_field: bool = False):
    """Backward-march n(x,k) = f(x,k) e^{-ikx} for a vector of momenta.

    Returns (n0, w0, v0, field) where n0 = n(0,k) = f(0,k), and
    w0 = int_0^inf e^{2iky} q n dy, v0 = int_0^inf q n dy are the running
    integrals needed for f'(0,k) = ik - (w0 + v0)/2.  field (if kept) holds
    n at every node, shape (n_x, n_k).
    """
    ks = np.asarray(ks, dtype=complex)
    if np.any(ks.imag < -1e-12):
        raise DataError("momenta must satisfy Im k >= 0")
    nx = q_vals.size
    nk = ks.size
    zero = np.abs(ks) < 1e-12
    kz = np.where(zero, 1.0, ks)  # avoid 0-division; zero columns use Y sums
    inv2ik = 1.0 / (2j * kz)
    e2 = np.exp(2j * ks * dx)  # |e2| <= 1 for Im k >= 0

    n_cur = np.ones(nk, dtype=complex)
    w = np.zeros(nk, dtype=complex)  # int_x e^{2ik(y-x)} q n dy
    v = np.zeros(nk, dtype=complex)  # int_x q n dy
    y = np.zeros(nk, dtype=complex)  # int_x t q n dt (k = 0 columns)
    field = np.empty((nx, nk), dtype=complex) if keep_field else None
    if keep_field:
        field[-1] = n_cur
    half = 0.5 * dx
    xs = dx * np.arange(nx)
    for i in range(nx - 2, -1, -1):
        qn1 = q_vals[i + 1] * n_cur
        w = e2 * (w + half * qn1)
        v = v + half * qn1
        y = y + half * xs[i + 1] * qn1
        n_cur = 1.0 + (w - v) * inv2ik
        if np.any(zero):
            n_cur = np.where(zero, 1.0 + y - xs[i] * v, n_cur)
        qn0 = half * q_vals[i] * n_cur
        w = w + qn0
        v = v + qn0
        y = y + xs[i] * qn0
        if keep_field:
            field[i] = n_cur
    w0 = np.where(zero, v, w)
    return n_cur, w0, v, field


def solve_jost(q: Potential, k: complex) -> tuple[np.ndarray, complex]:
    """Jost solution f(x, k) on the potential grid for one momentum with
    Im k >= 0, plus the boundary derivative f'(0,k).

    f'(0,k) = ik - int_0^inf cos(ky) q(y) f(y,k) dy, evaluated from the
    marcher's running integrals at no extra cost.
    """
    ks = np.array([k], dtype=complex)
    n0, w0, v0, field = _march(q.values, q.grid.dx, ks, keep_field=True)
    f_x = field[:, 0] * np.exp(1j * k * q.grid.nodes)
    fprime0 = 1j * k - 0.5 * (w0[0] + v0[0])
    return f_x, complex(fprime0)


def jost_boundary(q: Potential, kgrid: MomentumGrid) -> tuple[np.ndarray, np.ndarray]:
    """Boundary values f(k) = f(0,k) and f'(0,k) on a symmetric real grid.

    Only k >= 0 is computed; negative momenta are filled by the reality
    relation f(-k) = conj f(k).
    """
    knodes = kgrid.nodes
    n = knodes.size
    pos = np.nonzero(knodes >= 0)[0]
    n0, w0, v0, _ = _march(q.values, q.grid.dx, knodes[pos])
    fp = 1j * knodes[pos] - 0.5 * (w0 + v0)
    f0 = np.empty(n, dtype=complex)
    fprime0 = np.empty(n, dtype=complex)
    f0[pos] = n0
    fprime0[pos] = fp
    neg = np.nonzero(knodes < 0)[0]
    # node -k sits at the reflected index on a symmetric grid
    f0[neg] = np.conj(f0[n - 1 - neg])
    fprime0[neg] = np.conj(fprime0[n - 1 - neg])
    return f0, fprime0


def jost_field(q: Potential, kgrid: MomentumGrid) -> JostField:
    """Full Jost field f(x_i, k_j) with boundary values and derivatives."""
    knodes = kgrid.nodes
    n0, w0, v0, field = _march(q.values, q.grid.dx, knodes, keep_field=True)
    f_xk = field * np.exp(1j * np.outer(q.grid.nodes, knodes))
    fprime0 = 1j * knodes - 0.5 * (w0 + v0)
    return JostField(xgrid=q.grid, kgrid=kgrid, f0=n0, fprime0=fprime0, f_xk=f_xk)


def _f0_imag_axis(q: Potential, kappas: np.ndarray) -> np.ndarray:
    """f(0, i*kappa) for an array of kappa > 0 (real-valued for real q)."""
    n0, _, _, _ = _march(q.values, q.grid.dx, 1j * np.asarray(kappas, dtype=float))
    return n0.real


def _f0_imag_axis_coarse(q: Potential, kappas: np.ndarray) -> np.ndarray:
    """Same as _f0_imag_axis on the 2*dx subsampled grid (for Richardson)."""
    n0, _, _, _ = _march(q.values[::2], 2 * q.grid.dx, 1j * np.asarray(kappas, dtype=float))
    return n0.real


@dataclass(frozen=True)
class BoundStateScan:
    """Bound-state locations plus a zero-energy-resonance warning flag."""

    kappas: tuple[float, ...]
    resonance_suspected: bool
    f_at_zero: float


def find_bound_states(
    q: Potential,
    kappa_max: float | None = None,
    kappa_min: float = 1e-3,
    scan_step: float = 0.01,
    tol: float = 1e-10,
    refine: bool = True,
) -> BoundStateScan:
    """Locate the zeros i*kappa_j of the Jost function on the imaginary axis.

    Scans g(kappa) = f(0, i*kappa) for sign changes on (kappa_min, kappa_max]
    and refines each by bracketed root finding.  With refine=True the root is
    Richardson-extrapolated against the 2*dx subsampled grid, removing the
    O(dx^2) discretization bias (the scan may miss nearly degenerate pairs
    closer than scan_step; zeros of f are simple but not separated).

    A sign change straddling kappa_min, or |f(0,0)| below the resonance
    threshold, raises the zero-energy-resonance warning flag.
    """
    if kappa_max is None:
        kappa_max = float(np.sqrt(np.max(np.abs(q.values)))) * 1.5 + 0.5
    grid = np.arange(kappa_min, kappa_max + scan_step, scan_step)
    g = _f0_imag_axis(q, grid)
    f00 = float(_march(q.values, q.grid.dx, np.array([0.0j]))[0][0].real)
    resonance = abs(f00) < RESONANCE_TOL
    kappas = []
    for i in range(grid.size - 1):
        if g[i] == 0.0:
            kappas.append(float(grid[i]))
        elif g[i] * g[i + 1] < 0:
            root = find_root(lambda kp: float(_f0_imag_axis(q, np.array([kp]))[0]), grid[i], grid[i + 1], tol)
            if refine and q.grid.n % 2 == 1:
                gc = _f0_imag_axis_coarse(q, np.array([grid[i], grid[i + 1]]))
                if gc[0] * gc[1] < 0:
                    root_c = find_root(
                        lambda kp: float(_f0_imag_axis_coarse(q, np.array([kp]))[0]),
                        grid[i],
                        grid[i + 1],
                        tol,
                    )
                    root = (4.0 * root - root_c) / 3.0
            kappas.append(float(root))
    if not resonance and f00 * (g[0] if g.size else 1.0) < 0:
        resonance = True  # sign change straddling kappa_min
    return BoundStateScan(tuple(kappas), resonance, f00)


def norming_constants(q: Potential, kappas) -> tuple[np.ndarray, list[dict]]:
    """Norming constants for verified simple zeros i*kappa_j.

    Primary value: s_j = -2 i kappa_j / (fdot(i kappa_j) f'(0, i kappa_j)),
    with fdot by a central difference along the imaginary axis (step
    1e-4 * kappa).  This uses the identity
    ||f_j||^2 = i fdot(i kappa_j) f'(0, i kappa_j) / (2 kappa_j); the variant
    with f'(0, i kappa_j) in the numerator instead gives the norming
    constant of the regular solution, c_j = s_j [f'(0, i kappa_j)]^2.
    Secondary value: s_j = 1 / int_0^inf f(x, i kappa_j)^2 dx.  The relative
    discrepancy between the two routes is recorded per state.
    """
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    out = np.empty(kappas.size)
    report = []
    for j, kap in enumerate(kappas):
        h = 1e-4 * kap
        f_x, fprime0 = solve_jost(q, 1j * kap)
        gp, gm = _f0_imag_axis(q, np.array([kap + h, kap - h]))
        # f is analytic: d/dk = -i d/dkappa along k = i*kappa
        fdot = -1j * (gp - gm) / (2 * h)
        if abs(fdot) < 1e-8:
            raise SolverError(f"zero at kappa = {kap:.6f} is not simple (|fdot| < 1e-8)")
        s_primary = -2j * kap / (fdot * fprime0)
        if abs(s_primary.imag) > 1e-6 * max(1.0, abs(s_primary.real)):
            raise SolverError(f"norming constant at kappa = {kap:.6f} is not real: {s_primary}")
        norm = float(integrate(np.real(f_x) ** 2, q.grid))
        s_secondary = 1.0 / norm
        sp = float(s_primary.real)
        rel = abs(sp - s_secondary) / max(abs(sp), abs(s_secondary))
        out[j] = sp
        report.append({"kappa": float(kap), "s": sp, "s_norm": s_secondary, "rel_diff": rel})
    return out, report


def s_matrix(q: Potential, kgrid: MomentumGrid, kappa_max: float | None = None) -> ScatteringData:
    """Scattering data of a potential: S(k) = f(-k)/f(k) on the grid, bound
    states with norming constants, and the S(0) sign flag.

    S is formed as conj(f)/f for k > 0 and reflected, so |S| = 1 to rounding.
    At the k = 0 node the 0/0 limit is replaced by the sign convention
    S(0) = +1 when f(0) != 0 and S(0) = -1 when f(0) = 0 (simple zero), with
    the resonance threshold |f(0,0)| < 1e-3.
    """
    f0, _ = jost_boundary(q, kgrid)
    scan = find_bound_states(q, kappa_max)
    svals = np.conj(f0) / f0
    sign = -1 if scan.resonance_suspected else 1
    if kgrid.zero_index is not None:
        svals[kgrid.zero_index] = complex(sign)
    interior = np.abs(kgrid.nodes) > 10 * kgrid.dk
    if np.any(np.abs(f0[interior]) < 1e-12):
        raise SolverError("Jost boundary value vanishes away from k = 0")
    if scan.kappas:
        s_vals, _ = norming_constants(q, np.array(scan.kappas))
        bound = tuple(BoundState(k, s) for k, s in zip(scan.kappas, s_vals))
    else:
        bound = ()
    return ScatteringData(kgrid=kgrid, s_values=svals, bound_states=bound, s_at_zero_sign=sign)


def phase_shift(sd: ScatteringData) -> np.ndarray:
    """Continuous phase shift delta(k) from S = e^{2 i delta}.

    The unwrapped argument of S is anchored to 0 at +k_max and continued
    down to k = 0; the negative half-line is the odd reflection
    delta(-k) = -delta(k) (in a resonance case delta carries a -pi jump
    through k = 0, so oddness is a piecewise statement, not a property of
    the full-line unwrap).  Consistency of e^{2 i delta} with S is checked
    on the whole grid.
    """
    nodes = sd.kgrid.nodes
    pos = np.nonzero(nodes >= 0)[0]
    theta = unwrap_phase(sd.s_values[pos][::-1])[::-1]
    n = nodes.size
    delta = np.empty(n)
    delta[pos] = 0.5 * theta
    neg = np.nonzero(nodes < 0)[0]
    delta[neg] = -delta[n - 1 - neg]
    resid = np.max(np.abs(np.exp(2j * delta) - sd.s_values))
    if resid > 1e-8:
        raise DataError(f"phase shift does not reproduce S: residual {resid:.2e}")
    return delta


def kernel_from_potential(
    q: Potential,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> TransformationKernel:
    """Transformation kernel A(x,y) by fixed-point iteration of

        A(x,y) = 1/2 int_{(x+y)/2}^inf q
                 + 1/2 int_x^inf ds q(s) int_{y-s+x}^{y+s-x} A(s,u) du.

    In characteristic coordinates xi = (x+y)/2, eta = (y-x)/2 the double
    integral becomes int_xi^inf da int_0^eta db q(a-b) K(a,b), so each sweep
    is two cumulative trapezoid passes and the iteration contracts like the
    powers of the first moment of q divided by factorials.  The diagonal
    A(x,x) equals the half tail integral of q exactly (the eta = 0 row).
    Odd-parity (x,y) nodes fall at cell centers of the characteristic grid
    and are filled by 4-point averaging.
    """
    qv = q.values
    dx = q.grid.dx
    n = q.grid.n
    m = (n - 1) // 2 + 1  # eta range [0, x_max/2] suffices for y <= x_max
    # omega(xi) = 1/2 int_xi^inf q  (reversed cumulative trapezoid)
    seg = 0.5 * dx * (qv[1:] + qv[:-1])
    omega = np.zeros(n)
    omega[:-1] = 0.5 * np.cumsum(seg[::-1])[::-1]
    # q(a - b) lookup, zero when b > a
    ia = np.arange(n)[:, None]
    ib = np.arange(m)[None, :]
    qdiff = np.where(ia >= ib, qv[np.clip(ia - ib, 0, n - 1)], 0.0)
    K = np.repeat(omega[:, None], m, axis=1)
    for it in range(max_iter):
        P = qdiff * K
        # C(a, eta_j) = int_0^eta_j P(a, b) db
        C = np.zeros_like(P)
        np.cumsum(0.5 * dx * (P[:, 1:] + P[:, :-1]), axis=1, out=C[:, 1:])
        # D(xi_i, eta_j) = int_{xi_i}^{x_max} C(a, eta_j) da
        D = np.zeros_like(C)
        rev = 0.5 * dx * (C[1:] + C[:-1])
        np.cumsum(rev[::-1], axis=0, out=D[:-1][::-1])
        K_new = omega[:, None] + D
        diff = float(np.max(np.abs(K_new - K)))
        K = K_new
        if diff < tol:
            break
    else:
        raise SolverError(f"kernel iteration did not converge: last sup-diff {diff:.3e}")
    # map K(xi, eta) back to A(x_i, y_j); parity-odd nodes by cell-center mean
    A = np.zeros((n, n))
    for i in range(n):
        j = np.arange(i, n)
        p = (i + j) // 2
        r = (j - i) // 2
        even = (i + j) % 2 == 0
        rows = np.empty(j.size)
        pe, re_ = p[even], r[even]
        rows[even] = K[pe, re_]
        if np.any(~even):
            po, ro = p[~even], r[~even]
            po1 = np.minimum(po + 1, n - 1)
            ro1 = np.minimum(ro + 1, m - 1)
            rows[~even] = 0.25 * (K[po, ro] + K[po1, ro] + K[po, ro1] + K[po1, ro1])
        A[i, i:] = rows
    return TransformationKernel(xgrid=q.grid, ygrid=q.grid, values=A, diagonal=K[:, 0].copy())


@dataclass(frozen=True)
class ForwardResult:
    """Everything the direct problem produces for one potential."""

    jost: JostField
    sd: ScatteringData
    delta: np.ndarray
    kernel: TransformationKernel | None = None


def forward(
    q: Potential,
    kgrid: MomentumGrid | None = None,
    kappa_max: float | None = None,
    with_kernel: bool = False,
    with_field: bool = False,
    validate_tol: float = 1e-8,
) -> ForwardResult:
    """Full direct problem: Jost boundary data, scattering data, phase shift,
    and optionally the transformation kernel and the full Jost field."""
    if kgrid is None:
        kgrid = MomentumGrid.make(200.0, 0.01)
    f0, fprime0 = jost_boundary(q, kgrid)
    sd = s_matrix(q, kgrid, kappa_max)
    bad = validate_scattering_data(sd, tol=validate_tol)
    if bad:
        raise SolverError("forward data failed validation: " + "; ".join(bad))
    delta = phase_shift(sd)
    field = None
    if with_field:
        field = jost_field(q, kgrid).f_xk
    jost = JostField(xgrid=q.grid, kgrid=kgrid, f0=f0, fprime0=fprime0, f_xk=field)
    kernel = kernel_from_potential(q) if with_kernel else None
    return ForwardResult(jost=jost, sd=sd, delta=delta, kernel=kernel)
