"""Inverse scattering pipeline and its reverse arrows.

Forward composition (the three inversion steps):

    scattering data  =>  F = F_s + F_d  =>  A(x,y)  =>  q = -2 dA(x,x)/dx

with F_s(x) = (1/2pi) int (1 - S(k)) e^{ikx} dk and
F_d(x) = sum_j s_j e^{-kappa_j x}, and A(x, .) the solution of the Marchenko
equation A(x,y) + F(x+y) + int_x^inf A(x,s) F(s+y) ds = 0 for y >= x.

Reverse arrows: f_from_kernel recovers F from the x = 0 kernel row by a
backward Volterra solve of the same equation; extract_data_from_F strips
bound-state exponentials off the x -> -inf asymptotics of F and Fourier
transforms the remainder back to 1 - S(k); data_from_kernel reconstructs
the full scattering data from A alone.

Each kernel row is an independent dense Nystrom solve; F beyond the sample
window is treated as zero (its tail mass is the reported error scale), rows
are truncated where the remaining |F| mass is negligible, and the row
solves are farmed out to a thread pool (BLAS releases the GIL).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SolverError, StageError, StrippingError
from .model import (
    BoundState,
    MarchenkoInput,
    MomentumGrid,
    Potential,
    RadialGrid,
    ScatteringData,
    TransformationKernel,
    UniformGrid,
)
from .numkit import (
    differentiate,
    find_root,
    fourier_kernel_to_space,
    fourier_space_to_kernel,
    integrate,
    quadrature_weights,
    solve_volterra_backward,
)

__all__ = [
    "InversionConfig",
    "InversionResult",
    "build_F",
    "solve_marchenko",
    "recover_potential",
    "invert",
    "invert_full",
    "f_from_kernel",
    "extract_data_from_F",
    "data_from_kernel",
]


def _thread_count(requested: int | None) -> int:
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get("HALFLINE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class InversionConfig:
    """Grids, quadrature, and tolerance knobs for the inversion pipeline.

    F is built on [0, 2*x_max] since the Marchenko kernel samples F(s + y)
    with s, y <= x_max.  rule is the Nystrom quadrature for kernel rows;
    deriv_stencil is the finite-difference width for the diagonal derivative
    (q = -2 dA/dx amplifies noise, so 5 points by default).  y_tail_tol is
    the |F| tail mass below which a row is truncated.  The analytic 1/k
    tail correction in the oscillatory transform suppresses Gibbs ringing
    that would otherwise dominate the recovered q after differentiation;
    when it is on, the endpoint taper is skipped.
    """

    x_max: float = 40.0
    dx: float = 0.05
    k_max: float = 200.0
    dk: float = 0.01
    rule: str = "simpson"
    deriv_stencil: int = 5
    fredholm_tol: float = 1e-10
    y_tail_tol: float = 1e-8
    fourier_taper: float = 0.2
    fourier_tail_correction: bool = True
    threads: int | None = None
    force: bool = False


def build_F(
    sd: ScatteringData,
    x_lo: float,
    x_hi: float,
    dx: float,
    taper_frac: float = 0.2,
    tail_correction: bool = False,
    imag_tol: float = 1e-8,
) -> MarchenkoInput:
    """Marchenko input on [x_lo, x_hi]: F_d from the bound states, F_s by the
    oscillatory Fourier quadrature of 1 - S, F' by finite differences."""
    grid = UniformGrid.make(x_lo, x_hi, dx)
    h = 1.0 - sd.s_values
    fs, resid = fourier_kernel_to_space(
        h, sd.kgrid, grid.nodes, taper_frac=taper_frac, tail_correction=tail_correction
    )
    scale = max(1.0, float(np.max(np.abs(fs))))
    if np.max(resid) > imag_tol * scale:
        raise DataError(
            f"Fourier symmetry violation: imaginary residual {np.max(resid):.2e} "
            "(S(-k) != conj S(k) on this grid)"
        )
    if sd.bound_states:
        fd = np.sum(sd.norming[None, :] * np.exp(-np.outer(grid.nodes, sd.kappas)), axis=1)
    else:
        fd = np.zeros(grid.n)
    f = fs + fd
    fprime = differentiate(f, grid.dx)
    return MarchenkoInput(xgrid=grid, f_values=f, fs_values=fs, fd_values=fd, fprime=fprime)


def _marchenko_row(
    F_vals: np.ndarray,
    F_lo: float,
    dx: float,
    x: float,
    y_max: float,
    rule: str,
    residual_tol: float,
) -> np.ndarray:
    """One Marchenko row: A(x, y) on the nodes y = x, x+dx, ..., y_max.

    F is looked up by index (x, y_max, and the F origin must be commensurate
    with dx); samples beyond the F window are taken as zero, so the error
    scales with the neglected tail mass of F.
    """
    m = int(round((y_max - x) / dx)) + 1
    base = int(round((2 * x - F_lo) / dx))
    if base < 0:
        raise DataError("F window does not reach down to 2x")
    idx = base + np.arange(2 * (m - 1) + 1)
    Fwin = np.where(idx < F_vals.size, F_vals[np.minimum(idx, F_vals.size - 1)], 0.0)
    rhs = -Fwin[:m]
    if m == 1:
        return rhs / (1.0 + dx * Fwin[0])
    w = quadrature_weights(m, dx, rule)
    kmat = Fwin[np.add.outer(np.arange(m), np.arange(m))]
    mat = np.eye(m) + kmat * w[None, :]
    try:
        a = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Marchenko row at x = {x:.4f} is singular: {exc}")
    scale = float(np.linalg.norm(rhs))
    if scale > 0:
        resid = float(np.linalg.norm(mat @ a - rhs)) / scale
        if not np.isfinite(resid) or resid > residual_tol:
            cond = float(np.linalg.cond(mat))
            raise SolverError(
                f"Marchenko row at x = {x:.4f}: data violate unique solvability "
                f"(residual {resid:.2e}, cond {cond:.2e})",
                condition=cond,
            )
    return a


def solve_marchenko(
    F: MarchenkoInput,
    x: float,
    y_max: float | None = None,
    rule: str = "simpson",
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Row A(x, y) of the transformation kernel on y = x, x+dx, ..., y_max.

    F must be sampled down to 2x; its tail beyond the window is treated as
    zero.  y_max defaults to the end of the F window.
    """
    dx = F.xgrid.dx
    if y_max is None:
        y_max = F.xgrid.hi
    return _marchenko_row(F.f_values, F.xgrid.lo, dx, x, y_max, rule, residual_tol)


def recover_potential(kernel: TransformationKernel, stencil: int = 5) -> Potential:
    """Potential from the kernel diagonal: q = -2 dA(x,x)/dx."""
    q = -2.0 * differentiate(kernel.diagonal, kernel.xgrid.dx, stencil=stencil)
    return Potential(grid=kernel.xgrid, values=q)


@dataclass(frozen=True)
class InversionResult:
    """Full output of the inversion pipeline with diagnostics."""

    potential: Potential
    kernel: TransformationKernel
    marchenko_input: MarchenkoInput
    report: object | None
    neglected_tail_mass: float


def invert_full(sd: ScatteringData, config: InversionConfig | None = None) -> InversionResult:
    """Scattering data to potential, keeping the intermediate artifacts.

    Stages: characterization gate (unless config.force), build_F on
    [0, 2*x_max], per-row Marchenko solves (threaded), diagonal
    differentiation.  Raises StageError tagged with the failing stage.
    """
    cfg = config or InversionConfig()
    report = None
    if not cfg.force:
        from .characterize import full_report

        try:
            report = full_report(sd, x_hi=2 * cfg.x_max, dx=min(cfg.dx, 0.02))
        except Exception as exc:
            raise StageError("characterize", exc)
        if not report.passed:
            raise StageError(
                "characterize",
                DataError("scattering data fail characterization: " + ", ".join(report.failures())),
            )
    try:
        F = build_F(
            sd,
            0.0,
            2 * cfg.x_max,
            cfg.dx,
            taper_frac=0.0 if cfg.fourier_tail_correction else cfg.fourier_taper,
            tail_correction=cfg.fourier_tail_correction,
        )
    except StageError:
        raise
    except Exception as exc:
        raise StageError("build_F", exc)

    xg = RadialGrid.make(cfg.x_max, cfg.dx)
    n = xg.n
    dx = cfg.dx
    # signed tail integral of F from node j to the window end; oscillatory
    # ringing in a Fourier-built F self-cancels here, a one-signed physical
    # tail does not, so this tracks the error of zeroing F beyond the cut
    tail = np.zeros(F.xgrid.n)
    tail[:-1] = (0.5 * dx * (F.f_values[1:] + F.f_values[:-1]))[::-1].cumsum()[::-1]
    tail_env = np.maximum.accumulate(np.abs(tail)[::-1])[::-1]
    below = np.nonzero(tail_env <= cfg.y_tail_tol)[0]
    p_cut = F.xgrid.nodes[below[0]] if below.size else F.xgrid.hi
    neglected = float(tail_env[below[0]]) if below.size else float(tail_env[-1])

    def solve_row(i: int) -> np.ndarray:
        x = xg.nodes[i]
        y_hi = min(xg.x_max, max(x + 2 * dx, p_cut - x))
        steps = min(int(round((y_hi - x) / dx)), n - 1 - i)
        if steps <= 0:
            f2x = F.value_at(2 * x) if 2 * x <= F.xgrid.hi else 0.0
            return np.array([-f2x / (1.0 + dx * f2x)])
        return _marchenko_row(
            F.f_values, F.xgrid.lo, dx, x, x + steps * dx, cfg.rule, cfg.fredholm_tol
        )

    values = np.zeros((n, n))
    try:
        with ThreadPoolExecutor(max_workers=_thread_count(cfg.threads)) as pool:
            for i, row in enumerate(pool.map(solve_row, range(n))):
                values[i, i : i + row.size] = row
    except SolverError as exc:
        raise StageError("solve_marchenko", exc)
    kernel = TransformationKernel(
        xgrid=xg, ygrid=xg, values=values, diagonal=values.diagonal().copy()
    )
    try:
        q = recover_potential(kernel, stencil=cfg.deriv_stencil)
    except Exception as exc:
        raise StageError("recover_potential", exc)
    return InversionResult(
        potential=q,
        kernel=kernel,
        marchenko_input=F,
        report=report,
        neglected_tail_mass=neglected,
    )


def invert(sd: ScatteringData, config: InversionConfig | None = None) -> Potential:
    """Three-step inversion: data => F => A => q."""
    return invert_full(sd, config).potential


def f_from_kernel(
    kernel: TransformationKernel, rule: str = "simpson", support_tol: float = 1e-6
) -> MarchenkoInput:
    """Recover F on [0, y_max] from the x = 0 kernel row.

    The Marchenko equation at x = 0, rewritten with p = y and t = s + y, is
    a backward Volterra equation for F with the triangular kernel A(0, t-p):

        F(p) + int_p^inf A(0, t - p) F(t) dt = -A(0, p).

    When bound states are present, e^{-kappa_j p} solves the homogeneous
    equation on the half-line (f(i kappa_j) = 0), so marching far beyond the
    kernel's support amplifies noise like e^{kappa (y_max - p)}.  The march
    is therefore restricted to the row's numerical support (|A(0,y)| above
    support_tol relative to its peak, plus a one-unit margin); beyond it F
    is taken as zero, which matches the decayed true values there.
    """
    row = kernel.row(0)
    nodes = kernel.ygrid.nodes
    dx = kernel.ygrid.dx
    f = np.zeros(nodes.size)
    peak = float(np.max(np.abs(row)))
    if peak > 0.0:
        alive = np.nonzero(np.abs(row) > support_tol * peak)[0]
        cut = min(nodes.size - 1, int(alive[-1]) + int(round(1.0 / dx)))

        def kern(p: float, t: np.ndarray) -> np.ndarray:
            off = np.round((t - p) / dx).astype(int)
            return row[np.clip(off, 0, row.size - 1)]

        f[: cut + 1] = solve_volterra_backward(kern, row[: cut + 1], nodes[: cut + 1], rule=rule)
    fprime = differentiate(f, dx)
    grid = UniformGrid(nodes)
    return MarchenkoInput(
        xgrid=grid, f_values=f, fs_values=f, fd_values=np.zeros_like(f), fprime=fprime
    )


def _fit_exponential(x: np.ndarray, F: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of ln F ~ ln s - kappa x; returns (kappa, s, resid)."""
    if np.any(F <= 0):
        raise StrippingError("window values must be positive for a log-linear fit")
    lnF = np.log(F)
    A = np.vstack([np.ones_like(x), -x]).T
    coef, *_ = np.linalg.lstsq(A, lnF, rcond=None)
    lns, kappa = coef
    resid = float(np.sqrt(np.mean((A @ coef - lnF) ** 2)))
    return float(kappa), float(np.exp(lns)), resid


def _refine_exponentials(
    x: np.ndarray, F: np.ndarray, kappas: list, ss: list, iters: int = 60
) -> tuple[list, list]:
    """Joint Gauss-Newton polish of F ~ sum_j s_j e^{-kappa_j x}."""
    p = np.array(list(kappas) + list(ss), dtype=float)
    J = len(kappas)
    for _ in range(iters):
        E = np.exp(-np.outer(x, p[:J]))
        r = E @ p[J:] - F
        jac = np.hstack([-x[:, None] * E * p[J:][None, :], E])
        try:
            step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        except np.linalg.LinAlgError:
            break
        p_new = p - step
        if np.any(p_new[:J] <= 0) or np.any(p_new[J:] <= 0):
            break
        done = np.max(np.abs(step)) < 1e-13 * max(1.0, float(np.max(np.abs(p))))
        p = p_new
        if done:
            break
    return list(p[:J]), list(p[J:])


def extract_data_from_F(
    F: MarchenkoInput,
    stripping_tol: float = 1e-3,
    kgrid: MomentumGrid | None = None,
    window_frac: float = 0.25,
    refine_frac: float = 0.6,
    max_states: int = 12,
    kappa_sep: float = 1e-2,
) -> ScatteringData:
    """Scattering data from F sampled on a window reaching well into x < 0.

    Bound states dominate F as x -> -inf (s_J e^{-kappa_J x}, largest kappa
    first).  Repeatedly: log-linear fit on the most negative window_frac of
    the negative-x samples, strip the fitted exponential, polish all
    recovered pairs by a joint Gauss-Newton fit on the most negative
    refine_frac of the negative-x samples (the lever arm from the fit
    window to x = 0 otherwise limits the amplitude accuracy).  Stop when
    the residual sup over x < 0 drops below stripping_tol or the remainder
    stops looking like a growing positive exponential (it is then the
    decaying negative-x part of F_s).  Finally F_s = F - F_d and
    S(k) = 1 - int F_s e^{-ikx} dx.
    """
    nodes = F.xgrid.nodes
    if nodes[0] >= 0:
        raise DataError("extraction needs samples on x < 0")
    if kgrid is None:
        kgrid = MomentumGrid.make(200.0, 0.05)
    n_neg = int(np.count_nonzero(nodes < 0))
    ref_hi = int(n_neg * refine_frac)
    if int(n_neg * window_frac) < 8:
        raise DataError("negative-x window too short for stripping")
    neg = nodes < 0

    def model(kappas, ss):
        if not kappas:
            return np.zeros_like(nodes)
        return np.sum(np.array(ss)[None, :] * np.exp(-np.outer(nodes, np.array(kappas))), axis=1)

    kappas: list[float] = []
    ss: list[float] = []
    residual = F.f_values.copy()
    sup = float(np.max(np.abs(residual[neg])))
    while sup >= stripping_tol:
        if len(kappas) >= max_states:
            raise StrippingError(f"more than {max_states} exponentials; window too narrow")
        # walk candidate fit windows from the far end toward x = 0: after a
        # strip, the far end is dominated by the previous stage's fit noise
        # and the next state emerges only where it beats that noise
        accepted = False
        for start in (0.0, 0.1, 0.25, 0.4, 0.55, 0.7):
            lo = int(n_neg * start)
            hi = min(n_neg, lo + max(8, int((n_neg - lo) * window_frac)))
            if hi - lo < 8:
                break
            seg = residual[lo:hi]
            if np.any(seg <= 0):
                continue
            try:
                kappa_c, s_c, _ = _fit_exponential(nodes[lo:hi], seg)
            except StrippingError:
                continue
            if kappa_c <= 0 or s_c <= 0:
                continue
            if kappas and kappa_c >= min(kappas) - kappa_sep:
                continue  # contaminant of an already-stripped state
            trial_k, trial_s = _refine_exponentials(
                nodes[:ref_hi], F.f_values[:ref_hi], kappas + [kappa_c], ss + [s_c]
            )
            trial_resid = F.f_values - model(trial_k, trial_s)
            trial_sup = float(np.max(np.abs(trial_resid[neg])))
            if trial_sup < 0.5 * sup:
                kappas, ss = trial_k, trial_s
                residual = trial_resid
                sup = trial_sup
                accepted = True
                break
        if not accepted:
            break  # remainder is not a growing exponential (the F_s part)
    if len(kappas) > 1 and np.min(np.abs(np.diff(sorted(kappas)))) < kappa_sep:
        raise StrippingError("recovered kappas closer than the resolvable separation")
    fd = model(kappas, ss)
    if kappas:
        # legitimate leftovers (the x < 0 part of F_s) decay toward x_lo;
        # a residual that instead grows leftward and is far above rounding
        # relative to the stripped model marks unresolved structure (states
        # closer than kappa_sep merge into one effective exponential)
        w = max(8, n_neg // 10)
        far = float(np.abs(residual[0]))
        near_zero = float(np.max(np.abs(residual[n_neg - w : n_neg])))
        if far >= stripping_tol and far > 3 * near_zero and far > 1e-9 * abs(fd[0]):
            raise StrippingError(
                f"unexplained growth toward x_lo (residual {far:.3e}); bound states "
                "closer than the resolvable separation or window too narrow"
            )
    fs = F.f_values - fd
    svals = 1.0 - fourier_space_to_kernel(fs, F.xgrid, kgrid.nodes)
    if kgrid.zero_index is not None:
        s0 = float(svals[kgrid.zero_index].real)
    else:
        s0 = float(1.0 - integrate(fs, F.xgrid))
    sign = 1 if s0 >= 0 else -1
    bound = tuple(BoundState(k, s) for k, s in sorted(zip(kappas, ss)))
    return ScatteringData(kgrid=kgrid, s_values=svals, bound_states=bound, s_at_zero_sign=sign)


def data_from_kernel(
    kernel: TransformationKernel,
    kgrid: MomentumGrid | None = None,
    kappa_max: float = 5.0,
    kappa_min: float = 1e-3,
    scan_step: float = 0.01,
    resonance_tol: float = 1e-3,
    rule: str = "simpson",
) -> ScatteringData:
    """Scattering data directly from the transformation kernel.

    f(k) = 1 + int_0^inf A(0,y) e^{iky} dy; bound states are the sign
    changes of f(i kappa) on the imaginary axis; s_j = ||f_j||^{-2} with
    f_j(x) = e^{-kappa_j x} + int_x^inf A(x,y) e^{-kappa_j y} dy; and
    S = conj(f)/f with the S(0) sign set by the resonance test |f(0)| <
    resonance_tol.
    """
    if kgrid is None:
        kgrid = MomentumGrid.make(200.0, 0.05)
    row0 = kernel.row(0)
    y = kernel.ygrid.nodes
    dx = kernel.ygrid.dx
    w = quadrature_weights(y.size, dx, rule)
    pos = np.nonzero(kgrid.nodes >= 0)[0]
    kp = kgrid.nodes[pos]
    f0 = np.empty(kgrid.n, dtype=complex)
    chunk = max(1, int(2e6) // y.size)
    for i in range(0, kp.size, chunk):
        ki = kp[i : i + chunk]
        f0[pos[i : i + chunk]] = 1.0 + np.exp(1j * np.outer(ki, y)) @ (w * row0)
    neg = np.nonzero(kgrid.nodes < 0)[0]
    f0[neg] = np.conj(f0[kgrid.n - 1 - neg])

    def f_imag(kap: float) -> float:
        return float(1.0 + np.dot(w * row0, np.exp(-kap * y)))

    resonance = abs(f_imag(0.0)) < resonance_tol
    grid = np.arange(kappa_min, kappa_max + scan_step, scan_step)
    gv = np.array([f_imag(k) for k in grid])
    kappas = [
        find_root(f_imag, grid[i], grid[i + 1], 1e-12)
        for i in range(grid.size - 1)
        if gv[i] * gv[i + 1] < 0
    ]
    bound = []
    X = kernel.xgrid.nodes
    diag = np.diagonal(kernel.values)
    for kap in kappas:
        decay = np.exp(-kap * y)
        P = kernel.values * decay[None, :]
        # trapezoid over [x_i, x_max] per row: the j < i entries are zero,
        # so the row sum starts at the diagonal; halve the two end nodes
        fj = np.exp(-kap * X) + dx * P.sum(axis=1) - 0.5 * dx * (diag * decay + P[:, -1])
        norm = float(integrate(fj**2, kernel.xgrid, rule))
        bound.append(BoundState(kap, 1.0 / norm))
    svals = np.conj(f0) / f0
    sign = -1 if resonance else 1
    if kgrid.zero_index is not None:
        svals[kgrid.zero_index] = complex(sign)
    return ScatteringData(kgrid=kgrid, s_values=svals, bound_states=tuple(bound), s_at_zero_sign=sign)
