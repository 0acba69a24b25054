"""Time integration of both formulations.

The scheme is a two-stage second-order implicit-explicit rule. Stage one is
an IMEX Euler predictor: stiff linear diffusion (nu Delta v, Delta M, and
kappa Delta F when kappa > 0) is solved implicitly by an exact per-mode
divide, everything else is advanced explicitly. Stage two combines
Crank-Nicolson for the diffusion with a trapezoidal (Heun) average of the
explicit tendencies evaluated at the old state and at the predictor:

    y*      = (I - dt L)^{-1} (y_k + dt N(y_k, t_k))
    y_{k+1} = (I - dt/2 L)^{-1} [ (I + dt/2 L) y_k
                                  + dt/2 (N(y_k, t_k) + N(y*, t_{k+1})) ]

The velocity is Leray-projected after each stage. Steady states of the
continuous system are exact fixed points of the scheme. Blow-up (NaN/Inf)
is reported with its time stamp, never silently clipped; the time step is
fixed (no adaptivity) so energy-monotonicity checks stay clean and runs
are bit-reproducible.

The stage combinations are carried out directly on Fourier coefficients:
the fused tendency kernels return hats, the implicit divides and the Leray
projection are diagonal there, and each stage transforms back exactly once
per state variable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import dynamics
from .energetics import DiagnosticRecord, diagnostic_record
from .errors import BlowUpError, CflError, NumericalError
from .fields import PhysParams, StateA, StateB, renormalize_M
from .spectral import MatrixField, TorusGrid, VectorField, leray_hat, leray_values


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-integration settings; dt is fixed for the whole run."""

    dt: float
    t_end: float
    scheme: str = "imex2"
    renormalize_m: bool = False
    cfl_guard: float = 0.5
    snapshot_every: int = 0
    diag_every: int = 1

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if not 0 < self.cfl_guard <= 1:
            raise ValueError(f"cfl_guard must be in (0, 1], got {self.cfl_guard}")
        if self.scheme != "imex2":
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class RunResult:
    """Outcome of a run: final state, reached time, and status."""

    state: StateA | StateB
    t_reached: float
    status: str  # "completed" | "blowup" | "cfl_violation" | "numerical_guard"
    steps: int
    message: str = ""


def implicit_diffusion_solve(grid: TorusGrid, values: np.ndarray, c: float, dt: float) -> np.ndarray:
    """(I - c dt Delta)^{-1} by the exact per-mode divide."""
    return grid.ifft(grid.fft(values) / (1.0 + c * dt * grid.k_sq))


def cn_diffusion_solve(
    grid: TorusGrid, values: np.ndarray, n_avg: np.ndarray, c: float, dt: float
) -> np.ndarray:
    """Crank-Nicolson for the diffusion plus dt * (averaged explicit tendency)."""
    half = 0.5 * c * dt * grid.k_sq
    hat = (grid.fft(values) * (1.0 - half) + dt * grid.fft(n_avg)) / (1.0 + half)
    return grid.ifft(hat)


def _check_cfl(state: StateA | StateB, cfg: IntegratorConfig) -> None:
    vmax = float(np.max(np.abs(state.v.values)))
    cfl = cfg.dt * vmax / state.grid.spacing
    if cfl > cfg.cfl_guard:
        raise CflError(state.t, cfl, cfg.cfl_guard)


def _check_finite(state: StateA | StateB, t: float) -> None:
    arrays = [state.v.values, state.M.values]
    arrays.append(state.F.values if isinstance(state, StateA) else state.psi.values)
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise BlowUpError(t)


def _project(grid: TorusGrid, v: np.ndarray) -> np.ndarray:
    return leray_values(grid, v)


def _zero_mean(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Fix the zero mode of each component to 0 (gauge for psi)."""
    axes = grid.spatial_axes()
    return values - values.mean(axis=axes, keepdims=True)


def _kill_zero_mode(grid: TorusGrid, hat: np.ndarray) -> None:
    """Zero-mean gauge in hat space: clear the k = 0 mode of each component."""
    hat[(Ellipsis,) + (0,) * grid.dim] = 0.0


def step_A(
    state: StateA, params: PhysParams, cfg: IntegratorConfig, dealias: bool = True
) -> StateA:
    """Advance a primitive-formulation state by one dt."""
    _check_cfl(state, cfg)
    grid = state.grid
    dt = cfg.dt
    t0, t1 = state.t, state.t + dt
    ksq = grid.k_sq
    mask = dynamics._mask(grid, dealias)
    h0 = dynamics._h_values(params.h_ext, grid, t0)
    h1 = dynamics._h_values(params.h_ext, grid, t1)

    hats, (dv1, df1, dm1) = dynamics._tendency_hats_A(
        grid, state.v.values, state.F.values, state.M.values, h0, mask
    )
    v_hat, f_hat, m_hat = hats

    vs_hat = leray_hat(grid, (v_hat + dt * dv1) / (1.0 + params.nu * dt * ksq))
    if params.kappa > 0:
        fs_hat = (f_hat + dt * df1) / (1.0 + params.kappa * dt * ksq)
    else:
        fs_hat = f_hat + dt * df1
    ms_hat = (m_hat + dt * dm1) / (1.0 + dt * ksq)

    _, (dv2, df2, dm2) = dynamics._tendency_hats_A(
        grid,
        grid.ifft(vs_hat),
        grid.ifft(fs_hat),
        grid.ifft(ms_hat),
        h1,
        mask,
        state_hats=(vs_hat, fs_hat, ms_hat),
    )

    half_v = 0.5 * params.nu * dt * ksq
    v_new = grid.ifft(
        leray_hat(grid, (v_hat * (1.0 - half_v) + 0.5 * dt * (dv1 + dv2)) / (1.0 + half_v))
    )
    if params.kappa > 0:
        half_f = 0.5 * params.kappa * dt * ksq
        f_new = grid.ifft((f_hat * (1.0 - half_f) + 0.5 * dt * (df1 + df2)) / (1.0 + half_f))
    else:
        f_new = grid.ifft(f_hat + 0.5 * dt * (df1 + df2))
    half_m = 0.5 * dt * ksq
    m_new = grid.ifft((m_hat * (1.0 - half_m) + 0.5 * dt * (dm1 + dm2)) / (1.0 + half_m))

    new_m = VectorField(grid, m_new)
    if cfg.renormalize_m:
        new_m = renormalize_M(new_m)
    new = StateA(t=t1, v=VectorField(grid, v_new), F=MatrixField(grid, f_new), M=new_m)
    _check_finite(new, t1)
    return new


def step_B(
    state: StateB, params: PhysParams, cfg: IntegratorConfig, dealias: bool = True
) -> StateB:
    """Advance a reformulated-system state by one dt.

    psi has no implicit part (the -Delta psi coupling in the momentum
    equation is explicit); v is implicit in nu Delta v, M in Delta M.
    """
    _check_cfl(state, cfg)
    grid = state.grid
    dt = cfg.dt
    t1 = state.t + dt
    ksq = grid.k_sq
    mask = dynamics._mask(grid, dealias)

    hats, (dv1, dp1, dm1) = dynamics._tendency_hats_B(
        grid, state.v.values, state.psi.values, state.M.values, mask
    )
    v_hat, p_hat, m_hat = hats

    vs_hat = leray_hat(grid, (v_hat + dt * dv1) / (1.0 + params.nu * dt * ksq))
    ps_hat = p_hat + dt * dp1
    _kill_zero_mode(grid, ps_hat)
    ms_hat = (m_hat + dt * dm1) / (1.0 + dt * ksq)

    _, (dv2, dp2, dm2) = dynamics._tendency_hats_B(
        grid,
        grid.ifft(vs_hat),
        grid.ifft(ps_hat),
        grid.ifft(ms_hat),
        mask,
        state_hats=(vs_hat, ps_hat, ms_hat),
    )

    half_v = 0.5 * params.nu * dt * ksq
    v_new = grid.ifft(
        leray_hat(grid, (v_hat * (1.0 - half_v) + 0.5 * dt * (dv1 + dv2)) / (1.0 + half_v))
    )
    pn_hat = p_hat + 0.5 * dt * (dp1 + dp2)
    _kill_zero_mode(grid, pn_hat)
    p_new = grid.ifft(pn_hat)
    half_m = 0.5 * dt * ksq
    m_new = grid.ifft((m_hat * (1.0 - half_m) + 0.5 * dt * (dm1 + dm2)) / (1.0 + half_m))

    new_m = VectorField(grid, m_new)
    if cfg.renormalize_m:
        new_m = renormalize_M(new_m)
    new = StateB(t=t1, v=VectorField(grid, v_new), psi=VectorField(grid, p_new), M=new_m)
    _check_finite(new, t1)
    return new


def run(
    state: StateA | StateB,
    params: PhysParams,
    cfg: IntegratorConfig,
    s: int = 2,
    delta: float = 0.25,
    dealias: bool = True,
    diag_sink: Callable[[DiagnosticRecord], None] | None = None,
    snap_sink: Callable[[StateA | StateB, int], None] | None = None,
) -> RunResult:
    """Iterate steps to t_end, emitting diagnostics and snapshots.

    Terminates at t_end or on a numerical error; the result carries the
    reached time (the empirical lifespan) and a status string instead of
    raising, so callers can report blow-up cleanly.
    """
    stepper = step_A if isinstance(state, StateA) else step_B
    n_steps = int(round(cfg.t_end / cfg.dt))

    def emit(st: StateA | StateB) -> None:
        if diag_sink is not None:
            diag_sink(diagnostic_record(st, params, s, delta, dealias))

    emit(state)
    if snap_sink is not None and cfg.snapshot_every > 0:
        snap_sink(state, 0)
    for k in range(1, n_steps + 1):
        try:
            state = stepper(state, params, cfg, dealias)
        except NumericalError as err:
            if isinstance(err, BlowUpError):
                status = "blowup"
            elif isinstance(err, CflError):
                status = "cfl_violation"
            else:
                status = "numerical_guard"
            return RunResult(state, state.t, status, k - 1, str(err))
        state = replace(state, t=k * cfg.dt)
        if k % cfg.diag_every == 0 or k == n_steps:
            emit(state)
        if snap_sink is not None and cfg.snapshot_every > 0 and (
            k % cfg.snapshot_every == 0 or k == n_steps
        ):
            snap_sink(state, k)
    return RunResult(state, state.t, "completed", n_steps)
