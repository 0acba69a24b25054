"""Deterministic initial-data generators for both formulations.

Random variants draw trigonometric-polynomial coefficients in a canonical
mode order that does not depend on the grid resolution, then evaluate the
sums pointwise at the grid nodes. Amplitude scaling uses analytic bounds
computed from the coefficients, not grid maxima. The same seed therefore
samples the same continuum field at every resolution, which is what
resolution-comparison studies require.

Hygiene guarantees: generated velocities are divergence free to roundoff
(the incompressibility projection acts on the coefficients, mode by mode),
generated magnetizations are unit length to roundoff (pointwise
normalization), and the flow-map deformation gradient has unit determinant
to far better than 1e-8 (it integrates dF/dtau = (grad u) F along a
divergence-free u, which preserves det F exactly in the continuum).
"""

from __future__ import annotations

from itertools import product
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..fields import G_to_F, StateA, StateB, grad_potential, identity_matrix_field, identity_values
from ..spectral import MatrixField, TorusGrid, VectorField, jacobian_values
from .snapshot import load_snapshot

STATE_BAND = 3
FLOW_BAND = 2
FLOW_DTAU = 1e-3
COEFF_DECAY = 2.0

VARIANTS = (
    "zero_steady",
    "harmonic_map",
    "random_small",
    "shear_F",
    "flow_map_F",
    "from_snapshot",
)


def _half_lattice_modes(dim: int, band: int) -> list[tuple[int, ...]]:
    """Nonzero integer modes with entries in [-band, band], one per +-k pair.

    Keeping only modes whose first nonzero entry is positive avoids double
    counting cos(k.x) = cos(-k.x). The itertools.product order is the
    canonical lexicographic order the coefficient draws rely on.
    """
    modes = []
    for k in product(range(-band, band + 1), repeat=dim):
        lead = next((c for c in k if c != 0), 0)
        if lead > 0:
            modes.append(k)
    return modes


def _draw_coeffs(
    rng: np.random.Generator,
    ncomp: int,
    modes: list[tuple[int, ...]],
    decay: float = COEFF_DECAY,
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian cosine/sine coefficients, damped by 1/|k|^decay."""
    weight = np.array([sum(c * c for c in k) ** (-decay / 2.0) for k in modes])
    a = rng.standard_normal((ncomp, len(modes))) * weight
    b = rng.standard_normal((ncomp, len(modes))) * weight
    return a, b


def _project_div_free(
    modes: list[tuple[int, ...]], a: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Remove the component of each coefficient vector along its mode."""
    a = a.copy()
    b = b.copy()
    for m, k in enumerate(modes):
        kv = np.asarray(k, dtype=np.float64)
        ksq = float(kv @ kv)
        a[:, m] -= kv * float(kv @ a[:, m]) / ksq
        b[:, m] -= kv * float(kv @ b[:, m]) / ksq
    return a, b


def _sup_bound(a: np.ndarray, b: np.ndarray) -> float:
    """Bound on max over components of sup_x |f_comp(x)|."""
    return float(np.max(np.sum(np.hypot(a, b), axis=1)))


def _grad_sup_bound(modes: list[tuple[int, ...]], a: np.ndarray, b: np.ndarray) -> float:
    """Bound on max over components and axes of sup_x |d_i f_comp(x)|."""
    amp = np.hypot(a, b)
    kabs = np.abs(np.asarray(modes, dtype=np.float64))
    return float(np.max(amp @ kabs))


def _eval_trig(
    grid: TorusGrid, modes: list[tuple[int, ...]], a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Evaluate sum_m a[:, m] cos(k_m.x) + b[:, m] sin(k_m.x) on the grid."""
    ncomp = a.shape[0]
    out = np.zeros((ncomp,) + grid.shape)
    lift = (slice(None),) + (None,) * grid.dim
    for m, k in enumerate(modes):
        phase = np.zeros(grid.shape)
        for i, ki in enumerate(k):
            if ki:
                phase += ki * grid.x[i]
        out += a[:, m][lift] * np.cos(phase) + b[:, m][lift] * np.sin(phase)
    return out


def random_trig_field(
    rng: np.random.Generator,
    grid: TorusGrid,
    ncomp: int,
    band: int,
    decay: float = COEFF_DECAY,
) -> np.ndarray:
    """Unscaled random trig polynomial, shape (ncomp,) + grid.shape.

    Zero mean by construction; the same rng state samples the same
    continuum field at any resolution that resolves the band.
    """
    modes = _half_lattice_modes(grid.dim, band)
    a, b = _draw_coeffs(rng, ncomp, modes)
    return _eval_trig(grid, modes, a, b)


def _random_velocity(
    rng: np.random.Generator, grid: TorusGrid, amplitude: float, band: int = STATE_BAND
) -> VectorField:
    modes = _half_lattice_modes(grid.dim, band)
    a, b = _draw_coeffs(rng, grid.dim, modes)
    a, b = _project_div_free(modes, a, b)
    bound = _sup_bound(a, b)
    scale = amplitude / bound if bound > 0 else 0.0
    return VectorField(grid, _eval_trig(grid, modes, a * scale, b * scale))


def _random_potential(
    rng: np.random.Generator, grid: TorusGrid, amplitude: float, band: int = STATE_BAND
) -> VectorField:
    """Zero-mean psi scaled so the analytic bound on max |d_i psi^j| is amplitude."""
    modes = _half_lattice_modes(grid.dim, band)
    a, b = _draw_coeffs(rng, grid.dim, modes)
    bound = _grad_sup_bound(modes, a, b)
    scale = amplitude / bound if bound > 0 else 0.0
    return VectorField(grid, _eval_trig(grid, modes, a * scale, b * scale))


def _random_magnetization(
    rng: np.random.Generator, grid: TorusGrid, amplitude: float, band: int = STATE_BAND
) -> VectorField:
    """Unit field: constant e3 plus an amplitude-bounded perturbation, normalized."""
    modes = _half_lattice_modes(grid.dim, band)
    a, b = _draw_coeffs(rng, 3, modes)
    bound = _sup_bound(a, b)
    scale = amplitude / bound if bound > 0 else 0.0
    vals = _eval_trig(grid, modes, a * scale, b * scale)
    vals[2] += 1.0
    norms = np.sqrt(np.sum(vals**2, axis=0))
    return VectorField(grid, vals / norms)


def _flow_map_deformation(
    rng: np.random.Generator,
    grid: TorusGrid,
    amplitude: float,
    band: int = FLOW_BAND,
    dtau: float = FLOW_DTAU,
) -> MatrixField:
    """F with det F = 1: integrate dF/dtau = (grad u) F from I over tau in [0, 1].

    u is a fixed divergence-free trig polynomial with max |grad u| bounded by
    amplitude; the classical four-stage explicit scheme at step dtau keeps the
    determinant within roundoff of 1.
    """
    modes = _half_lattice_modes(grid.dim, band)
    a, b = _draw_coeffs(rng, grid.dim, modes)
    a, b = _project_div_free(modes, a, b)
    bound = _grad_sup_bound(modes, a, b)
    scale = amplitude / bound if bound > 0 else 0.0
    u = _eval_trig(grid, modes, a * scale, b * scale)
    grad_u = jacobian_values(grid, u)

    def rate(mat: np.ndarray) -> np.ndarray:
        return np.einsum("ik...,kj...->ij...", grad_u, mat)

    F = identity_values(grid)
    for _ in range(round(1.0 / dtau)):
        k1 = rate(F)
        k2 = rate(F + 0.5 * dtau * k1)
        k3 = rate(F + 0.5 * dtau * k2)
        k4 = rate(F + dtau * k3)
        F = F + (dtau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return MatrixField(grid, F)


def _constant_m(grid: TorusGrid, direction: tuple[float, float, float]) -> VectorField:
    vals = np.zeros((3,) + grid.shape)
    for i, c in enumerate(direction):
        vals[i] = c
    return VectorField(grid, vals)


def _zero_velocity(grid: TorusGrid) -> VectorField:
    return VectorField(grid, np.zeros((grid.dim,) + grid.shape))


def _from_snapshot(
    grid: TorusGrid, formulation: str, snapshot_path: str | Path | None
) -> StateA | StateB:
    if snapshot_path is None:
        raise ConfigError("from_snapshot initial data needs snapshot_path")
    state = load_snapshot(snapshot_path)
    loaded = "A" if isinstance(state, StateA) else "B"
    if loaded != formulation:
        raise ConfigError(
            f"snapshot holds formulation {loaded} state but config says {formulation}"
        )
    if state.grid.dim != grid.dim or state.grid.n != grid.n:
        raise ConfigError(
            f"snapshot grid (dim={state.grid.dim}, n={state.grid.n}) does not match "
            f"config grid (dim={grid.dim}, n={grid.n})"
        )
    return state


def generate_initial_data(
    grid: TorusGrid,
    variant: str,
    formulation: str,
    amplitude: float = 1e-2,
    seed: int = 0,
    snapshot_path: str | Path | None = None,
) -> StateA | StateB:
    """Build the initial state for a run; deterministic for a fixed seed."""
    if formulation not in ("A", "B"):
        raise ConfigError(f"formulation must be A or B, got {formulation!r}")
    if variant == "from_snapshot":
        return _from_snapshot(grid, formulation, snapshot_path)

    rng = np.random.default_rng(seed)
    if variant == "zero_steady":
        v = _zero_velocity(grid)
        m = _constant_m(grid, (0.0, 0.0, 1.0))
        if formulation == "A":
            return StateA(t=0.0, v=v, F=identity_matrix_field(grid), M=m)
        return StateB(t=0.0, v=v, psi=_zero_velocity(grid), M=m)

    if variant == "harmonic_map":
        v = _zero_velocity(grid)
        mvals = np.zeros((3,) + grid.shape)
        mvals[0] = np.cos(grid.x[0])
        mvals[1] = np.sin(grid.x[0])
        m = VectorField(grid, mvals)
        if formulation == "A":
            return StateA(t=0.0, v=v, F=identity_matrix_field(grid), M=m)
        return StateB(t=0.0, v=v, psi=_zero_velocity(grid), M=m)

    if variant == "shear_F":
        v = _zero_velocity(grid)
        m = _constant_m(grid, (0.0, 0.0, 1.0))
        if formulation == "A":
            fvals = identity_values(grid)
            fvals[0, 1] += amplitude * np.sin(grid.x[1])
            return StateA(t=0.0, v=v, F=MatrixField(grid, fvals), M=m)
        pvals = np.zeros((grid.dim,) + grid.shape)
        pvals[0] = amplitude * np.cos(grid.x[1])
        return StateB(t=0.0, v=v, psi=VectorField(grid, pvals), M=m)

    if variant == "random_small":
        v = _random_velocity(rng, grid, amplitude)
        psi = _random_potential(rng, grid, amplitude)
        m = _random_magnetization(rng, grid, amplitude)
        if formulation == "B":
            return StateB(t=0.0, v=v, psi=psi, M=m)
        return StateA(t=0.0, v=v, F=G_to_F(grad_potential(psi)), M=m)

    if variant == "flow_map_F":
        if formulation == "B":
            # The reformulation needs rows of G to be exact gradients, so it
            # takes the psi-generated data instead of the flow-map F.
            return generate_initial_data(grid, "random_small", "B", amplitude, seed)
        v = _random_velocity(rng, grid, amplitude)
        m = _random_magnetization(rng, grid, amplitude)
        F = _flow_map_deformation(rng, grid, amplitude)
        return StateA(t=0.0, v=v, F=F, M=m)

    raise ConfigError(f"unknown initial data variant {variant!r}")
