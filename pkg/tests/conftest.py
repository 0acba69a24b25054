"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from elastomag.spectral import MatrixField, ScalarField, TorusGrid, VectorField


@pytest.fixture(scope="session")
def grid2() -> TorusGrid:
    return TorusGrid(dim=2, n=16)


@pytest.fixture(scope="session")
def grid2_small() -> TorusGrid:
    return TorusGrid(dim=2, n=8)


@pytest.fixture(scope="session")
def grid3() -> TorusGrid:
    return TorusGrid(dim=3, n=8)


def scalar(grid: TorusGrid, values: np.ndarray) -> ScalarField:
    return ScalarField(grid, np.asarray(values, dtype=float))


def vector(grid: TorusGrid, *components: np.ndarray) -> VectorField:
    stacked = np.stack([np.broadcast_to(c, grid.shape) for c in components])
    return VectorField(grid, np.ascontiguousarray(stacked, dtype=float))


def matrix(grid: TorusGrid, rows: list[list[np.ndarray]]) -> MatrixField:
    d = len(rows)
    vals = np.zeros((d, d) + grid.shape)
    for i in range(d):
        for j in range(d):
            vals[i, j] = np.broadcast_to(rows[i][j], grid.shape)
    return MatrixField(grid, vals)


def random_band_limited(
    grid: TorusGrid, rng: np.random.Generator, ncomp: int | None = None, band: int = 2
) -> np.ndarray:
    """Smooth random field containing only modes with every |k_i| <= band."""
    shape = grid.shape if ncomp is None else (ncomp,) + grid.shape
    values = np.zeros(shape)
    flat = values.reshape(-1 if ncomp is None else ncomp, *grid.shape)
    comps = [flat] if ncomp is None else list(flat)
    for comp in comps:
        for _ in range(3):
            k = rng.integers(-band, band + 1, size=grid.dim)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            amp = rng.uniform(-1.0, 1.0)
            arg = sum(int(k[i]) * grid.x[i] for i in range(grid.dim))
            comp += amp * np.cos(arg + phase)
    return values


def div_free_vector(grid: TorusGrid, rng: np.random.Generator, band: int = 2) -> VectorField:
    """Band-limited divergence-free velocity built from a stream potential."""
    from elastomag.spectral import leray_values

    raw = random_band_limited(grid, rng, ncomp=grid.dim, band=band)
    return VectorField(grid, leray_values(grid, raw))
