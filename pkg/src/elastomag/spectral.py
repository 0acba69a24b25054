"""Spectral operators on the periodic torus [0, 2*pi)^d.

Fields are sampled on a uniform grid with n points per axis. Derivatives,
the Leray projection, sharp frequency truncation and 2/3-rule dealiasing are
all diagonal in Fourier space, hence exact (to rounding) on resolved modes.

All fields are real, so transforms use the half spectrum: the last axis keeps
only the n//2 + 1 nonnegative frequencies and the conjugate modes are implied.
The forward transform is the unnormalized DFT fhat(k) = sum_x f(x) exp(-i k.x)
and backward(forward(f)) == f. The discrete Parseval identity used throughout
is

    integral |f|^2 dx = (2*pi)^d / n^(2d) * sum_k w_k |fhat(k)|^2,

where w_k = 2 for half-spectrum modes whose conjugate partner is implied
(0 < k_last < n/2) and w_k = 1 otherwise.

All mode and grid reductions use numpy's deterministic pairwise summation in
canonical array order, so results are bit-reproducible for a fixed
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as _fft

TAU = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0, 2*pi)^d and its integer wavenumber lattice.

    Args:
        dim: spatial dimension, 2 or 3.
        n: points per axis, even and >= 8.
    """

    dim: int
    n: int

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def hat_shape(self) -> tuple[int, ...]:
        """Half-spectrum shape: full on leading axes, n//2 + 1 on the last."""
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def spacing(self) -> float:
        return TAU / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return TAU**self.dim

    @cached_property
    def x(self) -> np.ndarray:
        """Coordinate meshes, shape (dim,) + shape, 'ij' indexing."""
        axis = np.arange(self.n) * self.spacing
        return np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumber meshes on the half spectrum, shape (dim,) + hat_shape."""
        full = np.fft.fftfreq(self.n, d=1.0 / self.n)
        half = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        axes = [full] * (self.dim - 1) + [half]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def k_sq(self) -> np.ndarray:
        """|k|^2 per half-spectrum mode."""
        return np.sum(self.k**2, axis=0)

    @cached_property
    def inv_k_sq(self) -> np.ndarray:
        """1/|k|^2 with the zero mode set to 0."""
        ksq = self.k_sq.copy()
        ksq.flat[0] = 1.0
        inv = 1.0 / ksq
        inv.flat[0] = 0.0
        return inv

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule: all |k_i| <= n/3."""
        return np.all(np.abs(self.k) <= self.n / 3.0, axis=0)

    @cached_property
    def mode_weight(self) -> np.ndarray:
        """Parseval multiplicity per half-spectrum mode: 2 where the conjugate
        partner is implied (0 < k_last < n/2), 1 on the self-conjugate planes."""
        weight = np.ones(self.hat_shape)
        weight[..., 1 : self.n // 2] = 2.0
        return weight

    def spatial_axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    def fft(self, values: np.ndarray) -> np.ndarray:
        """Forward real transform over the trailing dim axes (half spectrum)."""
        return _fft.rfftn(values, axes=self.spatial_axes())

    def ifft(self, hat: np.ndarray) -> np.ndarray:
        """Backward real transform over the trailing dim axes."""
        return _fft.irfftn(hat, s=self.shape, axes=self.spatial_axes())


# --------------------------------------------------------------------------
# Field containers
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples at grid points, canonical row-major ordering."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"scalar values shape {self.values.shape} != grid shape {self.grid.shape}"
            )


@dataclass(frozen=True, eq=False)
class VectorField:
    """Stack of component scalars; values shape (ncomp,) + grid.shape."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != self.grid.dim + 1 or self.values.shape[1:] != self.grid.shape:
            raise ValueError(
                f"vector values shape {self.values.shape} incompatible with grid {self.grid.shape}"
            )

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])


@dataclass(frozen=True, eq=False)
class MatrixField:
    """d x d matrix samples; values shape (d, d) + grid.shape, entry (i, j) = row i, column j."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        d = self.grid.dim
        if self.values.shape != (d, d) + self.grid.shape:
            raise ValueError(
                f"matrix values shape {self.values.shape} != {(d, d) + self.grid.shape}"
            )

    def component(self, i: int, j: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i, j])


Field = ScalarField | VectorField | MatrixField


def _wrap_like(field: Field, values: np.ndarray) -> Field:
    return type(field)(field.grid, values)


def field_hat(f: Field) -> np.ndarray:
    """Half-spectrum transform of a field, cached on the instance.

    Containers are frozen and no code path mutates values after
    construction, so the cache cannot go stale. Treat the returned array
    as read-only.
    """
    hat = getattr(f, "_hat", None)
    if hat is None:
        hat = f.grid.fft(f.values)
        object.__setattr__(f, "_hat", hat)
    return hat


def _wrap_hat(kind: type, grid: TorusGrid, hat: np.ndarray) -> Field:
    """Build a field from its transform, keeping the exact hat cached.

    Chained Fourier-multiplier operations (derivative, projection,
    truncation) then compose without forward/backward round trips, which
    is what makes truncation exactly idempotent and multipliers exactly
    commutative at the field level.
    """
    out = kind(grid, grid.ifft(hat))
    object.__setattr__(out, "_hat", hat)
    return out


# --------------------------------------------------------------------------
# Array-level operators (arbitrary leading component axes)
# --------------------------------------------------------------------------


def _deriv_multiplier(grid: TorusGrid, m: tuple[int, ...]) -> np.ndarray:
    """Fourier multiplier prod_i (i*k_i)^m_i of the multi-index m."""
    if len(m) != grid.dim:
        raise ValueError(f"multi-index length {len(m)} != grid dim {grid.dim}")
    if any(mi < 0 for mi in m):
        raise ValueError(f"multi-index entries must be >= 0, got {m}")
    mult = np.ones(grid.hat_shape, dtype=np.complex128)
    for i, mi in enumerate(m):
        if mi > 0:
            mult = mult * (1j * grid.k[i]) ** mi
    return mult


def deriv_values(grid: TorusGrid, values: np.ndarray, m: tuple[int, ...]) -> np.ndarray:
    """Partial derivative of multi-index m via the multiplier prod_i (i*k_i)^m_i."""
    return grid.ifft(grid.fft(values) * _deriv_multiplier(grid, m))


def jacobian_values(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """All first derivatives; output[..., j, <space>] = d_j values[..., <space>]."""
    return jacobian_from_hat(grid, grid.fft(values))


def jacobian_from_hat(grid: TorusGrid, hat: np.ndarray) -> np.ndarray:
    """Jacobian from an already transformed field (shares one forward FFT)."""
    return grid.ifft(np.expand_dims(hat, -grid.dim - 1) * (1j * grid.k))


def laplacian_values(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    return grid.ifft(grid.fft(values) * (-grid.k_sq))


def inverse_laplacian_values(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Zero-mean inverse Laplacian; the zero mode of the result is 0."""
    return grid.ifft(grid.fft(values) * (-grid.inv_k_sq))


def divergence_values(grid: TorusGrid, vec: np.ndarray) -> np.ndarray:
    """sum_i d_i vec[i] for a (dim,) + shape stack."""
    hat = grid.fft(vec)
    return grid.ifft(np.einsum("i...,i...->...", 1j * grid.k, hat))


def leray_hat(grid: TorusGrid, hat: np.ndarray) -> np.ndarray:
    """Leray projection of a transformed (dim,) + hat_shape stack; input unchanged."""
    dot = np.einsum("i...,i...->...", grid.k, hat)
    dot *= grid.inv_k_sq
    return hat - grid.k * dot


def leray_values(grid: TorusGrid, vec: np.ndarray) -> np.ndarray:
    """Remove the gradient part: uhat -> uhat - k (k.uhat)/|k|^2; zero mode unchanged."""
    return grid.ifft(leray_hat(grid, grid.fft(vec)))


def truncate_values(grid: TorusGrid, values: np.ndarray, cutoff: float) -> np.ndarray:
    """Zero all modes with |k| > cutoff (sharp Fourier ball truncation)."""
    if cutoff <= 0:
        raise ValueError(f"cutoff must be > 0, got {cutoff}")
    mask = grid.k_sq <= cutoff * cutoff
    return grid.ifft(grid.fft(values) * mask)


def dealias_values(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Zero all modes with any |k_i| > n/3 (2/3-rule guard for products)."""
    return grid.ifft(grid.fft(values) * grid.dealias_mask)


def l2_norm_sq_values(grid: TorusGrid, values: np.ndarray) -> float:
    """integral |f|^2 dx by the grid sum (cell volume times sum of squares)."""
    return float(grid.cell_volume * np.sum(values**2))


def mode_l2_norm_sq_values(grid: TorusGrid, values: np.ndarray) -> float:
    """integral |f|^2 dx by the weighted Parseval mode sum."""
    hat = grid.fft(values)
    total = np.sum(grid.mode_weight * (hat.real**2 + hat.imag**2))
    return float(grid.volume / grid.n ** (2 * grid.dim) * total)


def mean_value(grid: TorusGrid, values: np.ndarray) -> float:
    return float(np.mean(values))


# --------------------------------------------------------------------------
# Field-level operations
# --------------------------------------------------------------------------


def derivative(f: ScalarField, m: tuple[int, ...]) -> ScalarField:
    """m-th partial derivative of a scalar field, exact on band-limited fields."""
    mult = _deriv_multiplier(f.grid, m)
    return _wrap_hat(ScalarField, f.grid, field_hat(f) * mult)


def laplacian(f: Field) -> Field:
    return _wrap_hat(type(f), f.grid, field_hat(f) * (-f.grid.k_sq))


def inverse_laplacian_zero_mean(f: ScalarField) -> ScalarField:
    """Inverse Laplacian on zero-mean input; rejects input with |mean| > 1e-12."""
    mean = mean_value(f.grid, f.values)
    if abs(mean) > 1e-12:
        raise ValueError(f"inverse Laplacian needs zero-mean input, got mean {mean:g}")
    return _wrap_hat(ScalarField, f.grid, field_hat(f) * (-f.grid.inv_k_sq))


def leray_project(u: VectorField) -> VectorField:
    """Divergence-free part of u (pressure-gradient removal)."""
    if u.ncomp != u.grid.dim:
        raise ValueError(f"Leray projection needs {u.grid.dim} components, got {u.ncomp}")
    return _wrap_hat(VectorField, u.grid, leray_hat(u.grid, field_hat(u)))


def truncate(f: Field, cutoff: float) -> Field:
    """Sharp Fourier truncation to the ball |k| <= cutoff; an exact projection."""
    if cutoff <= 0:
        raise ValueError(f"cutoff must be > 0, got {cutoff}")
    mask = f.grid.k_sq <= cutoff * cutoff
    return _wrap_hat(type(f), f.grid, field_hat(f) * mask)


def dealias(f: Field) -> Field:
    """2/3-rule dealiasing applied to any field kind."""
    return _wrap_hat(type(f), f.grid, field_hat(f) * f.grid.dealias_mask)


def divergence(u: VectorField) -> ScalarField:
    if u.ncomp != u.grid.dim:
        raise ValueError(f"divergence needs {u.grid.dim} components, got {u.ncomp}")
    hat = np.einsum("i...,i...->...", 1j * u.grid.k, field_hat(u))
    return _wrap_hat(ScalarField, u.grid, hat)


def l2_norm_sq(f: Field) -> float:
    """integral |f|^2 dx, summed over components."""
    return l2_norm_sq_values(f.grid, f.values)
