"""State containers for both formulations and the exact algebraic
conversions F <-> G <-> psi, plus pointwise geometric residuals.

Formulation A evolves (v, F, M): velocity, deformation gradient, and
magnetization. Formulation B evolves (v, psi, M) where the rows of
G = F^{-1} - I are the gradients of the potential components psi^j,
i.e. G^{jk} = d_k psi^j. Magnetization always carries 3 components valued
near the unit sphere, also in spatial dimension 2 (the standard
micromagnetic convention: planar sample, three-dimensional magnetization),
because the precession term M x Delta(M) needs three components.

Pressure is never stored: every momentum tendency is composed with the
Leray projection and the pressure is recoverable on demand by a Poisson
solve. The potential psi is gauged to zero spatial mean per component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, NearSingularError
from .spectral import (
    MatrixField,
    ScalarField,
    TorusGrid,
    VectorField,
    deriv_values,
    inverse_laplacian_values,
    jacobian_values,
)

DET_GUARD = 0.1  # pointwise |det| threshold for near-singular deformation
RENORM_GUARD = 0.5  # pointwise |M| threshold below which renormalization fails


@dataclass(frozen=True, eq=False)
class StateA:
    """Primitive-system state (v, F, M) at time t."""

    t: float
    v: VectorField
    F: MatrixField
    M: VectorField

    def __post_init__(self) -> None:
        grid = self.v.grid
        if self.F.grid != grid or self.M.grid != grid:
            raise ValueError("all fields must share one grid")
        if self.v.ncomp != grid.dim:
            raise ValueError("v must have dim components")
        if self.M.ncomp != 3:
            raise ValueError("M must have 3 components")

    @property
    def grid(self) -> TorusGrid:
        return self.v.grid


@dataclass(frozen=True, eq=False)
class StateB:
    """Reformulated-system state (v, psi, M) at time t; G = grad(psi) rows."""

    t: float
    v: VectorField
    psi: VectorField
    M: VectorField

    def __post_init__(self) -> None:
        grid = self.v.grid
        if self.psi.grid != grid or self.M.grid != grid:
            raise ValueError("all fields must share one grid")
        if self.v.ncomp != grid.dim or self.psi.ncomp != grid.dim:
            raise ValueError("v and psi must have dim components")
        if self.M.ncomp != 3:
            raise ValueError("M must have 3 components")

    @property
    def grid(self) -> TorusGrid:
        return self.v.grid


@dataclass(frozen=True)
class HExt:
    """External field specification: zero, a uniform 3-vector, or one
    band-limited cosine mode a*cos(k.x - omega*t) along one component."""

    kind: str = "zero"  # "zero" | "uniform" | "single_mode"
    vector: tuple[float, float, float] = (0.0, 0.0, 0.0)
    amplitude: float = 0.0
    wavevector: tuple[int, ...] = (1, 0)
    component: int = 2
    omega: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "uniform", "single_mode"):
            raise ValueError(f"unknown external field kind {self.kind!r}")
        if self.kind == "single_mode" and not 0 <= self.component <= 2:
            raise ValueError("single_mode component must be 0, 1, or 2")

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "uniform":
            return all(c == 0.0 for c in self.vector)
        return self.amplitude == 0.0

    def evaluate(self, grid: TorusGrid, t: float) -> VectorField | None:
        """Sample H_ext(x, t) on the grid; None means identically zero."""
        if self.is_zero:
            return None
        values = np.zeros((3,) + grid.shape)
        if self.kind == "uniform":
            for c in range(3):
                values[c] = self.vector[c]
        else:
            if len(self.wavevector) != grid.dim:
                raise ValueError("wavevector length must equal grid dim")
            phase = -self.omega * t
            for i, ki in enumerate(self.wavevector):
                phase = phase + ki * grid.x[i]
            values[self.component] = self.amplitude * np.cos(phase)
        return VectorField(grid, values)


@dataclass(frozen=True)
class PhysParams:
    """Physical coefficients: viscosity nu > 0, deformation regularization
    kappa >= 0 (default 0), and the external field specification."""

    nu: float = 1.0
    kappa: float = 0.0
    h_ext: HExt = field(default_factory=HExt)

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")


# --------------------------------------------------------------------------
# Pointwise matrix algebra
# --------------------------------------------------------------------------


def det_values(grid: TorusGrid, mat: np.ndarray) -> np.ndarray:
    """Pointwise determinant of a (d, d) + shape stack."""
    if grid.dim == 2:
        return mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    return (
        mat[0, 0] * (mat[1, 1] * mat[2, 2] - mat[1, 2] * mat[2, 1])
        - mat[0, 1] * (mat[1, 0] * mat[2, 2] - mat[1, 2] * mat[2, 0])
        + mat[0, 2] * (mat[1, 0] * mat[2, 1] - mat[1, 1] * mat[2, 0])
    )


def inverse_values(grid: TorusGrid, mat: np.ndarray, context: str) -> np.ndarray:
    """Pointwise closed-form inverse; raises if |det| < DET_GUARD anywhere."""
    det = det_values(grid, mat)
    min_det = float(np.min(np.abs(det)))
    if min_det < DET_GUARD:
        raise NearSingularError(
            f"{context}: min |det| = {min_det:.6g} < {DET_GUARD} (near-singular deformation)"
        )
    inv = np.empty_like(mat)
    if grid.dim == 2:
        inv[0, 0] = mat[1, 1]
        inv[0, 1] = -mat[0, 1]
        inv[1, 0] = -mat[1, 0]
        inv[1, 1] = mat[0, 0]
    else:
        inv[0, 0] = mat[1, 1] * mat[2, 2] - mat[1, 2] * mat[2, 1]
        inv[0, 1] = mat[0, 2] * mat[2, 1] - mat[0, 1] * mat[2, 2]
        inv[0, 2] = mat[0, 1] * mat[1, 2] - mat[0, 2] * mat[1, 1]
        inv[1, 0] = mat[1, 2] * mat[2, 0] - mat[1, 0] * mat[2, 2]
        inv[1, 1] = mat[0, 0] * mat[2, 2] - mat[0, 2] * mat[2, 0]
        inv[1, 2] = mat[0, 2] * mat[1, 0] - mat[0, 0] * mat[1, 2]
        inv[2, 0] = mat[1, 0] * mat[2, 1] - mat[1, 1] * mat[2, 0]
        inv[2, 1] = mat[0, 1] * mat[2, 0] - mat[0, 0] * mat[2, 1]
        inv[2, 2] = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    return inv / det


def identity_values(grid: TorusGrid) -> np.ndarray:
    mat = np.zeros((grid.dim, grid.dim) + grid.shape)
    for i in range(grid.dim):
        mat[i, i] = 1.0
    return mat


def identity_matrix_field(grid: TorusGrid) -> MatrixField:
    return MatrixField(grid, identity_values(grid))


# --------------------------------------------------------------------------
# Conversions and residuals
# --------------------------------------------------------------------------


def F_to_G(F: MatrixField) -> MatrixField:
    """G = F^{-1} - I by pointwise closed-form inversion."""
    grid = F.grid
    G = inverse_values(grid, F.values, "F_to_G") - identity_values(grid)
    return MatrixField(grid, G)


def G_to_F(G: MatrixField) -> MatrixField:
    """F = (I + G)^{-1}, the algebraic inverse of F_to_G."""
    grid = G.grid
    F = inverse_values(grid, G.values + identity_values(grid), "G_to_F")
    return MatrixField(grid, F)


def det_field(F: MatrixField) -> ScalarField:
    """Pointwise determinant of the deformation gradient."""
    return ScalarField(F.grid, det_values(F.grid, F.values))


def curl_residual(G: MatrixField) -> float:
    """max over the grid and all (i, j, k) of |d_i G^{jk} - d_k G^{ji}|.

    Zero exactly when every row of G is a gradient (G = grad psi rows).
    """
    grid = G.grid
    jac = jacobian_values(grid, G.values)  # jac[j, k, i] = d_i G^{jk}
    res = 0.0
    for j in range(grid.dim):
        for k in range(grid.dim):
            for i in range(k):
                diff = jac[j, k, i] - jac[j, i, k]
                res = max(res, float(np.max(np.abs(diff))))
    return res


def sphere_residual(M: VectorField) -> float:
    """max over the grid of | |M(x)| - 1 |."""
    norms = np.sqrt(np.sum(M.values**2, axis=0))
    return float(np.max(np.abs(norms - 1.0)))


def renormalize_M(M: VectorField) -> VectorField:
    """Divide M pointwise by its length; fails if |M| < 0.5 anywhere."""
    norms = np.sqrt(np.sum(M.values**2, axis=0))
    min_norm = float(np.min(norms))
    if min_norm < RENORM_GUARD:
        raise ConstraintError(
            f"renormalize_M: min |M| = {min_norm:.6g} < {RENORM_GUARD} (constraint blow-up)"
        )
    return VectorField(M.grid, M.values / norms)


def grad_potential(psi: VectorField) -> MatrixField:
    """G with rows grad(psi^j): G^{jk} = d_k psi^j, derivatives spectral."""
    return MatrixField(psi.grid, jacobian_values(psi.grid, psi.values))


def potential_from_gradient_rows(G: MatrixField) -> VectorField:
    """Zero-mean potential psi with grad(psi^j) the curl-free part of row j.

    psi^j = Laplacian^{-1}(d_k G^{jk}); exact when the rows of G are
    gradients, otherwise the curl part of each row is discarded.
    """
    grid = G.grid
    psi = np.empty((grid.dim,) + grid.shape)
    for j in range(grid.dim):
        row_div = np.zeros(grid.shape)
        for k in range(grid.dim):
            m = tuple(1 if a == k else 0 for a in range(grid.dim))
            row_div += deriv_values(grid, G.values[j, k], m)
        psi[j] = inverse_laplacian_values(grid, row_div)
    return VectorField(grid, psi)


def state_B_to_A(state: StateB) -> StateA:
    """Convert (v, psi, M) to (v, F, M) with F = (I + grad psi)^{-1}."""
    F = G_to_F(grad_potential(state.psi))
    return StateA(t=state.t, v=state.v, F=F, M=state.M)
