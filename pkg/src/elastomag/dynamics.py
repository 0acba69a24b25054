"""Right-hand-side evaluation for both formulations.

Every nonlinear term of the momentum / deformation / magnetization system is
a separately testable operation. Index conventions:

    (grad v)_{ij}          = d_j v^i
    (div G)_i              = d_j G^{ji}
    (grad M (.) grad M)_ij = d_i M_k d_j M_k
    ((grad H)^T M)_i       = (d_i H_k) M_k

All nonlinear products are formed pointwise in physical space and then
dealiased (2/3 rule) when dealiasing is enabled; derivatives are always
spectral. g(G) is computed by exact pointwise inversion, not a truncated
series, which keeps the two formulations algebraically equivalent up to
rounding. The simplified coefficient choice (elastic energy (1/2)|F|^2,
unit exchange/gyromagnetic/damping constants) is hard-coded.

The public per-term functions each transform their own inputs. The stepping
hot path instead goes through the fused kernels (one forward transform per
state variable, jacobians shared across terms, tendencies returned in
Fourier space); both paths compose the same operations, so they agree to
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import HExt, StateA, StateB, grad_potential, inverse_values
from .spectral import (
    MatrixField,
    ScalarField,
    TorusGrid,
    VectorField,
    dealias_values,
    jacobian_from_hat,
    jacobian_values,
    laplacian_values,
    leray_hat,
    leray_values,
)


@dataclass(frozen=True, eq=False)
class RhsA:
    """Evaluated tendencies of formulation A; dv is divergence-free."""

    dv: VectorField
    dF: MatrixField
    dM: VectorField


@dataclass(frozen=True, eq=False)
class RhsB:
    """Evaluated tendencies of formulation B; dv is divergence-free."""

    dv: VectorField
    dpsi: VectorField
    dM: VectorField


def _dealias(grid: TorusGrid, values: np.ndarray, enabled: bool) -> np.ndarray:
    return dealias_values(grid, values) if enabled else values


def _mask(grid: TorusGrid, enabled: bool) -> np.ndarray | None:
    return grid.dealias_mask if enabled else None


def _masked_fft(grid: TorusGrid, values: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    """Transform a pointwise product and truncate it in one pass."""
    hat = grid.fft(values)
    if mask is not None:
        hat *= mask
    return hat


def _advect(grid: TorusGrid, v: np.ndarray, field: np.ndarray, dealias: bool) -> np.ndarray:
    """(v . grad) field for a component stack; product dealiased."""
    jac = jacobian_values(grid, field)
    out = np.zeros_like(field)
    spatial = (slice(None),) * grid.dim
    for i in range(grid.dim):
        out += v[i] * jac[(Ellipsis, i) + spatial]
    return _dealias(grid, out, dealias)


def _div_rows_hat(grid: TorusGrid, mat_hat: np.ndarray) -> np.ndarray:
    """(div G)_i = d_j G^{ji} as the mode sum sum_j i k_j Ghat^{ji}."""
    return np.einsum("j...,ji...->i...", 1j * grid.k, mat_hat)


def _div_rows(grid: TorusGrid, mat: np.ndarray) -> np.ndarray:
    """(div G)_i = d_j G^{ji}."""
    return grid.ifft(_div_rows_hat(grid, grid.fft(mat)))


def _h_values(h_ext: HExt | VectorField | None, grid: TorusGrid, t: float) -> np.ndarray | None:
    """Normalize the external-field argument to a (3,)+shape array or None."""
    if h_ext is None:
        return None
    if isinstance(h_ext, VectorField):
        return h_ext.values
    sampled = h_ext.evaluate(grid, t)
    return None if sampled is None else sampled.values


def lagrange_multiplier(
    M: VectorField, h_ext: HExt | VectorField | None = None, t: float = 0.0
) -> ScalarField:
    """Gamma(M) = |grad M|^2 - M . H_ext with |grad M|^2 = sum_{i,k} (d_i M_k)^2."""
    grid = M.grid
    jac = jacobian_values(grid, M.values)
    gamma = np.einsum("ki...,ki...->...", jac, jac)
    h = _h_values(h_ext, grid, t)
    if h is not None:
        gamma = gamma - np.einsum("k...,k...->...", M.values, h)
    return ScalarField(grid, gamma)


def _llg_hat(
    grid: TorusGrid,
    v: np.ndarray | None,
    m: np.ndarray,
    jac_m: np.ndarray,
    lap_m: np.ndarray,
    h: np.ndarray | None,
    mask: np.ndarray | None,
) -> np.ndarray:
    """Hat of every magnetization tendency term except the stiff Delta M."""
    heff = lap_m if h is None else lap_m + h
    gamma = np.einsum("ki...,ki...->...", jac_m, jac_m)
    if h is not None:
        gamma = gamma - np.einsum("k...,k...->...", m, h)
    combo = -np.cross(m, heff, axis=0)
    combo += gamma[np.newaxis] * m
    if v is not None:
        combo -= np.einsum("a...,ka...->k...", v, jac_m)
    out = _masked_fft(grid, combo, mask)
    if h is not None:
        out += grid.fft(h)
    return out


def llg_explicit(
    v: VectorField | None,
    M: VectorField,
    h_ext: HExt | VectorField | None = None,
    t: float = 0.0,
    dealias: bool = True,
) -> VectorField:
    """All magnetization tendency terms except the stiff Delta M."""
    grid = M.grid
    h = _h_values(h_ext, grid, t)
    m_hat = grid.fft(M.values)
    jac_m = jacobian_from_hat(grid, m_hat)
    lap_m = grid.ifft(m_hat * (-grid.k_sq))
    vv = None if v is None else v.values
    hat = _llg_hat(grid, vv, M.values, jac_m, lap_m, h, _mask(grid, dealias))
    return VectorField(grid, grid.ifft(hat))


def llg_rhs(
    v: VectorField | None,
    M: VectorField,
    h_ext: HExt | VectorField | None = None,
    t: float = 0.0,
    dealias: bool = True,
) -> VectorField:
    """-v.grad M + Delta M + H + Gamma(M) M - M x (Delta M + H)."""
    grid = M.grid
    h = _h_values(h_ext, grid, t)
    m_hat = grid.fft(M.values)
    jac_m = jacobian_from_hat(grid, m_hat)
    lap_hat = m_hat * (-grid.k_sq)
    lap_m = grid.ifft(lap_hat)
    vv = None if v is None else v.values
    hat = _llg_hat(grid, vv, M.values, jac_m, lap_m, h, _mask(grid, dealias)) + lap_hat
    return VectorField(grid, grid.ifft(hat))


def ericksen_stress_div(M: VectorField, dealias: bool = True) -> VectorField:
    """Components d_j (d_i M_k d_j M_k) of div(grad M (.) grad M)."""
    grid = M.grid
    jac = jacobian_values(grid, M.values)  # jac[k, i] = d_i M_k
    sigma = np.einsum("ki...,kj...->ij...", jac, jac)
    hat = _masked_fft(grid, sigma, _mask(grid, dealias))
    return VectorField(grid, grid.ifft(_div_rows_hat(grid, hat)))


def elastic_stress_div(F: MatrixField, dealias: bool = True) -> VectorField:
    """Components d_j (F^{ik} F^{jk}) of div(F F^T)."""
    grid = F.grid
    tau = np.einsum("ik...,jk...->ij...", F.values, F.values)
    hat = _masked_fft(grid, tau, _mask(grid, dealias))
    return VectorField(grid, grid.ifft(_div_rows_hat(grid, hat)))


def _grad_h_transpose_m(
    grid: TorusGrid, h: np.ndarray, M: np.ndarray, dealias: bool
) -> np.ndarray:
    """((grad H)^T M)_i = (d_i H_k) M_k."""
    jac = jacobian_values(grid, h)  # jac[k, i] = d_i H_k
    out = np.einsum("ki...,k...->i...", jac, M)
    return _dealias(grid, out, dealias)


def _momentum_hat_A(
    grid: TorusGrid,
    v: np.ndarray,
    f: np.ndarray,
    m: np.ndarray,
    jac_v: np.ndarray,
    jac_m: np.ndarray,
    h: np.ndarray | None,
    mask: np.ndarray | None,
) -> np.ndarray:
    """Unprojected hat of -v.grad v - div(grad M (.) grad M) + div(F F^T) + (grad H)^T M."""
    vec = -np.einsum("j...,ij...->i...", v, jac_v)
    if h is not None:
        jac_h = jacobian_values(grid, h)
        vec += np.einsum("ki...,k...->i...", jac_h, m)
    stress = np.einsum("ik...,jk...->ij...", f, f)
    stress -= np.einsum("ki...,kj...->ij...", jac_m, jac_m)
    return _masked_fft(grid, vec, mask) + _div_rows_hat(
        grid, _masked_fft(grid, stress, mask)
    )


def momentum_explicit_A(
    v: VectorField,
    F: MatrixField,
    M: VectorField,
    h_ext: HExt | VectorField | None = None,
    t: float = 0.0,
    dealias: bool = True,
) -> VectorField:
    """Leray[-v.grad v - div(grad M (.) grad M) + div(F F^T) + (grad H)^T M]."""
    grid = v.grid
    h = _h_values(h_ext, grid, t)
    jac_v = jacobian_values(grid, v.values)
    jac_m = jacobian_values(grid, M.values)
    hat = _momentum_hat_A(
        grid, v.values, F.values, M.values, jac_v, jac_m, h, _mask(grid, dealias)
    )
    return VectorField(grid, grid.ifft(leray_hat(grid, hat)))


def momentum_rhs_A(
    v: VectorField,
    F: MatrixField,
    M: VectorField,
    h_ext: HExt | VectorField | None = None,
    nu: float = 1.0,
    t: float = 0.0,
    dealias: bool = True,
) -> VectorField:
    """Full projected momentum tendency of formulation A, including nu Delta v."""
    grid = v.grid
    h = _h_values(h_ext, grid, t)
    v_hat = grid.fft(v.values)
    jac_v = jacobian_from_hat(grid, v_hat)
    jac_m = jacobian_values(grid, M.values)
    hat = _momentum_hat_A(
        grid, v.values, F.values, M.values, jac_v, jac_m, h, _mask(grid, dealias)
    )
    hat += nu * (-grid.k_sq) * v_hat
    return VectorField(grid, grid.ifft(leray_hat(grid, hat)))


def _deformation_hat(
    grid: TorusGrid,
    v: np.ndarray,
    f: np.ndarray,
    jac_v: np.ndarray,
    jac_f: np.ndarray,
    mask: np.ndarray | None,
) -> np.ndarray:
    """Hat of the nonstiff deformation tendency -v.grad F + (grad v) F."""
    combo = np.einsum("ik...,kj...->ij...", jac_v, f)
    combo -= np.einsum("a...,ija...->ij...", v, jac_f)
    return _masked_fft(grid, combo, mask)


def deformation_rhs(
    v: VectorField, F: MatrixField, kappa: float = 0.0, dealias: bool = True
) -> MatrixField:
    """-v.grad F + (grad v) F + kappa Delta F."""
    grid = v.grid
    jac_v = jacobian_values(grid, v.values)  # jac_v[i, j] = d_j v^i = (grad v)_{ij}
    f_hat = grid.fft(F.values)
    jac_f = jacobian_from_hat(grid, f_hat)
    hat = _deformation_hat(grid, v.values, F.values, jac_v, jac_f, _mask(grid, dealias))
    if kappa != 0.0:
        hat += kappa * (-grid.k_sq) * f_hat
    return MatrixField(grid, grid.ifft(hat))


def _g_values(grid: TorusGrid, g_vals: np.ndarray) -> np.ndarray:
    """g(G) = (I+G)^{-1} (I+G)^{-T} - I + G + G^T on raw (d, d) + shape values."""
    a = g_vals.copy()
    for i in range(grid.dim):
        a[i, i] += 1.0
    b = inverse_values(grid, a, "g_of_G")
    out = np.einsum("ik...,jk...->ij...", b, b)
    for i in range(grid.dim):
        out[i, i] -= 1.0
    out += g_vals
    out += np.swapaxes(g_vals, 0, 1)
    return out


def g_of_G(G: MatrixField) -> MatrixField:
    """g(G) = (I+G)^{-1} (I+G)^{-T} - I + G + G^T by exact pointwise algebra.

    Requires min |det(I+G)| >= 0.1; g(G) = O(|G|^2) for small G.
    """
    return MatrixField(G.grid, _g_values(G.grid, G.values))


def _momentum_hat_B(
    grid: TorusGrid,
    v: np.ndarray,
    psi_hat: np.ndarray,
    jac_v: np.ndarray,
    jac_psi: np.ndarray,
    jac_m: np.ndarray,
    mask: np.ndarray | None,
) -> np.ndarray:
    """Unprojected hat of -Delta psi - v.grad v + div g(grad psi) - div(grad M (.) grad M)."""
    vec = -np.einsum("j...,ij...->i...", v, jac_v)
    stress = _g_values(grid, jac_psi)
    stress -= np.einsum("ki...,kj...->ij...", jac_m, jac_m)
    hat = _masked_fft(grid, vec, mask) + _div_rows_hat(
        grid, _masked_fft(grid, stress, mask)
    )
    hat += grid.k_sq * psi_hat
    return hat


def momentum_explicit_B(
    v: VectorField, psi: VectorField, M: VectorField, dealias: bool = True
) -> VectorField:
    """Leray[-Delta psi - v.grad v + div g(grad psi) - div(grad M (.) grad M)]."""
    grid = v.grid
    psi_hat = grid.fft(psi.values)
    jac_v = jacobian_values(grid, v.values)
    jac_psi = jacobian_from_hat(grid, psi_hat)
    jac_m = jacobian_values(grid, M.values)
    hat = _momentum_hat_B(
        grid, v.values, psi_hat, jac_v, jac_psi, jac_m, _mask(grid, dealias)
    )
    return VectorField(grid, grid.ifft(leray_hat(grid, hat)))


def momentum_rhs_B(
    v: VectorField,
    psi: VectorField,
    M: VectorField,
    nu: float = 1.0,
    dealias: bool = True,
) -> VectorField:
    """Full projected momentum tendency of formulation B (external field zero)."""
    grid = v.grid
    psi_hat = grid.fft(psi.values)
    v_hat = grid.fft(v.values)
    jac_v = jacobian_from_hat(grid, v_hat)
    jac_psi = jacobian_from_hat(grid, psi_hat)
    jac_m = jacobian_values(grid, M.values)
    hat = _momentum_hat_B(
        grid, v.values, psi_hat, jac_v, jac_psi, jac_m, _mask(grid, dealias)
    )
    hat += nu * (-grid.k_sq) * v_hat
    return VectorField(grid, grid.ifft(leray_hat(grid, hat)))


def psi_rhs(v: VectorField, psi: VectorField, dealias: bool = True) -> VectorField:
    """-v - v.grad psi."""
    grid = v.grid
    out = -v.values - _advect(grid, v.values, psi.values, dealias)
    return VectorField(grid, out)


def _tendency_hats_A(
    grid: TorusGrid,
    v: np.ndarray,
    f: np.ndarray,
    m: np.ndarray,
    h: np.ndarray | None,
    mask: np.ndarray | None,
    state_hats: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """All nonstiff tendency hats of formulation A with shared transforms.

    Returns ((vhat, Fhat, Mhat), (dv_hat, dF_hat, dM_hat)); dv_hat is not
    Leray-projected and no stiff diffusion term is included. state_hats,
    when supplied, must be the transforms of (v, f, m) and skips
    recomputing them.
    """
    if state_hats is None:
        v_hat, f_hat, m_hat = grid.fft(v), grid.fft(f), grid.fft(m)
    else:
        v_hat, f_hat, m_hat = state_hats
    jac_v = jacobian_from_hat(grid, v_hat)
    jac_f = jacobian_from_hat(grid, f_hat)
    jac_m = jacobian_from_hat(grid, m_hat)
    lap_m = grid.ifft(m_hat * (-grid.k_sq))
    dv = _momentum_hat_A(grid, v, f, m, jac_v, jac_m, h, mask)
    df = _deformation_hat(grid, v, f, jac_v, jac_f, mask)
    dm = _llg_hat(grid, v, m, jac_m, lap_m, h, mask)
    return (v_hat, f_hat, m_hat), (dv, df, dm)


def _tendency_hats_B(
    grid: TorusGrid,
    v: np.ndarray,
    psi: np.ndarray,
    m: np.ndarray,
    mask: np.ndarray | None,
    state_hats: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """All nonstiff tendency hats of formulation B with shared transforms.

    Returns ((vhat, psihat, Mhat), (dv_hat, dpsi_hat, dM_hat)); dv_hat is
    not Leray-projected and no stiff diffusion term is included.
    """
    if state_hats is None:
        v_hat, psi_hat, m_hat = grid.fft(v), grid.fft(psi), grid.fft(m)
    else:
        v_hat, psi_hat, m_hat = state_hats
    jac_v = jacobian_from_hat(grid, v_hat)
    jac_psi = jacobian_from_hat(grid, psi_hat)
    jac_m = jacobian_from_hat(grid, m_hat)
    lap_m = grid.ifft(m_hat * (-grid.k_sq))
    dv = _momentum_hat_B(grid, v, psi_hat, jac_v, jac_psi, jac_m, mask)
    adv_psi = np.einsum("a...,ka...->k...", v, jac_psi)
    dpsi = -v_hat - _masked_fft(grid, adv_psi, mask)
    dm = _llg_hat(grid, v, m, jac_m, lap_m, None, mask)
    return (v_hat, psi_hat, m_hat), (dv, dpsi, dm)


def rhs_A(state: StateA, nu: float, kappa: float = 0.0,
          h_ext: HExt | None = None, dealias: bool = True) -> RhsA:
    """All evaluated tendencies of formulation A at the state's time."""
    grid = state.grid
    h = _h_values(h_ext, grid, state.t)
    hats, (dv, df, dm) = _tendency_hats_A(
        grid, state.v.values, state.F.values, state.M.values, h, _mask(grid, dealias)
    )
    v_hat, f_hat, m_hat = hats
    dv = leray_hat(grid, dv + nu * (-grid.k_sq) * v_hat)
    if kappa != 0.0:
        df = df + kappa * (-grid.k_sq) * f_hat
    dm = dm + (-grid.k_sq) * m_hat
    return RhsA(
        dv=VectorField(grid, grid.ifft(dv)),
        dF=MatrixField(grid, grid.ifft(df)),
        dM=VectorField(grid, grid.ifft(dm)),
    )


def rhs_B(state: StateB, nu: float, dealias: bool = True) -> RhsB:
    """All evaluated tendencies of formulation B (external field zero)."""
    grid = state.grid
    hats, (dv, dpsi, dm) = _tendency_hats_B(
        grid, state.v.values, state.psi.values, state.M.values, _mask(grid, dealias)
    )
    v_hat, _, m_hat = hats
    dv = leray_hat(grid, dv + nu * (-grid.k_sq) * v_hat)
    dm = dm + (-grid.k_sq) * m_hat
    return RhsB(
        dv=VectorField(grid, grid.ifft(dv)),
        dpsi=VectorField(grid, grid.ifft(dpsi)),
        dM=VectorField(grid, grid.ifft(dm)),
    )
