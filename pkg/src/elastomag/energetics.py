"""Sobolev norms by multi-index sum and every monitored functional.

The H^s norm follows the multi-index definition

    ||f||^2_{H^s} = sum_{|m| <= s} ||d^m f||^2_{L^2},

computed in one pass over modes with the multiplier
sum_{|m| <= s} prod_i k_i^{2 m_i} (not the equivalent (1+|k|^2)^s weight),
which makes the multi-index count K_s and the delta formula literal.

Monitored functionals:

    basic energy  (1/2)(||v||^2 + ||F||^2 + ||grad M||^2)_{L^2}
    E_s = ||v||^2_{H^s} + ||F||^2_{H^s} + ||grad M||^2_{H^s}
    D_s = nu ||grad v||^2_{H^s} + ||Delta M||^2_{H^s}
    E_glob = delta^2 ||v||^2_{H^s} + ||grad M||^2_{H^s} + delta ||grad psi||^2_{H^s}
             + ||dt v||^2_{H^{s-2}} + ||grad dt psi||^2_{H^{s-2}}
    D_glob = (1/2) delta^2 nu ||grad v||^2_{H^s} + delta^2 nu ||grad dt psi||^2_{H^{s-2}}
             + 2 ||Delta M||^2_{H^s} + (delta/(2 nu)) ||grad psi||^2_{H^s}
             + nu ||grad dt v||^2_{H^{s-2}}

The time derivatives entering the global functionals are the instantaneous
right-hand-side evaluations (supplied as RhsB), never finite differences of
the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .dynamics import RhsA, RhsB, rhs_A, rhs_B
from .fields import (
    F_to_G,
    PhysParams,
    StateA,
    StateB,
    curl_residual,
    det_field,
    det_values,
    grad_potential,
    identity_values,
    sphere_residual,
    state_B_to_A,
)
from .spectral import Field, ScalarField, TorusGrid, divergence_values

_WEIGHT_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def multiindices(d: int, s: int) -> list[tuple[int, ...]]:
    """All m in N^d with |m| <= s, in lexicographic order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int) -> None:
        if len(prefix) == d:
            out.append(prefix)
            return
        for mi in range(remaining + 1):
            rec(prefix + (mi,), remaining - mi)

    rec((), s)
    return sorted(out)


def multiindex_count(d: int, s: int) -> int:
    """K_s: the number of multi-indices m in N^d with |m| <= s."""
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    return math.comb(s + d, d)


def delta_default(nu: float, c0_hat: float, k_s: int) -> float:
    """min(1/4, nu^2 / (16 c0_hat^2 K_s^2))."""
    if nu <= 0 or c0_hat <= 0 or k_s <= 0:
        raise ValueError("delta_default needs positive arguments")
    return min(0.25, nu**2 / (16.0 * c0_hat**2 * k_s**2))


def sobolev_weight(grid: TorusGrid, s: int) -> np.ndarray:
    """Mode multiplier sum_{|m| <= s} prod_i k_i^{2 m_i}, cached per (grid, s)."""
    if s < 0:
        raise ValueError(f"Sobolev order must be >= 0, got {s}")
    key = (grid.dim, grid.n, s)
    if key not in _WEIGHT_CACHE:
        weight = np.zeros(grid.hat_shape)
        for m in multiindices(grid.dim, s):
            term = np.ones(grid.hat_shape)
            for i, mi in enumerate(m):
                if mi > 0:
                    term = term * grid.k[i] ** (2 * mi)
            weight += term
        _WEIGHT_CACHE[key] = weight
    return _WEIGHT_CACHE[key]


def _weighted_mode_sum(grid: TorusGrid, values: np.ndarray, weight: np.ndarray) -> float:
    hat = grid.fft(values)
    total = np.sum(weight * grid.mode_weight * (hat.real**2 + hat.imag**2))
    return float(grid.volume / grid.n ** (2 * grid.dim) * total)


def sobolev_norm_sq(f: Field, s: int) -> float:
    """||f||^2_{H^s} summed over components."""
    grid = f.grid
    return _weighted_mode_sum(grid, f.values, sobolev_weight(grid, s))


def grad_sobolev_norm_sq(f: Field, s: int) -> float:
    """||grad f||^2_{H^s} via the |k|^2-weighted mode sum (no gradient storage)."""
    grid = f.grid
    return _weighted_mode_sum(grid, f.values, sobolev_weight(grid, s) * grid.k_sq)


def laplacian_sobolev_norm_sq(f: Field, s: int) -> float:
    """||Delta f||^2_{H^s} via the |k|^4-weighted mode sum."""
    grid = f.grid
    return _weighted_mode_sum(grid, f.values, sobolev_weight(grid, s) * grid.k_sq**2)


def l2_norm_sq_modes(f: Field) -> float:
    """||f||^2_{L^2} via the plain Parseval mode sum."""
    grid = f.grid
    return _weighted_mode_sum(grid, f.values, np.ones(grid.hat_shape))


def basic_energy(state: StateA | StateB) -> float:
    """(1/2)(||v||^2 + ||F||^2 + ||grad M||^2)_{L^2}; B states convert F on the fly."""
    a_state = state_B_to_A(state) if isinstance(state, StateB) else state
    return 0.5 * (
        l2_norm_sq_modes(a_state.v)
        + l2_norm_sq_modes(a_state.F)
        + grad_sobolev_norm_sq(a_state.M, 0)
    )


def local_functionals(state: StateA, nu: float, s: int) -> tuple[float, float]:
    """(E_s, D_s) of the primitive formulation."""
    e_s = (
        sobolev_norm_sq(state.v, s)
        + sobolev_norm_sq(state.F, s)
        + grad_sobolev_norm_sq(state.M, s)
    )
    d_s = nu * grad_sobolev_norm_sq(state.v, s) + laplacian_sobolev_norm_sq(state.M, s)
    return e_s, d_s


def global_functionals(
    state: StateB, rhs: RhsB, nu: float, s: int, delta: float
) -> tuple[float, float]:
    """(E_glob, D_glob) with dt v / dt psi supplied as evaluated tendencies."""
    if s < 2:
        raise ValueError(f"global functionals need s >= 2, got {s}")
    e_glob = (
        delta**2 * sobolev_norm_sq(state.v, s)
        + grad_sobolev_norm_sq(state.M, s)
        + delta * grad_sobolev_norm_sq(state.psi, s)
        + sobolev_norm_sq(rhs.dv, s - 2)
        + grad_sobolev_norm_sq(rhs.dpsi, s - 2)
    )
    d_glob = (
        0.5 * delta**2 * nu * grad_sobolev_norm_sq(state.v, s)
        + delta**2 * nu * grad_sobolev_norm_sq(rhs.dpsi, s - 2)
        + 2.0 * laplacian_sobolev_norm_sq(state.M, s)
        + delta / (2.0 * nu) * grad_sobolev_norm_sq(state.psi, s)
        + nu * grad_sobolev_norm_sq(rhs.dv, s - 2)
    )
    return e_glob, d_glob


# --------------------------------------------------------------------------
# Constraint residual bundle and the diagnostic record
# --------------------------------------------------------------------------


def constraint_bundle(state: StateA | StateB, s: int = 2) -> dict[str, float]:
    """All geometric residuals of one state.

    Formulation A: det_res and curl_res come from F (via G = F^{-1} - I);
    the div(psi) identity is not defined and reported as 0. Formulation B:
    curl_res is that of grad(psi) (near zero by construction), det_res is
    the drift of det(I + grad psi)^{-1} from 1, trG_vs_divpsi_res compares
    tr(grad psi) against div(psi) through two code paths, and
    key_structure_ratio = ||tr G||_{H^s} / ||grad psi||^2_{H^s}.
    """
    grid = state.grid
    out: dict[str, float] = {}
    out["sphere_res"] = sphere_residual(state.M)
    out["div_v_res"] = float(np.max(np.abs(divergence_values(grid, state.v.values))))
    if isinstance(state, StateA):
        out["det_res"] = float(np.max(np.abs(det_field(state.F).values - 1.0)))
        out["curl_res"] = curl_residual(F_to_G(state.F))
        out["trG_vs_divpsi_res"] = 0.0
    else:
        G = grad_potential(state.psi)
        det_ig = det_values(grid, G.values + identity_values(grid))
        out["det_res"] = float(np.max(np.abs(1.0 / det_ig - 1.0)))
        out["curl_res"] = curl_residual(G)
        trace = np.zeros(grid.shape)
        for j in range(grid.dim):
            trace += G.values[j, j]
        div_psi = divergence_values(grid, state.psi.values)
        out["trG_vs_divpsi_res"] = float(np.max(np.abs(div_psi - trace)))
        tr_norm = math.sqrt(sobolev_norm_sq(ScalarField(grid, trace), s))
        gpsi_sq = grad_sobolev_norm_sq(state.psi, s)
        out["key_structure_ratio"] = tr_norm / gpsi_sq if gpsi_sq > 0 else 0.0
    return out


@dataclass(frozen=True)
class DiagnosticRecord:
    """One time-stamped row of energies, dissipation rates, and residuals.

    All norms are squared and dimensionless; every entry is finite and the
    residual/squared-norm entries are >= 0. Serializes as one CSV row in
    field order with 17 significant digits.
    """

    t: float
    e_basic: float
    e_s: float
    d_s: float
    e_global: float
    d_global: float
    dt_v_norm: float
    dt_psi_norm: float
    sphere_res: float
    det_res: float
    curl_res: float
    div_v_res: float
    trG_vs_divpsi_res: float

    def to_csv_row(self) -> str:
        return ",".join(format(getattr(self, f.name), ".17g") for f in dataclass_fields(self))


CSV_HEADER = ",".join(f.name for f in dataclass_fields(DiagnosticRecord))


def diagnostic_record(
    state: StateA | StateB,
    params: PhysParams,
    s: int,
    delta: float,
    dealias: bool = True,
    rhs: RhsA | RhsB | None = None,
) -> DiagnosticRecord:
    """Assemble the full diagnostic row for one state.

    The tendency norms use instantaneous RHS evaluations; pass rhs to reuse
    an evaluation already computed by the caller.
    """
    bundle = constraint_bundle(state, s)
    if isinstance(state, StateA):
        if rhs is None:
            rhs = rhs_A(state, params.nu, params.kappa, params.h_ext, dealias)
        e_s, d_s = local_functionals(state, params.nu, s)
        e_glob, d_glob = 0.0, 0.0
        dt_v = sobolev_norm_sq(rhs.dv, s - 2)
        dt_psi = 0.0
        e_b = basic_energy(state)
    else:
        if rhs is None:
            rhs = rhs_B(state, params.nu, dealias)
        a_state = state_B_to_A(state)
        e_s, d_s = local_functionals(a_state, params.nu, s)
        e_glob, d_glob = global_functionals(state, rhs, params.nu, s, delta)
        dt_v = sobolev_norm_sq(rhs.dv, s - 2)
        dt_psi = grad_sobolev_norm_sq(rhs.dpsi, s - 2)
        e_b = basic_energy(a_state)
    return DiagnosticRecord(
        t=state.t,
        e_basic=e_b,
        e_s=e_s,
        d_s=d_s,
        e_global=e_glob,
        d_global=d_glob,
        dt_v_norm=dt_v,
        dt_psi_norm=dt_psi,
        sphere_res=bundle["sphere_res"],
        det_res=bundle["det_res"],
        curl_res=bundle["curl_res"],
        div_v_res=bundle["div_v_res"],
        trG_vs_divpsi_res=bundle["trG_vs_divpsi_res"],
    )
