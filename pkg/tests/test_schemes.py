"""Mollified magnetization solver and the staged Picard iteration."""

from __future__ import annotations

import numpy as np
import pytest

from elastomag.energetics import grad_sobolev_norm_sq
from elastomag.fields import (
    HExt,
    PhysParams,
    StateA,
    identity_matrix_field,
    renormalize_M,
)
from elastomag.harness import generate_initial_data
from elastomag.schemes import (
    mollifier_convergence_study,
    picard_convergence_report,
    picard_iterate,
    picard_metric,
    solve_llg_given_v,
)
from elastomag.spectral import MatrixField, TorusGrid, VectorField, truncate
from elastomag.timestepper import IntegratorConfig, run

from conftest import vector

PARAMS = PhysParams(nu=1.0, kappa=0.0, h_ext=HExt())


def constant_m(grid: TorusGrid) -> VectorField:
    vals = np.zeros((3,) + grid.shape)
    vals[2] = 1.0
    return VectorField(grid, vals)


def circle_m(grid: TorusGrid) -> VectorField:
    vals = np.zeros((3,) + grid.shape)
    vals[0] = np.cos(grid.x[0])
    vals[1] = np.sin(grid.x[0])
    return VectorField(grid, vals)


def perturbed_m(grid: TorusGrid, amplitude: float, band: int, seed: int) -> VectorField:
    """Unit magnetization near the north pole with a random trig perturbation."""
    rng = np.random.default_rng(seed)
    vals = np.zeros((3,) + grid.shape)
    vals[2] = 1.0
    phases = grid.x
    for c in range(3):
        for _ in range(3):
            k = rng.integers(-band, band + 1, size=grid.dim)
            ph = rng.uniform(0.0, 2.0 * np.pi)
            arg = sum(int(k[i]) * phases[i] for i in range(grid.dim)) + ph
            vals[c] += amplitude * np.cos(arg)
    return renormalize_M(VectorField(grid, vals))


def steady_circle_state(grid: TorusGrid) -> StateA:
    zero = np.zeros(grid.shape)
    return StateA(
        t=0.0,
        v=vector(grid, zero, zero),
        F=identity_matrix_field(grid),
        M=circle_m(grid),
    )


class TestSolveLlgGivenV:
    def test_rejects_non_unit_initial_data(self, grid2: TorusGrid) -> None:
        bad = VectorField(grid2, 1.5 * constant_m(grid2).values)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            solve_llg_given_v(None, bad, None, 2.0, 2, cfg)

    def test_rejects_cutoff_beyond_dealias_band(self, grid2: TorusGrid) -> None:
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            solve_llg_given_v(None, constant_m(grid2), None, grid2.n / 3.0 + 1.0, 2, cfg)

    def test_constant_magnetization_is_fixed(self, grid2: TorusGrid) -> None:
        m0 = constant_m(grid2)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
        out = solve_llg_given_v(None, m0, None, 2.0, 2, cfg)
        assert np.max(np.abs(out.M_final.values - m0.values)) <= 1e-14

    def test_harmonic_map_profile_is_stationary(self, grid2: TorusGrid) -> None:
        m0 = circle_m(grid2)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.5, snapshot_every=100)
        out = solve_llg_given_v(None, m0, None, 4.0, 2, cfg)
        deviation = max(
            np.max(np.abs(m.values - m0.values)) for _, m in out.trajectory
        )
        assert deviation <= 1e-8

    def test_resolving_cutoff_matches_native_projection(self, grid2: TorusGrid) -> None:
        m0 = perturbed_m(grid2, 1e-3, band=1, seed=7)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.1)
        with_ball = solve_llg_given_v(None, m0, None, grid2.n / 3.0, 2, cfg)
        native = solve_llg_given_v(None, m0, None, None, 2, cfg)
        diff = np.max(np.abs(with_ball.M_final.values - native.M_final.values))
        assert diff <= 1e-10

    def test_initial_energy_is_truncated_gradient_norm(self, grid2: TorusGrid) -> None:
        m0 = perturbed_m(grid2, 0.15, band=3, seed=2)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        out = solve_llg_given_v(None, m0, None, 2.0, 2, cfg)
        projected = truncate(m0, 2.0)
        assert np.array_equal(out.M0_truncated.values, projected.values)
        assert out.e_eps[0] == pytest.approx(grad_sobolev_norm_sq(projected, 2), rel=1e-13)
        assert out.e_eps[0] < out.e0
        assert out.e0 == pytest.approx(grad_sobolev_norm_sq(m0, 2), rel=1e-13)

    def test_series_covers_the_horizon(self, grid2: TorusGrid) -> None:
        cfg = IntegratorConfig(dt=1e-3, t_end=0.02, diag_every=5)
        out = solve_llg_given_v(None, constant_m(grid2), None, 2.0, 2, cfg)
        assert out.times[0] == 0.0
        assert out.times[-1] == pytest.approx(0.02, rel=1e-12)
        assert len(out.times) == len(out.e_eps) == len(out.d_eps)


class TestMollifierStudy:
    def test_rejects_non_increasing_cutoffs(self, grid2: TorusGrid) -> None:
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            mollifier_convergence_study([4.0, 4.0], constant_m(grid2), None, 2, cfg)

    def test_single_cutoff_gives_degenerate_report(self, grid2: TorusGrid) -> None:
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        report = mollifier_convergence_study([2.0], constant_m(grid2), None, 2, cfg)
        assert report.diffs == []
        assert report.drop_factors == []
        assert len(report.runs) == 1

    def test_differences_drop_as_cutoff_doubles(self) -> None:
        grid = TorusGrid(dim=2, n=32)
        m0 = perturbed_m(grid, 1e-2, band=3, seed=5)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.2)
        report = mollifier_convergence_study([2.0, 4.0, 8.0], m0, None, 2, cfg)
        assert report.diffs[0] > report.diffs[1]
        assert report.drop_factors[0] >= 4.0
        assert report.bound_ok

    def test_energy_stays_below_bootstrap_ceiling(self) -> None:
        grid = TorusGrid(dim=2, n=32)
        m0 = perturbed_m(grid, 1e-2, band=3, seed=5)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.1)
        report = mollifier_convergence_study([2.0, 8.0], m0, None, 2, cfg)
        for one_run in report.runs:
            assert one_run.sup_e_eps <= 2.2 * one_run.e0


class TestPicardGuards:
    def test_rejects_non_div_free_velocity(self, grid2: TorusGrid) -> None:
        state = steady_circle_state(grid2)
        bad_v = vector(grid2, np.sin(grid2.x[0]), np.zeros(grid2.shape))
        bad = StateA(t=0.0, v=bad_v, F=state.F, M=state.M)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            picard_iterate(bad, PARAMS, 0.01, 1, cfg, 2)

    def test_rejects_non_unit_determinant(self, grid2: TorusGrid) -> None:
        state = steady_circle_state(grid2)
        bad = StateA(
            t=0.0,
            v=state.v,
            F=MatrixField(grid2, 1.1 * state.F.values),
            M=state.M,
        )
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            picard_iterate(bad, PARAMS, 0.01, 1, cfg, 2)

    def test_rejects_non_unit_magnetization(self, grid2: TorusGrid) -> None:
        state = steady_circle_state(grid2)
        bad = StateA(
            t=0.0, v=state.v, F=state.F, M=VectorField(grid2, 1.2 * state.M.values)
        )
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            picard_iterate(bad, PARAMS, 0.01, 1, cfg, 2)

    def test_rejects_unknown_variant(self, grid2: TorusGrid) -> None:
        cfg = IntegratorConfig(dt=1e-3, t_end=0.01)
        with pytest.raises(ValueError):
            picard_iterate(
                steady_circle_state(grid2), PARAMS, 0.01, 1, cfg, 2, variant="exotic"
            )


class TestPicardIteration:
    def test_iterate_zero_is_the_initial_data(self, grid2: TorusGrid) -> None:
        init = steady_circle_state(grid2)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.02)
        out = picard_iterate(init, PARAMS, 0.02, 1, cfg, 2)
        first = out.states_at_T[0]
        assert first.t == 0.02
        assert np.array_equal(first.v.values, init.v.values)
        assert np.array_equal(first.F.values, init.F.values)
        assert np.array_equal(first.M.values, init.M.values)

    def test_steady_state_iterates_stay_put(self, grid2: TorusGrid) -> None:
        init = steady_circle_state(grid2)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
        out = picard_iterate(init, PARAMS, 0.05, 3, cfg, 2)
        for state in out.states_at_T:
            assert np.max(np.abs(state.v.values - init.v.values)) <= 1e-10
            assert np.max(np.abs(state.F.values - init.F.values)) <= 1e-10
            assert np.max(np.abs(state.M.values - init.M.values)) <= 1e-10

    def test_small_data_contracts(self, grid2: TorusGrid) -> None:
        init = generate_initial_data(grid2, "flow_map_F", "A", amplitude=1e-2, seed=5)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
        out = picard_iterate(init, PARAMS, 0.05, 5, cfg, 2)
        assert all(b < a for a, b in zip(out.diffs, out.diffs[1:]))
        assert all(r <= 0.5 for r in out.ratios)
        assert max(out.div_v_res) <= 1e-11
        assert max(out.sphere_res) <= 1e-7

    def test_transported_variant_also_contracts(self, grid2: TorusGrid) -> None:
        init = generate_initial_data(grid2, "flow_map_F", "A", amplitude=1e-2, seed=5)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
        out = picard_iterate(init, PARAMS, 0.05, 3, cfg, 2, variant="transported")
        assert out.variant == "transported"
        assert all(b < a for a, b in zip(out.diffs, out.diffs[1:]))

    def test_metric_basics(self, grid2: TorusGrid) -> None:
        a = steady_circle_state(grid2)
        b = generate_initial_data(grid2, "flow_map_F", "A", amplitude=1e-2, seed=1)
        assert picard_metric(a, a, 2) == 0.0
        assert picard_metric(a, b, 2) == pytest.approx(picard_metric(b, a, 2), rel=1e-12)
        assert picard_metric(a, b, 2) > 0.0


class TestConvergenceReport:
    def test_steady_run_distance_is_tiny(self, grid2: TorusGrid) -> None:
        init = steady_circle_state(grid2)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
        out = picard_iterate(init, PARAMS, 0.05, 3, cfg, 2)
        reference = StateA(t=0.05, v=init.v, F=init.F, M=init.M)
        report = picard_convergence_report(out, reference, 2)
        assert report.distance <= 1e-10
        assert report.bound_B == pytest.approx(2.0 * out.e0, rel=1e-15)
        assert report.bound_ok

    def test_small_data_limit_matches_monolithic_solver(self, grid2: TorusGrid) -> None:
        init = generate_initial_data(grid2, "flow_map_F", "A", amplitude=1e-2, seed=5)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
        out = picard_iterate(init, PARAMS, 0.05, 5, cfg, 2)
        mono = run(init, PARAMS, cfg)
        assert mono.status == "completed"
        report = picard_convergence_report(out, mono.state, 2)
        assert report.distance <= 1e-5
        assert report.bound_ok
