"""Configuration, initial data, snapshot I/O, scenario driver, and the CLI."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import pytest

from elastomag.dynamics import momentum_rhs_A
from elastomag.energetics import CSV_HEADER, delta_default, multiindex_count
from elastomag.errors import ConfigError, SnapshotError
from elastomag.fields import HExt, StateA, StateB, det_values, sphere_residual
from elastomag.harness import (
    SimulationConfig,
    generate_initial_data,
    load_snapshot,
    run_simulation,
    write_snapshot,
)
from elastomag.harness.cli import main
from elastomag.spectral import TorusGrid, divergence_values


def tiny_config(tmp_path: Path, **overrides) -> SimulationConfig:
    base = {
        "dim": 2,
        "n": 8,
        "dt": 1e-3,
        "t_end": 3e-3,
        "initial_data": "random_small",
        "out_dir": str(tmp_path),
    }
    base.update(overrides)
    return SimulationConfig.from_dict(base)


def write_config(tmp_path: Path, name: str = "config.json", **overrides) -> Path:
    path = tmp_path / name
    payload = {
        "dim": 2,
        "n": 8,
        "dt": 1e-3,
        "t_end": 3e-3,
        "initial_data": "random_small",
        "out_dir": str(tmp_path),
    }
    payload.update(overrides)
    path.write_text(json.dumps(payload))
    return path


class TestConfig:
    def test_defaults(self) -> None:
        config = SimulationConfig.from_dict({})
        assert config.dim == 2
        assert config.n == 64
        assert config.formulation == "A"
        assert config.scheme == "imex2"
        assert config.delta == "auto"
        assert config.h_ext.is_zero

    def test_rejects_unknown_keys(self) -> None:
        with pytest.raises(ConfigError):
            SimulationConfig.from_dict({"viscosity": 1.0})

    def test_rejects_unknown_initial_data(self) -> None:
        with pytest.raises(ConfigError):
            SimulationConfig.from_dict({"initial_data": "vortex"})

    def test_missing_file_is_config_error(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            SimulationConfig.from_file(tmp_path / "absent.json")

    def test_malformed_json_is_config_error(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            SimulationConfig.from_file(path)

    def test_reformulation_requires_zero_field(self) -> None:
        with pytest.raises(ConfigError):
            SimulationConfig.from_dict(
                {"formulation": "B", "h_ext": [0.0, 0.0, 0.5]}
            )

    def test_snapshot_variant_needs_path(self) -> None:
        with pytest.raises(ConfigError):
            SimulationConfig.from_dict({"initial_data": "from_snapshot"})

    def test_auto_delta_resolution(self) -> None:
        config = SimulationConfig.from_dict({"nu": 1.0, "c0_hat": 1.0, "s": 2})
        expected = delta_default(1.0, 1.0, multiindex_count(2, 2))
        assert config.resolved_delta() == expected
        assert expected == pytest.approx(1.0 / 576.0, rel=1e-15)

    def test_numeric_delta_passes_through(self) -> None:
        config = SimulationConfig.from_dict({"delta": 0.01})
        assert config.resolved_delta() == 0.01

    def test_overrides_revalidate(self) -> None:
        config = SimulationConfig.from_dict({"h_ext": [0.0, 0.0, 0.5]})
        updated = config.with_overrides(seed=7)
        assert updated.seed == 7
        assert updated.nu == config.nu
        with pytest.raises(ConfigError):
            config.with_overrides(formulation="B")

    def test_dict_round_trip(self) -> None:
        config = SimulationConfig.from_dict(
            {"n": 16, "nu": 0.7, "h_ext": [0.1, 0.0, 0.2], "delta": 0.05}
        )
        assert SimulationConfig.from_dict(config.to_dict()) == config

    def test_single_mode_field_round_trip(self) -> None:
        config = SimulationConfig.from_dict(
            {
                "h_ext": {
                    "type": "single_mode",
                    "amplitude": 0.3,
                    "wavevector": [1, -2],
                    "component": 1,
                    "omega": 2.0,
                }
            }
        )
        assert SimulationConfig.from_dict(config.to_dict()) == config


class TestInitialData:
    @pytest.mark.parametrize("variant", ["zero_steady", "harmonic_map", "shear_F", "random_small", "flow_map_F"])
    @pytest.mark.parametrize("formulation", ["A", "B"])
    def test_generated_triples_satisfy_hypotheses(self, grid2, variant: str, formulation: str) -> None:
        state = generate_initial_data(grid2, variant, formulation, amplitude=1e-2, seed=3)
        assert np.max(np.abs(divergence_values(grid2, state.v.values))) <= 1e-11
        assert sphere_residual(state.M) <= 1e-14
        assert state.t == 0.0

    def test_flow_map_determinant(self, grid2) -> None:
        state = generate_initial_data(grid2, "flow_map_F", "A", amplitude=1e-2, seed=3)
        assert isinstance(state, StateA)
        assert np.max(np.abs(det_values(grid2, state.F.values) - 1.0)) <= 1e-8

    def test_determinism(self, grid2) -> None:
        first = generate_initial_data(grid2, "random_small", "A", amplitude=1e-2, seed=11)
        second = generate_initial_data(grid2, "random_small", "A", amplitude=1e-2, seed=11)
        assert np.array_equal(first.v.values, second.v.values)
        assert np.array_equal(first.F.values, second.F.values)
        assert np.array_equal(first.M.values, second.M.values)

    def test_zero_steady_is_exact(self, grid2) -> None:
        state = generate_initial_data(grid2, "zero_steady", "A")
        assert not state.v.values.any()
        eye = np.zeros((2, 2) + grid2.shape)
        eye[0, 0] = eye[1, 1] = 1.0
        assert np.array_equal(state.F.values, eye)
        assert np.array_equal(state.M.values[2], np.ones(grid2.shape))

    def test_harmonic_map_is_momentum_steady(self, grid2) -> None:
        state = generate_initial_data(grid2, "harmonic_map", "A")
        rhs = momentum_rhs_A(state.v, state.F, state.M, HExt(), nu=1.0, t=0.0)
        assert np.max(np.abs(rhs.values)) <= 1e-12

    def test_unknown_variant_rejected(self, grid2) -> None:
        with pytest.raises(ConfigError):
            generate_initial_data(grid2, "spiral", "A")


class TestSnapshot:
    def test_round_trip_is_bit_identical_A(self, grid2, tmp_path: Path) -> None:
        state = generate_initial_data(grid2, "flow_map_F", "A", amplitude=1e-2, seed=4)
        path = tmp_path / "state.snap"
        write_snapshot(state, path)
        loaded = load_snapshot(path)
        assert isinstance(loaded, StateA)
        assert loaded.t == state.t
        assert np.array_equal(loaded.v.values, state.v.values)
        assert np.array_equal(loaded.F.values, state.F.values)
        assert np.array_equal(loaded.M.values, state.M.values)

    def test_round_trip_is_bit_identical_B(self, grid2, tmp_path: Path) -> None:
        state = generate_initial_data(grid2, "random_small", "B", amplitude=1e-2, seed=4)
        path = tmp_path / "state.snap"
        write_snapshot(state, path)
        loaded = load_snapshot(path)
        assert isinstance(loaded, StateB)
        assert np.array_equal(loaded.psi.values, state.psi.values)

    def _write_valid(self, grid2, tmp_path: Path) -> Path:
        state = generate_initial_data(grid2, "zero_steady", "A")
        path = tmp_path / "state.snap"
        write_snapshot(state, path)
        return path

    def test_truncated_payload_names_the_field(self, grid2, tmp_path: Path) -> None:
        path = self._write_valid(grid2, tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(SnapshotError, match="'M'"):
            load_snapshot(path)

    def test_rejects_unsupported_dimension(self, grid2, tmp_path: Path) -> None:
        path = self._write_valid(grid2, tmp_path)
        raw = path.read_bytes()
        newline = raw.index(b"\n")
        header = json.loads(raw[:newline])
        header["dim"] = 4
        path.write_bytes(json.dumps(header).encode() + raw[newline:])
        with pytest.raises(SnapshotError, match="dim"):
            load_snapshot(path)

    def test_rejects_version_mismatch(self, grid2, tmp_path: Path) -> None:
        path = self._write_valid(grid2, tmp_path)
        raw = path.read_bytes()
        newline = raw.index(b"\n")
        header = json.loads(raw[:newline])
        header["format_version"] = 2
        path.write_bytes(json.dumps(header).encode() + raw[newline:])
        with pytest.raises(SnapshotError, match="format_version"):
            load_snapshot(path)

    def test_rejects_non_finite_payload(self, grid2, tmp_path: Path) -> None:
        path = self._write_valid(grid2, tmp_path)
        raw = path.read_bytes()
        newline = raw.index(b"\n")
        patched = raw[: newline + 1] + struct.pack("<d", float("nan")) + raw[newline + 9 :]
        path.write_bytes(patched)
        with pytest.raises(SnapshotError, match="non-finite"):
            load_snapshot(path)

    def test_rejects_trailing_bytes(self, grid2, tmp_path: Path) -> None:
        path = self._write_valid(grid2, tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(SnapshotError, match="trailing"):
            load_snapshot(path)


class TestRunSimulation:
    def test_writes_csv_with_full_precision(self, tmp_path: Path) -> None:
        config = tiny_config(tmp_path)
        artifacts = run_simulation(config)
        assert artifacts.result.status == "completed"
        lines = artifacts.csv_path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(artifacts.records)
        first_energy = float(lines[1].split(",")[1])
        assert first_energy == artifacts.records[0].e_basic

    def test_reproducible_csv_bytes(self, tmp_path: Path) -> None:
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        art_a = run_simulation(tiny_config(dir_a, seed=9))
        art_b = run_simulation(tiny_config(dir_b, seed=9))
        assert art_a.csv_path.read_bytes() == art_b.csv_path.read_bytes()

    def test_final_snapshot_restores_the_final_state(self, tmp_path: Path) -> None:
        config = tiny_config(tmp_path)
        artifacts = run_simulation(config)
        loaded = load_snapshot(artifacts.final_snapshot)
        assert np.array_equal(loaded.v.values, artifacts.result.state.v.values)
        assert loaded.t == artifacts.result.state.t


class TestCli:
    def test_missing_subcommand_is_usage_error(self, capsys) -> None:
        assert main([]) == 2
        capsys.readouterr()

    def test_missing_argument_is_usage_error(self, capsys) -> None:
        assert main(["run"]) == 2
        capsys.readouterr()

    def test_missing_config_file_is_usage_error(self, tmp_path: Path, capsys) -> None:
        assert main(["run", str(tmp_path / "none.json")]) == 2
        capsys.readouterr()

    def test_unknown_scenario_is_usage_error(self, tmp_path: Path, capsys) -> None:
        config = write_config(tmp_path)
        assert main(["scenario", "warp", str(config)]) == 2
        capsys.readouterr()

    def test_run_succeeds_and_writes_artifacts(self, tmp_path: Path, capsys) -> None:
        config = write_config(tmp_path)
        assert main(["run", str(config)]) == 0
        out = capsys.readouterr().out
        assert "status: completed" in out
        assert (tmp_path / "diagnostics.csv").exists()

    def test_quiet_suppresses_output(self, tmp_path: Path, capsys) -> None:
        config = write_config(tmp_path)
        assert main(["run", str(config), "--quiet"]) == 0
        assert capsys.readouterr().out == ""

    def test_seed_and_out_dir_overrides(self, tmp_path: Path, capsys) -> None:
        config = write_config(tmp_path)
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        assert main(["run", str(config), "--seed", "5", "--out-dir", str(dir_a), "--quiet"]) == 0
        assert main(["run", str(config), "--seed", "5", "--out-dir", str(dir_b), "--quiet"]) == 0
        csv_a = (dir_a / "diagnostics.csv").read_bytes()
        csv_b = (dir_b / "diagnostics.csv").read_bytes()
        assert csv_a == csv_b

    def test_inspect_round_trip(self, grid2, tmp_path: Path, capsys) -> None:
        state = generate_initial_data(grid2, "harmonic_map", "A")
        snap = tmp_path / "state.snap"
        write_snapshot(state, snap)
        assert main(["inspect", str(snap)]) == 0
        out = capsys.readouterr().out
        assert "formulation: A" in out
        assert "sphere_res" in out

    def test_inspect_corrupt_snapshot_fails_check(self, tmp_path: Path, capsys) -> None:
        bad = tmp_path / "bad.snap"
        bad.write_bytes(b"not a snapshot")
        assert main(["inspect", str(bad)]) == 1
        capsys.readouterr()

    def test_scenario_writes_verdict(self, tmp_path: Path, capsys) -> None:
        config = write_config(tmp_path, n=16, t_end=1e-3)
        assert main(["scenario", "stokes_verify", str(config)]) == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["pass"] is True
        assert verdict["scenario"] == "stokes_verify"
        out = capsys.readouterr().out
        assert "PASS" in out
