"""Flat JSON run configuration with fail-closed validation.

Unknown keys are rejected, every referenced precondition is checked at
parse time, and the parsed object can build the grid, physics, and
integrator settings it describes. The same config plus the same seed must
reproduce a run byte for byte, so nothing here is environment-dependent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from ..energetics import delta_default, multiindex_count
from ..errors import ConfigError
from ..fields import HExt, PhysParams
from ..spectral import TorusGrid
from ..timestepper import IntegratorConfig

INITIAL_DATA_VARIANTS = (
    "zero_steady",
    "harmonic_map",
    "random_small",
    "shear_F",
    "flow_map_F",
    "from_snapshot",
)

_DEFAULTS: dict[str, Any] = {
    "dim": 2,
    "n": 64,
    "nu": 1.0,
    "kappa": 0.0,
    "h_ext": "zero",
    "formulation": "A",
    "initial_data": "zero_steady",
    "amplitude": 1e-2,
    "snapshot_path": None,
    "dt": 1e-3,
    "t_end": 1.0,
    "scheme": "imex2",
    "renormalize_m": False,
    "cfl_guard": 0.5,
    "snapshot_every": 0,
    "diag_every": 1,
    "s": 2,
    "delta": "auto",
    "c0_hat": 1.0,
    "dealias": True,
    "seed": 0,
    "out_dir": ".",
    "csv_name": "diagnostics.csv",
}


def _parse_h_ext(value: Any) -> HExt:
    if value == "zero":
        return HExt()
    if isinstance(value, (list, tuple)):
        if len(value) != 3 or not all(isinstance(c, (int, float)) for c in value):
            raise ConfigError(f"uniform h_ext needs 3 numbers, got {value!r}")
        return HExt(kind="uniform", vector=tuple(float(c) for c in value))
    if isinstance(value, dict):
        kind = value.get("type")
        if kind == "zero":
            _reject_unknown(value, {"type"}, "h_ext")
            return HExt()
        if kind == "uniform":
            _reject_unknown(value, {"type", "vector"}, "h_ext")
            return _parse_h_ext(value.get("vector", (0.0, 0.0, 0.0)))
        if kind == "single_mode":
            _reject_unknown(
                value, {"type", "amplitude", "wavevector", "component", "omega"}, "h_ext"
            )
            try:
                return HExt(
                    kind="single_mode",
                    amplitude=float(value.get("amplitude", 0.0)),
                    wavevector=tuple(int(k) for k in value.get("wavevector", (1, 0))),
                    component=int(value.get("component", 2)),
                    omega=float(value.get("omega", 0.0)),
                )
            except (TypeError, ValueError) as err:
                raise ConfigError(f"invalid single_mode h_ext: {err}") from err
        raise ConfigError(f"unknown h_ext type {kind!r}")
    raise ConfigError(f"h_ext must be 'zero', a 3-vector, or a profile object, got {value!r}")


def _reject_unknown(data: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown {context} keys: {', '.join(unknown)}")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class SimulationConfig:
    """Parsed, validated run configuration (see _DEFAULTS for the key set)."""

    dim: int
    n: int
    nu: float
    kappa: float
    h_ext: HExt
    formulation: str
    initial_data: str
    amplitude: float
    snapshot_path: str | None
    dt: float
    t_end: float
    scheme: str
    renormalize_m: bool
    cfl_guard: float
    snapshot_every: int
    diag_every: int
    s: int
    delta: float | str
    c0_hat: float
    dealias: bool
    seed: int
    out_dir: str
    csv_name: str

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimulationConfig":
        _reject_unknown(data, set(_DEFAULTS), "config")
        merged = {**_DEFAULTS, **data}
        try:
            cfg = cls(
                dim=int(merged["dim"]),
                n=int(merged["n"]),
                nu=float(merged["nu"]),
                kappa=float(merged["kappa"]),
                h_ext=_parse_h_ext(merged["h_ext"]),
                formulation=str(merged["formulation"]),
                initial_data=str(merged["initial_data"]),
                amplitude=float(merged["amplitude"]),
                snapshot_path=(
                    None if merged["snapshot_path"] is None else str(merged["snapshot_path"])
                ),
                dt=float(merged["dt"]),
                t_end=float(merged["t_end"]),
                scheme=str(merged["scheme"]),
                renormalize_m=bool(merged["renormalize_m"]),
                cfl_guard=float(merged["cfl_guard"]),
                snapshot_every=int(merged["snapshot_every"]),
                diag_every=int(merged["diag_every"]),
                s=int(merged["s"]),
                delta=(
                    merged["delta"]
                    if merged["delta"] == "auto"
                    else float(merged["delta"])
                ),
                c0_hat=float(merged["c0_hat"]),
                dealias=bool(merged["dealias"]),
                seed=int(merged["seed"]),
                out_dir=str(merged["out_dir"]),
                csv_name=str(merged["csv_name"]),
            )
        except (TypeError, ValueError) as err:
            raise ConfigError(f"invalid config value: {err}") from err
        cfg._validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "SimulationConfig":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {path} is not valid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        return cls.from_dict(data)

    def _validate(self) -> None:
        try:
            self.make_grid()
            self.make_integrator()
            self.make_params()
        except ValueError as err:
            raise ConfigError(str(err)) from err
        _require(self.formulation in ("A", "B"), f"formulation must be A or B, got {self.formulation!r}")
        _require(
            self.initial_data in INITIAL_DATA_VARIANTS,
            f"unknown initial_data {self.initial_data!r}",
        )
        _require(self.amplitude > 0, f"amplitude must be > 0, got {self.amplitude}")
        _require(self.s >= 2, f"s must be >= 2, got {self.s}")
        _require(self.c0_hat > 0, f"c0_hat must be > 0, got {self.c0_hat}")
        _require(self.seed >= 0, f"seed must be >= 0, got {self.seed}")
        _require(self.snapshot_every >= 0, "snapshot_every must be >= 0")
        _require(self.diag_every >= 1, "diag_every must be >= 1")
        if self.delta != "auto":
            _require(isinstance(self.delta, float) and self.delta > 0, "delta must be 'auto' or > 0")
        if self.formulation == "B":
            _require(
                self.h_ext.is_zero,
                "formulation B requires a vanishing external field",
            )
        if self.initial_data == "from_snapshot":
            _require(self.snapshot_path is not None, "from_snapshot needs snapshot_path")

    def make_grid(self) -> TorusGrid:
        return TorusGrid(dim=self.dim, n=self.n)

    def make_params(self) -> PhysParams:
        return PhysParams(nu=self.nu, kappa=self.kappa, h_ext=self.h_ext)

    def make_integrator(self) -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.dt,
            t_end=self.t_end,
            scheme=self.scheme,
            renormalize_m=self.renormalize_m,
            cfl_guard=self.cfl_guard,
            snapshot_every=self.snapshot_every,
            diag_every=self.diag_every,
        )

    def resolved_delta(self) -> float:
        if self.delta == "auto":
            return delta_default(self.nu, self.c0_hat, multiindex_count(self.dim, self.s))
        return float(self.delta)

    def with_overrides(
        self, seed: int | None = None, out_dir: str | None = None, **kwargs: Any
    ) -> "SimulationConfig":
        updates: dict[str, Any] = dict(kwargs)
        if seed is not None:
            updates["seed"] = seed
        if out_dir is not None:
            updates["out_dir"] = out_dir
        cfg = replace(self, **updates)
        cfg._validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        h: Any
        if self.h_ext.kind == "zero":
            h = "zero"
        elif self.h_ext.kind == "uniform":
            h = list(self.h_ext.vector)
        else:
            h = {
                "type": "single_mode",
                "amplitude": self.h_ext.amplitude,
                "wavevector": list(self.h_ext.wavevector),
                "component": self.h_ext.component,
                "omega": self.h_ext.omega,
            }
        return {
            "dim": self.dim,
            "n": self.n,
            "nu": self.nu,
            "kappa": self.kappa,
            "h_ext": h,
            "formulation": self.formulation,
            "initial_data": self.initial_data,
            "amplitude": self.amplitude,
            "snapshot_path": self.snapshot_path,
            "dt": self.dt,
            "t_end": self.t_end,
            "scheme": self.scheme,
            "renormalize_m": self.renormalize_m,
            "cfl_guard": self.cfl_guard,
            "snapshot_every": self.snapshot_every,
            "diag_every": self.diag_every,
            "s": self.s,
            "delta": self.delta,
            "c0_hat": self.c0_hat,
            "dealias": self.dealias,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "csv_name": self.csv_name,
        }
