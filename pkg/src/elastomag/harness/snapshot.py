"""Bit-exact state snapshots: one JSON header line plus raw f64 payload.

Layout: a single compact JSON object terminated by a newline, then the
concatenated little-endian float64 arrays in header order, row-major. The
header names every field with its component count and value count, so a
reader can validate the payload length before touching the numbers. Round
trips are bit-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..errors import SnapshotError
from ..fields import StateA, StateB
from ..spectral import MatrixField, TorusGrid, VectorField

FORMAT_VERSION = 1
_HEADER_KEYS = {"format_version", "dim", "n", "t", "formulation", "fields"}
_FIELD_KEYS = {"name", "components", "dtype", "count"}


def _layout(dim: int, formulation: str) -> list[tuple[str, int]]:
    """(name, components) per field in serialization order."""
    if formulation == "A":
        return [("v", dim), ("F", dim * dim), ("M", 3)]
    return [("v", dim), ("psi", dim), ("M", 3)]


def write_snapshot(state: StateA | StateB, path: str | Path) -> None:
    grid = state.grid
    if isinstance(state, StateA):
        formulation = "A"
        arrays = [state.v.values, state.F.values, state.M.values]
    else:
        formulation = "B"
        arrays = [state.v.values, state.psi.values, state.M.values]
    names = _layout(grid.dim, formulation)
    header = {
        "format_version": FORMAT_VERSION,
        "dim": grid.dim,
        "n": grid.n,
        "t": state.t,
        "formulation": formulation,
        "fields": [
            {"name": name, "components": comps, "dtype": "f64-le", "count": int(arr.size)}
            for (name, comps), arr in zip(names, arrays)
        ],
    }
    parts = [json.dumps(header, separators=(",", ":")).encode("ascii"), b"\n"]
    parts.extend(np.ascontiguousarray(arr, dtype="<f8").tobytes() for arr in arrays)
    Path(path).write_bytes(b"".join(parts))


def _expect_int(header: dict, key: str) -> int:
    value = header.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise SnapshotError(f"header {key} must be an integer, got {value!r}")
    return value


def load_snapshot(path: str | Path) -> StateA | StateB:
    try:
        raw = Path(path).read_bytes()
    except OSError as err:
        raise SnapshotError(f"cannot read snapshot {path}: {err}") from err

    newline = raw.find(b"\n")
    if newline < 0:
        raise SnapshotError("snapshot has no header line")
    try:
        header = json.loads(raw[:newline])
    except json.JSONDecodeError as err:
        raise SnapshotError(f"snapshot header is not valid JSON: {err}") from err
    if not isinstance(header, dict):
        raise SnapshotError("snapshot header must be a JSON object")
    unknown = sorted(set(header) - _HEADER_KEYS)
    if unknown:
        raise SnapshotError(f"unknown header keys: {', '.join(unknown)}")

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise SnapshotError(f"unsupported format_version {version!r}")
    dim = _expect_int(header, "dim")
    if dim not in (2, 3):
        raise SnapshotError(f"dim must be 2 or 3, got {dim}")
    n = _expect_int(header, "n")
    try:
        grid = TorusGrid(dim=dim, n=n)
    except ValueError as err:
        raise SnapshotError(str(err)) from err
    t = header.get("t")
    if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t):
        raise SnapshotError(f"header t must be a finite number, got {t!r}")
    formulation = header.get("formulation")
    if formulation not in ("A", "B"):
        raise SnapshotError(f"formulation must be 'A' or 'B', got {formulation!r}")

    expected = _layout(dim, formulation)
    meta = header.get("fields")
    if not isinstance(meta, list) or len(meta) != len(expected):
        raise SnapshotError(
            f"header must list exactly {len(expected)} fields for formulation {formulation}"
        )
    points = n**dim
    for entry, (name, comps) in zip(meta, expected):
        if not isinstance(entry, dict) or set(entry) != _FIELD_KEYS:
            raise SnapshotError(f"malformed field entry {entry!r}")
        want = {"name": name, "components": comps, "dtype": "f64-le", "count": comps * points}
        if entry != want:
            raise SnapshotError(f"field entry {entry!r} does not match expected {want!r}")

    payload = raw[newline + 1 :]
    offset = 0
    values: dict[str, np.ndarray] = {}
    for name, comps in expected:
        count = comps * points
        nbytes = 8 * count
        if len(payload) - offset < nbytes:
            raise SnapshotError(f"truncated payload: field '{name}' is incomplete")
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset).copy()
        offset += nbytes
        if not np.all(np.isfinite(arr)):
            raise SnapshotError(f"non-finite values in field '{name}'")
        values[name] = arr
    if offset != len(payload):
        raise SnapshotError(f"{len(payload) - offset} unexpected trailing bytes")

    shape = grid.shape
    v = VectorField(grid, values["v"].reshape((dim,) + shape))
    m = VectorField(grid, values["M"].reshape((3,) + shape))
    if formulation == "A":
        F = MatrixField(grid, values["F"].reshape((dim, dim) + shape))
        return StateA(t=float(t), v=v, F=F, M=m)
    psi = VectorField(grid, values["psi"].reshape((dim,) + shape))
    return StateB(t=float(t), v=v, psi=psi, M=m)
