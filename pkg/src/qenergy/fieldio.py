"""CSV and JSON serialization of fields (17 significant digits, so values
round-trip exactly through text)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import Grid, GridError, PhysConstants, ScalarField, SpinorField, VectorField

FMT = "%.17g"


def _columns(field) -> tuple[list[str], list[np.ndarray]]:
    g = field.grid
    if isinstance(field, ScalarField):
        return [field.name or "value"], [field.values]
    if isinstance(field, VectorField):
        base = field.name or "v"
        comps = "xyz"
        return [f"{base}_{comps[i]}" for i in range(field.n_components)], list(field.values)
    if isinstance(field, SpinorField):
        names, cols = [], []
        for s in range(field.n_components):
            names += [f"re_{s}", f"im_{s}"]
            cols += [field.amplitudes[s].real, field.amplitudes[s].imag]
        return names, cols
    raise TypeError(f"cannot serialize {type(field).__name__}")


def write_csv(field, path) -> Path:
    """One row per grid point: coordinates, then values; header row of names."""
    path = Path(path)
    g = field.grid
    names, cols = _columns(field)
    coords = [c.ravel() for c in g.mesh()]
    table = np.column_stack(coords + [np.asarray(c).ravel() for c in cols])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(list(g.names) + names) + "\n")
        np.savetxt(fh, table, delimiter=",", fmt=FMT)
    return path


def read_csv_columns(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def read_scalar_csv(path, grid: Grid, name: str | None = None, time: float = 0.0) -> ScalarField:
    cols = read_csv_columns(path)
    value_names = [k for k in cols if k not in grid.names]
    if len(value_names) != 1:
        raise GridError(f"expected one value column, found {value_names}")
    key = value_names[0]
    if len(cols[key]) != grid.size:
        raise GridError("CSV row count does not match the grid")
    return ScalarField(grid, cols[key].reshape(grid.shape), time, name or key)


def to_envelope(field) -> dict:
    """JSON envelope {grid, time, name, values}."""
    out = {"grid": field.grid.to_dict(), "time": float(field.time)}
    if isinstance(field, SpinorField):
        out["name"] = type(field).__name__
        out["values"] = {"re": field.amplitudes.real.tolist(), "im": field.amplitudes.imag.tolist()}
        c = field.constants
        out["constants"] = {"hbar": c.hbar, "mass": c.mass, "c": c.c,
                            "charge_magnitude": c.charge_magnitude}
    else:
        out["name"] = field.name
        out["kind"] = "vector" if isinstance(field, VectorField) else "scalar"
        out["values"] = field.values.tolist()
    return out


def from_envelope(d: dict):
    grid = Grid.from_dict(d["grid"])
    vals = d["values"]
    if isinstance(vals, dict):
        from .grid import BispinorField

        amps = np.asarray(vals["re"]) + 1j * np.asarray(vals["im"])
        cls = BispinorField if d.get("name") == "BispinorField" else SpinorField
        return cls(grid, amps, d["time"], PhysConstants(**d.get("constants", {})))
    arr = np.asarray(vals, dtype=float)
    if d.get("kind") == "vector":
        return VectorField(grid, arr, d["time"], d["name"])
    return ScalarField(grid, arr, d["time"], d["name"])


def write_json(field, path) -> Path:
    path = Path(path)
    # json writes floats with repr(), which round-trips exactly
    path.write_text(json.dumps(to_envelope(field)))
    return path


def read_json(path):
    return from_envelope(json.loads(Path(path).read_text()))


def write_trajectory(traj, outdir, prefix: str = "snapshot", every: int = 1) -> Path:
    """One CSV per exported snapshot plus index.json {times, dt, scheme, files}."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files, times = [], []
    for i in range(0, len(traj), every):
        name = f"{prefix}_{i:05d}.csv"
        write_csv(traj.snapshots[i], outdir / name)
        files.append(name)
        times.append(float(traj.times[i]))
    index = {"times": times, "dt": traj.dt, "scheme": traj.scheme, "files": files,
             "grid": traj.snapshots[0].grid.to_dict()}
    path = outdir / "index.json"
    path.write_text(json.dumps(index, indent=1))
    return path


def read_spinor_csv(path, grid: Grid, time: float = 0.0,
                    constants: PhysConstants = PhysConstants()) -> SpinorField:
    cols = read_csv_columns(path)
    amps = np.array([cols["re_0"] + 1j * cols["im_0"], cols["re_1"] + 1j * cols["im_1"]])
    return SpinorField(grid, amps.reshape((2,) + grid.shape), time, constants)
