"""Serialization of fields, trajectories, sweeps and stagnation inventories.

Floats are written with 17 significant digits so doubles round-trip
exactly. ``dat`` files are whitespace-separated with blank lines between
x-blocks, the layout gnuplot's ``splot`` expects.
"""

from __future__ import annotations

import io
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .classical import ClassicalTrajectory
from .flow import StagnationPoint
from .quantifiers import FluxReport
from .quantum import PhaseGrid, ScalarField, SystemConfig

__all__ = [
    "FORMATS",
    "fmt",
    "write_field",
    "read_field_csv",
    "write_table",
    "write_trajectory",
    "write_sweep",
    "write_stagnation",
    "sidecar_path",
    "open_sink",
]

FORMATS = ("csv", "json", "dat")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def dumps(obj) -> str:
    # json writes floats with repr(), which is already the shortest exact form
    return json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n"


@contextmanager
def open_sink(path):
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".meta.json")


def _table_text(header, rows, fmt_name: str, block_col: int | None = None) -> str:
    buf = io.StringIO()
    if fmt_name == "csv":
        buf.write(",".join(header) + "\n")
        for r in rows:
            buf.write(",".join(fmt(v) for v in r) + "\n")
    elif fmt_name == "dat":
        buf.write("# " + " ".join(header) + "\n")
        prev = None
        for r in rows:
            if block_col is not None and prev is not None and r[block_col] != prev:
                buf.write("\n")
            prev = r[block_col] if block_col is not None else None
            buf.write(" ".join(fmt(v) for v in r) + "\n")
    else:
        raise ValueError(f"table format must be csv or dat, got {fmt_name!r}")
    return buf.getvalue()


def write_table(path, header, rows, fmt_name: str = "csv", block_col: int | None = None):
    with open_sink(path) as fh:
        fh.write(_table_text(header, rows, fmt_name, block_col))


def _field_meta(field: ScalarField, cfg: SystemConfig | None) -> dict:
    return {
        "label": field.label.value,
        "system": cfg.to_dict() if cfg is not None else None,
        "grid": field.grid.to_dict(),
        "order": "x-major, k fastest",
    }


def write_field(path, field: ScalarField, cfg: SystemConfig | None = None, fmt_name: str = "csv"):
    """Write a field; CSV and dat outputs to a file get a JSON sidecar."""
    X, K = field.grid.mesh()
    if fmt_name == "json":
        doc = _field_meta(field, cfg)
        doc["values"] = field.values
        with open_sink(path) as fh:
            fh.write(dumps(doc))
        return
    rows = zip(X.ravel(), K.ravel(), field.values.ravel())
    header = ["x", "k", "value"]
    write_table(path, header, rows, fmt_name, block_col=0 if fmt_name == "dat" else None)
    if path is not None and str(path) != "-":
        sidecar_path(path).write_text(dumps(_field_meta(field, cfg)))


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, k, value) columns of a field CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2]


def write_trajectory(path, traj: ClassicalTrajectory, fmt_name: str = "csv"):
    header = ["tau", "x", "k", "dxdtau"]
    if fmt_name == "json":
        doc = {"epsilon": traj.epsilon, "alpha": traj.alpha, "theta": traj.theta,
               "n_samples": traj.n_samples,
               "samples": [dict(zip(header, map(float, r))) for r in traj.as_array()]}
        with open_sink(path) as fh:
            fh.write(dumps(doc))
        return
    write_table(path, header, traj.as_array(), fmt_name)


SWEEP_HEADER = ["epsilon", "sigma_rate", "entropy_rate", "purity_rate", "clamp_events"]


def write_sweep(path, reports: list[FluxReport], fmt_name: str = "csv"):
    if fmt_name == "json":
        with open_sink(path) as fh:
            fh.write(dumps([r.to_dict() for r in reports]))
        return
    rows = [(r.epsilon, r.sigma_rate, r.entropy_rate, r.purity_rate, r.clamp_events) for r in reports]
    write_table(path, SWEEP_HEADER, rows, fmt_name)


STAGNATION_HEADER = ["x", "k", "classification", "winding", "residual"]


def write_stagnation(path, points: list[StagnationPoint], fmt_name: str = "json"):
    if fmt_name == "json":
        with open_sink(path) as fh:
            fh.write(dumps([p.to_dict() for p in points]))
        return
    rows = [(p.x, p.k, p.classification.value, p.winding, p.residual) for p in points]
    write_table(path, STAGNATION_HEADER, rows, fmt_name)


def grid_from_dict(d: dict) -> PhaseGrid:
    return PhaseGrid(**d)
