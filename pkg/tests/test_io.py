import json

import numpy as np
import pytest

from wignerflow import io as wio
from wignerflow.classical import trajectory
from wignerflow.quantifiers import flux_sweep
from wignerflow.quantum import PhaseGrid, SystemConfig, evaluate_field


@pytest.fixture(scope="module")
def field():
    return evaluate_field(SystemConfig(1, 1.5), PhaseGrid(0, 4, -3, 3, 9, 7), "W")


def test_fmt_seventeen_digits():
    assert wio.fmt(0.1) == "0.10000000000000001"
    assert float(wio.fmt(np.pi)) == np.pi
    assert wio.fmt(np.int64(3)) == "3"


def test_field_csv_roundtrip(tmp_path, field):
    path = tmp_path / "w.csv"
    wio.write_field(path, field, SystemConfig(1, 1.5))
    lines = path.read_text().splitlines()
    assert lines[0] == "x,k,value"
    assert len(lines) == 1 + 9 * 7
    x, k, v = wio.read_field_csv(path)
    X, K = field.grid.mesh()
    assert np.array_equal(x, X.ravel()) and np.array_equal(k, K.ravel())
    assert np.array_equal(v, field.values.ravel())
    # k varies fastest
    assert x[0] == x[6] and k[0] != k[1]
    meta = json.loads(wio.sidecar_path(path).read_text())
    assert meta["system"] == {"n": 1, "alpha": 1.5, "support_mode": "half_line"}
    assert wio.grid_from_dict(meta["grid"]) == field.grid


def test_field_dat_blocks(tmp_path, field):
    path = tmp_path / "w.dat"
    wio.write_field(path, field, None, "dat")
    blocks = path.read_text().strip().split("\n\n")
    assert len(blocks) == 9
    assert blocks[0].startswith("# x k value")
    assert wio.sidecar_path(path).exists()


def test_field_json(tmp_path, field):
    path = tmp_path / "w.json"
    wio.write_field(path, field, SystemConfig(1, 1.5), "json")
    doc = json.loads(path.read_text())
    assert np.array_equal(np.array(doc["values"]), field.values)


def test_trajectory_csv(tmp_path):
    path = tmp_path / "t.csv"
    traj = trajectory(1.5, 1.0, 0.2, 64)
    wio.write_trajectory(path, traj)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "tau,x,k,dxdtau"
    assert np.array_equal(data, traj.as_array())


def test_sweep_csv_and_json(tmp_path):
    reps = flux_sweep(SystemConfig(0, 1.5), 0.5, 2.0, 4, n_samples=128)
    path = tmp_path / "s.csv"
    wio.write_sweep(path, reps)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(wio.SWEEP_HEADER) and len(lines) == 5
    wio.write_sweep(tmp_path / "s.json", reps, "json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert [d["epsilon"] for d in doc] == [r.epsilon for r in reps]


def test_bad_table_format():
    with pytest.raises(ValueError):
        wio.write_table("-", ["a"], [[1]], "xml")
