import csv
import io
import json

import numpy as np
import pytest

from vqagrad.circuit import build_unitary, shift
from vqagrad.errors import MethodError, StepSizeError
from vqagrad.ghz import (
    DEFAULT_MSE_METHODS,
    default_step_sizes,
    derivative_sweep,
    ghz_instance,
    gradient_batch,
    loglog_slope,
    mse_experiment,
    mse_to_csv,
    mse_to_json,
    oracle_cost,
    oracle_grad_y,
    oracle_grad_z,
    oracle_trace,
    sample_points,
    sweep_to_csv,
    sweep_to_json,
)
from vqagrad.gradients import finite_difference, hs_cost, hs_exact_gradient_batch, hs_overlap
from vqagrad.subroutines import ShotConfig

from conftest import ghz_v

INST = ghz_instance()
GRID41 = np.linspace(0, 2 * np.pi, 41)


def test_target_matches_independent_construction():
    assert np.allclose(INST.target, ghz_v(), atol=1e-15)
    # V† (H on qubit 0, then CNOT) prepares the Bell state from |00>
    assert np.allclose(INST.target.conj().T[:, 0], np.array([1, 0, 0, 1]) / np.sqrt(2))


def test_oracle_grad_examples():
    assert abs(oracle_grad_y(np.pi / 2, np.pi) - 0.25) < 1e-15
    assert oracle_grad_y(0.0, 1.234) == 0.0
    assert abs(oracle_grad_y(np.pi / 3, np.pi / 2) - 0.10825317547305482) < 1e-15
    assert abs(oracle_grad_z(0.0, np.pi / 2) + 0.25) < 1e-15
    assert abs(oracle_grad_z(np.pi, 0.77)) < 1e-15
    assert abs(oracle_grad_z(np.pi / 2, np.pi / 4) + 0.08838834764831845) < 1e-15


def test_oracles_agree_with_fd_on_matrix_cost():
    cost = lambda t: hs_cost(build_unitary(INST.ansatz, t), INST.target)  # noqa: E731
    t = [np.pi / 3, np.pi / 2]
    assert abs(finite_difference(cost, t, 0, 1e-3, "four-point") - oracle_grad_y(*t)) < 1e-11
    assert abs(finite_difference(cost, t, 1, 1e-3, "four-point") - oracle_grad_z(*t)) < 1e-11


def test_oracle_trace_forms():
    assert abs(oracle_trace(0, np.pi) - (-2j * np.sqrt(2))) < 1e-15
    assert oracle_trace(0, 0) == 0
    with pytest.raises(ValueError):
        oracle_trace(0, 0, "x")
    grid = np.linspace(0, 2 * np.pi, 21)
    for ty in grid:
        for tz in grid:
            for label, j in (("none", None), ("y", 0), ("z", 1)):
                t = [ty, tz] if j is None else shift([ty, tz], j, np.pi)
                tr = hs_overlap(build_unitary(INST.ansatz, t), INST.target)
                assert abs(tr - oracle_trace(ty, tz, label)) < 1e-12


def test_exact_gradient_matches_oracles_41_grid():
    ty, tz = np.meshgrid(GRID41, GRID41, indexing="ij")
    pts = np.column_stack([ty.ravel(), tz.ravel()])
    gy = hs_exact_gradient_batch(INST.ansatz, pts, INST.target, 0)
    gz = hs_exact_gradient_batch(INST.ansatz, pts, INST.target, 1)
    assert np.max(np.abs(gy - oracle_grad_y(pts[:, 0], pts[:, 1]))) < 1e-12
    assert np.max(np.abs(gz - oracle_grad_z(pts[:, 0], pts[:, 1]))) < 1e-12


def test_global_minimum_on_grid():
    costs = np.array([[hs_cost(build_unitary(INST.ansatz, [a, b]), INST.target) for b in GRID41] for a in GRID41])
    assert abs(costs.min() - 0.5) < 1e-10
    i, k = np.unravel_index(np.argmin(costs), costs.shape)
    assert abs(np.cos(GRID41[i] / 2) ** 2 - 1) < 1e-10 and abs(np.sin(GRID41[k] / 2) ** 2 - 1) < 1e-10
    assert np.allclose(costs, oracle_cost(*np.meshgrid(GRID41, GRID41, indexing="ij")), atol=1e-12)


# -- sweeps ----------------------------------------------------------------------------------

@pytest.mark.parametrize("param", ["y", "z"])
def test_sweep_columns(param):
    grid = np.linspace(0, 2 * np.pi, 37)
    rows = derivative_sweep(param, grid)
    table = {}
    for p, angle, m, val in rows:
        assert p == param
        table.setdefault(m, []).append(val)
    oracle = np.array(table["oracle"])
    assert len(oracle) == grid.size
    for m in ("exact", "param-shift", "ht", "hst"):
        assert np.max(np.abs(np.array(table[m]) - oracle)) < 1e-12
    err = np.abs(np.array(table["fd-2pt"]) - oracle)
    # central difference remainder h^2/6 |C'''| with |C'''| <= 1/4 here
    assert np.max(err) <= 0.5**2 / 6 * 0.25 + 1e-12
    assert np.max(err) > 1e-3
    assert np.max(np.abs(np.array(table["fd-4pt"]) - oracle)) < np.max(err)


def test_sweep_errors_and_fixed_angle():
    with pytest.raises(MethodError):
        derivative_sweep("y", [0.1], methods=["exact", "bogus"])
    with pytest.raises(ValueError):
        derivative_sweep("y", [])
    with pytest.raises(ValueError):
        derivative_sweep("w", [0.1])
    rows = derivative_sweep("z", [0.4], methods=["exact"], fixed_angle=0.0)
    assert abs(rows[0][3] - oracle_grad_z(0.0, 0.4)) < 1e-15


def test_gradient_batch_errors():
    with pytest.raises(StepSizeError):
        gradient_batch(INST, "fd-2pt", [[0.1, 0.2]], 0)
    with pytest.raises(MethodError):
        gradient_batch(INST, "nope", [[0.1, 0.2]], 0)


# -- MSE experiment -------------------------------------------------------------------------

def test_step_sizes_and_points():
    h = default_step_sizes()
    assert h.size == 200 and abs(h[0] - np.pi / 200) < 1e-15 and h[-1] == np.pi
    pts = sample_points(1000, 3)
    assert pts.shape == (1000, 2) and pts.min() >= 0 and pts.max() < 2 * np.pi
    assert np.array_equal(pts, sample_points(1000, 3))


def test_mse_small_run():
    steps = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0, np.pi]
    recs = mse_experiment(steps, num_points=200, seed=1)
    assert len(recs) == 2 * len(DEFAULT_MSE_METHODS) * len(steps)
    by = {(r.param, r.method, r.h): r for r in recs}
    for r in recs:
        assert r.mse >= 0 and r.std_dev >= 0 and r.num_samples == 200
        if r.method in ("exact", "ht", "hst"):
            assert r.mse < 1e-20
    for p in ("y", "z"):
        for h in steps:
            if h <= 0.5:
                assert by[(p, "fd-4pt", h)].mse <= by[(p, "fd-2pt", h)].mse
        assert abs(loglog_slope(recs, p, "fd-2pt") - 4) < 0.5
        assert abs(loglog_slope(recs, p, "fd-4pt") - 8) < 1.0


def test_mse_std_dev_is_of_squared_errors():
    recs = mse_experiment([0.3], num_points=50, seed=4, methods=["fd-2pt"], params=["y"])
    pts = sample_points(50, 4)
    cost = lambda t: hs_cost(build_unitary(INST.ansatz, t), INST.target)  # noqa: E731
    sq = np.array([(finite_difference(cost, t, 0, 0.3) - oracle_grad_y(*t)) ** 2 for t in pts])
    assert abs(recs[0].mse - sq.mean()) < 1e-15
    assert abs(recs[0].std_dev - sq.std()) < 1e-15


def test_mse_errors():
    with pytest.raises(StepSizeError):
        mse_experiment([0.0], num_points=5)
    with pytest.raises(StepSizeError):
        mse_experiment([4.0], num_points=5)
    with pytest.raises(StepSizeError):
        mse_experiment([], num_points=5)
    with pytest.raises(MethodError):
        mse_experiment([0.1], num_points=5, methods=["fd-3pt"])
    with pytest.raises(ValueError):
        mse_experiment([0.1], num_points=0)


def test_thread_count_does_not_change_results():
    steps = [0.1, 0.4]
    cfg = ShotConfig(500, seed=8)
    a = mse_experiment(steps, num_points=300, seed=8, threads=1, cfg=cfg)
    b = mse_experiment(steps, num_points=300, seed=8, threads=4, cfg=cfg)
    assert mse_to_csv(a) == mse_to_csv(b)
    s1 = derivative_sweep("y", np.linspace(0, 6, 260), cfg=cfg, threads=1)
    s4 = derivative_sweep("y", np.linspace(0, 6, 260), cfg=cfg, threads=3)
    assert sweep_to_csv(s1) == sweep_to_csv(s4)


def test_shot_mode_mse_is_positive():
    recs = mse_experiment([0.2], num_points=20, seed=2, methods=["hst"], cfg=ShotConfig(1000, 2))
    assert all(r.mse > 0 for r in recs)


def test_serialization_round_trip():
    recs = mse_experiment([0.25], num_points=10, seed=0, methods=["exact", "fd-2pt"])
    rows = list(csv.DictReader(io.StringIO(mse_to_csv(recs))))
    assert list(rows[0]) == ["param", "method", "h", "mse", "std_dev", "n"]
    assert float(rows[1]["mse"]) == recs[1].mse
    doc = json.loads(mse_to_json(recs, seed=0))
    assert doc["metadata"]["std_dev_of"] == "squared_error" and doc["metadata"]["seed"] == 0
    assert len(doc["records"]) == len(recs)
    sweep = derivative_sweep("y", [0.5], methods=["exact"])
    assert sweep_to_csv(sweep).splitlines()[0] == "param,angle,method,value"
    assert json.loads(sweep_to_json(sweep, fixed_angle=np.pi / 2))["rows"][1]["method"] == "oracle"
