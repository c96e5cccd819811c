"""Two-qubit GHZ compilation benchmark.

Ansatz ``U(ty, tz) = CNOT(0->1) . Rz(tz) . Ry(ty)`` on qubit 0, target ``V``
with ``V† = CNOT(0->1) . (H (x) I)``.  The compilation cost reduces to

    C = 1 - 0.5 sin^2(tz/2) cos^2(ty/2)

whose closed-form derivatives serve as oracles for every gradient method.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import __version__, _kernels
from .circuit import ParamCircuit, build_unitary, fixed_gate_library, rot
from .errors import MethodError, StepSizeError
from .gradients import finite_difference_batch, hs_cost_batch, hs_exact_gradient_batch, hs_overlap
from .subroutines import EXACT, ShotConfig, hst_cost_and_gradient, ht_gradient

D = 4
SQRT8 = 2 * np.sqrt(2)
PARAMS = {"y": 0, "z": 1}
SWEEP_METHODS = ("exact", "param-shift", "ht", "hst", "fd-2pt", "fd-4pt")
DEFAULT_MSE_METHODS = ("exact", "ht", "hst", "fd-2pt", "fd-4pt")
H_INDEPENDENT = ("exact", "param-shift", "ht", "hst")
DEFAULT_FIXED_ANGLE = np.pi / 2
DEFAULT_FD_STEP = 0.5
# chunk size for per-point subroutine work; fixed so results never depend on worker count
POINT_CHUNK = 125


@dataclass(frozen=True, eq=False)
class GhzInstance:
    ansatz: ParamCircuit
    target: np.ndarray

    @property
    def dim(self) -> int:
        return self.ansatz.dim


def ghz_instance(check: bool = True) -> GhzInstance:
    ansatz = ParamCircuit(2, [rot("YI", 0), rot("ZI", 1), fixed_gate_library("CNOT", 2, [0, 1])], 2)
    vdag = fixed_gate_library("CNOT", 2, [0, 1]).matrix @ fixed_gate_library("H", 2, [0]).matrix
    inst = GhzInstance(ansatz, vdag.conj().T)
    if check:
        grid = np.linspace(0, 2 * np.pi, 21)
        for ty in grid:
            for tz in grid:
                tr = hs_overlap(build_unitary(ansatz, [ty, tz]), inst.target)
                if abs(tr - oracle_trace(ty, tz)) > 1e-12:
                    raise AssertionError(f"GHZ trace self-check failed at ({ty}, {tz})")
    return inst


def oracle_grad_y(theta_y, theta_z):
    return 4 / D**2 * np.sin(theta_y) * np.sin(theta_z / 2) ** 2


def oracle_grad_z(theta_y, theta_z):
    return -4 / D**2 * np.cos(theta_y / 2) ** 2 * np.sin(theta_z)


def oracle_cost(theta_y, theta_z):
    return 1 - 0.5 * np.sin(theta_z / 2) ** 2 * np.cos(theta_y / 2) ** 2


def oracle_trace(theta_y, theta_z, shift: str = "none"):
    """``tr(V† U)`` in closed form, optionally with ``y`` or ``z`` shifted by pi."""
    if shift == "none":
        return -1j * SQRT8 * np.sin(theta_z / 2) * np.cos(theta_y / 2)
    if shift == "y":
        return 1j * SQRT8 * np.sin(theta_z / 2) * np.sin(theta_y / 2)
    if shift == "z":
        return -1j * SQRT8 * np.cos(theta_z / 2) * np.cos(theta_y / 2)
    raise ValueError(f"shift must be 'none', 'y' or 'z', got {shift!r}")


def oracle_grad(param: str, thetas) -> np.ndarray:
    thetas = np.asarray(thetas)
    fn = oracle_grad_y if param == "y" else oracle_grad_z
    return fn(thetas[:, 0], thetas[:, 1])


# -- batched evaluation of every method --------------------------------------------

def _per_point(inst: GhzInstance, method: str, thetas, j: int, cfg: ShotConfig, tag, offset: int) -> np.ndarray:
    out = np.empty(len(thetas))
    for k, t in enumerate(thetas):
        sub = cfg.sub(*tag, offset + k)
        if method == "ht":
            out[k] = ht_gradient(inst.ansatz, t, inst.target, j, sub)
        else:
            out[k] = hst_cost_and_gradient(inst.ansatz, t, inst.target, j, sub)[1]
    return out


def gradient_batch(inst: GhzInstance, method: str, thetas, j: int, h: float | None = None,
                   cfg: ShotConfig = EXACT, tag=(), offset: int = 0) -> np.ndarray:
    """Partial derivative ``dC/dtheta_j`` at every row of ``thetas`` by ``method``.

    Shot streams for the subroutine methods are keyed by ``(tag, offset + row)``.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    c, v = inst.ansatz, inst.target
    if method == "exact":
        return hs_exact_gradient_batch(c, thetas, v, j)
    if method == "param-shift":
        both = np.concatenate([thetas, thetas])
        both[: len(thetas), j] += np.pi / 2
        both[len(thetas):, j] -= np.pi / 2
        costs = hs_cost_batch(c, both, v)
        return (costs[: len(thetas)] - costs[len(thetas):]) / 2
    if method in ("fd-2pt", "fd-4pt"):
        if h is None:
            raise StepSizeError(f"{method} needs a step size")
        return finite_difference_batch(lambda t: hs_cost_batch(c, t, v), thetas, j, h, method)
    if method in ("ht", "hst"):
        return _per_point(inst, method, thetas, j, cfg, (method, *tag), offset)
    raise MethodError(f"unknown method {method!r}")


def _pool_map(fn, tasks: Sequence, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _check_methods(methods: Iterable[str], allowed: Sequence[str]) -> tuple[str, ...]:
    methods = tuple(methods)
    for m in methods:
        if m not in allowed:
            raise MethodError(f"unknown method {m!r}; choose from {', '.join(allowed)}")
    return methods


# -- derivative sweeps -------------------------------------------------------------------

def default_grid(num: int = 101) -> np.ndarray:
    return np.linspace(0, 2 * np.pi, num)


def derivative_sweep(param: str, grid, methods: Iterable[str] = SWEEP_METHODS,
                     fd_steps: dict | None = None, fixed_angle: float = DEFAULT_FIXED_ANGLE,
                     cfg: ShotConfig = EXACT, threads: int = 1,
                     inst: GhzInstance | None = None) -> list[tuple[str, float, str, float]]:
    """Rows ``(param, angle, method, value)`` of ``dC/dtheta_param`` along ``grid``.

    The other angle is held at ``fixed_angle``.  An ``oracle`` row accompanies
    every grid point.
    """
    if param not in PARAMS:
        raise ValueError(f"param must be 'y' or 'z', got {param!r}")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty list of angles")
    methods = _check_methods(methods, SWEEP_METHODS)
    steps = {"fd-2pt": DEFAULT_FD_STEP, "fd-4pt": DEFAULT_FD_STEP, **(fd_steps or {})}
    inst = inst or ghz_instance(check=False)
    j = PARAMS[param]
    thetas = np.empty((grid.size, 2))
    thetas[:, j] = grid
    thetas[:, 1 - j] = fixed_angle

    tasks = []
    for m in methods:
        if m in ("ht", "hst"):
            for start in range(0, grid.size, POINT_CHUNK):
                tasks.append((m, start, min(start + POINT_CHUNK, grid.size)))
        else:
            tasks.append((m, 0, grid.size))

    def run(task):
        m, lo, hi = task
        return gradient_batch(inst, m, thetas[lo:hi], j, steps.get(m), cfg, ("sweep", param), lo)

    results = _pool_map(run, tasks, threads)
    columns = {m: np.empty(grid.size) for m in methods}
    for (m, lo, hi), vals in zip(tasks, results):
        columns[m][lo:hi] = vals
    columns["oracle"] = oracle_grad(param, thetas)

    rows = []
    for k, angle in enumerate(grid):
        for m in (*methods, "oracle"):
            rows.append((param, float(angle), m, float(columns[m][k])))
    return rows


# -- MSE versus step size ---------------------------------------------------------------------

@dataclass(frozen=True)
class MseRecord:
    param: str
    method: str
    h: float
    mse: float
    std_dev: float
    num_samples: int


def default_step_sizes(num: int = 200) -> np.ndarray:
    """``k pi / num`` for ``k = 1..num``; h = 0 is excluded."""
    return np.pi * (np.arange(1, num + 1) / num)


def sample_points(num_points: int, seed: int) -> np.ndarray:
    """Uniform parameter pairs on ``[0, 2pi)^2``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.uniform(0.0, 2 * np.pi, size=(num_points, 2))


def mse_experiment(step_sizes=None, num_points: int = 1000, seed: int = 0,
                   methods: Iterable[str] = DEFAULT_MSE_METHODS, params: Sequence[str] = ("y", "z"),
                   threads: int = 1, cfg: ShotConfig | None = None,
                   inst: GhzInstance | None = None) -> list[MseRecord]:
    """Mean and standard deviation of squared gradient errors for each step size.

    Step-independent methods are evaluated once and repeated for every ``h``.
    """
    steps = default_step_sizes() if step_sizes is None else np.asarray(step_sizes, dtype=np.float64)
    if steps.ndim != 1 or steps.size == 0:
        raise StepSizeError("need at least one step size")
    for h in steps:
        if not (0 < h <= np.pi):
            raise StepSizeError(f"step size {h} outside (0, pi]")
    if num_points < 1:
        raise ValueError("num_points must be at least 1")
    methods = _check_methods(methods, SWEEP_METHODS)
    for p in params:
        if p not in PARAMS:
            raise ValueError(f"param must be 'y' or 'z', got {p!r}")
    cfg = cfg or ShotConfig(0, seed)
    inst = inst or ghz_instance(check=False)
    points = sample_points(num_points, seed)
    oracle = {p: oracle_grad(p, points) for p in params}

    tasks = []
    for p in params:
        for m in methods:
            if m in ("ht", "hst"):
                for start in range(0, num_points, POINT_CHUNK):
                    tasks.append((p, m, None, start, min(start + POINT_CHUNK, num_points)))
            elif m in H_INDEPENDENT:
                tasks.append((p, m, None, 0, num_points))
            else:
                for h in steps:
                    tasks.append((p, m, float(h), 0, num_points))

    def run(task):
        p, m, h, lo, hi = task
        est = gradient_batch(inst, m, points[lo:hi], PARAMS[p], h, cfg, ("mse", p), lo)
        return (est - oracle[p][lo:hi]) ** 2

    results = _pool_map(run, tasks, threads)
    sq_errors: dict[tuple, np.ndarray] = {}
    for (p, m, h, lo, hi), sq in zip(tasks, results):
        key = (p, m, h)
        if key not in sq_errors:
            sq_errors[key] = np.empty(num_points)
        sq_errors[key][lo:hi] = sq

    records = []
    for p in params:
        for m in methods:
            for h in steps:
                sq = sq_errors[(p, m, None if m in H_INDEPENDENT else float(h))]
                records.append(MseRecord(p, m, float(h), float(np.mean(sq)), float(np.std(sq)), num_points))
    return records


def loglog_slope(records: Sequence[MseRecord], param: str, method: str,
                 h_min: float = 0.05, h_max: float = 0.5) -> float:
    """Least-squares slope of ``log(mse)`` against ``log(h)`` on ``[h_min, h_max]``."""
    sel = [(r.h, r.mse) for r in records
           if r.param == param and r.method == method and h_min <= r.h <= h_max]
    if len(sel) < 2:
        raise ValueError("need at least two step sizes in range to fit a slope")
    h, mse = np.array(sel).T
    return float(np.polyfit(np.log(h), np.log(mse), 1)[0])


# -- serialization -------------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def mse_to_csv(records: Sequence[MseRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "method", "h", "mse", "std_dev", "n"])
    for r in records:
        w.writerow([r.param, r.method, _fmt(r.h), _fmt(r.mse), _fmt(r.std_dev), r.num_samples])
    return buf.getvalue()


def sweep_to_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "angle", "method", "value"])
    for param, angle, method, value in rows:
        w.writerow([param, _fmt(angle), method, _fmt(value)])
    return buf.getvalue()


def run_metadata(**extra) -> dict:
    return {"tool": "vqagrad", "version": __version__, "kernel_backend": _kernels.BACKEND, **extra}


def mse_to_json(records: Sequence[MseRecord], **metadata) -> str:
    meta = run_metadata(std_dev_of="squared_error", **metadata)
    return json.dumps({"metadata": meta, "records": [asdict(r) for r in records]}, indent=2) + "\n"


def sweep_to_json(rows: Sequence[tuple], **metadata) -> str:
    meta = run_metadata(**metadata)
    recs = [{"param": p, "angle": a, "method": m, "value": v} for p, a, m, v in rows]
    return json.dumps({"metadata": meta, "rows": recs}, indent=2) + "\n"
