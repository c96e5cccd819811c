"""Command-line entry point.

    vqagrad cost     --circuit ghz --theta 0,3.1415927 --method hst
    vqagrad grad     --circuit ghz --theta 1.5707963,3.1415927 --method exact
    vqagrad sweep    --param y --points 101 --output sweep.csv
    vqagrad mse      --num-points 1000 --seed 7 --output mse.csv
    vqagrad optimize --circuit ghz --theta 1,1 --rate 0.5

Angles are decimal radians.  ``--shots 0`` selects exact evaluation.  Errors
exit non-zero with one JSON line on stderr: 2 for usage, arity and method
errors, 3 for I/O failures, 1 for anything else.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ghz
from .circuit import ParamCircuit, PauliString, build_unitary, load_circuit
from .errors import MethodError, ParamArityError, StepSizeError, VqaGradError
from .gradients import gradient_descent, vqe_cost
from .methods import COST_METHODS, GRAD_METHODS, check_method, hs_cost_by, hs_gradient, vqe_gradient
from .subroutines import ShotConfig

OUTPUT_DIR_ENV = "VQAGRAD_OUTPUT_DIR"
COMMANDS = ("cost", "grad", "sweep", "mse", "optimize")


class UsageError(VqaGradError):
    pass


@dataclass
class RunConfig:
    command: str
    circuit: str = "ghz"
    target: str | None = None
    cost: str = "hs"
    hamiltonian: str | None = None
    theta: list[float] | None = None
    method: str = "exact"
    shots: int = 0
    seed: int = 0
    h: float | None = None
    output: str | None = None
    format: str = "csv"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    # sweep / mse
    param: str = "both"
    points: int = 101
    fixed_angle: float = ghz.DEFAULT_FIXED_ANGLE
    methods: list[str] | None = None
    num_points: int = 1000
    num_steps: int = 200
    # optimize
    rate: float = 0.1
    max_iters: int = 10_000
    tol: float = 1e-8


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated decimal radians, got {text!r}")


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vqagrad", description="Exact π-shift gradients for variational circuits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, circuit=True):
        if circuit:
            sp.add_argument("--circuit", default="ghz", help="circuit JSON file or builtin 'ghz'")
            sp.add_argument("--target", help="target circuit JSON (or 'ghz') for the compilation cost")
            sp.add_argument("--cost", choices=("hs", "vqe"), default="hs",
                            help="hs: 1 - |tr(V†U)|^2/d^2 against --target; vqe: <0|U† H U|0>")
            sp.add_argument("--hamiltonian", help="Pauli sum for --cost vqe, e.g. 'ZI:1.0,XX:0.5'")
            sp.add_argument("--theta", type=_floats, help="comma-separated decimal radians")
        sp.add_argument("--shots", type=int, default=0, help="shots per measured circuit; 0 = exact")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", help=f"output file (relative paths resolve under ${OUTPUT_DIR_ENV} if set)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    sp = sub.add_parser("cost", help="evaluate the cost at --theta")
    common(sp)
    sp.add_argument("--method", default="exact", help=f"one of {', '.join(COST_METHODS)}")

    sp = sub.add_parser("grad", help="gradient at --theta")
    common(sp)
    sp.add_argument("--method", default="exact", help=f"one of {', '.join(GRAD_METHODS)}")
    sp.add_argument("--h", type=float, help="finite-difference step (radians)")

    sp = sub.add_parser("sweep", help="GHZ derivative sweeps along one angle")
    common(sp, circuit=False)
    sp.add_argument("--param", choices=("y", "z", "both"), default="both")
    sp.add_argument("--points", type=int, default=101, help="grid points on [0, 2pi]")
    sp.add_argument("--fixed-angle", type=float, default=ghz.DEFAULT_FIXED_ANGLE,
                    help="value of the angle that is not swept (radians)")
    sp.add_argument("--methods", type=_names, help=f"subset of {', '.join(ghz.SWEEP_METHODS)}")
    sp.add_argument("--h", type=float, default=ghz.DEFAULT_FD_STEP, help="finite-difference step")

    sp = sub.add_parser("mse", help="GHZ gradient MSE versus finite-difference step size")
    common(sp, circuit=False)
    sp.add_argument("--num-points", type=int, default=1000)
    sp.add_argument("--num-steps", type=int, default=200, help="step sizes k*pi/num_steps, k=1..num_steps")
    sp.add_argument("--methods", type=_names, help=f"subset of {', '.join(ghz.SWEEP_METHODS)}")

    sp = sub.add_parser("optimize", help="gradient descent from --theta")
    common(sp)
    sp.add_argument("--method", default="exact", help=f"one of {', '.join(GRAD_METHODS)}")
    sp.add_argument("--h", type=float, help="finite-difference step (radians)")
    sp.add_argument("--rate", type=float, default=0.1)
    sp.add_argument("--max-iters", type=int, default=10_000)
    sp.add_argument("--tol", type=float, default=1e-8)
    return p


def parse_config(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    known = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in ns.items() if k in known and v is not None})


# -- problem loading ------------------------------------------------------------------------

def parse_hamiltonian(text: str, num_qubits: int) -> np.ndarray:
    d = 1 << num_qubits
    ham = np.zeros((d, d), dtype=np.complex128)
    for term in _names(text):
        label, _, coef = term.partition(":")
        p = PauliString(label.strip())
        if p.num_qubits != num_qubits:
            raise ParamArityError(f"Pauli term {label!r} spans {p.num_qubits} qubits, circuit has {num_qubits}")
        ham += (float(coef) if coef.strip() else 1.0) * p.matrix
    return ham


def _load_target(source: str) -> np.ndarray:
    if source == "ghz":
        return ghz.ghz_instance(check=False).target
    tc = load_circuit(source)
    return build_unitary(tc, np.zeros(tc.num_params))


@dataclass
class Problem:
    circuit: ParamCircuit
    target: np.ndarray | None = None
    ham: np.ndarray | None = None
    psi0: np.ndarray | None = None

    def cost(self, theta, method="exact", cfg=ShotConfig()) -> float:
        if self.ham is not None:
            check_method(method, ("exact",))
            return vqe_cost(self.circuit, theta, self.ham, self.psi0)
        return hs_cost_by(self.circuit, theta, self.target, method, cfg)

    def gradient(self, theta, method, h, cfg):
        if self.ham is not None:
            return vqe_gradient(self.circuit, theta, self.ham, self.psi0, method, 1e-4 if h is None else h)
        return hs_gradient(self.circuit, theta, self.target, method, ghz.DEFAULT_FD_STEP if h is None else h, cfg)


def load_problem(cfg: RunConfig) -> Problem:
    if cfg.circuit == "ghz":
        inst = ghz.ghz_instance(check=False)
        circuit, target = inst.ansatz, inst.target
    else:
        circuit, target = load_circuit(cfg.circuit), None
    if cfg.cost == "vqe":
        if not cfg.hamiltonian:
            raise UsageError("--cost vqe needs --hamiltonian")
        psi0 = np.zeros(circuit.dim, dtype=np.complex128)
        psi0[0] = 1.0
        return Problem(circuit, ham=parse_hamiltonian(cfg.hamiltonian, circuit.num_qubits), psi0=psi0)
    if cfg.target is not None:
        target = _load_target(cfg.target)
    if target is None:
        raise UsageError("--cost hs with a circuit file needs --target")
    if target.shape[0] != circuit.dim:
        raise ParamArityError(f"target dimension {target.shape[0]} does not match circuit {circuit.dim}")
    return Problem(circuit, target)


def _theta(cfg: RunConfig, circuit: ParamCircuit, default=None) -> np.ndarray:
    theta = cfg.theta if cfg.theta is not None else default
    if theta is None:
        raise UsageError("--theta is required")
    return circuit.check_theta(theta)


# -- output -------------------------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig, default_name: str | None = None) -> None:
    out = cfg.output
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if out is None and env_dir and default_name:
        out = f"{default_name}.{cfg.format}"
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if env_dir and not path.is_absolute():
        path = Path(env_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" keeps bytes identical across platforms
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _meta(cfg: RunConfig, **extra) -> dict:
    return ghz.run_metadata(command=cfg.command, seed=cfg.seed, shots=cfg.shots, **extra)


def cmd_cost(cfg: RunConfig) -> None:
    check_method(cfg.method, COST_METHODS)
    prob = load_problem(cfg)
    theta = _theta(cfg, prob.circuit)
    value = prob.cost(theta, cfg.method, ShotConfig(cfg.shots, cfg.seed))
    if cfg.format == "json":
        text = json.dumps({"metadata": _meta(cfg, method=cfg.method, theta=list(theta)), "cost": value}) + "\n"
    else:
        text = _csv(["method", "cost"], [[cfg.method, repr(value)]])
    _emit(text, cfg)


def cmd_grad(cfg: RunConfig) -> None:
    check_method(cfg.method, GRAD_METHODS)
    prob = load_problem(cfg)
    theta = _theta(cfg, prob.circuit)
    if cfg.h is not None and not cfg.h > 0:
        raise StepSizeError(f"step size must be positive, got {cfg.h}")
    rep = prob.gradient(theta, cfg.method, cfg.h, ShotConfig(cfg.shots, cfg.seed))
    if cfg.format == "json":
        text = json.dumps({"metadata": _meta(cfg, method=rep.method, theta=list(theta), h=rep.h),
                           "gradient": rep.values.tolist()}) + "\n"
    else:
        text = _csv(["param", "method", "value"], [[j, rep.method, repr(float(g))] for j, g in enumerate(rep.values)])
    _emit(text, cfg)


def cmd_sweep(cfg: RunConfig) -> None:
    methods = cfg.methods or list(ghz.SWEEP_METHODS)
    grid = ghz.default_grid(cfg.points)
    steps = {"fd-2pt": cfg.h, "fd-4pt": cfg.h}
    shots = ShotConfig(cfg.shots, cfg.seed)
    inst = ghz.ghz_instance(check=False)
    rows = []
    for p in (("y", "z") if cfg.param == "both" else (cfg.param,)):
        rows += ghz.derivative_sweep(p, grid, methods, steps, cfg.fixed_angle, shots, cfg.threads, inst)
    if cfg.format == "json":
        text = ghz.sweep_to_json(rows, **_meta(cfg, fixed_angle=cfg.fixed_angle, fd_step=cfg.h, points=cfg.points))
    else:
        text = ghz.sweep_to_csv(rows)
    _emit(text, cfg, "sweep")


def cmd_mse(cfg: RunConfig) -> None:
    methods = cfg.methods or list(ghz.DEFAULT_MSE_METHODS)
    steps = ghz.default_step_sizes(cfg.num_steps)
    recs = ghz.mse_experiment(steps, cfg.num_points, cfg.seed, methods, threads=cfg.threads,
                              cfg=ShotConfig(cfg.shots, cfg.seed))
    if cfg.format == "json":
        text = ghz.mse_to_json(recs, **_meta(cfg, num_points=cfg.num_points, num_steps=cfg.num_steps,
                                             domain="[0, 2pi)^2"))
    else:
        text = ghz.mse_to_csv(recs)
    _emit(text, cfg, "mse")


def cmd_optimize(cfg: RunConfig) -> None:
    check_method(cfg.method, GRAD_METHODS)
    prob = load_problem(cfg)
    theta0 = _theta(cfg, prob.circuit, default=np.ones(prob.circuit.num_params))
    base = ShotConfig(cfg.shots, cfg.seed)
    calls = itertools.count()

    def grad(t):
        return prob.gradient(t, cfg.method, cfg.h, base.sub("optimize", next(calls))).values

    theta, costs = gradient_descent(lambda t: prob.cost(t), grad, theta0, cfg.rate, cfg.max_iters, cfg.tol)
    if cfg.format == "json":
        text = json.dumps({"metadata": _meta(cfg, method=cfg.method, rate=cfg.rate, theta0=list(theta0)),
                           "theta": theta.tolist(), "costs": costs}) + "\n"
    else:
        text = _csv(["iteration", "cost"], [[k, repr(c)] for k, c in enumerate(costs)])
        text += "# theta=" + ",".join(repr(float(x)) for x in theta) + "\n"
    _emit(text, cfg, "optimize")


HANDLERS = {"cost": cmd_cost, "grad": cmd_grad, "sweep": cmd_sweep, "mse": cmd_mse, "optimize": cmd_optimize}


def _fail(exc: BaseException, code: int) -> int:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc), "exit": code})
    sys.stderr.write(line + "\n")
    return code


def run(cfg: RunConfig) -> int:
    try:
        HANDLERS[cfg.command](cfg)
    except (UsageError, ParamArityError, MethodError, StepSizeError) as exc:
        return _fail(exc, 2)
    except OSError as exc:
        return _fail(exc, 3)
    except (VqaGradError, ValueError, KeyError) as exc:
        return _fail(exc, 1)
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        return _fail(exc, 2)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
