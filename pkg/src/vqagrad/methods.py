"""Method-label dispatch shared by the benchmark and the command line."""
from __future__ import annotations

import numpy as np

from .circuit import ParamCircuit, build_unitary
from .errors import MethodError
from .gradients import (
    GradientReport,
    finite_difference,
    general_cost_gradient,
    hs_cost,
    hs_exact_gradient,
    vqe_cost,
    vqe_functional,
    vqe_parameter_shift,
)
from .subroutines import EXACT, ShotConfig, hst_cost_and_gradient, hst_probability, ht_cost, ht_gradient

GRAD_METHODS = ("exact", "param-shift", "fd-2pt", "fd-4pt", "ht", "hst")
COST_METHODS = ("exact", "ht", "hst")

REPORT_LABEL = {
    "exact": "exact-pi-shift",
    "param-shift": "param-shift-half-pi",
    "fd-2pt": "fd-2pt",
    "fd-4pt": "fd-4pt",
    "ht": "ht-estimated",
    "hst": "hst-estimated",
}


def check_method(method: str, allowed=GRAD_METHODS) -> str:
    if method not in allowed:
        raise MethodError(f"unknown method {method!r}; choose from {', '.join(allowed)}")
    return method


def hs_cost_by(c: ParamCircuit, theta, v, method: str = "exact", cfg: ShotConfig = EXACT) -> float:
    check_method(method, COST_METHODS)
    if method == "exact":
        return hs_cost(build_unitary(c, theta), v)
    if method == "ht":
        return ht_cost(c, theta, v, cfg)
    return 1.0 - hst_probability(build_unitary(c, theta), v, cfg).value


def hs_partial(c: ParamCircuit, theta, v, j: int, method: str, h: float = 0.5,
               cfg: ShotConfig = EXACT) -> float:
    check_method(method)
    if method == "exact":
        return hs_exact_gradient(c, theta, v, j)
    if method == "ht":
        return ht_gradient(c, theta, v, j, cfg)
    if method == "hst":
        return hst_cost_and_gradient(c, theta, v, j, cfg)[1]
    cost = lambda t: hs_cost(build_unitary(c, t), v)  # noqa: E731
    if method == "param-shift":
        return (cost(_shifted(theta, j, np.pi / 2)) - cost(_shifted(theta, j, -np.pi / 2))) / 2
    return finite_difference(cost, theta, j, h, method)


def _shifted(theta, j, s):
    t = np.array(theta, dtype=np.float64)
    t[j] += s
    return t


def hs_gradient(c: ParamCircuit, theta, v, method: str = "exact", h: float = 0.5,
                cfg: ShotConfig = EXACT) -> GradientReport:
    theta = c.check_theta(theta)
    values = [hs_partial(c, theta, v, j, method, h, cfg) for j in range(c.num_params)]
    return _report(method, values, h, cfg)


def vqe_gradient(c: ParamCircuit, theta, ham, psi0, method: str = "exact", h: float = 1e-4) -> GradientReport:
    check_method(method)
    if method in ("ht", "hst"):
        raise MethodError(f"method {method!r} estimates trace overlaps and does not apply to VQE costs")
    theta = c.check_theta(theta)
    f = vqe_functional(ham, psi0)
    values = []
    for j in range(c.num_params):
        if method == "exact":
            values.append(general_cost_gradient(c, theta, f, j))
        elif method == "param-shift":
            values.append(vqe_parameter_shift(c, theta, ham, psi0, j))
        else:
            values.append(finite_difference(lambda t: vqe_cost(c, t, ham, psi0), theta, j, h, method))
    return _report(method, values, h, EXACT)


def _report(method, values, h, cfg) -> GradientReport:
    fd = method.startswith("fd")
    estimated = method in ("ht", "hst")
    return GradientReport(REPORT_LABEL[method], values,
                          h=h if fd else None,
                          shots=cfg.shots if estimated else None,
                          seed=cfg.seed if estimated and not cfg.exact else None)
