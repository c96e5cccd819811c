"""Exact circuit gradients and finite-difference baselines.

For a rotation ``U_j(t) = exp(-i t P_j / 2)`` with ``P_j**2 = I`` we have
``U_j(pi) = -i P_j``, hence

    dU/dt_j  =  1/2 U(theta + pi e_j)
    dU†/dt_j = -1/2 U†(theta - pi e_j)

so derivatives of the circuit unitary are themselves (scaled) circuit
evaluations.  Any cost written as a differentiable function of ``U`` and ``U†``
is then differentiated through its directional derivative, see
:class:`CostFunctional`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .circuit import ParamCircuit, build_unitary, shift
from .errors import (
    DimensionError,
    DivergenceError,
    HermiticityError,
    NotDifferentiableError,
    ResidueError,
    StepSizeError,
)
from .linalg import as_matrix, as_state, is_hermitian

RESIDUE_TOL = 1e-10

METHODS = ("exact-pi-shift", "param-shift-half-pi", "fd-2pt", "fd-4pt", "ht-estimated", "hst-estimated")


def _real(z, tol: float = RESIDUE_TOL) -> float:
    z = complex(z)
    if abs(z.imag) > tol:
        raise ResidueError(f"expected a real value, imaginary part {z.imag:.3e}")
    return z.real


def _require_rotation(c: ParamCircuit, theta, j: int) -> np.ndarray:
    t = c.check_theta(theta)
    if c.rotation_for(j) is None:
        raise NotDifferentiableError(f"parameter {j} does not feed a rotation gate")
    return t


def du_dtheta(c: ParamCircuit, theta, j: int) -> np.ndarray:
    t = _require_rotation(c, theta, j)
    return 0.5 * build_unitary(c, shift(t, j, np.pi))


def dudag_dtheta(c: ParamCircuit, theta, j: int) -> np.ndarray:
    t = _require_rotation(c, theta, j)
    return -0.5 * build_unitary(c, shift(t, j, -np.pi)).conj().T


# -- expectation-value (VQE) cost --------------------------------------------

def _check_vqe(h, psi0, d: int):
    h = as_matrix(h)
    if not is_hermitian(h):
        raise HermiticityError("Hamiltonian is not Hermitian")
    psi0 = as_state(psi0)
    if h.shape[0] != d or psi0.shape[0] != d:
        raise DimensionError(f"circuit dimension {d} does not match H {h.shape} / psi0 {psi0.shape}")
    return h, psi0


def vqe_cost(c: ParamCircuit, theta, h, psi0) -> float:
    """``<psi0| U† H U |psi0>``."""
    h, psi0 = _check_vqe(h, psi0, c.dim)
    psi = build_unitary(c, theta) @ psi0
    return _real(np.vdot(psi, h @ psi))


def vqe_parameter_shift(c: ParamCircuit, theta, h, psi0, j: int) -> float:
    t = c.check_theta(theta)
    plus = vqe_cost(c, shift(t, j, np.pi / 2), h, psi0)
    minus = vqe_cost(c, shift(t, j, -np.pi / 2), h, psi0)
    return (plus - minus) / 2


# -- Hilbert-Schmidt (compilation) cost ---------------------------------------

def hs_overlap(u, v) -> complex:
    """``tr(V† U)``."""
    u, v = as_matrix(u), as_matrix(v)
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    return complex(np.vdot(v, u))


def hs_cost(u, v) -> float:
    """``1 - |tr(V† U)|^2 / d^2``; zero iff ``U`` equals ``V`` up to a global phase."""
    d = as_matrix(u).shape[0]
    return 1.0 - abs(hs_overlap(u, v)) ** 2 / d**2


def hs_exact_gradient(c: ParamCircuit, theta, v, j: int) -> float:
    """``-Re[tr(V† U(theta + pi e_j)) tr(V† U(theta))*] / d^2``."""
    t = _require_rotation(c, theta, j)
    v = as_matrix(v)
    base = hs_overlap(build_unitary(c, t), v)
    shifted = hs_overlap(build_unitary(c, shift(t, j, np.pi)), v)
    return -(shifted * base.conjugate()).real / c.dim**2


def hs_overlap_batch(c: ParamCircuit, thetas, v) -> np.ndarray:
    v = as_matrix(v)
    if v.shape[0] != c.dim:
        raise DimensionError(f"target dimension {v.shape[0]} does not match circuit {c.dim}")
    return np.einsum("ij,bij->b", v.conj(), c.unitaries(thetas))


def hs_cost_batch(c: ParamCircuit, thetas, v) -> np.ndarray:
    return 1.0 - np.abs(hs_overlap_batch(c, thetas, v)) ** 2 / c.dim**2


def hs_exact_gradient_batch(c: ParamCircuit, thetas, v, j: int) -> np.ndarray:
    """Vectorized :func:`hs_exact_gradient` over the rows of ``thetas``."""
    thetas = np.asarray(thetas, dtype=np.float64)
    if c.rotation_for(j) is None:
        raise NotDifferentiableError(f"parameter {j} does not feed a rotation gate")
    shifted = thetas.copy()
    shifted[:, j] += np.pi
    both = hs_overlap_batch(c, np.concatenate([thetas, shifted]), v)
    base, plus = both[: len(thetas)], both[len(thetas):]
    return -(plus * base.conj()).real / c.dim**2


# -- general cost functionals -------------------------------------------------

@dataclass(frozen=True)
class CostFunctional:
    """A cost ``f[U†, U, {rho_k}, {O_k}]`` with an optional directional derivative.

    ``value(u, udag, states, observables)`` returns the cost.
    ``derivative(u, udag, du, dudag, states, observables)`` returns the
    first-order change of ``f`` when ``U -> U + du`` and ``U† -> U† + dudag``,
    treating the two arguments as independent.
    """

    value: Callable
    derivative: Optional[Callable] = None
    states: tuple = ()
    observables: tuple = ()
    name: str = "custom"

    def evaluate(self, u, udag) -> float:
        out = _real(self.value(u, udag, self.states, self.observables))
        if not np.isfinite(out):
            raise DivergenceError(f"cost functional {self.name} returned {out}")
        return out

    def directional(self, u, udag, du, dudag) -> float:
        if self.derivative is None:
            raise NotDifferentiableError(f"cost functional {self.name} has no derivative contract")
        return _real(self.derivative(u, udag, du, dudag, self.states, self.observables))

    def at(self, c: ParamCircuit, theta) -> float:
        u = build_unitary(c, theta)
        return self.evaluate(u, u.conj().T)


def vqe_functional(h, psi0) -> CostFunctional:
    h = as_matrix(h)
    if not is_hermitian(h):
        raise HermiticityError("Hamiltonian is not Hermitian")
    psi0 = as_state(psi0)

    def value(u, udag, states, obs):
        (psi,), (ham,) = states, obs
        return psi.conj() @ udag @ ham @ u @ psi

    def derivative(u, udag, du, dudag, states, obs):
        (psi,), (ham,) = states, obs
        return psi.conj() @ (udag @ ham @ du + dudag @ ham @ u) @ psi

    return CostFunctional(value, derivative, (psi0,), (h,), "vqe")


def hs_functional(v) -> CostFunctional:
    """Compilation cost against target ``v``; the target rides in ``observables``."""
    v = as_matrix(v, unitary=True)

    def value(u, udag, states, obs):
        (tgt,) = obs
        d = tgt.shape[0]
        return 1.0 - np.trace(tgt.conj().T @ u) * np.trace(udag @ tgt) / d**2

    def derivative(u, udag, du, dudag, states, obs):
        (tgt,) = obs
        d = tgt.shape[0]
        vd = tgt.conj().T
        return -(np.trace(vd @ du) * np.trace(udag @ tgt)
                 + np.trace(vd @ u) * np.trace(dudag @ tgt)) / d**2

    return CostFunctional(value, derivative, (), (v,), "hilbert-schmidt")


def general_cost_gradient(c: ParamCircuit, theta, f: CostFunctional, j: int) -> float:
    if f.derivative is None:
        raise NotDifferentiableError(f"cost functional {f.name} has no derivative contract")
    u = build_unitary(c, theta)
    return f.directional(u, u.conj().T, du_dtheta(c, theta, j), dudag_dtheta(c, theta, j))


# -- finite differences -------------------------------------------------------

# scheme -> (offsets k, weights w); derivative = sum w * [C(theta + k h e_j) - C(theta - k h e_j)] / h.
# Pairing symmetric points keeps the stencil exactly antisymmetric in floating point.
STENCILS = {
    "two-point": ((1.0,), (0.5,)),
    "four-point": ((1.0, 2.0), (8 / 12, -1 / 12)),
}
_SCHEME_ALIASES = {"fd-2pt": "two-point", "fd-4pt": "four-point", "2pt": "two-point", "4pt": "four-point"}


def _stencil(scheme: str, h: float):
    if not h > 0 or not np.isfinite(h):
        raise StepSizeError(f"step size must be positive and finite, got {h}")
    key = _SCHEME_ALIASES.get(scheme, scheme)
    if key not in STENCILS:
        raise ValueError(f"unknown finite-difference scheme {scheme!r}")
    return STENCILS[key]


def finite_difference(cost_fn: Callable, theta, j: int, h: float, scheme: str = "two-point") -> float:
    offsets, weights = _stencil(scheme, h)
    total = 0.0
    for k, w in zip(offsets, weights):
        total += w * (cost_fn(shift(theta, j, k * h)) - cost_fn(shift(theta, j, -k * h)))
    return total / h


def finite_difference_batch(cost_batch: Callable, thetas, j: int, h: float,
                            scheme: str = "two-point") -> np.ndarray:
    """Row-wise :func:`finite_difference`; ``cost_batch`` maps ``(K, M) -> (K,)``."""
    offsets, weights = _stencil(scheme, h)
    thetas = np.asarray(thetas, dtype=np.float64)
    b = thetas.shape[0]
    signed = [s * k for k in offsets for s in (1.0, -1.0)]
    stacked = np.repeat(thetas[None], len(signed), axis=0)
    for i, k in enumerate(signed):
        stacked[i, :, j] += k * h
    costs = np.asarray(cost_batch(stacked.reshape(-1, thetas.shape[1]))).reshape(len(signed), b)
    total = np.zeros(b)
    for i, w in enumerate(weights):
        total += w * (costs[2 * i] - costs[2 * i + 1])
    return total / h


# -- reports and optimization -------------------------------------------------

@dataclass
class GradientReport:
    method: str
    values: np.ndarray
    h: Optional[float] = None
    shots: Optional[int] = None
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown gradient method label {self.method!r}")
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise DivergenceError(f"non-finite gradient from {self.method}")


def gradient_descent(cost_fn: Callable, grad_fn: Callable, theta0, rate: float = 0.1,
                     max_iters: int = 10_000, tol: float = 1e-8):
    """Plain gradient descent; returns ``(theta, costs)`` with one cost per visited point."""
    if not rate > 0:
        raise ValueError("learning rate must be positive")
    theta = np.array(theta0, dtype=np.float64, copy=True)
    costs = []
    for _ in range(max_iters + 1):
        cost = float(cost_fn(theta))
        if not np.isfinite(cost):
            raise DivergenceError(f"cost became {cost} after {len(costs)} iterations")
        costs.append(cost)
        grad = np.asarray(grad_fn(theta), dtype=np.float64)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"gradient became non-finite after {len(costs)} iterations")
        if np.max(np.abs(grad), initial=0.0) < tol or len(costs) > max_iters:
            break
        theta = theta - rate * grad
    return theta, costs


def full_gradient(partial: Callable, num_params: int, params: Sequence[int] | None = None) -> np.ndarray:
    """Stack ``partial(j)`` over parameters (all by default)."""
    idx = range(num_params) if params is None else params
    return np.array([partial(j) for j in idx], dtype=np.float64)
