"""Circuit-level estimators of ``tr(V† U)`` and of the Hilbert-Schmidt cost.

Each estimator simulates the measurement circuit as a statevector and reads off
the exact outcome probability.  With ``ShotConfig.shots > 0`` the outcome
counts are drawn binomially from that probability, using a counter-based
(Philox) stream keyed by ``(seed, tag)`` so results do not depend on call order.
"""
from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import GATE_LIBRARY, ParamCircuit, build_unitary, controlled, fixed_gate_library, shift
from .errors import DimensionError, NotDifferentiableError
from .linalg import as_matrix, as_state, basis_state, num_qubits_of

_H = GATE_LIBRARY["H"][0]
_SDG = GATE_LIBRARY["SDG"][0]
_MASK64 = (1 << 64) - 1


def _tag_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


@dataclass(frozen=True)
class ShotConfig:
    """``shots == 0`` means exact (infinite-shot) evaluation."""

    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.shots < 0:
            raise ValueError("shots must be non-negative")

    @property
    def exact(self) -> bool:
        return self.shots == 0

    def derive(self, *tag) -> ShotConfig:
        """Independent sub-configuration for the call identified by ``tag``."""
        ss = np.random.SeedSequence([self.seed & _MASK64, *(_tag_word(t) for t in tag)])
        return ShotConfig(self.shots, int(ss.generate_state(1, np.uint64)[0]))

    def sub(self, *tag) -> ShotConfig:
        """Like :meth:`derive` but free in exact mode, where no sampling happens."""
        return self if self.exact else self.derive(*tag)

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed & _MASK64)))


EXACT = ShotConfig()


@dataclass(frozen=True)
class EstimatorResult:
    value: complex | float
    std_error: float
    shots_used: int
    method: str


def _pair(u, v):
    u, v = as_matrix(u), as_matrix(v)
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    return u, v


# -- Hadamard test -------------------------------------------------------------

def _ancilla_z(w: np.ndarray, psi: np.ndarray, part: str) -> float:
    """Exact ancilla <Z> of the Hadamard-test circuit for ``<psi|w|psi>``."""
    d = w.shape[0]
    eye = np.eye(d)
    h_anc = np.kron(_H, eye)
    state = np.kron([1.0, 0.0], psi).astype(np.complex128)
    state = h_anc @ state
    state = controlled(w) @ state
    if part == "imag":
        # S† on the ancilla makes the readout +Im rather than -Im
        state = np.kron(_SDG, eye) @ state
    state = h_anc @ state
    p0 = float(np.sum(np.abs(state[:d]) ** 2))
    return 2.0 * p0 - 1.0


def _sample_pm1(mean: float, cfg: ShotConfig) -> tuple[float, float]:
    """Empirical mean and standard error of ``cfg.shots`` outcomes in {+1, -1}."""
    p0 = min(max((1.0 + mean) / 2.0, 0.0), 1.0)
    k = cfg.rng().binomial(cfg.shots, p0)
    est = 2.0 * k / cfg.shots - 1.0
    return est, float(np.sqrt(max(1.0 - est * est, 0.0) / cfg.shots))


def _hadamard_test(w, psi, part: str, cfg: ShotConfig) -> EstimatorResult:
    if part not in ("real", "imag"):
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    z = _ancilla_z(w, psi, part)
    if cfg.exact:
        return EstimatorResult(z, 0.0, 0, f"ht-{part}")
    est, se = _sample_pm1(z, cfg)
    return EstimatorResult(est, se, cfg.shots, f"ht-{part}")


def hadamard_test_term(u, v, j: int, part: str, cfg: ShotConfig = EXACT) -> EstimatorResult:
    """Estimate ``Re`` or ``Im`` of ``<j| V† U |j>`` from the ancilla readout."""
    u, v = _pair(u, v)
    psi = basis_state(u.shape[0], j)
    return _hadamard_test(v.conj().T @ u, psi, part, cfg)


def ht_trace(u, v, cfg: ShotConfig = EXACT) -> EstimatorResult:
    """``sum_j <Z>^R_j + i <Z>^I_j`` over all computational basis states."""
    u, v = _pair(u, v)
    w = v.conj().T @ u
    d = w.shape[0]
    total, var, used = 0j, 0.0, 0
    for j in range(d):
        psi = basis_state(d, j)
        re = _hadamard_test(w, psi, "real", cfg.sub("ht", j, "real"))
        im = _hadamard_test(w, psi, "imag", cfg.sub("ht", j, "imag"))
        total += re.value + 1j * im.value
        var += re.std_error**2 + im.std_error**2
        used += re.shots_used + im.shots_used
    return EstimatorResult(total, float(np.sqrt(var)), used, "ht-trace")


# -- 1-design trace estimation ----------------------------------------------------

@lru_cache(maxsize=None)
def _single_qubit_stabilizers() -> tuple[np.ndarray, ...]:
    s = 1 / np.sqrt(2)
    return tuple(np.array(v, dtype=np.complex128) for v in (
        [1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]))


def product_stabilizer_state(choice: Sequence[int]) -> np.ndarray:
    """Product of single-qubit stabilizer states; ``choice[q]`` in 0..5 picks
    |0>, |1>, |+>, |->, |+i>, |-i> for qubit ``q``."""
    singles = _single_qubit_stabilizers()
    psi = np.ones(1, dtype=np.complex128)
    for c in choice:
        psi = np.kron(psi, singles[c])
    return psi


def stabilizer_product_states(num_qubits: int):
    """All ``6**num_qubits`` product stabilizer states."""
    for choice in itertools.product(range(6), repeat=num_qubits):
        yield product_stabilizer_state(choice)


def one_design_trace(u, v, num_states: int, cfg: ShotConfig = EXACT,
                     states: Sequence[np.ndarray] | None = None) -> EstimatorResult:
    """``d * mean_psi <psi| V† U |psi>`` over product stabilizer states.

    States are drawn uniformly from the ensemble unless ``states`` is given.
    """
    u, v = _pair(u, v)
    w = v.conj().T @ u
    d = w.shape[0]
    n = num_qubits_of(d)
    if states is None:
        if num_states < 1:
            raise ValueError("num_states must be at least 1")
        picks = cfg.derive("1design-states").rng().integers(0, 6, size=(num_states, n))
        states = [product_stabilizer_state(p) for p in picks]
    else:
        states = [as_state(s) for s in states]
    samples = np.empty(len(states), dtype=np.complex128)
    used = 0
    for k, psi in enumerate(states):
        if cfg.exact:
            samples[k] = np.vdot(psi, w @ psi)
        else:
            re = _hadamard_test(w, psi, "real", cfg.sub("1design", k, "real"))
            im = _hadamard_test(w, psi, "imag", cfg.sub("1design", k, "imag"))
            samples[k] = re.value + 1j * im.value
            used += re.shots_used + im.shots_used
    value = d * samples.mean()
    se = 0.0
    if not cfg.exact and len(samples) > 1:
        se = float(d * np.sqrt(np.var(samples.real, ddof=1) + np.var(samples.imag, ddof=1))
                   / np.sqrt(len(samples)))
    return EstimatorResult(complex(value), se, used, "1-design-trace")


# -- Hilbert-Schmidt test -----------------------------------------------------------

@lru_cache(maxsize=8)
def _bell_prep(n: int) -> np.ndarray:
    """Hadamards on register A (qubits 0..n-1) then CNOT(i -> i+n)."""
    m = np.eye(1 << (2 * n), dtype=np.complex128)
    for q in range(n):
        m = fixed_gate_library("H", 2 * n, [q]).matrix @ m
    for q in range(n):
        m = fixed_gate_library("CNOT", 2 * n, [q, q + n]).matrix @ m
    m.setflags(write=False)
    return m


def hst_probability(u, v, cfg: ShotConfig = EXACT) -> EstimatorResult:
    """Probability of the all-zero outcome, ``|tr(V† U)|^2 / 4**n``."""
    u, v = _pair(u, v)
    n = num_qubits_of(u.shape[0])
    prep = _bell_prep(n)
    state = prep[:, 0]
    # with |Phi+> = sum_i |i>|i> / sqrt(d), <Phi+|A (x) B|Phi+> = tr(A^T B) / d,
    # so register A carries V* to read out tr(V† U)
    state = np.kron(v.conj(), u) @ state
    amp0 = np.vdot(prep[:, 0], state)
    p0 = float(abs(amp0) ** 2)
    if cfg.exact:
        return EstimatorResult(p0, 0.0, 0, "hst-p0")
    k = cfg.rng().binomial(cfg.shots, min(max(p0, 0.0), 1.0))
    est = k / cfg.shots
    return EstimatorResult(est, float(np.sqrt(est * (1 - est) / cfg.shots)), cfg.shots, "hst-p0")


def _require_rotation(c: ParamCircuit, theta, j: int) -> np.ndarray:
    t = c.check_theta(theta)
    if c.rotation_for(j) is None:
        raise NotDifferentiableError(f"parameter {j} does not feed a rotation gate")
    return t


def hst_cost_and_gradient(c: ParamCircuit, theta, v, j: int, cfg: ShotConfig = EXACT) -> tuple[float, float]:
    """Cost ``1 - P0`` and its derivative from P0 at ``theta +- pi/2 e_j``."""
    t = _require_rotation(c, theta, j)
    p0 = hst_probability(build_unitary(c, t), v, cfg.sub("hst", j, 0)).value
    plus = hst_probability(build_unitary(c, shift(t, j, np.pi / 2)), v, cfg.sub("hst", j, 1)).value
    minus = hst_probability(build_unitary(c, shift(t, j, -np.pi / 2)), v, cfg.sub("hst", j, 2)).value
    return 1.0 - p0, (minus - plus) / 2.0


def ht_cost(c: ParamCircuit, theta, v, cfg: ShotConfig = EXACT) -> float:
    tr = ht_trace(build_unitary(c, theta), v, cfg).value
    return 1.0 - abs(tr) ** 2 / c.dim**2


def ht_gradient(c: ParamCircuit, theta, v, j: int, cfg: ShotConfig = EXACT) -> float:
    """π-shift gradient of the compilation cost with both traces from Hadamard tests."""
    t = _require_rotation(c, theta, j)
    base = ht_trace(build_unitary(c, t), v, cfg.sub("ht-grad", j, 0)).value
    plus = ht_trace(build_unitary(c, shift(t, j, np.pi)), v, cfg.sub("ht-grad", j, 1)).value
    return -(plus * np.conj(base)).real / c.dim**2
