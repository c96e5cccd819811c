import numpy as np
import pytest
from scipy.linalg import expm

from vqagrad.circuit import GATE_LIBRARY, ParamCircuit, Rotation, fixed_gate_library, rot

FIXED_1Q = ("H", "S", "X", "T")
FIXED_2Q = ("CNOT", "CZ", "SWAP")


def random_unitary(d, rng):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pauli(n, rng):
    return "".join(rng.choice(list("IXYZ"), size=n))


def random_circuit(rng, max_qubits=3, max_gates=6, min_qubits=1):
    """Random circuit with at least one rotation; parameters numbered in gate order."""
    n = int(rng.integers(min_qubits, max_qubits + 1))
    n_gates = int(rng.integers(1, max_gates + 1))
    gates, m = [], 0
    for k in range(n_gates):
        if k == 0 or rng.random() < 0.6:
            gates.append(rot(random_pauli(n, rng), m))
            m += 1
        elif n >= 2 and rng.random() < 0.5:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(fixed_gate_library(str(rng.choice(FIXED_2Q)), n, [int(a), int(b)]))
        else:
            gates.append(fixed_gate_library(str(rng.choice(FIXED_1Q)), n, [int(rng.integers(n))]))
    return ParamCircuit(n, gates, m)


def product_form(c, theta, insert_at=None):
    """Unitary as an explicit left-multiplied product of exp(-i t P / 2) and fixed
    matrices; with ``insert_at`` the generator of that parameter is inserted
    before its rotation (the derivative's Pauli-insertion form without -i/2)."""
    u = np.eye(c.dim, dtype=complex)
    for g in c.gates:
        if isinstance(g, Rotation):
            p = g.generator.matrix
            gate = expm(-0.5j * theta[g.param] * p)
            if g.param == insert_at:
                gate = p @ gate
        else:
            gate = g.matrix
        u = gate @ u
    return u


def ghz_v():
    h = GATE_LIBRARY["H"][0]
    vdag = GATE_LIBRARY["CNOT"][0] @ np.kron(h, np.eye(2))
    return vdag.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
