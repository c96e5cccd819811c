import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqagrad.circuit import (
    ParamCircuit,
    PauliString,
    build_unitary,
    controlled,
    dump_circuit,
    embed,
    fixed_gate_library,
    fixed_matrix,
    load_circuit,
    rot,
    rotation_matrix,
    shift,
)
from vqagrad.errors import DimensionError, ParamArityError, UnitarityError, UnknownGateError
from vqagrad.linalg import is_unitary

from conftest import ghz_v, random_circuit, random_unitary

Z = np.diag([1.0, -1.0])


def test_rotation_matrix_examples():
    assert np.allclose(rotation_matrix("Z", 0.0), np.eye(2), atol=0)
    assert np.allclose(rotation_matrix("Z", np.pi), -1j * Z, atol=1e-15)
    expected = np.array([[1, -1], [1, 1]]) / np.sqrt(2)
    assert np.allclose(rotation_matrix("Y", np.pi / 2), expected, atol=1e-15)


def test_pauli_string_rejects_non_pauli():
    with pytest.raises(ValueError):
        PauliString("XA")
    with pytest.raises(ValueError):
        PauliString("")


@pytest.mark.parametrize("labels", ["X", "Y", "Z", "XY", "YZI", "IYY", "ZXYI"])
def test_signed_permutation_reproduces_matrix(labels):
    p = PauliString(labels)
    perm, phase = p.signed_permutation()
    a = np.arange(p.matrix.size, dtype=complex).reshape(p.matrix.shape) + 1j
    assert np.array_equal(phase[:, None] * a[perm], p.matrix @ a)


def test_build_unitary_empty_and_single():
    c = ParamCircuit(2)
    assert np.array_equal(build_unitary(c, []), np.eye(4))
    c = ParamCircuit(2, [rot("YI", 0)])
    t = 0.77
    assert np.allclose(build_unitary(c, [t]), np.kron(rotation_matrix("Y", t), np.eye(2)), atol=1e-15)


def test_build_unitary_ghz_trace_magnitude():
    c = ParamCircuit(2, [rot("YI", 0), rot("ZI", 1), fixed_gate_library("CNOT", 2, [0, 1])])
    for ty, tz in [(0.3, 2.0), (1.1, -0.4), (3.0, 5.5)]:
        tr = np.trace(ghz_v().conj().T @ build_unitary(c, [ty, tz]))
        assert abs(abs(tr) ** 2 - 8 * np.sin(tz / 2) ** 2 * np.cos(ty / 2) ** 2) < 1e-12


def test_build_unitary_arity():
    c = ParamCircuit(1, [rot("Z", 0)])
    with pytest.raises(ParamArityError):
        build_unitary(c, [0.1, 0.2])


def test_shift_examples():
    theta = np.array([0.1, 0.2])
    assert np.array_equal(shift(theta, 0, np.pi), [0.1 + np.pi, 0.2])
    assert np.array_equal(shift(theta, 1, -np.pi / 2), [0.1, 0.2 - np.pi / 2])
    assert np.allclose(shift(shift(theta, 1, np.pi), 1, -np.pi), theta, atol=1e-15)
    assert np.array_equal(theta, [0.1, 0.2])
    with pytest.raises(IndexError):
        shift(theta, 2, 1.0)


def test_fixed_gate_library_examples():
    cx = fixed_gate_library("CNOT", 2, [0, 1]).matrix
    assert np.array_equal(cx, np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
    assert np.array_equal(fixed_gate_library("S", 1, [0]).matrix, np.diag([1, 1j]))
    assert np.allclose(fixed_gate_library("H", 1, [0]).matrix,
                       np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=0)
    with pytest.raises(UnknownGateError):
        fixed_gate_library("FOO", 1, [0])
    with pytest.raises(ValueError):
        fixed_gate_library("CNOT", 2, [0, 0])


def test_reversed_cnot_and_embedding_order():
    # control on qubit 1 (least significant), target qubit 0
    cx10 = fixed_gate_library("CNOT", 2, [1, 0]).matrix
    assert np.array_equal(cx10, np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]))
    x = np.array([[0, 1], [1, 0]])
    assert np.array_equal(embed(x, [1], 3), np.kron(np.kron(np.eye(2), x), np.eye(2)))


def test_controlled_examples():
    x = np.array([[0, 1], [1, 0]])
    assert np.array_equal(controlled(x), fixed_gate_library("CNOT", 2, [0, 1]).matrix)
    assert np.array_equal(controlled(np.eye(4)), np.eye(8))
    with pytest.raises(UnitarityError):
        controlled(np.ones((2, 2)))


def test_controlled_minus_iz_hadamard_test():
    # |+> on the ancilla, |0> on the system, readout <Z> = Re<0|-iZ|0> = 0
    h = fixed_gate_library("H", 2, [0]).matrix
    state = h @ controlled(-1j * Z) @ h @ np.array([1, 0, 0, 0], dtype=complex)
    p0 = np.sum(np.abs(state[:2]) ** 2)
    assert abs(2 * p0 - 1) < 1e-15


def test_circuit_rejects_shared_or_out_of_range_params():
    with pytest.raises(ValueError):
        ParamCircuit(1, [rot("Z", 0), rot("X", 0)])
    with pytest.raises(ParamArityError):
        ParamCircuit(1, [rot("Z", 3)], num_params=2)
    with pytest.raises(DimensionError):
        ParamCircuit(2, [rot("Z", 0)])


def test_json_roundtrip(tmp_path, rng):
    c = ParamCircuit(2, [rot("YI", 0), fixed_gate_library("CNOT", 2, [1, 0]), rot("XZ", 1),
                         fixed_matrix(random_unitary(2, rng), 2, [1], "W")])
    path = tmp_path / "c.json"
    dump_circuit(c, path)
    again = load_circuit(path)
    theta = [0.4, -1.3]
    assert np.allclose(build_unitary(again, theta), build_unitary(c, theta), atol=1e-15)
    data = json.loads(path.read_text())
    assert data["gates"][0] == {"type": "rot", "pauli": "YI", "param": 0}
    assert data["gates"][1] == {"type": "fixed", "name": "CNOT", "targets": [1, 0]}


def test_load_documented_format():
    c = load_circuit({"num_qubits": 2, "params": 2, "gates": [
        {"type": "rot", "pauli": "YI", "param": 0},
        {"type": "rot", "pauli": "ZI", "param": 1},
        {"type": "fixed", "name": "CNOT", "targets": [0, 1]}]})
    assert c.num_params == 2 and len(c.gates) == 3


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_build_unitary_is_unitary(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng)
    assert is_unitary(build_unitary(c, rng.uniform(-10, 10, c.num_params)), 1e-10)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_composition(seed):
    rng = np.random.default_rng(seed)
    a = random_circuit(rng, min_qubits=2, max_qubits=2)
    b = random_circuit(rng, min_qubits=2, max_qubits=2)
    ta, tb = rng.uniform(-4, 4, a.num_params), rng.uniform(-4, 4, b.num_params)
    joint = build_unitary(a + b, np.concatenate([ta, tb]))
    assert np.max(np.abs(joint - build_unitary(b, tb) @ build_unitary(a, ta))) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(-20, 20))
def test_rotation_periodicity_and_pi_identity(seed, angle):
    rng = np.random.default_rng(seed)
    p = PauliString("".join(rng.choice(list("IXYZ"), size=int(rng.integers(1, 4)))))
    assert np.max(np.abs(rotation_matrix(p, angle + 4 * np.pi) - rotation_matrix(p, angle))) < 1e-12
    assert np.max(np.abs(rotation_matrix(p, np.pi) + 1j * p.matrix)) < 1e-12
    assert is_unitary(rotation_matrix(p, angle), 1e-12)
