"""Parameterized circuits built from Pauli rotations and fixed gates.

A circuit is an ordered gate list applied first-to-last, so its unitary is
``U_M ... U_2 U_1``.  Every rotation is ``exp(-i t P / 2)`` for a Pauli string
``P`` spanning the whole register and owns exactly one parameter slot.
Fixed gates carry their matrix already embedded at circuit width.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .errors import DimensionError, ParamArityError, UnknownGateError, UnitarityError
from .linalg import as_matrix, identity, is_unitary

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_SQ2 = 1 / np.sqrt(2)
_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)

# name -> (matrix, arity); multi-qubit gates list targets most-significant first
GATE_LIBRARY = {
    "I": (_PAULI["I"], 1),
    "X": (_PAULI["X"], 1),
    "Y": (_PAULI["Y"], 1),
    "Z": (_PAULI["Z"], 1),
    "H": (np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQ2, 1),
    "S": (np.diag([1, 1j]).astype(np.complex128), 1),
    "SDG": (np.diag([1, -1j]).astype(np.complex128), 1),
    "T": (np.diag([1, np.exp(1j * np.pi / 4)]), 1),
    "CNOT": (_CX, 2),
    "CX": (_CX, 2),
    "CZ": (np.diag([1, 1, 1, -1]).astype(np.complex128), 2),
    "SWAP": (np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128), 2),
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("YI")``.

    Character ``k`` acts on qubit ``k``.
    """

    labels: str

    def __post_init__(self):
        labels = self.labels.upper()
        if not labels or any(ch not in _PAULI for ch in labels):
            raise ValueError(f"not a Pauli string: {self.labels!r}")
        object.__setattr__(self, "labels", labels)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.ones((1, 1), dtype=np.complex128)
        for ch in self.labels:
            m = np.kron(m, _PAULI[ch])
        m.setflags(write=False)
        return m

    @property
    def x_mask(self) -> int:
        return _mask(self.labels, "XY")

    @property
    def z_mask(self) -> int:
        return _mask(self.labels, "ZY")

    def signed_permutation(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows of ``P @ A`` as ``phase[r] * A[perm[r]]``."""
        d = 1 << self.num_qubits
        rows = np.arange(d)
        perm = rows ^ self.x_mask
        parity = np.array([bin(c & self.z_mask).count("1") & 1 for c in perm])
        phase = (1j ** self.labels.count("Y")) * (1 - 2 * parity)
        return perm.astype(np.int64), phase.astype(np.complex128)

    def __str__(self):
        return self.labels


def _mask(labels: str, chars: str) -> int:
    n = len(labels)
    return sum(1 << (n - 1 - q) for q, ch in enumerate(labels) if ch in chars)


@dataclass(frozen=True)
class Rotation:
    generator: PauliString
    param: int

    def __post_init__(self):
        if not isinstance(self.generator, PauliString):
            object.__setattr__(self, "generator", PauliString(self.generator))
        if self.param < 0:
            raise ValueError("param index must be non-negative")


@dataclass(frozen=True, eq=False)
class Fixed:
    name: str
    matrix: np.ndarray = field(repr=False)
    targets: tuple[int, ...] = ()


Gate = Union[Rotation, Fixed]


def rot(pauli: str | PauliString, param: int) -> Rotation:
    return Rotation(PauliString(str(pauli)), int(param))


def embed(matrix, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Lift a k-qubit matrix acting on ``targets`` to the full register."""
    m = as_matrix(matrix)
    k = len(targets)
    if m.shape[0] != 1 << k:
        raise DimensionError(f"{k} targets need a {1 << k}x{1 << k} matrix, got {m.shape}")
    if len(set(targets)) != k or any(not 0 <= t < num_qubits for t in targets):
        raise ValueError(f"invalid targets {list(targets)} for {num_qubits} qubits")
    d = 1 << num_qubits
    shifts = [num_qubits - 1 - t for t in targets]
    clear = ~sum(1 << s for s in shifts)
    out = np.zeros((d, d), dtype=np.complex128)
    for col in range(d):
        sub_in = 0
        for s in shifts:
            sub_in = (sub_in << 1) | ((col >> s) & 1)
        base = col & clear
        for sub_out in range(1 << k):
            amp = m[sub_out, sub_in]
            if amp == 0:
                continue
            row = base
            for pos, s in enumerate(shifts):
                row |= ((sub_out >> (k - 1 - pos)) & 1) << s
            out[row, col] += amp
    return out


def fixed_gate_library(name: str, num_qubits: int, targets: Sequence[int]) -> Fixed:
    """Named fixed gate embedded in an ``num_qubits`` register.

    For two-qubit gates the first target is the control (CNOT) or the more
    significant factor.
    """
    key = name.upper()
    if key not in GATE_LIBRARY:
        raise UnknownGateError(f"unknown gate {name!r}")
    base, arity = GATE_LIBRARY[key]
    targets = tuple(int(t) for t in targets)
    if len(targets) != arity:
        raise ValueError(f"gate {key} takes {arity} target(s), got {len(targets)}")
    full = embed(base, targets, num_qubits)
    full.setflags(write=False)
    return Fixed(key, full, targets)


def fixed_matrix(matrix, num_qubits: int, targets: Sequence[int] | None = None,
                 name: str = "U") -> Fixed:
    """Fixed gate from an explicit unitary (whole register when no targets)."""
    m = as_matrix(matrix, unitary=True)
    if targets is None:
        targets = tuple(range(num_qubits))
    full = embed(m, tuple(targets), num_qubits)
    full.setflags(write=False)
    return Fixed(name, full, tuple(targets))


def controlled(u) -> np.ndarray:
    """``[[I, 0], [0, u]]`` with the control as the most significant qubit."""
    u = as_matrix(u)
    if not is_unitary(u):
        raise UnitarityError("controlled() needs a unitary")
    d = u.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = u
    return out


def rotation_matrix(p: PauliString | str, angle: float) -> np.ndarray:
    if not isinstance(p, PauliString):
        p = PauliString(p)
    d = 1 << p.num_qubits
    return np.cos(angle / 2) * np.eye(d, dtype=np.complex128) - 1j * np.sin(angle / 2) * p.matrix


class ParamCircuit:
    """Immutable ordered gate list on ``num_qubits`` qubits with ``num_params`` angles."""

    def __init__(self, num_qubits: int, gates: Sequence[Gate] = (), num_params: int | None = None):
        if num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        self.num_qubits = int(num_qubits)
        self.gates = tuple(gates)
        d = self.dim
        seen = set()
        for g in self.gates:
            if isinstance(g, Rotation):
                if g.generator.num_qubits != num_qubits:
                    raise DimensionError(
                        f"generator {g.generator} spans {g.generator.num_qubits} qubits, "
                        f"circuit has {num_qubits}")
                if g.param in seen:
                    raise ValueError(f"parameter {g.param} feeds more than one rotation")
                seen.add(g.param)
            elif isinstance(g, Fixed):
                if g.matrix.shape != (d, d):
                    raise DimensionError(f"fixed gate {g.name} has shape {g.matrix.shape}, need {(d, d)}")
                if not is_unitary(g.matrix):
                    raise UnitarityError(f"fixed gate {g.name} is not unitary")
            else:
                raise TypeError(f"not a gate: {g!r}")
        if num_params is None:
            num_params = max(seen) + 1 if seen else 0
        if seen and max(seen) >= num_params:
            raise ParamArityError(f"rotation uses parameter {max(seen)} but circuit declares {num_params}")
        self.num_params = int(num_params)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def __repr__(self):
        return f"ParamCircuit(num_qubits={self.num_qubits}, gates={len(self.gates)}, num_params={self.num_params})"

    def rotation_for(self, j: int) -> tuple[int, Rotation] | None:
        for pos, g in enumerate(self.gates):
            if isinstance(g, Rotation) and g.param == j:
                return pos, g
        return None

    @cached_property
    def compiled(self):
        """Gate table consumed by the batched evolution kernels."""
        d, n_g = self.dim, len(self.gates)
        kinds = np.zeros(n_g, dtype=np.int8)
        pidx = np.full(n_g, -1, dtype=np.int64)
        perm = np.tile(np.arange(d, dtype=np.int64), (n_g, 1))
        phase = np.ones((n_g, d), dtype=np.complex128)
        fixed = np.zeros((n_g, d, d), dtype=np.complex128)
        for g, gate in enumerate(self.gates):
            if isinstance(gate, Rotation):
                kinds[g] = _kernels.ROTATION
                pidx[g] = gate.param
                perm[g], phase[g] = gate.generator.signed_permutation()
            else:
                kinds[g] = _kernels.FIXED
                fixed[g] = gate.matrix
        return kinds, pidx, perm, phase, fixed

    def check_theta(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=np.float64)
        if t.ndim != 1 or t.shape[0] != self.num_params:
            raise ParamArityError(f"expected {self.num_params} parameters, got shape {t.shape}")
        return t

    def unitary(self, theta) -> np.ndarray:
        return build_unitary(self, theta)

    def unitaries(self, thetas) -> np.ndarray:
        """Stack of unitaries for a ``(B, num_params)`` array of parameter rows."""
        t = np.asarray(thetas, dtype=np.float64)
        if t.ndim != 2 or t.shape[1] != self.num_params:
            raise ParamArityError(f"expected shape (B, {self.num_params}), got {t.shape}")
        if self.num_params == 0:
            # kernels index a (B, 0) array; give them a dummy column
            t = np.zeros((t.shape[0], 1))
        return _kernels.evolve_batch(*self.compiled, t)

    def __add__(self, other: ParamCircuit) -> ParamCircuit:
        """Run ``self`` then ``other``; ``other``'s parameters follow ``self``'s."""
        if other.num_qubits != self.num_qubits:
            raise DimensionError("cannot concatenate circuits of different width")
        off = self.num_params
        moved = [Rotation(g.generator, g.param + off) if isinstance(g, Rotation) else g
                 for g in other.gates]
        return ParamCircuit(self.num_qubits, self.gates + tuple(moved), off + other.num_params)

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            if isinstance(g, Rotation):
                gates.append({"type": "rot", "pauli": g.generator.labels, "param": g.param})
            elif g.name in GATE_LIBRARY:
                gates.append({"type": "fixed", "name": g.name, "targets": list(g.targets)})
            else:
                local = _local_matrix(g)
                gates.append({"type": "fixed", "name": g.name, "targets": list(g.targets),
                              "matrix": [[[z.real, z.imag] for z in row] for row in local]})
        return {"num_qubits": self.num_qubits, "params": self.num_params, "gates": gates}

    @classmethod
    def from_dict(cls, data: dict) -> ParamCircuit:
        n = int(data["num_qubits"])
        gates: list[Gate] = []
        for entry in data.get("gates", []):
            kind = entry.get("type")
            if kind == "rot":
                gates.append(rot(entry["pauli"], entry["param"]))
            elif kind == "fixed":
                targets = entry.get("targets", list(range(n)))
                if "matrix" in entry:
                    m = np.array([[complex(*z) for z in row] for row in entry["matrix"]])
                    gates.append(fixed_matrix(m, n, targets, entry.get("name", "U")))
                else:
                    gates.append(fixed_gate_library(entry["name"], n, targets))
            else:
                raise ValueError(f"unknown gate entry type {kind!r}")
        return cls(n, gates, data.get("params"))


def _local_matrix(g: Fixed) -> np.ndarray:
    # recover the k-qubit block from the embedded matrix (other qubits at |0>)
    n = g.matrix.shape[0].bit_length() - 1
    k = len(g.targets)
    idx = []
    for sub in range(1 << k):
        full = 0
        for pos, t in enumerate(g.targets):
            full |= ((sub >> (k - 1 - pos)) & 1) << (n - 1 - t)
        idx.append(full)
    return g.matrix[np.ix_(idx, idx)]


def load_circuit(source: str | Path | dict) -> ParamCircuit:
    if isinstance(source, dict):
        return ParamCircuit.from_dict(source)
    with open(source) as fh:
        return ParamCircuit.from_dict(json.load(fh))


def dump_circuit(circuit: ParamCircuit, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(circuit.to_dict(), fh, indent=2)
        fh.write("\n")


def build_unitary(c: ParamCircuit, theta) -> np.ndarray:
    t = c.check_theta(theta)
    if not c.gates:
        return identity(c.dim)
    return c.unitaries(t[None, :])[0]


def shift(theta, j: int, s: float) -> np.ndarray:
    """Copy of ``theta`` with ``theta[j] += s``."""
    out = np.array(theta, dtype=np.float64, copy=True)
    if not 0 <= j < out.shape[0]:
        raise IndexError(f"parameter index {j} out of range for {out.shape[0]} parameters")
    out[j] += s
    return out
