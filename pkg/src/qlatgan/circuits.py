"""Circuit container: Clifford gates plus Pauli-generator rotations.

A rotation gate applies exp(-i P theta/2) for a Hermitian Pauli generator P
and reads its angle from a slot in the circuit's angle vector. Circuits are
compiled once into flat integer/complex arrays so the simulation kernels can
execute a whole program in a single call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import MAX_QUBITS, CliffordGate, PauliString

KIND_H, KIND_CNOT, KIND_CZ, KIND_ROT = 0, 1, 2, 3


@dataclass(frozen=True)
class RotationGate:
    """exp(-i * generator * angle / 2); the angle lives in slot `angle_slot`."""

    generator: PauliString
    angle_slot: int

    def __post_init__(self):
        if self.generator.is_identity:
            raise ValueError("rotation generator must be non-identity")
        if not self.generator.is_hermitian:
            raise ValueError("rotation generator must have phase +1 or -1")
        if self.angle_slot < 0:
            raise ValueError("negative angle slot")


@dataclass
class Circuit:
    n_qubits: int
    gates: list
    angle_count: int
    _compiled: "CompiledCircuit | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"qubit count {self.n_qubits} outside [1, {MAX_QUBITS}]")
        for g in self.gates:
            if isinstance(g, CliffordGate):
                if any(q >= self.n_qubits for q in g.qubits):
                    raise ValueError("gate qubit outside register")
            elif isinstance(g, RotationGate):
                if g.generator.n != self.n_qubits:
                    raise ValueError("generator width does not match register")
                if g.angle_slot >= self.angle_count:
                    raise ValueError("angle slot outside angle vector")
            else:
                raise TypeError(f"unsupported gate type {type(g).__name__}")

    @property
    def rotation_count(self) -> int:
        return sum(1 for g in self.gates if isinstance(g, RotationGate))

    def compiled(self) -> "CompiledCircuit":
        if self._compiled is None:
            self._compiled = compile_circuit(self)
        return self._compiled


@dataclass
class CompiledCircuit:
    """Flat program arrays consumed by the simulation kernels."""

    n_qubits: int
    angle_count: int
    kind: np.ndarray   # int64, KIND_* per gate
    q1: np.ndarray     # int64: H qubit / CNOT control / CZ first
    q2: np.ndarray     # int64: CNOT target / CZ second, -1 otherwise
    xmask: np.ndarray  # int64, rotation generator X|Y support
    zmask: np.ndarray  # int64, rotation generator Z|Y support
    gphase: np.ndarray  # complex128, sign * i^(#Y) of the generator
    slot: np.ndarray   # int64, angle slot, -1 for Cliffords

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


def pauli_program_args(p: PauliString) -> tuple[int, int, complex]:
    """(xmask, zmask, normal-form phase) for kernel-side application of p.

    p = gphase * X^xmask Z^zmask with gphase = phase * i^(#Y letters).
    """
    gph = p.phase * (1j) ** p.y_count()
    return p.x, p.z, gph


def compile_circuit(c: Circuit) -> CompiledCircuit:
    m = len(c.gates)
    kind = np.zeros(m, dtype=np.int64)
    q1 = np.full(m, -1, dtype=np.int64)
    q2 = np.full(m, -1, dtype=np.int64)
    xmask = np.zeros(m, dtype=np.int64)
    zmask = np.zeros(m, dtype=np.int64)
    gphase = np.zeros(m, dtype=np.complex128)
    slot = np.full(m, -1, dtype=np.int64)
    for i, g in enumerate(c.gates):
        if isinstance(g, CliffordGate):
            if g.kind == "h":
                kind[i] = KIND_H
                q1[i] = g.qubits[0]
            elif g.kind == "cnot":
                kind[i] = KIND_CNOT
                q1[i], q2[i] = g.qubits
            else:
                kind[i] = KIND_CZ
                q1[i], q2[i] = g.qubits
        else:
            kind[i] = KIND_ROT
            xm, zm, gph = pauli_program_args(g.generator)
            xmask[i], zmask[i], gphase[i] = xm, zm, gph
            slot[i] = g.angle_slot
    return CompiledCircuit(c.n_qubits, c.angle_count, kind, q1, q2, xmask, zmask, gphase, slot)
