"""Signed Pauli strings in symplectic form and Clifford conjugation.

A Pauli string on n qubits is stored as two bitmasks (x bit set on qubits
carrying X or Y, z bit set on qubits carrying Z or Y) plus a 4-valued phase
in {+1, +i, -1, -i}, kept as the exponent k of i^k. Qubit 0 is the least
significant bit of both masks and the leftmost letter in text labels.

Clifford support is exactly the gate set used by the circuit layouts here:
H, CNOT and CZ. Their conjugation tables are derived once at import from the
dense 2x2 / 4x4 definitions, so the table-driven update cannot drift from the
matrix semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AXIS_I, AXIS_X, AXIS_Y, AXIS_Z = 0, 1, 2, 3
_AXIS_LETTERS = "IXYZ"

# Single-qubit products: _MUL[a][b] = (k, c) with sigma_a sigma_b = i^k sigma_c.
_MUL = (
    ((0, 0), (0, 1), (0, 2), (0, 3)),
    ((0, 1), (0, 0), (1, 3), (3, 2)),
    ((0, 2), (3, 3), (0, 0), (1, 1)),
    ((0, 3), (1, 2), (3, 1), (0, 0)),
)

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
_SIGN_LABELS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LABEL_SIGNS = {"+": 0, "": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}

MAX_QUBITS = 16


def _axis_bits(axis: int) -> tuple[int, int]:
    return (1 if axis in (AXIS_X, AXIS_Y) else 0, 1 if axis in (AXIS_Y, AXIS_Z) else 0)


def _bits_axis(xb: int, zb: int) -> int:
    return (AXIS_I, AXIS_Z, AXIS_X, AXIS_Y)[(xb << 1) | zb]


@dataclass(frozen=True)
class PauliString:
    """Signed n-qubit Pauli operator: phase * tensor of I/X/Y/Z letters."""

    n: int
    x: int
    z: int
    phase_exp: int = 0

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count {self.n} outside [1, {MAX_QUBITS}]")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("mask bits outside qubit range")
        if self.phase_exp not in (0, 1, 2, 3):
            raise ValueError("phase exponent must be in {0,1,2,3}")

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    def axis(self, q: int) -> int:
        return _bits_axis((self.x >> q) & 1, (self.z >> q) & 1)

    def axes(self) -> tuple[int, ...]:
        return tuple(self.axis(q) for q in range(self.n))

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(q for q in range(self.n) if (m >> q) & 1)

    def y_count(self) -> int:
        return (self.x & self.z).bit_count()

    def with_phase_exp(self, k: int) -> "PauliString":
        return PauliString(self.n, self.x, self.z, k % 4)

    @classmethod
    def from_axes(cls, axes, phase_exp: int = 0) -> "PauliString":
        x = z = 0
        for q, a in enumerate(axes):
            xb, zb = _axis_bits(a)
            x |= xb << q
            z |= zb << q
        return cls(len(tuple(axes)), x, z, phase_exp % 4)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse '+XIZY' style labels: optional sign prefix, qubit 0 leftmost."""
        body = label
        exp = 0
        for prefix in ("+i", "-i", "+", "-", "i"):
            if label.startswith(prefix):
                exp = _LABEL_SIGNS[prefix]
                body = label[len(prefix):]
                break
        axes = []
        for ch in body:
            if ch not in _AXIS_LETTERS:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}")
            axes.append(_AXIS_LETTERS.index(ch))
        if not axes:
            raise ValueError(f"empty Pauli label {label!r}")
        return cls.from_axes(axes, exp)

    @classmethod
    def single(cls, n: int, qubit: int, axis: int, phase_exp: int = 0) -> "PauliString":
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} outside range for n={n}")
        xb, zb = _axis_bits(axis)
        return cls(n, xb << qubit, zb << qubit, phase_exp % 4)

    def label(self) -> str:
        letters = "".join(_AXIS_LETTERS[self.axis(q)] for q in range(self.n))
        return _SIGN_LABELS[self.phase_exp] + letters

    def __str__(self) -> str:
        return self.label()


def weight(p: PauliString) -> int:
    """Number of non-identity letters."""
    return (p.x | p.z).bit_count()


def pauli_product(p: PauliString, q: PauliString) -> PauliString:
    """Operator product p @ q, phase tracked exactly."""
    if p.n != q.n:
        raise ValueError(f"qubit counts differ: {p.n} vs {q.n}")
    exp = p.phase_exp + q.phase_exp
    both = (p.x | p.z) & (q.x | q.z)
    m = both
    while m:
        qb = (m & -m).bit_length() - 1
        exp += _MUL[p.axis(qb)][q.axis(qb)][0]
        m &= m - 1
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, exp % 4)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff [p, q] = 0; phases are irrelevant."""
    if p.n != q.n:
        raise ValueError(f"qubit counts differ: {p.n} vs {q.n}")
    return (((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) & 1) == 0


def commutator_pauli(p: PauliString, q: PauliString) -> PauliString:
    """(i/2)[p, q] for anticommuting p, q, which equals i * p * q.

    For anticommuting inputs the result is again a single signed Pauli
    string; e.g. (i/2)[Z, X] = -Y.
    """
    if commutes(p, q):
        raise ValueError("commutator_pauli requires anticommuting inputs")
    prod = pauli_product(p, q)
    return prod.with_phase_exp(prod.phase_exp + 1)


@dataclass(frozen=True)
class CliffordGate:
    """H, CNOT or CZ on named qubits. For CNOT, qubits = (control, target)."""

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        arity = {"h": 1, "cnot": 2, "cz": 2}
        if self.kind not in arity:
            raise ValueError(f"unknown Clifford kind {self.kind!r}")
        if len(self.qubits) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")
        if any(q < 0 for q in self.qubits):
            raise ValueError("negative qubit index")


def _single_qubit_matrices():
    i2 = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return (i2, x, y, z)


def _build_two_qubit_table(gate: np.ndarray) -> dict:
    """Conjugation table sigma_a(x)sigma_b -> (sign, a', b') for a 2-qubit Clifford.

    Local basis order: first qubit is the least significant bit, matching the
    global convention, so kron(second, first).
    """
    mats = _single_qubit_matrices()
    basis = {}
    for a in range(4):
        for b in range(4):
            basis[(a, b)] = np.kron(mats[b], mats[a])
    table = {}
    gdag = gate.conj().T
    for (a, b), m in basis.items():
        conj = gdag @ m @ gate
        for (a2, b2), m2 in basis.items():
            ov = np.trace(m2.conj().T @ conj) / 4.0
            if abs(ov) > 0.5:
                sign = int(round(ov.real))
                if abs(ov.real - sign) > 1e-12 or abs(ov.imag) > 1e-12 or sign not in (1, -1):
                    raise AssertionError("conjugation did not map to a signed Pauli")
                table[(a, b)] = (sign, a2, b2)
                break
        else:
            raise AssertionError("conjugation result not found in Pauli basis")
    return table


def _cnot_matrix() -> np.ndarray:
    # control = first (LSB) qubit, target = second; index = first + 2*second
    m = np.zeros((4, 4), dtype=complex)
    for first in range(2):
        for second in range(2):
            src = first + 2 * second
            dst = first + 2 * (second ^ first)
            m[dst, src] = 1.0
    return m


def _cz_matrix() -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


# H conjugation: I->I, X->Z, Y->-Y, Z->X
_H_TABLE = {0: (1, 0), 1: (1, 3), 2: (-1, 2), 3: (1, 1)}
_CNOT_TABLE = _build_two_qubit_table(_cnot_matrix())
_CZ_TABLE = _build_two_qubit_table(_cz_matrix())


def clifford_conjugate(gate: CliffordGate, p: PauliString) -> PauliString:
    """Heisenberg update C^dagger p C for C in {H, CNOT, CZ}."""
    if any(q >= p.n for q in gate.qubits):
        raise ValueError("gate qubit outside operator range")
    x, z, exp = p.x, p.z, p.phase_exp
    if gate.kind == "h":
        (q,) = gate.qubits
        sign, a2 = _H_TABLE[p.axis(q)]
        xb, zb = _axis_bits(a2)
        x = (x & ~(1 << q)) | (xb << q)
        z = (z & ~(1 << q)) | (zb << q)
        if sign < 0:
            exp += 2
    else:
        u, v = gate.qubits
        table = _CNOT_TABLE if gate.kind == "cnot" else _CZ_TABLE
        sign, a2, b2 = table[(p.axis(u), p.axis(v))]
        for qq, aa in ((u, a2), (v, b2)):
            xb, zb = _axis_bits(aa)
            x = (x & ~(1 << qq)) | (xb << qq)
            z = (z & ~(1 << qq)) | (zb << qq)
        if sign < 0:
            exp += 2
    return PauliString(p.n, x, z, exp % 4)
