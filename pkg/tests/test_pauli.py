"""Pauli algebra against a dense-matrix oracle.

The oracle builds full 2^n matrices with np.kron (qubit 0 = least significant
bit, hence rightmost kron factor) and checks products, commutation and
Clifford conjugation by explicit matrix arithmetic. The implementation under
test never touches dense matrices for these operations.
"""

import numpy as np
import pytest

from qlatgan.pauli import (
    AXIS_I,
    AXIS_X,
    AXIS_Y,
    AXIS_Z,
    CliffordGate,
    PauliString,
    clifford_conjugate,
    commutator_pauli,
    commutes,
    pauli_product,
    weight,
)

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
MATS = (I2, SX, SY, SZ)


def mat(p: PauliString) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for q in range(p.n):
        out = np.kron(MATS[p.axis(q)], out)
    return p.phase * out


def gate_matrix(gate: CliffordGate, n: int) -> np.ndarray:
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    for src in range(dim):
        if gate.kind == "h":
            (q,) = gate.qubits
            b = (src >> q) & 1
            for b2 in range(2):
                dst = (src & ~(1 << q)) | (b2 << q)
                out[dst, src] += h[b2, b]
        elif gate.kind == "cnot":
            c, t = gate.qubits
            dst = src ^ (((src >> c) & 1) << t)
            out[dst, src] += 1.0
        else:  # cz
            a, b = gate.qubits
            sign = -1.0 if ((src >> a) & 1) and ((src >> b) & 1) else 1.0
            out[src, src] += sign
    return out


def random_pauli(rng, n, with_phase=True):
    axes = rng.integers(0, 4, size=n)
    exp = int(rng.integers(0, 4)) if with_phase else 0
    return PauliString.from_axes(axes, exp)


def test_product_exhaustive_one_qubit():
    for a in range(4):
        for b in range(4):
            for ea in range(4):
                for eb in range(4):
                    p = PauliString.from_axes([a], ea)
                    q = PauliString.from_axes([b], eb)
                    r = pauli_product(p, q)
                    np.testing.assert_allclose(mat(r), mat(p) @ mat(q), atol=1e-14)


def test_product_exhaustive_two_qubits():
    for ax in range(16):
        for bx in range(16):
            p = PauliString.from_axes([ax & 3, ax >> 2], ax % 4)
            q = PauliString.from_axes([bx & 3, bx >> 2], (bx + 1) % 4)
            r = pauli_product(p, q)
            np.testing.assert_allclose(mat(r), mat(p) @ mat(q), atol=1e-14)


def test_product_random_three_four_qubits():
    rng = np.random.default_rng(7)
    for _ in range(500):
        n = int(rng.integers(3, 5))
        p, q = random_pauli(rng, n), random_pauli(rng, n)
        r = pauli_product(p, q)
        np.testing.assert_allclose(mat(r), mat(p) @ mat(q), atol=1e-13)


def test_commutes_matches_matrix():
    rng = np.random.default_rng(11)
    seen = {True: 0, False: 0}
    for _ in range(400):
        n = int(rng.integers(1, 5))
        p, q = random_pauli(rng, n), random_pauli(rng, n)
        comm = mat(p) @ mat(q) - mat(q) @ mat(p)
        is_zero = bool(np.allclose(comm, 0.0, atol=1e-13))
        assert commutes(p, q) == is_zero
        seen[is_zero] += 1
    assert seen[True] > 0 and seen[False] > 0


def test_commutator_fixed_example():
    z = PauliString.from_label("Z")
    x = PauliString.from_label("X")
    assert commutator_pauli(z, x) == PauliString.from_label("-Y")


def test_commutator_matches_matrix():
    rng = np.random.default_rng(13)
    count = 0
    while count < 200:
        n = int(rng.integers(1, 5))
        p, q = random_pauli(rng, n), random_pauli(rng, n)
        if commutes(p, q):
            continue
        count += 1
        r = commutator_pauli(p, q)
        oracle = 0.5j * (mat(p) @ mat(q) - mat(q) @ mat(p))
        np.testing.assert_allclose(mat(r), oracle, atol=1e-13)


def test_commutator_rejects_commuting():
    p = PauliString.from_label("XX")
    with pytest.raises(ValueError):
        commutator_pauli(p, p)


def test_weight():
    assert weight(PauliString.from_label("IXYZ")) == 3
    assert weight(PauliString.from_label("IIII")) == 0
    assert weight(PauliString.from_label("-iY")) == 1


def test_label_roundtrip():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        p = random_pauli(rng, n)
        assert PauliString.from_label(p.label()) == p


def test_single_and_axes():
    p = PauliString.single(4, 2, AXIS_Y)
    assert p.label() == "+IIYI"
    assert p.axes() == (AXIS_I, AXIS_I, AXIS_Y, AXIS_I)
    assert p.support() == (2,)


def test_conjugate_exhaustive_two_qubits():
    gates = [
        CliffordGate("h", (0,)),
        CliffordGate("h", (1,)),
        CliffordGate("cnot", (0, 1)),
        CliffordGate("cnot", (1, 0)),
        CliffordGate("cz", (0, 1)),
    ]
    for g in gates:
        gm = gate_matrix(g, 2)
        for code in range(16):
            for exp in range(4):
                p = PauliString.from_axes([code & 3, code >> 2], exp)
                r = clifford_conjugate(g, p)
                oracle = gm.conj().T @ mat(p) @ gm
                np.testing.assert_allclose(mat(r), oracle, atol=1e-13)


def test_conjugate_random_placements():
    rng = np.random.default_rng(19)
    for _ in range(300):
        n = int(rng.integers(2, 5))
        p = random_pauli(rng, n)
        kind = ["h", "cnot", "cz"][int(rng.integers(0, 3))]
        qubits = tuple(rng.choice(n, size=1 if kind == "h" else 2, replace=False).tolist())
        g = CliffordGate(kind, qubits)
        r = clifford_conjugate(g, p)
        gm = gate_matrix(g, n)
        np.testing.assert_allclose(mat(r), gm.conj().T @ mat(p) @ gm, atol=1e-12)


def test_conjugate_fixed_examples():
    # weight collapse used by the pairwise entangler analysis
    g = CliffordGate("cnot", (0, 1))
    assert clifford_conjugate(g, PauliString.from_label("XX")) == PauliString.from_label("XI")
    # H swaps the X and Z axes and flips Y
    h = CliffordGate("h", (0,))
    assert clifford_conjugate(h, PauliString.from_label("X")) == PauliString.from_label("Z")
    assert clifford_conjugate(h, PauliString.from_label("Y")) == PauliString.from_label("-Y")


def test_conjugate_preserves_hermiticity_and_weight_profile():
    rng = np.random.default_rng(23)
    for _ in range(200):
        n = int(rng.integers(2, 5))
        p = random_pauli(rng, n, with_phase=False)
        kind = ["h", "cnot", "cz"][int(rng.integers(0, 3))]
        qubits = tuple(rng.choice(n, size=1 if kind == "h" else 2, replace=False).tolist())
        r = clifford_conjugate(CliffordGate(kind, qubits), p)
        assert r.is_hermitian


def test_validation():
    with pytest.raises(ValueError):
        PauliString(0, 0, 0)
    with pytest.raises(ValueError):
        PauliString(2, 1 << 3, 0)
    with pytest.raises(ValueError):
        CliffordGate("cnot", (1, 1))
    with pytest.raises(ValueError):
        CliffordGate("swap", (0, 1))
    with pytest.raises(ValueError):
        PauliString.from_label("XQ")
    with pytest.raises(ValueError):
        pauli_product(PauliString.from_label("X"), PauliString.from_label("XX"))
