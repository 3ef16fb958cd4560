"""Hot statevector kernels, numba-compiled.

Same contract as numpy_kernels: in-place complex128 amplitude updates, qubit 0
is the least significant index bit, gates never renormalize. Whole programs
(and whole Monte Carlo batches) execute inside one compiled call so the python
dispatch cost does not multiply with draw counts.
"""

import numpy as np
from numba import njit

KIND_H, KIND_CNOT, KIND_CZ, KIND_ROT = 0, 1, 2, 3
_RSQRT2 = 1.0 / np.sqrt(2.0)


@njit(cache=True, inline="always")
def _parity(v):
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


@njit(cache=True, inline="always")
def _insert_zero(base, pos):
    return ((base >> pos) << (pos + 1)) | (base & ((1 << pos) - 1))


@njit(cache=True, inline="always")
def _lowest_bit_pos(x):
    pos = 0
    while ((x >> pos) & 1) == 0:
        pos += 1
    return pos


@njit(cache=True)
def _apply_h(state, q):
    half = state.shape[0] >> 1
    bit = 1 << q
    for base in range(half):
        i0 = _insert_zero(base, q)
        i1 = i0 | bit
        a = state[i0]
        b = state[i1]
        state[i0] = (a + b) * _RSQRT2
        state[i1] = (a - b) * _RSQRT2


@njit(cache=True)
def _apply_cnot(state, c, t):
    dim = state.shape[0]
    tbit = 1 << t
    for i in range(dim):
        if ((i >> c) & 1) == 1 and ((i >> t) & 1) == 0:
            j = i | tbit
            tmp = state[i]
            state[i] = state[j]
            state[j] = tmp


@njit(cache=True)
def _apply_cz(state, a, b):
    dim = state.shape[0]
    for i in range(dim):
        if ((i >> a) & 1) == 1 and ((i >> b) & 1) == 1:
            state[i] = -state[i]


@njit(cache=True)
def _apply_rot(state, xm, zm, gph, ch, sh):
    # exp(-i P theta/2) with cos/sin of the half angle supplied by the caller
    dim = state.shape[0]
    msh = -1j * sh * gph
    if xm == 0:
        for i in range(dim):
            pm = 1.0 - 2.0 * _parity(i & zm)
            state[i] = state[i] * (ch + msh * pm)
    else:
        pos = _lowest_bit_pos(xm)
        for base in range(dim >> 1):
            i0 = _insert_zero(base, pos)
            i1 = i0 ^ xm
            pm0 = 1.0 - 2.0 * _parity(i0 & zm)
            pm1 = 1.0 - 2.0 * _parity(i1 & zm)
            a = state[i0]
            b = state[i1]
            state[i0] = ch * a + msh * pm1 * b
            state[i1] = ch * b + msh * pm0 * a


@njit(cache=True)
def _pauli_bilinear(lam, psi, xm, zm, gph):
    # <lam | P | psi> with P = gph * X^xm Z^zm
    acc = 0.0 + 0.0j
    for i in range(psi.shape[0]):
        pm = 1.0 - 2.0 * _parity(i & zm)
        acc += np.conj(lam[i ^ xm]) * (gph * pm) * psi[i]
    return acc


@njit(cache=True)
def pauli_expectation(state, xm, zm, gph):
    return _pauli_bilinear(state, state, xm, zm, gph).real


@njit(cache=True)
def pauli_apply(out, state, xm, zm, gph):
    for i in range(state.shape[0]):
        pm = 1.0 - 2.0 * _parity(i & zm)
        out[i ^ xm] = (gph * pm) * state[i]


@njit(cache=True)
def run_program(state, kind, q1, q2, xmask, zmask, gphase, slot, angles):
    for g in range(kind.shape[0]):
        k = kind[g]
        if k == KIND_H:
            _apply_h(state, q1[g])
        elif k == KIND_CNOT:
            _apply_cnot(state, q1[g], q2[g])
        elif k == KIND_CZ:
            _apply_cz(state, q1[g], q2[g])
        else:
            th = 0.5 * angles[slot[g]]
            _apply_rot(state, xmask[g], zmask[g], gphase[g], np.cos(th), np.sin(th))


@njit(cache=True)
def adjoint_sweep(psi, lam, kind, q1, q2, xmask, zmask, gphase, slot, angles, grad):
    """Reverse sweep: psi is the final state, lam = O psi on entry.

    Accumulates d<O>/d(angle slot) = Im <lam_g | P | psi_g> into grad and
    leaves psi, lam conjugated back to the circuit input.
    """
    for g in range(kind.shape[0] - 1, -1, -1):
        k = kind[g]
        if k == KIND_H:
            _apply_h(psi, q1[g])
            _apply_h(lam, q1[g])
        elif k == KIND_CNOT:
            _apply_cnot(psi, q1[g], q2[g])
            _apply_cnot(lam, q1[g], q2[g])
        elif k == KIND_CZ:
            _apply_cz(psi, q1[g], q2[g])
            _apply_cz(lam, q1[g], q2[g])
        else:
            grad[slot[g]] += _pauli_bilinear(lam, psi, xmask[g], zmask[g], gphase[g]).imag
            th = 0.5 * angles[slot[g]]
            ch, sh = np.cos(th), -np.sin(th)
            _apply_rot(psi, xmask[g], zmask[g], gphase[g], ch, sh)
            _apply_rot(lam, xmask[g], zmask[g], gphase[g], ch, sh)


@njit(cache=True)
def batch_expectations(n_qubits, kind, q1, q2, xmask, zmask, gphase, slot,
                       angles2d, obs_xm, obs_zm, obs_gph, out):
    state = np.empty(1 << n_qubits, dtype=np.complex128)
    for d in range(angles2d.shape[0]):
        state[:] = 0.0
        state[0] = 1.0
        run_program(state, kind, q1, q2, xmask, zmask, gphase, slot, angles2d[d])
        out[d] = pauli_expectation(state, obs_xm, obs_zm, obs_gph)


@njit(cache=True)
def batch_features(n_qubits, kind, q1, q2, xmask, zmask, gphase, slot,
                   angles2d, obs_xm, obs_zm, obs_gph, out):
    state = np.empty(1 << n_qubits, dtype=np.complex128)
    for d in range(angles2d.shape[0]):
        state[:] = 0.0
        state[0] = 1.0
        run_program(state, kind, q1, q2, xmask, zmask, gphase, slot, angles2d[d])
        for j in range(obs_xm.shape[0]):
            out[d, j] = pauli_expectation(state, obs_xm[j], obs_zm[j], obs_gph[j])
