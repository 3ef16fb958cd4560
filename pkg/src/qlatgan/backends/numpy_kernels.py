"""Pure-numpy statevector kernels: the fallback path.

Bit-for-bit the same amplitude arithmetic as the numba backend (per element),
vectorized with index arrays; only reduction order may differ at float
epsilon. Gate programs loop in python, so this path is the slow one; it
exists so the package runs without a working numba and as the reference for
the backend benchmark.
"""

import numpy as np

KIND_H, KIND_CNOT, KIND_CZ, KIND_ROT = 0, 1, 2, 3
_RSQRT2 = 1.0 / np.sqrt(2.0)


def _parity(v):
    v = v.astype(np.int64, copy=True)
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


def _indices(dim):
    return np.arange(dim, dtype=np.int64)


def _apply_h(state, q):
    s3 = state.reshape(-1, 2, 1 << q)
    a = s3[:, 0, :].copy()
    b = s3[:, 1, :].copy()
    s3[:, 0, :] = (a + b) * _RSQRT2
    s3[:, 1, :] = (a - b) * _RSQRT2


def _apply_cnot(state, c, t, idx):
    sel = ((idx >> c) & 1 == 1) & ((idx >> t) & 1 == 0)
    i0 = idx[sel]
    i1 = i0 | (1 << t)
    tmp = state[i0].copy()
    state[i0] = state[i1]
    state[i1] = tmp


def _apply_cz(state, a, b, idx):
    sel = ((idx >> a) & 1 == 1) & ((idx >> b) & 1 == 1)
    state[sel] = -state[sel]


def _apply_rot(state, xm, zm, gph, ch, sh, idx):
    msh = -1j * sh * gph
    if xm == 0:
        pm = 1.0 - 2.0 * _parity(idx & zm)
        state *= ch + msh * pm
    else:
        pos = int(xm & -xm).bit_length() - 1
        sel = (idx >> pos) & 1 == 0
        i0 = idx[sel]
        i1 = i0 ^ xm
        pm0 = 1.0 - 2.0 * _parity(i0 & zm)
        pm1 = 1.0 - 2.0 * _parity(i1 & zm)
        a = state[i0]
        b = state[i1]
        state[i0] = ch * a + msh * pm1 * b
        state[i1] = ch * b + msh * pm0 * a


def _pauli_bilinear(lam, psi, xm, zm, gph):
    idx = _indices(psi.shape[0])
    pm = 1.0 - 2.0 * _parity(idx & zm)
    return np.sum(np.conj(lam[idx ^ xm]) * (gph * pm) * psi)


def pauli_expectation(state, xm, zm, gph):
    return float(_pauli_bilinear(state, state, xm, zm, gph).real)


def pauli_apply(out, state, xm, zm, gph):
    idx = _indices(state.shape[0])
    pm = 1.0 - 2.0 * _parity(idx & zm)
    out[idx ^ xm] = (gph * pm) * state


def run_program(state, kind, q1, q2, xmask, zmask, gphase, slot, angles):
    idx = _indices(state.shape[0])
    for g in range(kind.shape[0]):
        k = kind[g]
        if k == KIND_H:
            _apply_h(state, q1[g])
        elif k == KIND_CNOT:
            _apply_cnot(state, q1[g], q2[g], idx)
        elif k == KIND_CZ:
            _apply_cz(state, q1[g], q2[g], idx)
        else:
            th = 0.5 * angles[slot[g]]
            _apply_rot(state, int(xmask[g]), int(zmask[g]), gphase[g],
                       np.cos(th), np.sin(th), idx)


def adjoint_sweep(psi, lam, kind, q1, q2, xmask, zmask, gphase, slot, angles, grad):
    """Reverse sweep, same contract as the numba backend."""
    idx = _indices(psi.shape[0])
    for g in range(kind.shape[0] - 1, -1, -1):
        k = kind[g]
        if k == KIND_H:
            _apply_h(psi, q1[g])
            _apply_h(lam, q1[g])
        elif k == KIND_CNOT:
            _apply_cnot(psi, q1[g], q2[g], idx)
            _apply_cnot(lam, q1[g], q2[g], idx)
        elif k == KIND_CZ:
            _apply_cz(psi, q1[g], q2[g], idx)
            _apply_cz(lam, q1[g], q2[g], idx)
        else:
            grad[slot[g]] += _pauli_bilinear(lam, psi, int(xmask[g]), int(zmask[g]),
                                             gphase[g]).imag
            th = 0.5 * angles[slot[g]]
            ch, sh = np.cos(th), -np.sin(th)
            _apply_rot(psi, int(xmask[g]), int(zmask[g]), gphase[g], ch, sh, idx)
            _apply_rot(lam, int(xmask[g]), int(zmask[g]), gphase[g], ch, sh, idx)


def batch_expectations(n_qubits, kind, q1, q2, xmask, zmask, gphase, slot,
                       angles2d, obs_xm, obs_zm, obs_gph, out):
    state = np.empty(1 << n_qubits, dtype=np.complex128)
    for d in range(angles2d.shape[0]):
        state[:] = 0.0
        state[0] = 1.0
        run_program(state, kind, q1, q2, xmask, zmask, gphase, slot, angles2d[d])
        out[d] = pauli_expectation(state, int(obs_xm), int(obs_zm), obs_gph)


def batch_features(n_qubits, kind, q1, q2, xmask, zmask, gphase, slot,
                   angles2d, obs_xm, obs_zm, obs_gph, out):
    state = np.empty(1 << n_qubits, dtype=np.complex128)
    for d in range(angles2d.shape[0]):
        state[:] = 0.0
        state[0] = 1.0
        run_program(state, kind, q1, q2, xmask, zmask, gphase, slot, angles2d[d])
        for j in range(obs_xm.shape[0]):
            out[d, j] = pauli_expectation(state, int(obs_xm[j]), int(obs_zm[j]), obs_gph[j])
