"""Kernel backend selection.

`QLATGAN_BACKEND` picks the default: "numba" (error if unavailable), "numpy"
(pure fallback), or "auto"/unset (numba when importable, else numpy). Explicit
backends can always be requested via get_backend(), which is how the
benchmark compares the two paths in one process.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from . import numpy_kernels

try:
    from . import numba_kernels
    HAS_NUMBA = True
except ImportError:
    numba_kernels = None
    HAS_NUMBA = False


@dataclass(frozen=True)
class Backend:
    name: str
    _k: object

    def run_program(self, state, compiled, angles):
        self._k.run_program(state, compiled.kind, compiled.q1, compiled.q2,
                            compiled.xmask, compiled.zmask, compiled.gphase,
                            compiled.slot, np.ascontiguousarray(angles, dtype=np.float64))

    def adjoint_sweep(self, psi, lam, compiled, angles, grad):
        self._k.adjoint_sweep(psi, lam, compiled.kind, compiled.q1, compiled.q2,
                              compiled.xmask, compiled.zmask, compiled.gphase,
                              compiled.slot,
                              np.ascontiguousarray(angles, dtype=np.float64), grad)

    def pauli_expectation(self, state, xm, zm, gph):
        return float(self._k.pauli_expectation(state, np.int64(xm), np.int64(zm),
                                               np.complex128(gph)))

    def pauli_apply(self, out, state, xm, zm, gph):
        self._k.pauli_apply(out, state, np.int64(xm), np.int64(zm), np.complex128(gph))

    def batch_expectations(self, compiled, angles2d, xm, zm, gph):
        angles2d = np.ascontiguousarray(angles2d, dtype=np.float64)
        out = np.empty(angles2d.shape[0], dtype=np.float64)
        self._k.batch_expectations(compiled.n_qubits, compiled.kind, compiled.q1,
                                   compiled.q2, compiled.xmask, compiled.zmask,
                                   compiled.gphase, compiled.slot, angles2d,
                                   np.int64(xm), np.int64(zm), np.complex128(gph), out)
        return out

    def batch_features(self, compiled, angles2d, obs_xm, obs_zm, obs_gph):
        angles2d = np.ascontiguousarray(angles2d, dtype=np.float64)
        obs_xm = np.ascontiguousarray(obs_xm, dtype=np.int64)
        obs_zm = np.ascontiguousarray(obs_zm, dtype=np.int64)
        obs_gph = np.ascontiguousarray(obs_gph, dtype=np.complex128)
        out = np.empty((angles2d.shape[0], obs_xm.shape[0]), dtype=np.float64)
        self._k.batch_features(compiled.n_qubits, compiled.kind, compiled.q1,
                               compiled.q2, compiled.xmask, compiled.zmask,
                               compiled.gphase, compiled.slot, angles2d,
                               obs_xm, obs_zm, obs_gph, out)
        return out


_NUMPY_BACKEND = Backend("numpy", numpy_kernels)
_NUMBA_BACKEND = Backend("numba", numba_kernels) if HAS_NUMBA else None


def get_backend(name: str | None = None) -> Backend:
    if name is None:
        name = os.environ.get("QLATGAN_BACKEND", "auto").lower()
    if name == "auto":
        return _NUMBA_BACKEND if HAS_NUMBA else _NUMPY_BACKEND
    if name == "numpy":
        return _NUMPY_BACKEND
    if name == "numba":
        if _NUMBA_BACKEND is None:
            raise ConfigError("numba backend requested but numba is not importable")
        return _NUMBA_BACKEND
    raise ConfigError(f"unknown backend {name!r} (expected auto, numba or numpy)")


def active_backend() -> Backend:
    return get_backend(None)
