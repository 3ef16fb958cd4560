"""Dense statevector execution, expectation values and three gradient routes.

States are complex128 arrays of 2^n amplitudes with qubit 0 as the least
significant index bit. The adjoint route is the workhorse (one forward and
one reverse sweep for all angles); the parameter-shift and central-difference
routes exist as independent checks and are exact / near-exact respectively
for the exp(-i P theta/2) gates used here.
"""

from __future__ import annotations

import numpy as np

from .backends import active_backend
from .circuits import Circuit, pauli_program_args
from .errors import ConfigError
from .pauli import PauliString
from .rng import as_rng


def zero_state(n_qubits: int) -> np.ndarray:
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def run(circuit: Circuit, angles, initial_state=None, backend=None) -> np.ndarray:
    """Apply the circuit, returning a fresh state array."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.shape != (circuit.angle_count,):
        raise ConfigError(
            f"angle vector shape {angles.shape} != ({circuit.angle_count},)")
    if initial_state is None:
        state = zero_state(circuit.n_qubits)
    else:
        if initial_state.shape != (1 << circuit.n_qubits,):
            raise ConfigError("initial state dimension does not match circuit")
        state = np.array(initial_state, dtype=np.complex128, copy=True)
    be = backend or active_backend()
    be.run_program(state, circuit.compiled(), angles)
    return state


def expectation(state: np.ndarray, p: PauliString, backend=None) -> float:
    """<state| p |state> for a Hermitian signed Pauli string."""
    if not p.is_hermitian:
        raise ConfigError("expectation requires a Hermitian Pauli (phase +1/-1)")
    if state.shape[0] != (1 << p.n):
        raise ConfigError("state dimension does not match operator width")
    xm, zm, gph = pauli_program_args(p)
    be = backend or active_backend()
    return be.pauli_expectation(state, xm, zm, gph)


def sample_expectation(state: np.ndarray, p: PauliString, n_shots: int, seed_or_rng) -> float:
    """Shot-noise estimate of <p>: mean of n_shots independent +-1 draws.

    Measuring p is Born sampling of the +-1 eigenvalue (equivalently: basis
    change to a Z string, then parity sampling). The sum of n_shots iid +-1
    draws is Binomial in the +1 count with p_plus = (1 + <p>)/2, which is how
    the draw is realized; the estimator distribution is identical shot by
    shot and deterministic under the supplied stream.
    """
    if n_shots <= 0:
        raise ConfigError("n_shots must be positive")
    rng = as_rng(seed_or_rng, "sample_expectation")
    exact = expectation(state, p)
    p_plus = min(1.0, max(0.0, 0.5 * (1.0 + exact)))
    k = int(rng.binomial(n_shots, p_plus))
    return 2.0 * k / n_shots - 1.0


def adjoint_gradient(circuit: Circuit, angles, observable: PauliString,
                     backend=None) -> np.ndarray:
    """d<observable>/d(angles) via one forward and one reverse sweep."""
    return adjoint_gradient_multi(circuit, angles, [observable], None, backend)


def adjoint_gradient_multi(circuit: Circuit, angles, observables, weights=None,
                           backend=None) -> np.ndarray:
    """Gradient of sum_j w_j <P_j>; the reverse sweep is linear in the observable."""
    angles = np.asarray(angles, dtype=np.float64)
    be = backend or active_backend()
    psi = run(circuit, angles, backend=be)
    lam = np.zeros_like(psi)
    tmp = np.empty_like(psi)
    if weights is None:
        weights = np.ones(len(observables))
    for w, p in zip(weights, observables):
        if not p.is_hermitian:
            raise ConfigError("observables must be Hermitian")
        if w == 0.0:
            continue
        xm, zm, gph = pauli_program_args(p)
        be.pauli_apply(tmp, psi, xm, zm, gph)
        lam += w * tmp
    grad = np.zeros(circuit.angle_count, dtype=np.float64)
    be.adjoint_sweep(psi, lam, circuit.compiled(), angles, grad)
    return grad


def parameter_shift_gradient(circuit: Circuit, angles, observable: PauliString,
                             backend=None) -> np.ndarray:
    """Exact gradient from <O>(theta +- pi/2) differences, slot by slot."""
    angles = np.asarray(angles, dtype=np.float64)
    grad = np.empty(circuit.angle_count, dtype=np.float64)
    for k in range(circuit.angle_count):
        shifted = angles.copy()
        shifted[k] = angles[k] + 0.5 * np.pi
        plus = expectation(run(circuit, shifted, backend=backend), observable, backend)
        shifted[k] = angles[k] - 0.5 * np.pi
        minus = expectation(run(circuit, shifted, backend=backend), observable, backend)
        grad[k] = 0.5 * (plus - minus)
    return grad


def finite_difference_gradient(circuit: Circuit, angles, observable: PauliString,
                               eps: float = 1e-6, backend=None) -> np.ndarray:
    angles = np.asarray(angles, dtype=np.float64)
    grad = np.empty(circuit.angle_count, dtype=np.float64)
    for k in range(circuit.angle_count):
        shifted = angles.copy()
        shifted[k] = angles[k] + eps
        plus = expectation(run(circuit, shifted, backend=backend), observable, backend)
        shifted[k] = angles[k] - eps
        minus = expectation(run(circuit, shifted, backend=backend), observable, backend)
        grad[k] = (plus - minus) / (2.0 * eps)
    return grad
