"""Timing comparison between the compiled and the pure-numpy kernels.

Runs the hot paths (statevector program execution, adjoint sweeps, batched
Monte Carlo expectations and feature batches) on both backends and prints
a table with the speedup. The compiled backend is exercised once before
timing so JIT compilation never pollutes the numbers.

    python3 benchmarks/bench_backends.py [--ns 4,8,12] [--repeats 5]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from qlatgan.ansatz import build_circuit, feature_observables
from qlatgan.backends import get_backend
from qlatgan.circuits import pauli_program_args
from qlatgan.pauli import AXIS_Z, PauliString
from qlatgan.rng import spawn_rng
from qlatgan.statevector import zero_state


def _timeit(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _cases(n: int, depth: int, draws: int):
    circuit = build_circuit("circuit1", n, depth)
    compiled = circuit.compiled()
    rng = spawn_rng(0, "bench", n)
    angles = rng.uniform(-np.pi, np.pi, size=circuit.angle_count)
    batch = rng.uniform(-np.pi, np.pi, size=(draws, circuit.angle_count))
    obs = PauliString.from_axes([AXIS_Z] * n)
    xm, zm, gph = pauli_program_args(obs)
    feats = feature_observables(n)
    fx, fz, fg = (np.array(v) for v in
                  zip(*(pauli_program_args(p) for p in feats)))

    def run(be):
        state = zero_state(n)
        be.run_program(state, compiled, angles)
        return state

    def adjoint(be):
        psi = run(be)
        lam = np.zeros_like(psi)
        be.pauli_apply(lam, psi, xm, zm, gph)
        grad = np.zeros(circuit.angle_count)
        be.adjoint_sweep(psi, lam, compiled, angles, grad)
        return grad

    return {
        f"run_program        n={n} depth={depth}": run,
        f"adjoint_sweep      n={n} depth={depth}": adjoint,
        f"batch_expectations n={n} draws={draws}":
            lambda be: be.batch_expectations(compiled, batch, xm, zm, gph),
        f"batch_features     n={n} draws={draws}":
            lambda be: be.batch_features(compiled, batch, fx, fz, fg),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ns", default="4,8,12",
                        help="comma-separated qubit counts")
    parser.add_argument("--depth", type=int, default=3)
    parser.add_argument("--draws", type=int, default=500)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    numpy_be = get_backend("numpy")
    try:
        numba_be = get_backend("numba")
    except Exception as exc:  # compiled backend genuinely unavailable
        print(f"compiled backend unavailable ({exc}); nothing to compare")
        return 1

    header = f"{'case':<42} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in (int(tok) for tok in args.ns.split(",")):
        for label, fn in _cases(n, args.depth, args.draws).items():
            fn(numba_be)   # JIT warm-up outside the timed region
            t_np = _timeit(lambda: fn(numpy_be), args.repeats)
            t_nb = _timeit(lambda: fn(numba_be), args.repeats)
            print(f"{label:<42} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
                  f"{t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
