"""Loss and gradient statistics of randomly initialized circuits.

For circuits made of Clifford gates and Pauli-generator rotations whose
angles are i.i.d. N(0, sigma), expectation values factor into Gaussian
cosine moments: every sine branch averages to zero, so a single backward
Pauli walk counts the surviving cosine factors. That yields a closed-form
expected loss and, for two-init-column circuits, variance lower bounds that
separate trainable from exponentially flat regimes. The Monte Carlo half of
the module estimates the same statistics (plus the adversarial generator
gradient) from seeded draws, and the fit helpers classify decay curves.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    build_circuit,
    feature_param_vjp,
    generate_features_batch,
    init_style_generator,
)
from .backends import active_backend
from .circuits import Circuit, RotationGate, pauli_program_args
from .errors import ConfigError, DataError
from .neural import lecun_init, mlp_input_gradient
from .pauli import AXIS_X, AXIS_Z, PauliString, clifford_conjugate, commutes, weight
from .rng import hash_seed, spawn_rng

def gaussian_cos_moment(sigma: float) -> float:
    """E[cos w] for w ~ N(0, sigma)."""
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    return math.exp(-0.5 * sigma * sigma)

def gaussian_cos2_moment(sigma: float) -> float:
    """E[cos^2 w] for w ~ N(0, sigma)."""
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    return 0.5 * (1.0 + math.exp(-2.0 * sigma * sigma))

def gaussian_sin2_moment(sigma: float) -> float:
    """E[sin^2 w] for w ~ N(0, sigma)."""
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    return 0.5 * (1.0 - math.exp(-2.0 * sigma * sigma))

def count_anticommuting(circuit: Circuit, observable: PauliString,
                        skip_gates: int = 0) -> tuple[int, PauliString]:
    """Backward walk from the measurement to gate index ``skip_gates``.

    Cliffords conjugate the running Pauli; every rotation whose generator
    anticommutes with it is counted (the running Pauli itself is unchanged,
    since only the cosine branch survives an average over a symmetric
    angle). Returns the count and the back-propagated Pauli.
    """
    if observable.n != circuit.n_qubits:
        raise ConfigError("observable width does not match the circuit")
    if not (0 <= skip_gates <= len(circuit.gates)):
        raise ConfigError(f"skip_gates must be in [0, {len(circuit.gates)}]")
    p = observable
    n_anti = 0
    for gate in reversed(circuit.gates[skip_gates:]):
        if isinstance(gate, RotationGate):
            if not commutes(p, gate.generator):
                n_anti += 1
        else:
            p = clifford_conjugate(gate, p)
    return n_anti, p

def _init_column_axes(circuit: Circuit, init_columns: int) -> np.ndarray:
    """Axis codes of the leading per-qubit rotation columns, shape (cols, n)."""
    n = circuit.n_qubits
    need = init_columns * n
    if len(circuit.gates) < need:
        raise ConfigError("circuit shorter than the declared init columns")
    axes = np.zeros((init_columns, n), dtype=np.int64)
    for c in range(init_columns):
        for j in range(n):
            gate = circuit.gates[c * n + j]
            if not isinstance(gate, RotationGate) or weight(gate.generator) != 1 \
                    or gate.generator.support() != (j,):
                raise ConfigError(
                    "init columns must be per-qubit rotations in qubit order")
            axes[c, j] = gate.generator.axis(j)
    return axes

def _check_unique_slots(circuit: Circuit):
    slots = [g.angle_slot for g in circuit.gates if isinstance(g, RotationGate)]
    if len(set(slots)) != len(slots):
        raise ConfigError("analytic expectation requires one angle per rotation")

def zero_state_bloch(n: int) -> np.ndarray:
    bloch = np.zeros((n, 3))
    bloch[:, 2] = 1.0
    return bloch

def expected_loss_analytic(circuit: Circuit, observable: PauliString,
                           sigma: float, bloch: np.ndarray | None = None,
                           init_columns: int = 2) -> float:
    """E over i.i.d. N(0, sigma) angles of <P> on a product input state.

    ``bloch`` holds one (x, y, z) vector per qubit, defaulting to |0>. The
    leading ``init_columns`` per-qubit rotation columns are treated
    separately: each supported qubit contributes its Bloch component along
    the observable axis times one cosine moment per init rotation whose
    axis differs. Every anticommuting rotation in the rest of the circuit
    contributes one more cosine moment.
    """
    if observable.phase_exp not in (0, 2):
        raise DataError("observable must carry a real +/-1 phase")
    _check_unique_slots(circuit)
    n = circuit.n_qubits
    if bloch is None:
        bloch = zero_state_bloch(n)
    bloch = np.asarray(bloch, dtype=np.float64)
    if bloch.shape != (n, 3):
        raise DataError(f"bloch must have shape ({n}, 3)")
    if np.any(np.linalg.norm(bloch, axis=1) > 1.0 + 1e-9):
        raise DataError("per-qubit Bloch vectors must have norm <= 1")

    axes_cols = _init_column_axes(circuit, init_columns)
    n_anti, p_eta = count_anticommuting(circuit, observable,
                                        skip_gates=init_columns * n)
    # p_eta's phase already folds in the observable's own sign
    sign = 1.0 if p_eta.phase_exp == 0 else -1.0
    m = gaussian_cos_moment(sigma)
    value = sign * m ** n_anti
    for j in p_eta.support():
        axis = p_eta.axis(j)
        component = bloch[j, axis - 1]
        if component == 0.0:
            return 0.0
        mismatches = int(np.sum(axes_cols[:, j] != axis))
        value *= component * m ** mismatches
    return float(value)

def variance_lower_bound_local_z(n: int, sigma: float, c: float = 1.0) -> float:
    """Lower bound on Var[<Z_j>]; the exponential 2^-n regime takes over at sigma >= 1.

    Two branches: an average-case walk (count ~ n^2/2 + n) and an
    extreme-case walk (count ~ n^2 + n); the bound is their minimum.
    """
    if n < 1:
        raise ConfigError("need n >= 1")
    if sigma >= 1.0:
        return 2.0 ** (-n)
    a = gaussian_cos2_moment(sigma)
    e = math.exp(-sigma * sigma)
    avg_expo = 0.5 * n * n + n
    ext_expo = float(n * n + n)
    return min(c * c * a ** avg_expo - c * e ** avg_expo,
               c * c * a ** ext_expo - c * e ** ext_expo)

def local_z_bound_branch(n: int, sigma: float, c: float = 1.0) -> str:
    if sigma >= 1.0:
        return "fallback"
    a = gaussian_cos2_moment(sigma)
    e = math.exp(-sigma * sigma)
    avg_expo = 0.5 * n * n + n
    ext_expo = float(n * n + n)
    avg = c * c * a ** avg_expo - c * e ** avg_expo
    ext = c * c * a ** ext_expo - c * e ** ext_expo
    return "average" if avg <= ext else "extreme"

def variance_lower_bound_local_x(n: int, sigma: float, c: float = 1.0) -> float:
    """Lower bound on Var[<X_j>]; same sigma >= 1 fallback as the Z bound."""
    if n < 1:
        raise ConfigError("need n >= 1")
    if sigma >= 1.0:
        return 2.0 ** (-n)
    expo = float(n * n + n)
    return c * gaussian_cos2_moment(sigma) ** expo * gaussian_sin2_moment(sigma)

@dataclass(frozen=True)
class InitSpec:
    """Distribution of the raw rotation angles (or affine init bounds)."""
    distribution: str = "normal"   # "normal": N(0, width); "uniform": U(-width, width)
    width: float = 0.1
    scaling: str = "fixed"         # "inverse_n" divides width by the qubit count

    def __post_init__(self):
        if self.distribution not in ("normal", "uniform"):
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if self.scaling not in ("fixed", "inverse_n"):
            raise ConfigError(f"unknown scaling {self.scaling!r}")
        if not (self.width > 0):
            raise ConfigError("width must be positive")

    def width_for(self, n: int) -> float:
        return self.width / n if self.scaling == "inverse_n" else self.width

    def sample(self, rng: np.random.Generator, size: int, n: int) -> np.ndarray:
        w = self.width_for(n)
        if self.distribution == "normal":
            return rng.normal(0.0, w, size=size)
        return rng.uniform(-w, w, size=size)

@dataclass(frozen=True)
class McStats:
    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    n_draws: int

def _jackknife_variance_stderr(x: np.ndarray) -> float:
    """Standard error of the unbiased sample variance by leave-one-out."""
    n = x.size
    if n < 3:
        raise DataError("jackknife needs at least three draws")
    s1 = x.sum()
    s2 = float(x @ x)
    loo = ((s2 - x * x) - (s1 - x) ** 2 / (n - 1)) / (n - 2)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))

def mc_loss_variance(circuit: Circuit, observable: PauliString, init: InitSpec,
                     n_draws: int, seed: int, backend=None,
                     chunk: int = 20000) -> McStats:
    """Sample variance of <P> over i.i.d. angle draws, with jackknife stderr."""
    if n_draws < 3:
        raise ConfigError("need at least three draws")
    be = backend or active_backend()
    compiled = circuit.compiled()
    xm, zm, gph = pauli_program_args(observable)
    n = circuit.n_qubits
    losses = np.empty(n_draws)
    for start in range(0, n_draws, chunk):
        stop = min(start + chunk, n_draws)
        angles = np.empty((stop - start, circuit.angle_count))
        for d in range(start, stop):
            rng = spawn_rng(seed, "mc_loss", d)
            angles[d - start] = init.sample(rng, circuit.angle_count, n)
        losses[start:stop] = be.batch_expectations(compiled, angles, xm, zm, gph)
    var = float(np.var(losses, ddof=1))
    mean = float(losses.mean())
    mean_se = float(np.std(losses, ddof=1) / np.sqrt(n_draws))
    return McStats(mean, mean_se, var, _jackknife_variance_stderr(losses), n_draws)

@dataclass(frozen=True)
class GradientVarianceResult:
    variance: float          # per-parameter variance averaged over first-layer params
    stderr: float            # jackknife stderr of that average
    n_draws: int
    n_params: int

def mc_generator_gradient_variance(kind: str, n: int, depth: int, d_z: int,
                                   delta: float, n_draws: int, seed: int,
                                   critic_hidden=(100, 50)) -> GradientVarianceResult:
    """Variance of d(adversarial generator loss)/d(first-layer affine params).

    Each draw builds a fresh generator with W, b ~ U(-delta, delta) (angles
    rescaled by 1/sqrt(d_z)), a fresh critic, and a fresh latent; the
    gradient flows through one critic evaluation. Per-parameter variances
    over draws are averaged across the first layer group.
    """
    if n_draws < 3:
        raise ConfigError("need at least three draws")
    rows = None
    for d in range(n_draws):
        rng = spawn_rng(seed, "mc_grad", d)
        gen = init_style_generator(kind, n, depth, d_z, delta=delta, seed=rng,
                                   rescale=True)
        critic = lecun_init([gen.feature_dim, *critic_hidden, 1], rng, head="linear")
        z = rng.standard_normal(d_z)
        feats = generate_features_batch(gen, z[None, :])
        upstream = -mlp_input_gradient(critic, feats)[0]
        grads = feature_param_vjp(gen, z, upstream)
        first = np.concatenate([grads[0].ravel(), grads[1].ravel()])
        if rows is None:
            rows = np.empty((n_draws, first.size))
        rows[d] = first
    var_per_param = np.var(rows, axis=0, ddof=1)
    variance = float(var_per_param.mean())

    # jackknife the averaged statistic by leave-one-out over draws
    nd = n_draws
    s1 = rows.sum(axis=0)
    s2 = np.einsum("ij,ij->j", rows, rows)
    loo = (((s2 - rows * rows) - (s1 - rows) ** 2 / (nd - 1)) / (nd - 2)).mean(axis=1)
    stderr = float(np.sqrt((nd - 1) / nd * np.sum((loo - loo.mean()) ** 2)))
    return GradientVarianceResult(variance, stderr, n_draws, rows.shape[1])

def scan_observable(name: str, n: int) -> PauliString:
    """local_*: qubit 0; global_*: every qubit."""
    if name == "local_z":
        return PauliString.single(n, 0, AXIS_Z)
    if name == "local_x":
        return PauliString.single(n, 0, AXIS_X)
    if name == "global_z":
        return PauliString.from_axes([AXIS_Z] * n)
    if name == "global_x":
        return PauliString.from_axes([AXIS_X] * n)
    raise ConfigError(f"unknown observable {name!r}")

def bound_for(name: str, n: int, sigma: float, c: float = 1.0) -> float:
    if name in ("local_z", "global_z"):
        return variance_lower_bound_local_z(n, sigma, c)
    if name in ("local_x", "global_x"):
        return variance_lower_bound_local_x(n, sigma, c)
    raise ConfigError(f"unknown observable {name!r}")

def depth_for(rule: str, n: int) -> int:
    """log -> floor(log2 n) (>= 1), poly -> n, const:k -> k."""
    if rule == "log":
        return max(1, int(math.floor(math.log2(n))))
    if rule == "poly":
        return n
    if rule.startswith("const:"):
        k = int(rule.split(":", 1)[1])
        if k < 1:
            raise ConfigError("constant depth must be >= 1")
        return k
    raise ConfigError(f"unknown depth rule {rule!r} (log, poly, const:k)")

def loss_variance_scan(kind: str, ns, sigmas, observable: str, depth_rule: str,
                       n_draws: int, seed: int, c: float = 1.0,
                       scaling: str = "fixed") -> list[dict]:
    """Grid of MC loss variances with matching analytic bounds, CSV-ready."""
    rows = []
    for n in ns:
        depth = depth_for(depth_rule, n)
        circuit = build_circuit(kind, n, depth)
        obs = scan_observable(observable, n)
        for sigma in sigmas:
            init = InitSpec("normal", sigma, scaling)
            eff_sigma = init.width_for(n)
            stats = mc_loss_variance(circuit, obs, init, n_draws,
                                     seed=hash_seed(seed, kind, observable, n, sigma))
            rows.append({
                "n": n, "depth": depth, "sigma": eff_sigma,
                "variance": stats.variance, "stderr": stats.variance_stderr,
                "mean": stats.mean, "mean_stderr": stats.mean_stderr,
                "bound": bound_for(observable, n, eff_sigma, c),
                "branch": (local_z_bound_branch(n, eff_sigma, c)
                           if observable.endswith("z") else
                           ("fallback" if eff_sigma >= 1.0 else "sin2")),
            })
    return rows

def gradient_variance_scan(kind: str, ns, delta: float, depth_rule: str,
                           n_draws: int, seed: int,
                           critic_hidden=(100, 50)) -> list[dict]:
    """Generator-gradient variance versus qubit count, one row per n."""
    rows = []
    for n in ns:
        depth = depth_for(depth_rule, n)
        res = mc_generator_gradient_variance(
            kind, n, depth, d_z=n, delta=delta, n_draws=n_draws,
            seed=hash_seed(seed, kind, "grad", n, delta),
            critic_hidden=critic_hidden)
        rows.append({"n": n, "depth": depth, "delta": delta,
                     "variance": res.variance, "stderr": res.stderr,
                     "n_params": res.n_params})
    return rows

@dataclass(frozen=True)
class CurveFit:
    coef: float        # multiplicative prefactor
    exponent: float    # power-law exponent or exponential rate
    r2: float          # goodness of the regression in log space

def _log_regression(x: np.ndarray, logy: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, logy, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2

def _positive_xy(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise DataError("need at least three matched points")
    if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        raise DataError("fit requires positive finite values")
    return x, y

def fit_powerlaw(x, y) -> CurveFit:
    """y ~ coef * x**exponent via regression in log-log space."""
    x, y = _positive_xy(x, y)
    if np.any(x <= 0.0):
        raise DataError("power-law fit requires positive x")
    slope, intercept, r2 = _log_regression(np.log(x), np.log(y))
    return CurveFit(float(np.exp(intercept)), slope, r2)

def fit_exponential(x, y) -> CurveFit:
    """y ~ coef * exp(exponent * x) via regression in log-linear space."""
    x, y = _positive_xy(x, y)
    slope, intercept, r2 = _log_regression(x, np.log(y))
    return CurveFit(float(np.exp(intercept)), slope, r2)
