"""Fixed circuit layouts and the affine latent-to-angle generator.

Five layouts are provided. Depth counts learning-layer repetitions (the two
hardware-efficient maps count entangling layers); rotations are emitted in
layer order, each with its own angle slot, so a circuit's angle vector is the
concatenation of per-layer groups.

    circuit1   init [Ry Rz per qubit]; layer = Ry,Rz per qubit + CZ chain
    circuit2   init [Rx Rz per qubit]; layer = Ry per qubit + CNOT chain
    circuit3   brick of two-qubit blocks, 15 angles each; odd layers pair
               (0,1),(2,3),..., even layers pair (1,2),(3,4),...
    efficient_su2_pairwise / efficient_su2_circular
               Ry column (V1) then Rz column (V2); each entangling layer =
               CNOT map then Ry,Rz per qubit

The generator maps a latent z to angles through per-layer affine maps
theta_l = W_l z (optionally / sqrt(D_z)) + b_l and measures per-qubit sigma_x
then sigma_z expectations as the feature vector, so features live in [-1,1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import active_backend
from .circuits import Circuit, RotationGate, pauli_program_args
from .errors import ConfigError
from .pauli import AXIS_X, AXIS_Y, AXIS_Z, CliffordGate, PauliString
from .rng import as_rng, spawn_rng
from .statevector import adjoint_gradient, adjoint_gradient_multi, expectation, run

KINDS = ("circuit1", "circuit2", "circuit3",
         "efficient_su2_pairwise", "efficient_su2_circular")


def _check_kind(kind: str, n: int):
    if kind not in KINDS:
        raise ConfigError(f"unknown ansatz kind {kind!r}, expected one of {KINDS}")
    if kind == "circuit3" and (n < 2 or n % 2):
        raise ConfigError("circuit3 requires an even qubit count >= 2")
    if kind == "efficient_su2_circular" and n < 2:
        raise ConfigError("circular entanglement requires n >= 2")


def _rot(n, axis, q, slot):
    return RotationGate(PauliString.single(n, q, axis), slot)


def _rot2(n, axis, qa, qb, slot):
    axes = [0] * n
    axes[qa] = axes[qb] = axis
    return RotationGate(PauliString.from_axes(axes), slot)


def _su4_block(n, qa, qb, slot):
    gates = []
    for q in (qa, qb):
        for ax in (AXIS_Z, AXIS_Y, AXIS_Z):
            gates.append(_rot(n, ax, q, slot))
            slot += 1
    for ax in (AXIS_X, AXIS_Y, AXIS_Z):
        gates.append(_rot2(n, ax, qa, qb, slot))
        slot += 1
    for q in (qa, qb):
        for ax in (AXIS_Z, AXIS_Y, AXIS_Z):
            gates.append(_rot(n, ax, q, slot))
            slot += 1
    return gates, slot


def _brick_pairs(n: int, layer_index: int) -> list[tuple[int, int]]:
    start = 0 if layer_index % 2 == 1 else 1
    return [(q, q + 1) for q in range(start, n - 1, 2)]


def _entangler_pairs(kind: str, n: int) -> list[tuple[int, int]]:
    if kind == "efficient_su2_pairwise":
        return [(q, q + 1) for q in range(0, n - 1, 2)]
    return [(i, (i + 1) % n) for i in range(n)]


def build_layers(kind: str, n: int, depth: int) -> list[list]:
    """Gate lists per angle-layer group; slots run sequentially across groups."""
    _check_kind(kind, n)
    if depth < 0:
        raise ConfigError("depth must be >= 0")
    layers = []
    slot = 0
    if kind == "circuit1":
        init = [_rot(n, AXIS_Y, q, slot + q) for q in range(n)]
        init += [_rot(n, AXIS_Z, q, slot + n + q) for q in range(n)]
        slot += 2 * n
        layers.append(init)
        for _ in range(depth):
            layer = [_rot(n, AXIS_Y, q, slot + q) for q in range(n)]
            layer += [_rot(n, AXIS_Z, q, slot + n + q) for q in range(n)]
            slot += 2 * n
            layer += [CliffordGate("cz", (q, q + 1)) for q in range(n - 1)]
            layers.append(layer)
    elif kind == "circuit2":
        init = [_rot(n, AXIS_X, q, slot + q) for q in range(n)]
        init += [_rot(n, AXIS_Z, q, slot + n + q) for q in range(n)]
        slot += 2 * n
        layers.append(init)
        for _ in range(depth):
            layer = [_rot(n, AXIS_Y, q, slot + q) for q in range(n)]
            slot += n
            layer += [CliffordGate("cnot", (q, q + 1)) for q in range(n - 1)]
            layers.append(layer)
    elif kind == "circuit3":
        for ell in range(1, depth + 1):
            layer = []
            for qa, qb in _brick_pairs(n, ell):
                block, slot = _su4_block(n, qa, qb, slot)
                layer += block
            layers.append(layer)
    else:
        init = [_rot(n, AXIS_Y, q, slot + q) for q in range(n)]
        init += [_rot(n, AXIS_Z, q, slot + n + q) for q in range(n)]
        slot += 2 * n
        layers.append(init)
        pairs = _entangler_pairs(kind, n)
        for _ in range(depth):
            layer = [CliffordGate("cnot", pair) for pair in pairs]
            layer += [_rot(n, AXIS_Y, q, slot + q) for q in range(n)]
            layer += [_rot(n, AXIS_Z, q, slot + n + q) for q in range(n)]
            slot += 2 * n
            layers.append(layer)
    return layers


def layer_angle_counts(kind: str, n: int, depth: int) -> list[int]:
    return [sum(1 for g in layer if isinstance(g, RotationGate))
            for layer in build_layers(kind, n, depth)]


def build_circuit(kind: str, n: int, depth: int) -> Circuit:
    layers = build_layers(kind, n, depth)
    gates = [g for layer in layers for g in layer]
    n_angles = sum(1 for g in gates if isinstance(g, RotationGate))
    return Circuit(n, gates, n_angles)


def initial_axes(kind: str, n: int) -> tuple[list[int], list[int]]:
    """Per-qubit rotation axes of the two leading single-qubit columns."""
    if kind.startswith("efficient_su2"):
        return [AXIS_Y] * n, [AXIS_Z] * n
    if kind == "circuit1":
        return [AXIS_Y] * n, [AXIS_Z] * n
    if kind == "circuit2":
        return [AXIS_X] * n, [AXIS_Z] * n
    raise ConfigError(f"{kind} has no initial single-qubit columns")


def trainable_parameter_count(kind: str, n: int, depth: int, d_z: int) -> int:
    return sum(k * (d_z + 1) for k in layer_angle_counts(kind, n, depth))


def feature_observables(n: int) -> list[PauliString]:
    """Per-qubit sigma_x expectations first, then per-qubit sigma_z."""
    return ([PauliString.single(n, q, AXIS_X) for q in range(n)]
            + [PauliString.single(n, q, AXIS_Z) for q in range(n)])


@dataclass
class StyleGenerator:
    """Latent-conditioned circuit: per-layer affine maps into the angle vector."""

    kind: str
    n_qubits: int
    depth: int
    d_z: int
    rescale: bool
    weights: list          # W_l with shape (K_l, d_z)
    biases: list           # b_l with shape (K_l,)
    _circuit: Circuit | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        counts = layer_angle_counts(self.kind, self.n_qubits, self.depth)
        if len(self.weights) != len(counts) or len(self.biases) != len(counts):
            raise ConfigError("per-layer parameter count does not match layout")
        for k, w, b in zip(counts, self.weights, self.biases):
            if w.shape != (k, self.d_z) or b.shape != (k,):
                raise ConfigError(
                    f"layer expects W ({k},{self.d_z}) and b ({k},), got {w.shape}, {b.shape}")

    @property
    def circuit(self) -> Circuit:
        if self._circuit is None:
            self._circuit = build_circuit(self.kind, self.n_qubits, self.depth)
        return self._circuit

    @property
    def layer_counts(self) -> list[int]:
        return [w.shape[0] for w in self.weights]

    @property
    def feature_dim(self) -> int:
        return 2 * self.n_qubits

    @property
    def angle_scale(self) -> float:
        return 1.0 / np.sqrt(self.d_z) if self.rescale else 1.0

    def stacked_affine(self) -> tuple[np.ndarray, np.ndarray]:
        # rebuilt on every call: trainers update weights/biases in place
        return np.vstack(self.weights), np.concatenate(self.biases)

    def param_list(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def init_style_generator(kind: str, n: int, depth: int, d_z: int,
                         delta: float = 0.01, seed=0,
                         rescale: bool = False) -> StyleGenerator:
    """Uniform(-delta, delta) init of all affine parameters."""
    if d_z < 1:
        raise ConfigError("latent dimension must be >= 1")
    counts = layer_angle_counts(kind, n, depth)
    rng = as_rng(seed, "style_init", kind, n, depth)
    weights = [rng.uniform(-delta, delta, size=(k, d_z)) for k in counts]
    biases = [rng.uniform(-delta, delta, size=k) for k in counts]
    return StyleGenerator(kind, n, depth, d_z, rescale, weights, biases)


def embed_angles(gen: StyleGenerator, z: np.ndarray) -> np.ndarray:
    """theta_l = W_l z * scale + b_l, concatenated over layers."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (gen.d_z,):
        raise ConfigError(f"latent shape {z.shape} != ({gen.d_z},)")
    w, b = gen.stacked_affine()
    return w @ z * gen.angle_scale + b


def _shot_features(exact: np.ndarray, shots: int, seed) -> np.ndarray:
    """Per-observable shot batches from independent streams; exact shape (B, 2n)."""
    noisy = np.empty_like(exact)
    for j in range(exact.shape[1]):
        rng = as_rng(seed, "shots", j)
        p_plus = np.clip(0.5 * (1.0 + exact[:, j]), 0.0, 1.0)
        k = rng.binomial(shots, p_plus)
        noisy[:, j] = 2.0 * k / shots - 1.0
    return noisy


def generate_features(gen: StyleGenerator, z: np.ndarray, shots: int | None = None,
                      seed=None) -> np.ndarray:
    """Feature vector (per-qubit <sigma_x>, then <sigma_z>) for one latent."""
    return generate_features_batch(gen, np.asarray(z, dtype=np.float64)[None, :],
                                   shots=shots, seed=seed)[0]


def generate_features_batch(gen: StyleGenerator, z_batch: np.ndarray,
                            shots: int | None = None, seed=None,
                            backend=None) -> np.ndarray:
    z_batch = np.asarray(z_batch, dtype=np.float64)
    if z_batch.ndim != 2 or z_batch.shape[1] != gen.d_z:
        raise ConfigError(f"latent batch shape {z_batch.shape} incompatible with d_z={gen.d_z}")
    w, b = gen.stacked_affine()
    angles = z_batch @ w.T * gen.angle_scale + b
    obs = feature_observables(gen.n_qubits)
    args = [pauli_program_args(p) for p in obs]
    be = backend or active_backend()
    exact = be.batch_features(gen.circuit.compiled(), angles,
                              [a[0] for a in args], [a[1] for a in args],
                              [a[2] for a in args])
    if shots is None:
        return exact
    if seed is None:
        raise ConfigError("shot-noise generation needs an explicit seed or stream")
    return _shot_features(exact, int(shots), seed)


def feature_jacobian(gen: StyleGenerator, z: np.ndarray) -> np.ndarray:
    """J in R^{2n x N_Theta}: d(features)/d(affine params).

    Column order is layer-major, W_l rows flattened row-major, then b_l:
    dx/dW_l[k, i] = (dx/dtheta_{l,k}) z_i * scale and dx/db_l[k] = dx/dtheta_{l,k}.
    """
    z = np.asarray(z, dtype=np.float64)
    theta = embed_angles(gen, z)
    obs = feature_observables(gen.n_qubits)
    dtheta = np.stack([adjoint_gradient(gen.circuit, theta, p) for p in obs])
    cols = []
    off = 0
    for k in gen.layer_counts:
        block = dtheta[:, off:off + k]
        cols.append((block[:, :, None] * (z * gen.angle_scale)[None, None, :])
                    .reshape(block.shape[0], k * gen.d_z))
        cols.append(block)
        off += k
    return np.concatenate(cols, axis=1)


def feature_param_vjp(gen: StyleGenerator, z: np.ndarray, upstream: np.ndarray) -> list:
    """upstream^T @ feature_jacobian, contracted in one adjoint sweep.

    Returns gradients shaped like [W_0, b_0, W_1, b_1, ...].
    """
    z = np.asarray(z, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    theta = embed_angles(gen, z)
    obs = feature_observables(gen.n_qubits)
    gtheta = adjoint_gradient_multi(gen.circuit, theta, obs, upstream)
    grads = []
    off = 0
    for k in gen.layer_counts:
        block = gtheta[off:off + k]
        grads.append(np.outer(block, z * gen.angle_scale))
        grads.append(block.copy())
        off += k
    return grads


def generator_meta(gen: StyleGenerator) -> dict:
    return {"kind": gen.kind, "n_qubits": gen.n_qubits, "depth": gen.depth,
            "d_z": gen.d_z, "rescale": bool(gen.rescale),
            "n_params": trainable_parameter_count(gen.kind, gen.n_qubits,
                                                  gen.depth, gen.d_z)}


def generator_arrays(gen: StyleGenerator) -> dict:
    out = {}
    for i, (w, b) in enumerate(zip(gen.weights, gen.biases)):
        out[f"W{i}"] = w
        out[f"b{i}"] = b
    return out


def generator_from_arrays(meta: dict, arrays: dict) -> StyleGenerator:
    counts = layer_angle_counts(meta["kind"], meta["n_qubits"], meta["depth"])
    weights = [np.asarray(arrays[f"W{i}"], dtype=np.float64) for i in range(len(counts))]
    biases = [np.asarray(arrays[f"b{i}"], dtype=np.float64) for i in range(len(counts))]
    return StyleGenerator(meta["kind"], meta["n_qubits"], meta["depth"],
                          meta["d_z"], bool(meta["rescale"]), weights, biases)
