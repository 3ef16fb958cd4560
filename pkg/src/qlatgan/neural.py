"""Dense feedforward stack in plain numpy.

Hidden layers use LeakyReLU; the head is linear, tanh or logistic. Backward
passes return gradients with respect to parameters and inputs, and the
critic's gradient-penalty term gets true second-order gradients via the
forward-over-reverse construction below (valid because LeakyReLU's second
derivative is zero almost everywhere and the penalty head is linear).

Shapes: batches are (B, dim); weight l is (fan_out, fan_in), applied as
x @ W.T + b. One Adam implementation serves every trainer in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .rng import as_rng

HEADS = ("linear", "tanh", "sigmoid")
DEFAULT_LEAKY_SLOPE = 0.2


@dataclass
class Mlp:
    weights: list
    biases: list
    head: str = "linear"
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        if self.head not in HEADS:
            raise ConfigError(f"unknown head {self.head!r}, expected one of {HEADS}")
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[1] != self.weights[i - 1].shape[0]:
                raise ConfigError("layer widths do not chain")
        for w, b in zip(self.weights, self.biases):
            if b.shape != (w.shape[0],):
                raise ConfigError("bias shape does not match layer")

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def param_list(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def lecun_init(sizes, seed_or_rng, head: str = "linear",
               leaky_slope: float = DEFAULT_LEAKY_SLOPE) -> Mlp:
    """W ~ N(0, 1/fan_in), b = 0."""
    rng = as_rng(seed_or_rng, "lecun", *sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases, head=head, leaky_slope=leaky_slope)


def _leaky(z, slope):
    return np.where(z > 0.0, z, slope * z)


def _leaky_deriv(z, slope):
    return np.where(z > 0.0, 1.0, slope)


def _head_apply(z, head):
    if head == "linear":
        return z
    if head == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


def _head_deriv(z, out, head):
    if head == "linear":
        return np.ones_like(z)
    if head == "tanh":
        return 1.0 - out * out
    return out * (1.0 - out)


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    return mlp_forward_cache(net, x)[0]


def mlp_forward_cache(net: Mlp, x: np.ndarray):
    """Returns (output, cache) with cache = (inputs h_0..h_{L-1}, preacts z_1..z_L, out)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != net.weights[0].shape[1]:
        raise ConfigError(f"input width {x.shape[1]} != {net.weights[0].shape[1]}")
    hs, zs = [x], []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        zs.append(z)
        h = _head_apply(z, net.head) if i == last else _leaky(z, net.leaky_slope)
        if i != last:
            hs.append(h)
    return h, (hs, zs, h)


def mlp_backward(net: Mlp, cache, upstream: np.ndarray):
    """Chain rule for the given upstream (B, out_dim).

    Returns (param_grads, input_grad); param grads are summed over the batch
    (pass upstream already scaled by 1/B for means), layout [gW0, gb0, ...].
    """
    hs, zs, out = cache
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    last = len(net.weights) - 1
    grads = [None] * (2 * len(net.weights))
    delta = upstream * _head_deriv(zs[last], out, net.head)
    for i in range(last, -1, -1):
        grads[2 * i] = delta.T @ hs[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * _leaky_deriv(zs[i - 1], net.leaky_slope)
        else:
            delta = delta @ net.weights[0]
    return grads, delta


def mlp_input_gradient(net: Mlp, x: np.ndarray) -> np.ndarray:
    """d(scalar output)/d(input), per sample; requires out_dim == 1."""
    if net.weights[-1].shape[0] != 1:
        raise ConfigError("input gradient defined for scalar-output networks")
    out, cache = mlp_forward_cache(net, x)
    _, gin = mlp_backward(net, cache, np.ones_like(out))
    return gin


def gp_gradients(net: Mlp, x_hat: np.ndarray, norm_floor: float = 1e-12):
    """Mean over the batch of (||grad_x net(x)|| - 1)^2 and its parameter gradients.

    Double backprop for piecewise-linear hidden activations and a linear
    head: the activation-pattern derivative is zero almost everywhere, so
    d(u . grad_x net)/d(params) follows from a tangent forward pass (tangent
    t_0 = u) and a reverse pass that reuses the primal activation slopes.
    Bias gradients of the penalty vanish identically under this convention.
    """
    if net.head != "linear":
        raise ConfigError("gradient penalty requires a linear head")
    if net.weights[-1].shape[0] != 1:
        raise ConfigError("gradient penalty requires a scalar output")
    x_hat = np.atleast_2d(np.asarray(x_hat, dtype=np.float64))
    batch = x_hat.shape[0]
    _, (_, zs, _) = mlp_forward_cache(net, x_hat)
    slopes = [_leaky_deriv(z, net.leaky_slope) for z in zs[:-1]]
    n_layers = len(net.weights)

    # reverse pass for g = grad_x net(x)
    v = np.ones((batch, 1))
    for i in range(n_layers - 1, 0, -1):
        v = (v @ net.weights[i]) * slopes[i - 1]
    g = v @ net.weights[0]

    norms = np.linalg.norm(g, axis=1)
    penalty = float(np.mean((norms - 1.0) ** 2))
    coeff = 2.0 * (norms - 1.0) / np.maximum(norms, norm_floor)  # d penalty / d ||g||

    # tangent forward pass along u = g (activation slopes frozen)
    t = [g]
    for i in range(n_layers - 1):
        t.append((t[i] @ net.weights[i].T) * slopes[i])
    # q = u . grad_x net(x) with u = g held constant traverses each W_i once:
    # q = t_{L-1} @ W_{L-1}^T, so a reverse pass over the tangent chain with
    # per-sample weight coeff/B yields the penalty's parameter gradients.
    grads = [None] * (2 * n_layers)
    rho = np.ones((batch, 1)) * coeff[:, None] / batch
    for i in range(n_layers - 1, -1, -1):
        dzeta = rho if i == n_layers - 1 else rho * slopes[i]
        grads[2 * i] = dzeta.T @ t[i]
        grads[2 * i + 1] = np.zeros_like(net.biases[i])
        if i > 0:
            rho = dzeta @ net.weights[i]
    return penalty, grads


def adam_init(params: list) -> dict:
    return {"m": [np.zeros_like(p) for p in params],
            "v": [np.zeros_like(p) for p in params],
            "t": 0}


def adam_step(params: list, grads: list, state: dict, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """In-place Adam update with bias correction."""
    if len(params) != len(grads) or len(params) != len(state["m"]):
        raise ConfigError("parameter, gradient and state lists must align")
    state["t"] += 1
    t = state["t"]
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state["m"], state["v"]):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
