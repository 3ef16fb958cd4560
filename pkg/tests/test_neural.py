"""Dense network stack: forward oracle, gradient checks, Adam, init stats."""

import numpy as np
import pytest

from qlatgan.errors import ConfigError
from qlatgan.neural import (
    Mlp,
    adam_init,
    adam_step,
    gp_gradients,
    lecun_init,
    mlp_backward,
    mlp_forward,
    mlp_forward_cache,
    mlp_input_gradient,
)
from qlatgan.rng import spawn_rng


def forward_oracle(net, x):
    """Per-element python reimplementation, no numpy linear algebra."""
    out = []
    for row in x:
        h = list(row)
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            z = [sum(w[k][j] * h[j] for j in range(len(h))) + b[k]
                 for k in range(w.shape[0])]
            if i == len(net.weights) - 1:
                if net.head == "linear":
                    h = z
                elif net.head == "tanh":
                    h = [np.tanh(v) for v in z]
                else:
                    h = [1.0 / (1.0 + np.exp(-v)) for v in z]
            else:
                h = [v if v > 0 else net.leaky_slope * v for v in z]
        out.append(h)
    return np.array(out)


def random_net(seed, sizes, head):
    rng = spawn_rng(seed, "testnet")
    weights = [rng.normal(0, 0.7, size=(o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
    biases = [rng.normal(0, 0.3, size=o) for o in sizes[1:]]
    return Mlp(weights, biases, head=head)


@pytest.mark.parametrize("head", ["linear", "tanh", "sigmoid"])
def test_forward_matches_oracle(head):
    net = random_net(11, [4, 6, 3, 2], head)
    x = spawn_rng(12, "x").normal(size=(5, 4))
    np.testing.assert_allclose(mlp_forward(net, x), forward_oracle(net, x),
                               rtol=1e-12, atol=1e-12)


def test_forward_accepts_single_sample():
    net = random_net(3, [3, 5, 1], "linear")
    x = np.array([0.3, -0.2, 0.9])
    got = mlp_forward(net, x)
    assert got.shape == (1, 1)
    np.testing.assert_allclose(got, forward_oracle(net, x[None, :]))


def _loss_and_grads(net, x, target):
    out, cache = mlp_forward_cache(net, x)
    diff = out - target
    loss = float(np.mean(diff * diff))
    upstream = 2.0 * diff / diff.size
    grads, gin = mlp_backward(net, cache, upstream)
    return loss, grads, gin


@pytest.mark.parametrize("head", ["linear", "tanh", "sigmoid"])
def test_backward_matches_finite_differences(head):
    net = random_net(21, [3, 7, 4, 2], head)
    rng = spawn_rng(22, "fd")
    x = rng.normal(size=(6, 3))
    target = rng.normal(size=(6, 2))
    _, grads, gin = _loss_and_grads(net, x, target)

    eps = 1e-6
    for pi, p in enumerate(net.param_list()):
        flat = p.reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + eps
            up, _, _ = _loss_and_grads(net, x, target)
            flat[j] = keep - eps
            dn, _, _ = _loss_and_grads(net, x, target)
            flat[j] = keep
            np.testing.assert_allclose(grads[pi].reshape(-1)[j], (up - dn) / (2 * eps),
                                       rtol=1e-5, atol=1e-7)
    for b in range(x.shape[0]):
        for j in range(x.shape[1]):
            keep = x[b, j]
            x[b, j] = keep + eps
            up, _, _ = _loss_and_grads(net, x, target)
            x[b, j] = keep - eps
            dn, _, _ = _loss_and_grads(net, x, target)
            x[b, j] = keep
            np.testing.assert_allclose(gin[b, j], (up - dn) / (2 * eps),
                                       rtol=1e-5, atol=1e-7)


def test_input_gradient_matches_fd():
    net = random_net(31, [4, 8, 5, 1], "linear")
    rng = spawn_rng(32, "fd")
    x = rng.normal(size=(3, 4))
    g = mlp_input_gradient(net, x)
    eps = 1e-6
    for b in range(3):
        for j in range(4):
            keep = x[b, j]
            x[b, j] = keep + eps
            up = float(mlp_forward(net, x)[b, 0])
            x[b, j] = keep - eps
            dn = float(mlp_forward(net, x)[b, 0])
            x[b, j] = keep
            np.testing.assert_allclose(g[b, j], (up - dn) / (2 * eps),
                                       rtol=1e-6, atol=1e-9)


def test_gp_penalty_value_matches_direct_norms():
    net = random_net(41, [5, 9, 6, 1], "linear")
    x = spawn_rng(42, "x").normal(size=(7, 5))
    penalty, _ = gp_gradients(net, x)
    norms = np.linalg.norm(mlp_input_gradient(net, x), axis=1)
    np.testing.assert_allclose(penalty, np.mean((norms - 1.0) ** 2), rtol=1e-12)


def test_gp_gradients_match_finite_differences():
    net = random_net(43, [4, 6, 5, 1], "linear")
    x = spawn_rng(44, "x").normal(size=(5, 4))
    _, grads = gp_gradients(net, x)
    eps = 1e-5
    for pi, p in enumerate(net.param_list()):
        flat = p.reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + eps
            up, _ = gp_gradients(net, x)
            flat[j] = keep - eps
            dn, _ = gp_gradients(net, x)
            flat[j] = keep
            np.testing.assert_allclose(grads[pi].reshape(-1)[j], (up - dn) / (2 * eps),
                                       rtol=1e-4, atol=1e-8)


def test_gp_bias_gradients_vanish():
    net = random_net(45, [3, 5, 1], "linear")
    x = spawn_rng(46, "x").normal(size=(4, 3))
    _, grads = gp_gradients(net, x)
    for i in range(1, len(grads), 2):
        assert np.all(grads[i] == 0.0)


def test_gp_single_linear_layer_closed_form():
    # out = w.x: grad penalty is (||w||-1)^2 with gradient 2(||w||-1) w/||w||,
    # which reduces to exactly w at ||w|| = 2.
    w = np.array([[1.2, -0.8, 1.0]])
    w *= 2.0 / np.linalg.norm(w)
    net = Mlp([w.copy()], [np.zeros(1)], head="linear")
    x = spawn_rng(47, "x").normal(size=(6, 3))
    penalty, grads = gp_gradients(net, x)
    np.testing.assert_allclose(penalty, 1.0, rtol=1e-12)
    np.testing.assert_allclose(grads[0], w, rtol=1e-12)

    w2 = np.array([[0.3, 0.4, 0.0]])  # ||w|| = 0.5
    net2 = Mlp([w2.copy()], [np.zeros(1)], head="linear")
    _, grads2 = gp_gradients(net2, x)
    np.testing.assert_allclose(grads2[0], 2.0 * (0.5 - 1.0) * w2 / 0.5, rtol=1e-12)


def test_gp_requires_linear_scalar_head():
    net = random_net(48, [3, 4, 1], "tanh")
    with pytest.raises(ConfigError):
        gp_gradients(net, np.zeros((2, 3)))
    net2 = random_net(49, [3, 4, 2], "linear")
    with pytest.raises(ConfigError):
        gp_gradients(net2, np.zeros((2, 3)))


def test_adam_first_step_is_signed_lr():
    p = np.array([1.0, -2.0, 3.0])
    g = np.array([0.5, -0.25, 2.0])
    state = adam_init([p])
    adam_step([p], [g], state, lr=1e-3)
    # with zero history m_hat/sqrt(v_hat) = sign(g) up to eps
    np.testing.assert_allclose(p, np.array([1.0, -2.0, 3.0]) - 1e-3 * np.sign(g),
                               atol=1e-8)
    assert state["t"] == 1


def test_adam_minimizes_quadratic():
    target = np.array([0.7, -1.3, 2.1])
    p = np.zeros(3)
    state = adam_init([p])
    for _ in range(4000):
        adam_step([p], [2.0 * (p - target)], state, lr=0.01)
    np.testing.assert_allclose(p, target, atol=1e-4)


def test_adam_rejects_misaligned_lists():
    p = np.zeros(3)
    state = adam_init([p])
    with pytest.raises(ConfigError):
        adam_step([p], [np.zeros(3), np.zeros(2)], state)


def test_lecun_init_statistics_and_determinism():
    net = lecun_init([400, 300, 1], 7)
    assert [w.shape for w in net.weights] == [(300, 400), (1, 300)]
    for w in net.weights:
        fan_in = w.shape[1]
        tol = 4.0 / np.sqrt(2.0 * w.size)  # 4 standard errors of a std estimate
        assert abs(w.std() * np.sqrt(fan_in) - 1.0) < tol
        assert abs(w.mean() * np.sqrt(fan_in)) < 4.0 / np.sqrt(w.size)
    for b in net.biases:
        assert np.all(b == 0.0)
    net2 = lecun_init([400, 300, 1], 7)
    for a, b in zip(net.param_list(), net2.param_list()):
        np.testing.assert_array_equal(a, b)
    net3 = lecun_init([400, 300, 1], 8)
    assert not np.array_equal(net.weights[0], net3.weights[0])


def test_mlp_validation():
    with pytest.raises(ConfigError):
        Mlp([np.zeros((3, 2)), np.zeros((4, 5))], [np.zeros(3), np.zeros(4)])
    with pytest.raises(ConfigError):
        Mlp([np.zeros((3, 2))], [np.zeros(2)])
    with pytest.raises(ConfigError):
        Mlp([np.zeros((3, 2))], [np.zeros(3)], head="relu")
    net = random_net(1, [3, 4, 2], "linear")
    with pytest.raises(ConfigError):
        mlp_forward(net, np.zeros((2, 5)))
