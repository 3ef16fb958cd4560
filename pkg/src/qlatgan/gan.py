"""Wasserstein adversarial training with a gradient penalty.

The critic is a scalar-output dense network (linear head, so the penalty
term's exact second-order gradients from :mod:`.neural` apply). Generators
plug in through a small adapter protocol: ``sample`` maps a latent batch to
feature rows, ``backward`` turns the critic's input gradient at those rows
into parameter gradients, ``param_list`` exposes the tensors Adam updates in
place. Both the simulated quantum generator and a dense reference generator
implement it, so the training loop is shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import StyleGenerator, feature_param_vjp, generate_features_batch
from .errors import ConfigError, DataError
from .neural import (
    Mlp,
    adam_init,
    adam_step,
    gp_gradients,
    lecun_init,
    mlp_backward,
    mlp_forward,
    mlp_forward_cache,
)
from .rng import spawn_rng

CRITIC_HIDDEN = (100, 50)
CLASSICAL_GEN_HIDDEN = (50, 30)


@dataclass(frozen=True)
class GanConfig:
    lambda_gp: float = 10.0
    n_critic: int = 5
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.5
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.lambda_gp < 0 or self.n_critic < 1 or self.batch_size < 1:
            raise ConfigError("invalid adversarial training configuration")


class QuantumGeneratorAdapter:
    """Latent-to-feature map through the simulated circuit."""

    def __init__(self, gen: StyleGenerator):
        self.gen = gen

    @property
    def d_z(self) -> int:
        return self.gen.d_z

    @property
    def feature_dim(self) -> int:
        return self.gen.feature_dim

    def sample(self, z_batch: np.ndarray) -> np.ndarray:
        return generate_features_batch(self.gen, z_batch)

    def param_list(self) -> list:
        return self.gen.param_list()

    def backward(self, z_batch: np.ndarray, upstream: np.ndarray) -> list:
        grads = [np.zeros_like(p) for p in self.gen.param_list()]
        for z, u in zip(z_batch, upstream):
            for acc, g in zip(grads, feature_param_vjp(self.gen, z, u)):
                acc += g
        return grads


class ClassicalGeneratorAdapter:
    """Dense reference generator; tanh head keeps outputs in [-1, 1]."""

    def __init__(self, net: Mlp):
        if net.head != "tanh":
            raise ConfigError("reference generator must end in tanh")
        self.net = net

    @property
    def d_z(self) -> int:
        return self.net.weights[0].shape[1]

    @property
    def feature_dim(self) -> int:
        return self.net.weights[-1].shape[0]

    def sample(self, z_batch: np.ndarray) -> np.ndarray:
        return mlp_forward(self.net, z_batch)

    def param_list(self) -> list:
        return self.net.param_list()

    def backward(self, z_batch: np.ndarray, upstream: np.ndarray) -> list:
        _, cache = mlp_forward_cache(self.net, z_batch)
        grads, _ = mlp_backward(self.net, cache, upstream)
        return grads


def init_critic(feature_dim: int, seed_or_rng, hidden=CRITIC_HIDDEN) -> Mlp:
    return lecun_init([feature_dim, *hidden, 1], seed_or_rng, head="linear")


def init_classical_generator(d_z: int, feature_dim: int, seed_or_rng,
                             hidden=CLASSICAL_GEN_HIDDEN) -> ClassicalGeneratorAdapter:
    net = lecun_init([d_z, *hidden, feature_dim], seed_or_rng, head="tanh")
    return ClassicalGeneratorAdapter(net)


def generator_loss(critic: Mlp, fake: np.ndarray) -> float:
    return float(-np.mean(mlp_forward(critic, fake)))


def critic_loss(critic: Mlp, real: np.ndarray, fake: np.ndarray,
                x_hat: np.ndarray, lambda_gp: float) -> float:
    penalty, _ = gp_gradients(critic, x_hat)
    return float(-np.mean(mlp_forward(critic, real))
                 + np.mean(mlp_forward(critic, fake))
                 + lambda_gp * penalty)


def interpolate(real: np.ndarray, fake: np.ndarray, eps: np.ndarray) -> np.ndarray:
    if real.shape != fake.shape:
        raise DataError("real and fake batches must have identical shapes")
    eps = np.asarray(eps, dtype=np.float64).reshape(-1, 1)
    if eps.shape[0] != real.shape[0]:
        raise DataError("need one interpolation draw per sample")
    return eps * real + (1.0 - eps) * fake


def critic_gradients(critic: Mlp, real: np.ndarray, fake: np.ndarray,
                     x_hat: np.ndarray, lambda_gp: float):
    """Loss value and parameter gradients for one critic update."""
    batch = real.shape[0]
    out_r, cache_r = mlp_forward_cache(critic, real)
    out_f, cache_f = mlp_forward_cache(critic, fake)
    penalty, gp_grads = gp_gradients(critic, x_hat)
    loss = float(-np.mean(out_r) + np.mean(out_f) + lambda_gp * penalty)
    g_real, _ = mlp_backward(critic, cache_r, np.full_like(out_r, -1.0 / batch))
    g_fake, _ = mlp_backward(critic, cache_f, np.full_like(out_f, 1.0 / batch))
    grads = [gr + gf + lambda_gp * gp for gr, gf, gp in zip(g_real, g_fake, gp_grads)]
    return loss, grads


def generator_gradients(gen, critic: Mlp, z_batch: np.ndarray):
    """Loss value and generator parameter gradients for one update."""
    fake = gen.sample(z_batch)
    out, cache = mlp_forward_cache(critic, fake)
    loss = float(-np.mean(out))
    _, d_fake = mlp_backward(critic, cache, np.full_like(out, -1.0 / out.shape[0]))
    return loss, gen.backward(z_batch, d_fake)


def train_gan(gen, critic: Mlp, real: np.ndarray, epochs: int,
              config: GanConfig = GanConfig(), seed: int = 0,
              eval_hook=None, eval_every: int = 1) -> list[dict]:
    """Alternating updates: ``n_critic`` critic steps per generator step.

    Every critic step consumes a fresh real minibatch, fresh latents and
    fresh per-sample interpolation draws. Returns one history row per epoch;
    ``eval_hook(gen, epoch)`` may add metric columns on its cadence.
    """
    real = np.atleast_2d(np.asarray(real, dtype=np.float64))
    if real.shape[1] != gen.feature_dim:
        raise DataError(f"real feature width {real.shape[1]} != {gen.feature_dim}")
    if real.shape[0] < config.batch_size:
        raise DataError("need at least one full batch of real samples")
    if epochs < 1:
        raise ConfigError("epochs must be positive")
    rng = spawn_rng(seed, "gan_train")
    gen_params = gen.param_list()
    critic_params = critic.param_list()
    g_state = adam_init(gen_params)
    c_state = adam_init(critic_params)
    adam_kw = dict(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                   eps=config.adam_eps)
    batch = config.batch_size
    history = []
    for epoch in range(epochs):
        order = rng.permutation(real.shape[0])
        c_losses, g_losses = [], []
        since_gen = 0
        for start in range(0, real.shape[0] - batch + 1, batch):
            real_b = real[order[start:start + batch]]
            z = rng.standard_normal((batch, gen.d_z))
            fake_b = gen.sample(z)
            x_hat = interpolate(real_b, fake_b, rng.uniform(size=batch))
            loss, grads = critic_gradients(critic, real_b, fake_b, x_hat,
                                           config.lambda_gp)
            adam_step(critic_params, grads, c_state, **adam_kw)
            c_losses.append(loss)
            since_gen += 1
            if since_gen == config.n_critic:
                since_gen = 0
                z = rng.standard_normal((batch, gen.d_z))
                g_loss, g_grads = generator_gradients(gen, critic, z)
                adam_step(gen_params, g_grads, g_state, **adam_kw)
                g_losses.append(g_loss)
        row = {"epoch": epoch,
               "critic_loss": float(np.mean(c_losses)),
               "gen_loss": float(np.mean(g_losses)) if g_losses else float("nan")}
        if eval_hook is not None and (epoch + 1) % eval_every == 0:
            row.update(eval_hook(gen, epoch))
        history.append(row)
    return history


def sample_features(gen, n_samples: int, seed: int, tag: str = "sample") -> np.ndarray:
    """Draw latents from the standard normal prior and map them through ``gen``."""
    rng = spawn_rng(seed, "gan_prior", tag)
    return gen.sample(rng.standard_normal((n_samples, gen.d_z)))
