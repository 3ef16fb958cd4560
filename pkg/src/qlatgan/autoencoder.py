"""Dense autoencoder that maps flat images to a compact latent code.

The encoder ends in tanh so every latent coordinate lands in [-1, 1], the
range the quantum generator's feature map produces; the decoder ends in a
logistic head so reconstructions stay valid pixel intensities in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .neural import Mlp, adam_init, adam_step, lecun_init, mlp_backward, mlp_forward, mlp_forward_cache
from .rng import as_rng, spawn_rng

ENCODER_HIDDEN = (256, 64)
DECODER_HIDDEN = (64, 256)


@dataclass
class Autoencoder:
    encoder: Mlp
    decoder: Mlp

    def __post_init__(self):
        if self.encoder.head != "tanh" or self.decoder.head != "sigmoid":
            raise ConfigError("encoder must end in tanh, decoder in sigmoid")
        if self.encoder.weights[-1].shape[0] != self.decoder.weights[0].shape[1]:
            raise ConfigError("latent widths of encoder and decoder disagree")

    @property
    def image_dim(self) -> int:
        return self.encoder.weights[0].shape[1]

    @property
    def latent_dim(self) -> int:
        return self.encoder.weights[-1].shape[0]

    def encode(self, images: np.ndarray) -> np.ndarray:
        return mlp_forward(self.encoder, _check_images(images, self.image_dim))

    def decode(self, latents: np.ndarray) -> np.ndarray:
        latents = np.atleast_2d(np.asarray(latents, dtype=np.float64))
        if latents.shape[1] != self.latent_dim:
            raise ConfigError(f"latent width {latents.shape[1]} != {self.latent_dim}")
        return mlp_forward(self.decoder, latents)

    def reconstruct(self, images: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(images))

    def param_list(self) -> list:
        return self.encoder.param_list() + self.decoder.param_list()


def _check_images(images, dim) -> np.ndarray:
    images = np.atleast_2d(np.asarray(images, dtype=np.float64))
    if images.ndim != 2 or images.shape[1] != dim:
        raise DataError(f"expected flat images of width {dim}, got {images.shape}")
    return images


def init_autoencoder(image_dim: int, latent_dim: int, seed: int) -> Autoencoder:
    if latent_dim < 1 or image_dim < 1:
        raise ConfigError("dimensions must be positive")
    enc = lecun_init([image_dim, *ENCODER_HIDDEN, latent_dim],
                     spawn_rng(seed, "ae_init", "enc"), head="tanh")
    dec = lecun_init([latent_dim, *DECODER_HIDDEN, image_dim],
                     spawn_rng(seed, "ae_init", "dec"), head="sigmoid")
    return Autoencoder(enc, dec)


def reconstruction_mse(ae: Autoencoder, images: np.ndarray) -> float:
    images = _check_images(images, ae.image_dim)
    diff = ae.reconstruct(images) - images
    return float(np.mean(diff * diff))


def train_autoencoder(ae: Autoencoder, images: np.ndarray, epochs: int,
                      batch_size: int = 64, lr: float = 1e-3,
                      seed_or_rng=0) -> list[float]:
    """Minibatch Adam on mean squared reconstruction error.

    Returns the running mean training loss per epoch.
    """
    images = _check_images(images, ae.image_dim)
    if np.min(images) < 0.0 or np.max(images) > 1.0:
        raise DataError("pixel values must lie in [0, 1]")
    if epochs < 1 or batch_size < 1:
        raise ConfigError("epochs and batch_size must be positive")
    rng = as_rng(seed_or_rng, "ae_train")
    params = ae.param_list()
    state = adam_init(params)
    n = images.shape[0]
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, batch_size):
            batch = images[order[start:start + batch_size]]
            code, enc_cache = mlp_forward_cache(ae.encoder, batch)
            recon, dec_cache = mlp_forward_cache(ae.decoder, code)
            diff = recon - batch
            total += float(np.sum(diff * diff)) / batch.shape[1]
            seen += batch.shape[0]
            upstream = 2.0 * diff / diff.size
            dec_grads, at_code = mlp_backward(ae.decoder, dec_cache, upstream)
            enc_grads, _ = mlp_backward(ae.encoder, enc_cache, at_code)
            adam_step(params, enc_grads + dec_grads, state, lr=lr)
        history.append(total / seen)
    return history
