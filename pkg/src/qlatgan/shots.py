"""Finite-shot robustness scans for a trained style generator.

Each scan freezes one batch of latent draws, regenerates the matching
features under a grid of measurement-shot budgets, and quantifies how far
the finite-shot output sits from the analytic (infinite-shot) output.
Results come back as uniform records (shots, statistic, value, stderr);
shots = 0 denotes the analytic reference level throughout, matching the
feature-set persistence convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .ansatz import StyleGenerator, generate_features_batch
from .autoencoder import Autoencoder
from .errors import ConfigError, DataError
from .metrics import frechet_distance, gaussian_summary, kl_divergence
from .rng import hash_seed, spawn_rng

DEFAULT_SHOT_GRID = tuple(2 ** k for k in range(4, 14))
HIST_RANGE = (-1.0, 1.0)
TRAIN_BIN_SMOOTHING = 1e-12


@dataclass(frozen=True)
class ShotScanConfig:
    """Shared knobs for the three scans; identical (config, seed) pairs
    reproduce every row bit for bit."""

    shot_grid: tuple = DEFAULT_SHOT_GRID
    n_samples: int = 10_000
    n_bins: int = 500
    seed: int = 0

    def __post_init__(self):
        if len(self.shot_grid) == 0:
            raise ConfigError("shot grid is empty")
        for s in self.shot_grid:
            if int(s) != s or s < 1:
                raise ConfigError(f"shot counts must be positive integers, got {s!r}")
        if self.n_samples < 2:
            raise ConfigError("need at least 2 samples for spread estimates")
        if self.n_bins < 1:
            raise ConfigError("n_bins must be positive")


def _check_train(train_features: np.ndarray, feature_dim: int) -> np.ndarray:
    x = np.asarray(train_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("train features must be a (N>=2, D) array")
    if x.shape[1] != feature_dim:
        raise DataError(f"train feature width {x.shape[1]} != generator's {feature_dim}")
    return x


def _latents(gen: StyleGenerator, cfg: ShotScanConfig) -> np.ndarray:
    rng = spawn_rng(cfg.seed, "shot_scan", "z")
    return rng.standard_normal((cfg.n_samples, gen.d_z))


def _noisy_features(gen, z, shots: int, cfg: ShotScanConfig, tag: str) -> np.ndarray:
    # an int sub-seed (not a shared Generator) so each component inside
    # generate_features_batch still gets its own stream
    return generate_features_batch(
        gen, z, shots=int(shots),
        seed=hash_seed(cfg.seed, "shot_scan", tag, int(shots)))


def _row(shots, statistic, value, stderr) -> dict:
    return {"shots": int(shots), "statistic": str(statistic),
            "value": float(value), "stderr": float(stderr)}


def _mean_row(shots, statistic, per_sample: np.ndarray) -> dict:
    per_sample = np.asarray(per_sample, dtype=np.float64)
    stderr = per_sample.std(ddof=1) / np.sqrt(per_sample.size)
    return _row(shots, statistic, per_sample.mean(), stderr)


def pairwise_distance_stats(x: np.ndarray, chunk: int = 512) -> tuple[float, float]:
    """Mean and minimum Euclidean distance over all unordered sample pairs.

    Chunked so the full N x N matrix is never materialized.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise DataError("need at least 2 samples for pairwise statistics")
    total = 0.0
    count = 0
    smallest = np.inf
    for start in range(0, n - 1, chunk):
        block = x[start:start + chunk]
        d = cdist(block, x[start:])
        lo = np.tril_indices(block.shape[0])
        d[lo] = np.inf        # keep each unordered pair once, drop self-pairs
        finite = d[np.isfinite(d)]
        total += float(finite.sum())
        count += finite.size
        smallest = min(smallest, float(finite.min()))
    return total / count, smallest


def feature_l2_scan(gen: StyleGenerator, train_features: np.ndarray,
                    cfg: ShotScanConfig) -> list[dict]:
    """Mean L2 between finite-shot and analytic features at each shot level.

    The same latent batch is reused across every level, so the distance
    isolates measurement noise. Two reference rows report the mean and the
    minimum pairwise separation inside the training set, the scale against
    which the shot-noise displacement is judged.
    """
    train = _check_train(train_features, gen.feature_dim)
    z = _latents(gen, cfg)
    exact = generate_features_batch(gen, z)
    rows = [_row(0, "feature_l2", 0.0, 0.0)]
    for shots in cfg.shot_grid:
        noisy = _noisy_features(gen, z, shots, cfg, "l2")
        rows.append(_mean_row(shots, "feature_l2",
                              np.linalg.norm(noisy - exact, axis=1)))
    mean_pair, min_pair = pairwise_distance_stats(train)
    rows.append(_row(0, "train_mean_pairwise", mean_pair, 0.0))
    rows.append(_row(0, "train_min_pairwise", min_pair, 0.0))
    return rows


def component_histograms(features: np.ndarray, n_bins: int,
                         smooth_empty: bool = False) -> np.ndarray:
    """Per-component probability histograms over [-1, 1], shape (D, n_bins).

    With smooth_empty, zero-count bins get a floor of 1e-12 before
    renormalization so the array can serve as the reference side of a KL.
    """
    x = np.asarray(features, dtype=np.float64)
    if np.any(np.abs(x) > 1.0 + 1e-9):
        raise DataError("features fall outside the histogram support [-1, 1]")
    edges = np.linspace(HIST_RANGE[0], HIST_RANGE[1], n_bins + 1)
    hists = np.empty((x.shape[1], n_bins))
    for i in range(x.shape[1]):
        counts, _ = np.histogram(np.clip(x[:, i], -1.0, 1.0), bins=edges)
        p = counts / counts.sum()
        if smooth_empty:
            p = np.where(p == 0.0, TRAIN_BIN_SMOOTHING, p)
            p = p / p.sum()
        hists[i] = p
    return hists


def histogram_kl_scan(gen: StyleGenerator, train_features: np.ndarray,
                      cfg: ShotScanConfig) -> list[dict]:
    """Mean per-component KL(generated-histogram || train-histogram) per level.

    Train histograms are the fixed reference; only their empty bins are
    smoothed. The stderr column carries the spread over components.
    """
    train = _check_train(train_features, gen.feature_dim)
    ref = component_histograms(train, cfg.n_bins, smooth_empty=True)
    z = _latents(gen, cfg)

    def kl_row(shots, feats):
        hists = component_histograms(feats, cfg.n_bins)
        kls = np.array([kl_divergence(hists[i], ref[i])
                        for i in range(ref.shape[0])])
        return _mean_row(shots, "kl_mean", kls)

    rows = [kl_row(0, generate_features_batch(gen, z))]
    for shots in cfg.shot_grid:
        rows.append(kl_row(shots, _noisy_features(gen, z, shots, cfg, "kl")))
    return rows


def image_scan(gen: StyleGenerator, ae: Autoencoder, train_features: np.ndarray,
               cfg: ShotScanConfig) -> list[dict]:
    """Decode each shot level and track image drift plus distribution drift.

    pixel_l2 is the per-image L2 between the finite-shot decode and the
    analytic decode of the same latent. frechet is the feature-space
    Frechet distance against the fixed training summary; its shots = 0 row
    is the analytic-generation value the finite-shot curve converges to.
    """
    train = _check_train(train_features, gen.feature_dim)
    if ae.latent_dim != gen.feature_dim:
        raise ConfigError("autoencoder latent width does not match the generator")
    ref = gaussian_summary(train)
    z = _latents(gen, cfg)
    exact = generate_features_batch(gen, z)
    exact_images = ae.decode(exact)
    rows = [_row(0, "pixel_l2", 0.0, 0.0),
            _row(0, "frechet", frechet_distance(gaussian_summary(exact), ref), 0.0)]
    for shots in cfg.shot_grid:
        noisy = _noisy_features(gen, z, shots, cfg, "img")
        images = ae.decode(noisy)
        rows.append(_mean_row(shots, "pixel_l2",
                              np.linalg.norm(images - exact_images, axis=1)))
        rows.append(_row(shots, "frechet",
                         frechet_distance(gaussian_summary(noisy), ref), 0.0))
    return rows
