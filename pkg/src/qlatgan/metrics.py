"""Distribution-level evaluation metrics.

All divergences use natural logarithms. Aside from numpy linear algebra the
clustering and distance computations are implemented here directly so the
package has no dependence on an external ML toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .rng import as_rng

LN2 = float(np.log(2.0))


def _as_distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.size == 0 or not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise DataError(f"{name} must be finite and nonnegative")
    total = p.sum()
    if total <= 0.0:
        raise DataError(f"{name} must have positive mass")
    return p / total


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats; +inf wherever p puts mass that q lacks."""
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.shape != q.shape:
        raise DataError("p and q must have the same length")
    if np.any((p > 0.0) & (q == 0.0)):
        return float("inf")
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats, bounded by ln 2."""
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.shape != q.shape:
        raise DataError("p and q must have the same length")
    m = 0.5 * (p + q)
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m)


def _sq_dists(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # ||x - c||^2 expanded; clip tiny negatives from cancellation
    d2 = (np.sum(data * data, axis=1)[:, None]
          + np.sum(centers * centers, axis=1)[None, :]
          - 2.0 * data @ centers.T)
    return np.maximum(d2, 0.0)


def assign_clusters(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.argmin(_sq_dists(np.atleast_2d(data), centers), axis=1)


def fit_kmeans(data: np.ndarray, n_clusters: int, seed_or_rng=0,
               tol: float = 1e-6, max_iters: int = 300) -> np.ndarray:
    """Careful-seeding init followed by Lloyd iterations.

    Seeding picks each next center with probability proportional to the
    squared distance to the nearest center chosen so far. Lloyd stops when
    the largest center movement drops to ``tol`` or after ``max_iters``.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = data.shape[0]
    if n_clusters < 1 or n_clusters > n:
        raise ConfigError(f"need 1 <= n_clusters <= {n}, got {n_clusters}")
    rng = as_rng(seed_or_rng, "kmeans")

    centers = np.empty((n_clusters, data.shape[1]))
    centers[0] = data[rng.integers(n)]
    d2 = _sq_dists(data, centers[:1])[:, 0]
    for j in range(1, n_clusters):
        total = d2.sum()
        if total <= 0.0:
            idx = rng.integers(n)  # all points already coincide with centers
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = data[idx]
        d2 = np.minimum(d2, _sq_dists(data, centers[j:j + 1])[:, 0])

    for _ in range(max_iters):
        d2_all = _sq_dists(data, centers)
        labels = np.argmin(d2_all, axis=1)
        new_centers = centers.copy()
        nearest = d2_all[np.arange(n), labels]
        for j in range(n_clusters):
            members = labels == j
            if np.any(members):
                new_centers[j] = data[members].mean(axis=0)
            else:
                far = int(np.argmax(nearest))  # reseed dead center far away
                new_centers[j] = data[far]
                nearest[far] = -1.0
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if shift <= tol:
            break
    return centers


def cluster_histogram(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    labels = assign_clusters(data, centers)
    return np.bincount(labels, minlength=centers.shape[0]).astype(np.float64)


def jsd_clustered(real: np.ndarray, fake: np.ndarray, n_clusters: int = 100,
                  seed_or_rng=0, centers: np.ndarray | None = None) -> float:
    """JSD between cluster-occupancy histograms; clusters are fit on real only."""
    real = np.atleast_2d(real)
    fake = np.atleast_2d(fake)
    if real.shape[1] != fake.shape[1]:
        raise DataError("real and fake must share the feature dimension")
    if centers is None:
        centers = fit_kmeans(real, n_clusters, seed_or_rng)
    return js_divergence(cluster_histogram(real, centers),
                         cluster_histogram(fake, centers))


@dataclass(frozen=True)
class GaussianSummary:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if self.mean.ndim != 1 or self.cov.shape != (self.mean.size, self.mean.size):
            raise DataError("mean must be a vector and cov its square matrix")


def gaussian_summary(data: np.ndarray) -> GaussianSummary:
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] < 2:
        raise DataError("need at least two samples for a covariance")
    mean = data.mean(axis=0)
    cov = np.cov(data, rowvar=False, ddof=1)
    return GaussianSummary(mean, np.atleast_2d(cov))


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The matrix geometric mean trace is evaluated through the eigenvalues of
    S_a^(1/2) S_b S_a^(1/2), which is symmetric positive semidefinite up to
    roundoff; tiny negative eigenvalues are clipped.
    """
    if a.mean.shape != b.mean.shape:
        raise DataError("summaries have different dimensions")
    dmu = a.mean - b.mean
    wa, va = np.linalg.eigh(a.cov)
    sqrt_a = (va * np.sqrt(np.clip(wa, 0.0, None))) @ va.T
    inner = sqrt_a @ b.cov @ sqrt_a
    inner = 0.5 * (inner + inner.T)
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    val = float(dmu @ dmu + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.sum(np.sqrt(w)))
    return max(val, 0.0)


def conditional_label_score(cond_probs: np.ndarray) -> float:
    """exp of the mean KL between per-sample label distributions and their marginal.

    Equals the number of classes when every row is a distinct one-hot and 1.0
    when all rows match the marginal.
    """
    cond_probs = np.atleast_2d(np.asarray(cond_probs, dtype=np.float64))
    rows = np.stack([_as_distribution(r, "row") for r in cond_probs])
    marginal = rows.mean(axis=0)
    kls = []
    for r in rows:
        mask = r > 0.0
        kls.append(np.sum(r[mask] * np.log(r[mask] / marginal[mask])))
    return float(np.exp(np.mean(kls)))
