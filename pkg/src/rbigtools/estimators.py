"""Information-theoretic estimators.

RBIG-based estimators of total correlation, entropy, KL divergence and
mutual information, plus two reference baselines: the Gaussian plug-in
("expF") and the Kozachenko-Leonenko nearest-neighbour family ("knn").
All values are in nats.
"""

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import rbig
from .errors import DataError
from .marginal import marginal_entropies, marginal_kl_to_std_normal
from .rbig import RbigConfig
from .special import digamma, log_unit_ball_volume
from .synth import gaussian_entropy, gaussian_kl

__all__ = [
    "MeasureEstimate",
    "ESTIMATOR_IDS",
    "estimate_total_correlation",
    "estimate_entropy",
    "estimate_kl",
    "estimate_mutual_information",
    "mutual_information_from_entropies",
    "expf_entropy",
    "expf_total_correlation",
    "expf_kl",
    "expf_mutual_information",
    "knn_entropy",
    "knn_total_correlation",
    "knn_kl",
    "knn_mutual_information",
]

ESTIMATOR_IDS = ("rbig", "expf", "knn")


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    estimator_id: str
    wall_time: float
    n_layers_used: int | None = None
    noise_floor: float | None = None

    def to_dict(self):
        return {
            "value": self.value,
            "estimator_id": self.estimator_id,
            "n_layers_used": self.n_layers_used,
            "noise_floor": self.noise_floor,
            "wall_time": self.wall_time,
        }


def _matrix(data, name, min_rows=1):
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DataError(f"{name} must be 2-D (samples x dimensions)")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    if x.shape[0] < min_rows:
        raise DataError(f"{name} needs at least {min_rows} rows, got {x.shape[0]}")
    return x


def _child_configs(config, k):
    seeds = np.random.SeedSequence(config.rng_seed).generate_state(k, dtype=np.uint32)
    return [config.with_seed(int(s)) for s in seeds]


# -- RBIG ---------------------------------------------------------------------

def estimate_total_correlation(data, config=None):
    """Total correlation as the sum of per-layer reductions of an RBIG fit."""
    config = config or RbigConfig()
    t0 = time.perf_counter()
    model = rbig.fit(_matrix(data, "data", 100), config)
    return MeasureEstimate(model.total_correlation(), "rbig", time.perf_counter() - t0,
                           model.n_layers, model.noise_floor)


def estimate_entropy(data, config=None):
    """Joint entropy = sum of marginal entropies - RBIG total correlation."""
    config = config or RbigConfig()
    x = _matrix(data, "data", 100)
    t0 = time.perf_counter()
    h = marginal_entropies(x, method=config.entropy_estimator, bins=config.bins)
    if not np.all(np.isfinite(h)):
        bad = int(np.flatnonzero(~np.isfinite(h))[0])
        raise DataError(f"column {bad} is degenerate (zero range)")
    tc = estimate_total_correlation(x, config)
    return MeasureEstimate(float(h.sum()) - tc.value, "rbig", time.perf_counter() - t0,
                           tc.n_layers_used, tc.noise_floor)


def estimate_kl(y_data, x_data, config=None):
    """KL(p_y || p_x): Gaussianize with the transform learned on ``x_data``,
    then measure how far the transformed ``y_data`` is from N(0, I).

    The standard non-Gaussianity splits into the total correlation of the
    transformed sample (second RBIG fit) plus its marginal KL terms.
    """
    config = config or RbigConfig()
    y = _matrix(y_data, "y_data", 100)
    x = _matrix(x_data, "x_data", 100)
    if x.shape[1] != y.shape[1]:
        raise DataError(f"dimension mismatch: y has {y.shape[1]} columns, x has {x.shape[1]}")
    t0 = time.perf_counter()
    cfg_x, cfg_y = _child_configs(config, 2)
    gx = rbig.fit(x, cfg_x)
    y_prime = gx.transform(y)
    gy = rbig.fit(y_prime, cfg_y)
    marg = sum(
        marginal_kl_to_std_normal(y_prime[:, i], method=config.entropy_estimator, bins=config.bins)
        for i in range(y_prime.shape[1])
    )
    value = max(gy.total_correlation() + marg, 0.0)
    return MeasureEstimate(value, "rbig", time.perf_counter() - t0,
                           gx.n_layers + gy.n_layers, gy.noise_floor)


def estimate_mutual_information(x_data, y_data, config=None):
    """I(x, y) = total correlation of [G_x(x), G_y(y)]."""
    config = config or RbigConfig()
    x = _matrix(x_data, "x_data", 100)
    y = _matrix(y_data, "y_data", 100)
    if x.shape[0] != y.shape[0]:
        raise DataError(f"row-count mismatch: x has {x.shape[0]} rows, y has {y.shape[0]}")
    t0 = time.perf_counter()
    cfg_x, cfg_y, cfg_z = _child_configs(config, 3)
    z = np.hstack([rbig.fit(x, cfg_x).transform(x), rbig.fit(y, cfg_y).transform(y)])
    model = rbig.fit(z, cfg_z)
    return MeasureEstimate(model.total_correlation(), "rbig", time.perf_counter() - t0,
                           model.n_layers, model.noise_floor)


def mutual_information_from_entropies(x_data, y_data, config=None):
    """Diagnostic path H(x) + H(y) - H([x, y]); noisier than the default."""
    config = config or RbigConfig()
    x = _matrix(x_data, "x_data", 100)
    y = _matrix(y_data, "y_data", 100)
    t0 = time.perf_counter()
    cx, cy, cz = _child_configs(config, 3)
    value = (estimate_entropy(x, cx).value + estimate_entropy(y, cy).value
             - estimate_entropy(np.hstack([x, y]), cz).value)
    return MeasureEstimate(value, "rbig", time.perf_counter() - t0)


# -- expF (Gaussian plug-in) -------------------------------------------------

def _sample_cov(x):
    n, d = x.shape
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    if n <= d:
        cov = cov + np.eye(d) * (1e-10 * np.trace(cov) / d)
    sign, _ = np.linalg.slogdet(cov)
    if sign <= 0:
        raise np.linalg.LinAlgError("sample covariance is singular")
    return cov


def expf_entropy(data):
    t0 = time.perf_counter()
    value = gaussian_entropy(_sample_cov(_matrix(data, "data", 2)))
    return MeasureEstimate(value, "expf", time.perf_counter() - t0)


def expf_total_correlation(data):
    t0 = time.perf_counter()
    cov = _sample_cov(_matrix(data, "data", 2))
    value = 0.5 * float(np.sum(np.log(np.diag(cov)))) - 0.5 * float(np.linalg.slogdet(cov)[1])
    return MeasureEstimate(value, "expf", time.perf_counter() - t0)


def expf_kl(y_data, x_data):
    """KL(N(mean_y, cov_y) || N(mean_x, cov_x)) from sample moments."""
    t0 = time.perf_counter()
    y = _matrix(y_data, "y_data", 2)
    x = _matrix(x_data, "x_data", 2)
    if x.shape[1] != y.shape[1]:
        raise DataError("dimension mismatch")
    value = gaussian_kl(y.mean(axis=0), _sample_cov(y), x.mean(axis=0), _sample_cov(x))
    return MeasureEstimate(value, "expf", time.perf_counter() - t0)


def expf_mutual_information(x_data, y_data):
    t0 = time.perf_counter()
    x = _matrix(x_data, "x_data", 2)
    y = _matrix(y_data, "y_data", 2)
    if x.shape[0] != y.shape[0]:
        raise DataError("row-count mismatch")
    dx = x.shape[1]
    cov = _sample_cov(np.hstack([x, y]))
    logdet = lambda m: float(np.linalg.slogdet(m)[1])  # noqa: E731
    value = 0.5 * (logdet(cov[:dx, :dx]) + logdet(cov[dx:, dx:]) - logdet(cov))
    return MeasureEstimate(value, "expf", time.perf_counter() - t0)


# -- kNN (Kozachenko-Leonenko) -----------------------------------------------

def _dedupe(x, name):
    # exact duplicates give zero neighbour distances and log(0)
    if np.unique(x, axis=0).shape[0] == x.shape[0]:
        return x
    warnings.warn(f"{name} has duplicate points; perturbing by 1e-12 * scale", RuntimeWarning,
                  stacklevel=3)
    scale = np.maximum(np.std(x, axis=0), 1.0)
    rng = np.random.default_rng(0)
    return x + 1e-12 * scale * rng.standard_normal(x.shape)


def _kth_distance(tree_data, query, k, exclude_self):
    tree = cKDTree(tree_data)
    kk = k + 1 if exclude_self else k
    dist, _ = tree.query(query, k=kk)
    dist = np.asarray(dist)
    return dist if dist.ndim == 1 else dist[:, -1]


def _kl_entropy(x, k):
    n, d = x.shape
    eps = _kth_distance(x, x, k, exclude_self=True)
    eps = np.maximum(eps, np.finfo(float).tiny)
    return digamma(n) - digamma(k) + log_unit_ball_volume(d) + d * float(np.mean(np.log(eps)))


def _check_k(n, k):
    if not 1 <= k < n:
        raise DataError(f"k must satisfy 1 <= k < N (k={k}, N={n})")


def knn_entropy(data, k=3):
    t0 = time.perf_counter()
    x = _dedupe(_matrix(data, "data", 2), "data")
    _check_k(x.shape[0], k)
    return MeasureEstimate(_kl_entropy(x, k), "knn", time.perf_counter() - t0)


def knn_total_correlation(data, k=3):
    """Sum of 1-D kNN entropies minus the joint kNN entropy (same k)."""
    t0 = time.perf_counter()
    x = _dedupe(_matrix(data, "data", 2), "data")
    _check_k(x.shape[0], k)
    marg = sum(_kl_entropy(_dedupe(x[:, [i]], f"column {i}"), k) for i in range(x.shape[1]))
    return MeasureEstimate(marg - _kl_entropy(x, k), "knn", time.perf_counter() - t0)


def knn_mutual_information(x_data, y_data, k=3):
    t0 = time.perf_counter()
    x = _dedupe(_matrix(x_data, "x_data", 2), "x_data")
    y = _dedupe(_matrix(y_data, "y_data", 2), "y_data")
    if x.shape[0] != y.shape[0]:
        raise DataError("row-count mismatch")
    _check_k(x.shape[0], k)
    value = _kl_entropy(x, k) + _kl_entropy(y, k) - _kl_entropy(np.hstack([x, y]), k)
    return MeasureEstimate(value, "knn", time.perf_counter() - t0)


def knn_kl(y_data, x_data, k=3):
    """Two-sample nearest-neighbour estimate of KL(p_y || p_x)."""
    t0 = time.perf_counter()
    y = _dedupe(_matrix(y_data, "y_data", 2), "y_data")
    x = _dedupe(_matrix(x_data, "x_data", 1), "x_data")
    if x.shape[1] != y.shape[1]:
        raise DataError("dimension mismatch")
    n, d = y.shape
    m = x.shape[0]
    _check_k(n, k)
    if k > m:
        raise DataError(f"k={k} exceeds the size of x_data ({m})")
    rho = np.maximum(_kth_distance(y, y, k, exclude_self=True), np.finfo(float).tiny)
    nu = np.maximum(_kth_distance(x, y, k, exclude_self=False), np.finfo(float).tiny)
    value = d * float(np.mean(np.log(nu / rho))) + math.log(m / (n - 1))
    return MeasureEstimate(value, "knn", time.perf_counter() - t0)
