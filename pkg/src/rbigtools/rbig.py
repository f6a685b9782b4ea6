"""Rotation-based iterative Gaussianization.

Each layer Gaussianizes every coordinate through its empirical CDF and then
applies an orthogonal rotation. The per-layer drop in total correlation only
involves univariate entropies of the rotated coordinates, so summing it over
layers gives a total-correlation estimate of the input.
"""

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DataError, DegenerateMarginalError, FitError, ModelFormatError
from .marginal import (
    ENTROPY_ESTIMATORS,
    HALF_LOG_2PI_E,
    MarginalMap,
    fit_marginal_map,
    marginal_entropies,
)

__all__ = [
    "RbigConfig",
    "RbigLayer",
    "RbigModel",
    "random_rotation",
    "pca_rotation",
    "calibrate_noise_floor",
    "fit",
    "transform",
    "inverse_transform",
    "total_correlation_of_model",
    "save_model",
    "load_model",
    "FORMAT_TAG",
]

logger = logging.getLogger(__name__)

FORMAT_TAG = "rbig-model/1"
ROTATIONS = ("pca_first", "random_orthogonal", "pca")
STOP_REASONS = ("noise_floor_reached", "max_layers")


@dataclass(frozen=True)
class RbigConfig:
    rotation_kind: str = "pca_first"
    max_layers: int = 100
    patience: int = 5
    noise_floor_multiplier: float = 2.0
    entropy_estimator: str = "histogram_mm"
    rng_seed: int = 0
    noise_floor_repeats: int = 10
    bins: int | None = None

    def __post_init__(self):
        if self.rotation_kind not in ROTATIONS:
            raise ValueError(f"rotation_kind must be one of {ROTATIONS}, got {self.rotation_kind!r}")
        if self.entropy_estimator not in ENTROPY_ESTIMATORS:
            raise ValueError(
                f"entropy_estimator must be one of {ENTROPY_ESTIMATORS}, got {self.entropy_estimator!r}"
            )
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.noise_floor_repeats < 2:
            raise ValueError("noise_floor_repeats must be >= 2")

    def with_seed(self, seed):
        return replace(self, rng_seed=int(seed))


@dataclass(frozen=True)
class RbigLayer:
    maps: tuple
    rotation: np.ndarray
    delta_t: float

    def forward(self, x):
        z = np.empty_like(x)
        for i, m in enumerate(self.maps):
            z[:, i] = m.forward(x[:, i])
        return z @ self.rotation.T

    def inverse(self, y):
        z = y @ self.rotation
        x = np.empty_like(z)
        for i, m in enumerate(self.maps):
            x[:, i] = m.inverse(z[:, i])
        return x


@dataclass(frozen=True)
class RbigModel:
    layers: tuple
    dims: int
    n_fit_samples: int
    noise_floor: float
    stop_reason: str
    rng_seed: int
    config: RbigConfig = field(default_factory=RbigConfig)

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def delta_t(self):
        return np.array([layer.delta_t for layer in self.layers])

    def total_correlation(self):
        return total_correlation_of_model(self)

    def transform(self, data):
        return transform(self, data)

    def inverse_transform(self, data):
        return inverse_transform(self, data)


def _as_matrix(data, name="data"):
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DataError(f"{name} must be a 2-D array (samples x dimensions), got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    return x


def random_rotation(d, rng):
    """Haar-distributed d x d orthogonal matrix (QR with sign-corrected R)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def pca_rotation(x):
    """Rows are the eigenvectors of the sample covariance, largest first."""
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    _, vecs = np.linalg.eigh(cov)
    return np.ascontiguousarray(vecs[:, ::-1].T)


def _layer_delta(x_next, config):
    h = marginal_entropies(x_next, method=config.entropy_estimator, bins=config.bins)
    return float(np.sum(HALF_LOG_2PI_E - h))


def _rotation(kind, layer_index, z, rng):
    if kind == "pca" or (kind == "pca_first" and layer_index == 0):
        return pca_rotation(z)
    return random_rotation(z.shape[1], rng)


def calibrate_noise_floor(n, d, config=None, rng=None):
    """Layer-level total-correlation change that is indistinguishable from zero.

    Runs ``noise_floor_repeats`` layers (marginal Gaussianization followed by
    the rotation used after the first layer) on independent N(0, I) samples
    of shape (n, d) and returns mean + multiplier * std of their statistic.
    A one-dimensional layer is deterministic given n, so for d = 1 the
    statistic is taken on the raw draws instead.
    """
    config = config or RbigConfig()
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    stats = []
    for _ in range(config.noise_floor_repeats):
        x = rng.standard_normal((n, d))
        if d > 1:
            _, z = _marginal_layer(x, 0)
            x = z @ _rotation(config.rotation_kind, 1, z, rng).T
        stats.append(_layer_delta(x, config))
    stats = np.array(stats)
    return float(stats.mean() + config.noise_floor_multiplier * stats.std(ddof=1))


def _marginal_layer(x, layer_index):
    maps = []
    z = np.empty_like(x)
    for i in range(x.shape[1]):
        try:
            m = fit_marginal_map(x[:, i])
        except DegenerateMarginalError as exc:
            raise FitError(f"column {i} is degenerate at layer {layer_index}") from exc
        maps.append(m)
        z[:, i] = m.forward(x[:, i])
    return maps, z


def fit(data, config=None):
    """Fit an RBIG model to an (N, D) sample."""
    config = config or RbigConfig()
    x = _as_matrix(data)
    n, d = x.shape
    if n < 100:
        raise DataError(f"RBIG needs at least 100 samples, got {n}")
    if n <= d:
        warnings.warn(f"N={n} <= D={d}: RBIG estimates will be poor", RuntimeWarning, stacklevel=2)

    seed_seq = np.random.SeedSequence(config.rng_seed)
    floor_rng, rot_rng = (np.random.default_rng(s) for s in seed_seq.spawn(2))
    noise_floor = calibrate_noise_floor(n, d, config, floor_rng)

    layers = []
    inputs = []  # inputs of the most recent layers, for rewinding
    quiet = 0
    stop_reason = "max_layers"
    for it in range(config.max_layers):
        maps, z = _marginal_layer(x, it)
        rot = _rotation(config.rotation_kind, it, z, rot_rng)
        inputs = (inputs + [x])[-(config.patience + 1):]
        x = z @ rot.T
        delta = _layer_delta(x, config)
        layers.append(RbigLayer(tuple(maps), rot, delta))
        quiet = quiet + 1 if delta < noise_floor else 0
        if quiet >= config.patience:
            stop_reason = "noise_floor_reached"
            break

    if stop_reason == "noise_floor_reached":
        # the trailing quiet layers are indistinguishable from identity; keeping
        # them would only add estimator bias to the total-correlation sum
        layers = layers[: len(layers) - config.patience]
        x = inputs[-config.patience]
    # closing marginal Gaussianization: no rotation, so no change in total correlation
    maps, _ = _marginal_layer(x, len(layers))
    layers.append(RbigLayer(tuple(maps), np.eye(d), 0.0))

    logger.debug("rbig fit: %d layers, stop=%s, floor=%.4g", len(layers), stop_reason, noise_floor)
    return RbigModel(tuple(layers), d, n, noise_floor, stop_reason, config.rng_seed, config)


def _check_dims(model, data):
    x = _as_matrix(data)
    if x.shape[1] != model.dims:
        raise DataError(f"model expects {model.dims} columns, got {x.shape[1]}")
    return x


def transform(model, data):
    """Replay every fitted layer on new data (out-of-sample Gaussianization)."""
    x = _check_dims(model, data).copy()
    for layer in model.layers:
        x = layer.forward(x)
    return x


def inverse_transform(model, data):
    """Map Gaussian-domain points back through the layers in reverse order."""
    y = _check_dims(model, data).copy()
    for layer in reversed(model.layers):
        y = layer.inverse(y)
    return y


def total_correlation_of_model(model):
    """Raw sum of the per-layer total-correlation changes, in nats."""
    return float(sum(layer.delta_t for layer in model.layers))


# -- persistence ------------------------------------------------------------

def _float_list(a):
    # repr() of a Python float round-trips the 64-bit value exactly
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def model_to_document(model):
    return {
        "format": FORMAT_TAG,
        "dims": model.dims,
        "n_fit_samples": model.n_fit_samples,
        "rng_seed": model.rng_seed,
        "noise_floor": model.noise_floor,
        "stop_reason": model.stop_reason,
        "config": asdict(model.config),
        "layers": [
            {
                "delta_t": layer.delta_t,
                "rotation": _float_list(layer.rotation),
                "maps": [
                    {
                        "knots_x": _float_list(m.knots_x),
                        "knots_p": _float_list(m.knots_p),
                        "clamp_eps": m.clamp_eps,
                        "slope_low": m.slope_low,
                        "slope_high": m.slope_high,
                    }
                    for m in layer.maps
                ],
            }
            for layer in model.layers
        ],
    }


def model_from_document(doc):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise ModelFormatError(f"not an {FORMAT_TAG} document")
    try:
        d = int(doc["dims"])
        config = RbigConfig(**doc["config"])
        layers = []
        for k, ld in enumerate(doc["layers"]):
            rot = np.array(ld["rotation"], dtype=float)
            if rot.size != d * d:
                raise ModelFormatError(f"layer {k}: rotation has {rot.size} entries, expected {d * d}")
            rot = rot.reshape(d, d)
            if not np.allclose(rot.T @ rot, np.eye(d), rtol=0.0, atol=1e-10):
                raise ModelFormatError(f"layer {k}: rotation is not orthogonal")
            if len(ld["maps"]) != d:
                raise ModelFormatError(f"layer {k}: expected {d} marginal maps")
            maps = []
            for i, md in enumerate(ld["maps"]):
                kx = np.array(md["knots_x"], dtype=float)
                kp = np.array(md["knots_p"], dtype=float)
                if kx.size < 2 or kx.size != kp.size:
                    raise ModelFormatError(f"layer {k} map {i}: bad knot arrays")
                if np.any(np.diff(kx) <= 0) or np.any(np.diff(kp) <= 0):
                    raise ModelFormatError(f"layer {k} map {i}: knots are not strictly increasing")
                maps.append(MarginalMap(kx, kp, float(md["clamp_eps"]),
                                        float(md["slope_low"]), float(md["slope_high"])))
            layers.append(RbigLayer(tuple(maps), rot, float(ld["delta_t"])))
        stop_reason = doc["stop_reason"]
        if stop_reason not in STOP_REASONS:
            raise ModelFormatError(f"unknown stop_reason {stop_reason!r}")
        return RbigModel(tuple(layers), d, int(doc["n_fit_samples"]), float(doc["noise_floor"]),
                         stop_reason, int(doc["rng_seed"]), config)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed {FORMAT_TAG} document: {exc}") from exc


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_document(model), fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_document(doc)
