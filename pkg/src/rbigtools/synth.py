"""Synthetic distributions with known information-theoretic measures.

Every sampler takes a ``numpy.random.Generator`` and returns the data plus a
:class:`GroundTruthSpec` holding the analytic value(s) in nats.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import GenerationError
from .special import digamma, log_beta, log_gamma

__all__ = [
    "GroundTruthSpec",
    "gaussian_tc",
    "gaussian_entropy",
    "gaussian_kl",
    "gaussian_mi",
    "student_entropy",
    "student_tc",
    "student_mi",
    "student_kl",
    "random_gaussian_cov",
    "random_scale_matrix",
    "sample_student_t",
    "sample_gaussian_random_cov",
    "sample_rotated_uniform",
    "sample_student",
    "make_kl_pair",
    "make_mi_pair",
    "KL_KINDS",
    "MI_KINDS",
    "MC_SAMPLES",
]

MAX_TRIES = 1000
MC_SAMPLES = 500_000
STUDENT_DIAG = 10.0
GAUSSIAN_PROXY_NU = 100.0
KL_KINDS = ("gaussian_pair_mean", "gaussian_pair_cov", "gaussian_vs_student", "student_vs_student")
MI_KINDS = ("gaussian", "student")


@dataclass
class GroundTruthSpec:
    family: str
    dims: int
    params: dict = field(default_factory=dict)
    truth: dict = field(default_factory=dict)
    truth_kind: str = "analytic"

    def to_dict(self):
        return {
            "family": self.family,
            "dims": self.dims,
            "params": dict(self.params),
            "truth": dict(self.truth),
            "truth_kind": self.truth_kind,
        }


# -- closed forms ------------------------------------------------------------

def _logdet(s):
    sign, val = np.linalg.slogdet(s)
    if sign <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return float(val)


def gaussian_tc(cov):
    cov = np.atleast_2d(cov)
    return float(0.5 * np.sum(np.log(np.diag(cov))) - 0.5 * _logdet(cov))


def gaussian_entropy(cov):
    cov = np.atleast_2d(cov)
    d = cov.shape[0]
    return 0.5 * d * (1.0 + math.log(2.0 * math.pi)) + 0.5 * _logdet(cov)


def gaussian_kl(mu1, cov1, mu2, cov2):
    """KL(N(mu1, cov1) || N(mu2, cov2)) in nats."""
    cov1, cov2 = np.atleast_2d(cov1), np.atleast_2d(cov2)
    d = cov1.shape[0]
    diff = np.broadcast_to(np.asarray(mu2, float) - np.asarray(mu1, float), (d,))
    inv2 = np.linalg.inv(cov2)
    quad = float(diff @ inv2 @ diff)
    return 0.5 * (float(np.trace(inv2 @ cov1)) + quad - d + _logdet(cov2) - _logdet(cov1))


def gaussian_mi(cov, dx):
    cov = np.atleast_2d(cov)
    return 0.5 * (_logdet(cov[:dx, :dx]) + _logdet(cov[dx:, dx:]) - _logdet(cov))


def student_entropy(d, nu, scale):
    """Differential entropy of the d-variate Student t with scale matrix ``scale``."""
    scale = np.atleast_2d(scale)
    return (
        0.5 * _logdet(scale)
        + 0.5 * d * math.log(nu * math.pi)
        - log_gamma(0.5 * d)
        + log_beta(0.5 * d, 0.5 * nu)
        + 0.5 * (nu + d) * (digamma(0.5 * (nu + d)) - digamma(0.5 * nu))
    )


def student_tc(d, nu, scale):
    """Total correlation of a d-variate Student t (marginals are univariate t)."""
    scale = np.atleast_2d(scale)
    log_diag = np.log(np.diag(scale))
    shared = (
        d * (0.5 * math.log(nu) + log_beta(0.5, 0.5 * nu))
        - 0.5 * d * math.log(nu * math.pi)
        + log_gamma(0.5 * d)
        - log_beta(0.5 * d, 0.5 * nu)
    )
    mixing = (
        0.5 * d * (nu + 1.0) * (digamma(0.5 * (nu + 1.0)) - digamma(0.5 * nu))
        - 0.5 * (nu + d) * (digamma(0.5 * (nu + d)) - digamma(0.5 * nu))
    )
    return float(0.5 * np.sum(log_diag) - 0.5 * _logdet(scale) + shared + mixing)


def student_mi(nu, scale, dx):
    scale = np.atleast_2d(scale)
    d = scale.shape[0]
    return (
        student_tc(d, nu, scale)
        - student_tc(dx, nu, scale[:dx, :dx])
        - student_tc(d - dx, nu, scale[dx:, dx:])
    )


def _log_norm_const(d, nu):
    return log_gamma(0.5 * (nu + d)) - log_gamma(0.5 * nu) - 0.5 * d * math.log(math.pi * nu)


def _expected_log1p(d, nu_sample, nu_eval):
    # E[log(1 + |x|^2 / nu_eval)] for x ~ t_{nu_sample}(0, I_d);
    # |x|^2 / (nu_sample + |x|^2) ~ Beta(d/2, nu_sample/2)
    beta = stats.beta(0.5 * d, 0.5 * nu_sample)

    def integrand(b):
        return math.log1p(nu_sample * b / ((1.0 - b) * nu_eval)) * beta.pdf(b)

    val, _ = integrate.quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-12, epsrel=1e-10)
    return val


def student_kl(d, nu1, nu2):
    """KL(t_nu1(0, I) || t_nu2(0, I)) in d dimensions."""
    e1 = 0.5 * (nu1 + d) * (digamma(0.5 * (nu1 + d)) - digamma(0.5 * nu1))
    e2 = 0.5 * (nu2 + d) * _expected_log1p(d, nu1, nu2)
    return _log_norm_const(d, nu1) - _log_norm_const(d, nu2) - e1 + e2


# -- random parameters -------------------------------------------------------

def _is_pd(m, tol=1e-6):
    return float(np.linalg.eigvalsh(m)[0]) > tol


def random_gaussian_cov(d, rng):
    """A A^T with A ~ U(0, 1)^(d x d), resampled until well conditioned."""
    for _ in range(MAX_TRIES):
        a = rng.uniform(size=(d, d))
        cov = a @ a.T
        if _is_pd(cov):
            return cov
    raise GenerationError(f"no positive-definite covariance after {MAX_TRIES} draws (d={d})")


def random_scale_matrix(d, rng, diag=STUDENT_DIAG):
    """Symmetric matrix with U(0, 1) off-diagonals and a fixed diagonal."""
    for _ in range(MAX_TRIES):
        u = np.triu(rng.uniform(size=(d, d)), 1)
        m = u + u.T
        np.fill_diagonal(m, diag)
        if _is_pd(m):
            return m
    raise GenerationError(f"no positive-definite scale matrix after {MAX_TRIES} draws (d={d})")


def _random_zero_diag_correlation(d, rng):
    # random correlation matrix minus I: eigenvalues >= -1, so I + s Q is PD for s < 1
    cov = random_gaussian_cov(d, rng)
    sd = np.sqrt(np.diag(cov))
    q = cov / np.outer(sd, sd)
    np.fill_diagonal(q, 0.0)
    return q


def sample_student_t(n, nu, scale, rng, loc=None):
    """Draw n samples of the elliptical Student t: L z sqrt(nu / chi2_nu)."""
    scale = np.atleast_2d(scale)
    d = scale.shape[0]
    chol = np.linalg.cholesky(scale)
    z = rng.standard_normal((n, d)) @ chol.T
    chi2 = 2.0 * rng.standard_gamma(0.5 * nu, size=n)
    x = z * np.sqrt(nu / chi2)[:, None]
    if loc is not None:
        x = x + loc
    return x


def _gaussian_draws(n, cov, rng, mean=None):
    chol = np.linalg.cholesky(np.atleast_2d(cov))
    x = rng.standard_normal((n, chol.shape[0])) @ chol.T
    if mean is not None:
        x = x + mean
    return x


def _streamed_marginal_entropies(m, n, seed, chunk=50_000):
    """Histogram (Miller-Madow) entropies of the columns of U @ M^T, U ~ U(0,1)^(n x d).

    Two passes over the same random stream (range, then counts) so the full
    n x d sample never needs to be held in memory.
    """
    d = m.shape[0]
    bins = int(math.ceil(math.sqrt(n)))

    def chunks():
        rng = np.random.default_rng(seed)
        for start in range(0, n, chunk):
            yield rng.uniform(size=(min(chunk, n - start), d)) @ m.T

    lo = np.full(d, np.inf)
    hi = np.full(d, -np.inf)
    for y in chunks():
        lo = np.minimum(lo, y.min(axis=0))
        hi = np.maximum(hi, y.max(axis=0))
    width = (hi - lo) / bins
    offsets = np.arange(d, dtype=np.int64) * bins
    counts = np.zeros(d * bins, dtype=np.int64)
    for y in chunks():
        idx = np.floor((y - lo) / width).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
        counts += np.bincount((idx + offsets).ravel(), minlength=d * bins)
    counts = counts.reshape(d, bins)
    p = counts / n
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(counts > 0, p * np.log(p), 0.0)
    occupied = np.count_nonzero(counts, axis=1)
    return -plogp.sum(axis=1) + (occupied - 1) / (2.0 * n) + np.log(width)


# -- samplers -------------------------------------------------------------------

def sample_gaussian_random_cov(d, n, rng, cov=None):
    """Zero-mean Gaussian with a random covariance; truths for tc and h."""
    cov = random_gaussian_cov(d, rng) if cov is None else np.atleast_2d(np.asarray(cov, float))
    x = _gaussian_draws(n, cov, rng)
    spec = GroundTruthSpec(
        "gaussian_random_cov", d, {},
        {"tc": gaussian_tc(cov), "h": gaussian_entropy(cov)},
    )
    return x, spec


def sample_rotated_uniform(d, n, rng, matrix=None, mc_samples=MC_SAMPLES):
    """y = M u with u ~ U(0, 1)^d.

    The entropy truth ln|det M| is exact; the total correlation needs the
    marginal entropies of y, estimated from an independent Monte-Carlo run
    of ``mc_samples`` draws whose seed is recorded in the spec.
    """
    if matrix is None:
        for _ in range(MAX_TRIES):
            m = rng.uniform(size=(d, d))
            if abs(np.linalg.det(m)) > 1e-8:
                break
        else:
            raise GenerationError(f"no well-conditioned mixing matrix after {MAX_TRIES} draws")
    else:
        m = np.atleast_2d(np.asarray(matrix, float))
    logdet = float(np.linalg.slogdet(m)[1])
    y = rng.uniform(size=(n, d)) @ m.T

    mc_seed = int(rng.integers(2**63))
    h_marg = _streamed_marginal_entropies(m, mc_samples, mc_seed)
    spec = GroundTruthSpec(
        "rotated_uniform", d, {"mc_seed": mc_seed, "mc_samples": mc_samples},
        {"tc": float(h_marg.sum() - logdet), "h": logdet},
        truth_kind="semi_analytic_mc",
    )
    return y, spec


def sample_student(d, n, nu, rng, scale=None):
    """Multivariate Student t with a random (diagonal 10) scale matrix."""
    scale = random_scale_matrix(d, rng) if scale is None else np.atleast_2d(np.asarray(scale, float))
    x = sample_student_t(n, nu, scale, rng)
    spec = GroundTruthSpec(
        "student", d, {"nu": nu},
        {"tc": student_tc(d, nu, scale), "h": student_entropy(d, nu, scale)},
    )
    return x, spec


def make_kl_pair(kind, d, n, rng, **params):
    """Draw samples of two distributions P and Q plus the truth KL(P || Q).

    Kinds and parameters:
      gaussian_pair_mean  mu2 (default 0.4): P = N(0, I), Q = N(mu2 * 1, I)
      gaussian_pair_cov   sigma2 (default 0.9): P = N(0, I), Q = N(0, I + sigma2 Q0),
                          Q0 a random correlation matrix with zeroed diagonal
      gaussian_vs_student nu2 (default 7): P = t_100(0, I), Q = t_nu2(0, I)
      student_vs_student  nu1 (default 8), nu2 (default 4): P = t_nu1, Q = t_nu2
    The RBIG estimator is called as ``estimate_kl(p_samples, q_samples)``.
    """
    eye = np.eye(d)
    if kind == "gaussian_pair_mean":
        mu2 = float(params.get("mu2", 0.4))
        p = _gaussian_draws(n, eye, rng)
        q = _gaussian_draws(n, eye, rng, mean=np.full(d, mu2))
        truth = gaussian_kl(np.zeros(d), eye, np.full(d, mu2), eye)
        used = {"mu2": mu2}
    elif kind == "gaussian_pair_cov":
        sigma2 = float(params.get("sigma2", 0.9))
        if not 0.0 <= sigma2 < 1.0:
            raise ValueError("sigma2 must lie in [0, 1) to keep the covariance positive definite")
        cov2 = eye + sigma2 * _random_zero_diag_correlation(d, rng)
        p = _gaussian_draws(n, eye, rng)
        q = _gaussian_draws(n, cov2, rng)
        truth = gaussian_kl(np.zeros(d), eye, np.zeros(d), cov2)
        used = {"sigma2": sigma2}
    elif kind in ("gaussian_vs_student", "student_vs_student"):
        if kind == "gaussian_vs_student":
            nu1 = GAUSSIAN_PROXY_NU
            nu2 = float(params.get("nu2", 7))
        else:
            nu1 = float(params.get("nu1", 8))
            nu2 = float(params.get("nu2", 4))
        p = sample_student_t(n, nu1, eye, rng)
        q = sample_student_t(n, nu2, eye, rng)
        truth = 0.0 if nu1 == nu2 else student_kl(d, nu1, nu2)
        used = {"nu1": nu1, "nu2": nu2}
    else:
        raise ValueError(f"unknown KL pair kind {kind!r}; expected one of {KL_KINDS}")
    return p, q, GroundTruthSpec(kind, d, used, {"kl": float(truth)})


def make_mi_pair(kind, d, n, rng, **params):
    """Split a 2d-dimensional joint sample into x (first d) and y (last d).

    Both kinds use a random scale matrix with diagonal 10 and U(0, 1)
    off-diagonals; ``student`` takes ``nu`` (default 5).
    """
    scale = params.get("scale")
    scale = random_scale_matrix(2 * d, rng) if scale is None else np.atleast_2d(np.asarray(scale, float))
    if kind == "gaussian":
        joint = _gaussian_draws(n, scale, rng)
        truth = gaussian_mi(scale, d)
        used = {}
    elif kind == "student":
        nu = float(params.get("nu", 5))
        joint = sample_student_t(n, nu, scale, rng)
        truth = student_mi(nu, scale, d)
        used = {"nu": nu}
    else:
        raise ValueError(f"unknown MI pair kind {kind!r}; expected one of {MI_KINDS}")
    name = "gaussian_pair_mi" if kind == "gaussian" else "student_pair_mi"
    return joint[:, :d], joint[:, d:], GroundTruthSpec(name, d, used, {"mi": float(truth)})
