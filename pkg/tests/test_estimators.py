import math

import numpy as np
import pytest

from rbigtools import estimators as est, synth
from rbigtools.errors import DataError
from rbigtools.rbig import RbigConfig

HALF_LOG_2PI_E = 0.5 * math.log(2 * math.pi * math.e)


def _whitened(n, d, seed):
    # sample with mean exactly 0 and sample covariance exactly I
    x = np.random.default_rng(seed).standard_normal((n, d))
    x -= x.mean(axis=0)
    chol = np.linalg.cholesky(np.cov(x, rowvar=False))
    return x @ np.linalg.inv(chol).T


def _gauss2(rho, n, seed):
    cov = [[1.0, rho], [rho, 1.0]]
    return np.random.default_rng(seed).multivariate_normal([0, 0], cov, size=n)


# -- expF ------------------------------------------------------------------------

def test_expf_exact_on_population_moments():
    x = _whitened(500, 4, 0)
    assert est.expf_entropy(x).value == pytest.approx(4 * HALF_LOG_2PI_E, abs=1e-12)
    assert est.expf_total_correlation(x).value == pytest.approx(0.0, abs=1e-12)
    assert est.expf_kl(x, x).value == pytest.approx(0.0, abs=1e-12)
    assert est.expf_mutual_information(x[:, :2], x[:, 2:]).value == pytest.approx(0.0, abs=1e-12)


def test_expf_matches_closed_forms_on_moments():
    cov = np.array([[2.0, 0.6, 0.1], [0.6, 1.0, 0.3], [0.1, 0.3, 0.5]])
    x = _whitened(1000, 3, 1) @ np.linalg.cholesky(cov).T
    assert est.expf_entropy(x).value == pytest.approx(synth.gaussian_entropy(cov), abs=1e-10)
    assert est.expf_total_correlation(x).value == pytest.approx(synth.gaussian_tc(cov), abs=1e-10)
    assert est.expf_mutual_information(x[:, :1], x[:, 1:]).value == pytest.approx(
        synth.gaussian_mi(cov, 1), abs=1e-10)
    y = _whitened(1000, 3, 2) + 0.5
    assert est.expf_kl(y, _whitened(1000, 3, 3)).value == pytest.approx(3 * 0.25 / 2, abs=1e-10)


def test_expf_misspecified_on_heavy_tails():
    # a Gaussian plug-in badly misjudges Student nu=3 dependence
    x, spec = synth.sample_student(3, 10_000, 3.0, np.random.default_rng(4))
    err = abs(est.expf_total_correlation(x).value - spec.truth["tc"]) / spec.truth["tc"]
    assert err > 0.5


def test_expf_ridge_when_n_not_above_d():
    x = np.random.default_rng(5).standard_normal((4, 6))
    assert math.isfinite(est.expf_entropy(x).value)


def test_expf_errors():
    with pytest.raises(DataError):
        est.expf_kl(np.zeros((10, 2)) + np.arange(10)[:, None], np.ones((10, 3)))
    with pytest.raises(DataError):
        est.expf_mutual_information(np.ones((10, 1)), np.ones((11, 1)))
    with pytest.raises(DataError):
        est.expf_entropy([[np.nan, 1.0], [1.0, 2.0], [3.0, 4.0]])


# -- kNN ---------------------------------------------------------------------------

def test_knn_entropy_standard_normal():
    x = np.random.default_rng(6).standard_normal((100_000, 1))
    assert est.knn_entropy(x).value == pytest.approx(HALF_LOG_2PI_E, abs=0.02)


def test_knn_total_correlation_gaussian_small_d():
    cov = np.array([[1.0, 0.6, 0.2], [0.6, 1.0, 0.4], [0.2, 0.4, 1.0]])
    x = np.random.default_rng(7).multivariate_normal(np.zeros(3), cov, size=10_000)
    truth = synth.gaussian_tc(cov)
    assert est.knn_total_correlation(x).value == pytest.approx(truth, rel=0.1)


def test_knn_mi_and_kl():
    x = _gauss2(0.9, 10_000, 8)
    assert est.knn_mutual_information(x[:, :1], x[:, 1:]).value == pytest.approx(0.8304, abs=0.05)
    rng = np.random.default_rng(9)
    y = rng.standard_normal((10_000, 1)) + 1.0
    ref = rng.standard_normal((10_000, 1))
    assert est.knn_kl(y, ref).value == pytest.approx(0.5, abs=0.06)


def test_knn_duplicates_warn():
    x = np.random.default_rng(10).standard_normal((200, 2))
    x[1] = x[0]
    with pytest.warns(RuntimeWarning, match="duplicate"):
        value = est.knn_entropy(x).value
    assert math.isfinite(value)


def test_knn_k_bounds():
    x = np.random.default_rng(11).standard_normal((5, 2))
    with pytest.raises(DataError):
        est.knn_entropy(x, k=5)
    with pytest.raises(DataError):
        est.knn_entropy(x, k=0)
    with pytest.raises(DataError):
        est.knn_kl(x, x[:2], k=3)


# -- RBIG --------------------------------------------------------------------------

def test_rbig_tc_independent_uniform():
    x = np.random.default_rng(12).uniform(size=(10_000, 5))
    res = est.estimate_total_correlation(x)
    assert abs(res.value) <= 3 * res.noise_floor
    assert res.estimator_id == "rbig" and res.n_layers_used >= 1


def test_rbig_entropy_standard_normal():
    x = np.random.default_rng(13).standard_normal((100_000, 3))
    assert est.estimate_entropy(x).value == pytest.approx(3 * HALF_LOG_2PI_E, abs=0.1)


def test_rbig_entropy_scale_equivariance():
    x = _gauss2(0.5, 10_000, 14)
    a = est.estimate_entropy(x).value
    b = est.estimate_entropy(3.0 * x).value
    assert b - a == pytest.approx(2 * math.log(3.0), abs=0.03)


def test_rbig_entropy_degenerate_column():
    x = np.random.default_rng(15).standard_normal((500, 2))
    x[:, 1] = 2.0
    with pytest.raises(DataError, match="column 1"):
        est.estimate_entropy(x)


def test_rbig_mi_independent_and_rho09():
    rng = np.random.default_rng(16)
    res = est.estimate_mutual_information(rng.standard_normal((10_000, 3)), rng.standard_normal((10_000, 3)))
    assert res.value <= 3 * res.noise_floor
    x = _gauss2(0.9, 100_000, 17)
    assert est.estimate_mutual_information(x[:, :1], x[:, 1:]).value == pytest.approx(0.8304, abs=0.06)


def test_consistency_tc_equals_mi_in_2d():
    x = _gauss2(0.7, 10_000, 18)
    tc = est.estimate_total_correlation(x)
    mi = est.estimate_mutual_information(x[:, :1], x[:, 1:])
    assert abs(tc.value - mi.value) <= 3 * max(tc.noise_floor, mi.noise_floor)


def test_mi_from_entropies_diagnostic():
    x = _gauss2(0.8, 10_000, 19)
    value = est.mutual_information_from_entropies(x[:, :1], x[:, 1:]).value
    assert value == pytest.approx(0.5108, abs=0.1)


def test_rbig_kl_self_and_shift():
    z = np.random.default_rng(20).standard_normal((20_000, 5))
    res = est.estimate_kl(z[:10_000], z[10_000:])
    assert 0.0 <= res.value <= 0.1 + 6 * res.noise_floor
    rng = np.random.default_rng(21)
    shifted = est.estimate_kl(rng.standard_normal((10_000, 2)) + 0.5, rng.standard_normal((10_000, 2)))
    assert shifted.value == pytest.approx(0.25, abs=0.08)


def test_rbig_kl_nonnegative_always():
    rng = np.random.default_rng(22)
    for _ in range(3):
        x = rng.standard_normal((300, 2))
        assert est.estimate_kl(x, x).value >= 0.0


def test_rbig_estimators_deterministic():
    x = _gauss2(0.4, 3000, 23)
    cfg = RbigConfig(rng_seed=3)
    assert est.estimate_total_correlation(x, cfg).value == est.estimate_total_correlation(x, cfg).value
    assert (est.estimate_mutual_information(x[:, :1], x[:, 1:], cfg).value
            == est.estimate_mutual_information(x[:, :1], x[:, 1:], cfg).value)


def test_rbig_errors():
    rng = np.random.default_rng(24)
    with pytest.raises(DataError):
        est.estimate_total_correlation(rng.standard_normal((50, 2)))
    with pytest.raises(DataError, match="dimension"):
        est.estimate_kl(rng.standard_normal((200, 2)), rng.standard_normal((200, 3)))
    with pytest.raises(DataError, match="row"):
        est.estimate_mutual_information(rng.standard_normal((200, 2)), rng.standard_normal((300, 2)))


def test_measure_estimate_dict():
    res = est.expf_entropy(_whitened(100, 2, 25))
    d = res.to_dict()
    assert d["estimator_id"] == "expf" and d["n_layers_used"] is None and d["value"] == res.value
