"""Benchmark harness: synthetic ground truths against every estimator, plus
CSV ingestion for one-off estimates and JSON/CSV report emission.
"""

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, estimators as est
from . import synth
from .errors import DataError, UsageError
from .rbig import RbigConfig

__all__ = [
    "ExperimentReport",
    "SUPPORTED",
    "trial_seed",
    "run_benchmark",
    "emit_report",
    "report_to_dict",
    "read_csv_matrix",
    "estimate_from_files",
    "CSV_HEADER",
]

# measure -> families that carry a truth for it
SUPPORTED = {
    "tc": ("gaussian", "rotated_uniform", "student"),
    "h": ("gaussian", "rotated_uniform", "student"),
    "kl": synth.KL_KINDS,
    "mi": synth.MI_KINDS,
}

# descriptive family names accepted as aliases of the short ones
FAMILY_ALIASES = {
    "gaussian_random_cov": "gaussian",
    "gaussian_pair_mi": "gaussian",
    "student_pair_mi": "student",
}

CSV_HEADER = (
    "measure", "family", "params", "dims", "n_samples", "n_trials", "estimator_id", "seed",
    "tool_version", "trial", "trial_seed", "estimate", "truth", "relative_abs_error_percent",
    "wall_time", "mean_rel_mae", "std_rel_mae",
)


@dataclass
class ExperimentReport:
    measure: str
    family: str
    params: dict
    dims: int
    n_samples: int
    n_trials: int
    estimator_id: str
    seed: int
    tool_version: str = __version__
    trials: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    def recompute_aggregate(self):
        errs = np.array([t["relative_abs_error_percent"] for t in self.trials], dtype=float)
        self.aggregate = {"mean_rel_mae": float(errs.mean()), "std_rel_mae": float(errs.std())}
        return self.aggregate


def trial_seed(seed, dim, n, trial):
    """Stable 64-bit seed for one (master seed, dim, n, trial) cell."""
    key = f"{int(seed)}:{int(dim)}:{int(n)}:{int(trial)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _check_request(measure, family, estimators):
    family = FAMILY_ALIASES.get(family, family)
    if measure not in SUPPORTED:
        raise UsageError(f"unknown measure {measure!r}; expected one of {sorted(SUPPORTED)}")
    if family not in SUPPORTED[measure]:
        pairs = ", ".join(f"{m}/{f}" for m, fams in SUPPORTED.items() for f in fams)
        raise UsageError(f"unsupported combination {measure}/{family}; valid pairs: {pairs}")
    for e in estimators:
        if e not in est.ESTIMATOR_IDS:
            raise UsageError(f"unknown estimator {e!r}; expected one of {est.ESTIMATOR_IDS}")
    return family


def _draw(measure, family, d, n, rng, params):
    """Returns (data tuple, truth value, params actually used)."""
    if measure in ("tc", "h"):
        if family == "gaussian":
            x, spec = synth.sample_gaussian_random_cov(d, n, rng)
        elif family == "rotated_uniform":
            x, spec = synth.sample_rotated_uniform(d, n, rng)
        else:
            x, spec = synth.sample_student(d, n, float(params.get("nu", 20)), rng)
        return (x,), spec.truth[measure], {k: v for k, v in spec.params.items() if k == "nu"}
    if measure == "kl":
        p, q, spec = synth.make_kl_pair(family, d, n, rng, **params)
        return (p, q), spec.truth["kl"], spec.params
    x, y, spec = synth.make_mi_pair(family, d, n, rng, **params)
    return (x, y), spec.truth["mi"], spec.params


_ESTIMATORS = {
    ("tc", "rbig"): lambda data, cfg: est.estimate_total_correlation(data[0], cfg),
    ("tc", "expf"): lambda data, cfg: est.expf_total_correlation(data[0]),
    ("tc", "knn"): lambda data, cfg: est.knn_total_correlation(data[0]),
    ("h", "rbig"): lambda data, cfg: est.estimate_entropy(data[0], cfg),
    ("h", "expf"): lambda data, cfg: est.expf_entropy(data[0]),
    ("h", "knn"): lambda data, cfg: est.knn_entropy(data[0]),
    ("kl", "rbig"): lambda data, cfg: est.estimate_kl(data[0], data[1], cfg),
    ("kl", "expf"): lambda data, cfg: est.expf_kl(data[0], data[1]),
    ("kl", "knn"): lambda data, cfg: est.knn_kl(data[0], data[1]),
    ("mi", "rbig"): lambda data, cfg: est.estimate_mutual_information(data[0], data[1], cfg),
    ("mi", "expf"): lambda data, cfg: est.expf_mutual_information(data[0], data[1]),
    ("mi", "knn"): lambda data, cfg: est.knn_mutual_information(data[0], data[1]),
}


def run_estimator(measure, estimator_id, data, config=None):
    return _ESTIMATORS[(measure, estimator_id)](data, config or RbigConfig())


def _run_cell(measure, family, d, n, trial, seed, estimators, params, config, record_timing):
    tseed = trial_seed(seed, d, n, trial)
    data_ss, est_ss = np.random.SeedSequence(tseed).spawn(2)
    data, truth, used = _draw(measure, family, d, n, np.random.default_rng(data_ss), params)
    if truth == 0:
        raise UsageError(f"{measure}/{family} at D={d} has zero truth; relative error undefined")
    cfg = config.with_seed(int(est_ss.generate_state(1)[0]))
    rows = {}
    for e in estimators:
        res = run_estimator(measure, e, data, cfg)
        rows[e] = {
            "trial": trial,
            "trial_seed": tseed,
            "estimate": float(res.value),
            "truth": float(truth),
            "relative_abs_error_percent": 100.0 * abs(res.value - truth) / abs(truth),
            "wall_time": res.wall_time if record_timing else None,
        }
    return d, n, trial, used, rows


def run_benchmark(measure, family, dims, samples, trials=5, estimators=("rbig",), seed=0,
                  params=None, config=None, record_timing=True, workers=1):
    """Run a benchmark grid and return one ExperimentReport per (dim, n, estimator).

    Every trial draws a fresh ground-truth instance from its own derived seed
    and hands the same data to each requested estimator. With
    ``record_timing=False`` the wall-time fields are null, which makes the
    reports byte-identical across runs with the same seed.
    """
    estimators = tuple(estimators)
    family = _check_request(measure, family, estimators)
    if int(trials) < 1:
        raise UsageError("trials must be >= 1")
    if not dims or not samples or not estimators:
        raise UsageError("dims, samples and estimators must be non-empty")
    params = dict(params or {})
    config = config or RbigConfig()
    jobs = [(measure, family, int(d), int(n), t, seed, estimators, params, config, record_timing)
            for d in dims for n in samples for t in range(int(trials))]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_star, jobs))
    else:
        results = [_run_cell(*job) for job in jobs]
    results.sort(key=lambda r: (r[0], r[1], r[2]))

    reports = {}
    for d, n, _, used, rows in results:
        for e in estimators:
            key = (d, n, e)
            if key not in reports:
                reports[key] = ExperimentReport(measure, family, dict(used), d, n, int(trials), e, int(seed))
            reports[key].trials.append(rows[e])
    out = [reports[k] for k in sorted(reports, key=lambda k: (k[0], k[1], estimators.index(k[2])))]
    for r in out:
        r.recompute_aggregate()
    return out


def _run_cell_star(job):
    return _run_cell(*job)


# -- emission -----------------------------------------------------------------

def _fmt_float(v):
    if v is None or not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def _to_json(obj):
    # floats with 17 significant digits; the json module would use shortest repr
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_to_dict(report):
    return {
        "measure": report.measure,
        "family": report.family,
        "params": report.params,
        "dims": report.dims,
        "n_samples": report.n_samples,
        "n_trials": report.n_trials,
        "trials": report.trials,
        "aggregate": report.aggregate,
        "estimator_id": report.estimator_id,
        "seed": report.seed,
        "tool_version": report.tool_version,
    }


def _csv_text(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        params = _to_json(r.params)
        for t in r.trials:
            w.writerow([
                r.measure, r.family, params, r.dims, r.n_samples, r.n_trials, r.estimator_id,
                r.seed, r.tool_version, t["trial"], t["trial_seed"], _fmt_float(t["estimate"]),
                _fmt_float(t["truth"]), _fmt_float(t["relative_abs_error_percent"]),
                "" if t["wall_time"] is None else _fmt_float(t["wall_time"]),
                _fmt_float(r.aggregate["mean_rel_mae"]), _fmt_float(r.aggregate["std_rel_mae"]),
            ])
    return buf.getvalue()


def emit_report(reports, fmt="json", path=None):
    """Serialize reports as JSON (one top-level array) or CSV (one row per trial).

    Writes to ``path`` when given and returns the text either way.
    """
    if not reports:
        raise UsageError("no reports to emit")
    if fmt == "json":
        text = "[\n" + ",\n".join(_to_json(report_to_dict(r)) for r in reports) + "\n]\n"
    elif fmt == "csv":
        text = _csv_text(reports)
    else:
        raise UsageError(f"unknown report format {fmt!r}; expected json or csv")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# -- CSV ingestion ------------------------------------------------------------

def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv_matrix(path):
    """Load a comma-separated numeric matrix (rows = samples).

    A single header line is skipped when its first row is not fully numeric.
    Parse errors name the 1-based line and column.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    if not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for k, (line, row) in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: line {line} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[k, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {line}, column {j + 1}: cannot parse {cell.strip()!r} as a number"
                ) from None
            if not math.isfinite(out[k, j]):
                raise DataError(f"{path}: line {line}, column {j + 1}: non-finite value {cell.strip()!r}")
    return out


def estimate_from_files(measure, file_x, file_y=None, estimator="rbig", config=None):
    """Estimate one measure from CSV files and return a flat result record.

    ``kl`` returns KL(P_x || P_y); ``mi`` returns I(x; y) and needs equal row
    counts; ``tc`` and ``h`` use ``file_x`` only.
    """
    if measure not in SUPPORTED:
        raise UsageError(f"unknown measure {measure!r}; expected one of {sorted(SUPPORTED)}")
    if estimator not in est.ESTIMATOR_IDS:
        raise UsageError(f"unknown estimator {estimator!r}; expected one of {est.ESTIMATOR_IDS}")
    pair = measure in ("kl", "mi")
    if pair and file_y is None:
        raise UsageError(f"measure {measure} needs a second file (--y)")
    if not pair and file_y is not None:
        raise UsageError(f"measure {measure} takes a single file")
    data = (read_csv_matrix(file_x),) + ((read_csv_matrix(file_y),) if pair else ())
    if measure == "kl" and data[0].shape[1] != data[1].shape[1]:
        raise DataError(f"kl needs equal column counts, got {data[0].shape[1]} and {data[1].shape[1]}")
    if measure == "mi" and data[0].shape[0] != data[1].shape[0]:
        raise DataError(f"mi needs equal row counts, got {data[0].shape[0]} and {data[1].shape[0]}")
    t0 = time.perf_counter()
    res = run_estimator(measure, estimator, data, config)
    return {
        "measure": measure,
        "estimator_id": res.estimator_id,
        "value": float(res.value),
        "unit": "nats",
        "n_samples": [int(a.shape[0]) for a in data],
        "dims": [int(a.shape[1]) for a in data],
        "n_layers_used": res.n_layers_used,
        "noise_floor": res.noise_floor,
        "wall_time": time.perf_counter() - t0,
    }
