"""Run a validated configuration and write its result files.

Every command yields per-row records (``records.csv``), a summary
(``summary.json``) and, for the universality study, ``histogram.csv``.
Files are written to a temporary name and renamed into place.
"""
import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__, deflation, flows, fredholm, painleve, ulam
from ._accel import backend
from .ensembles import EnsembleSpec, trial_rng
from .linalg import TridiagonalMatrix, symmetric_eigen, write_matrix_csv

STROBE_STREAM = 5


@dataclass
class RunResult:
    config: dict
    header: List[str]
    records: List[tuple]
    summary: dict
    histogram_header: Optional[List[str]] = None
    histogram: Optional[List[tuple]] = None
    artifacts: Dict[str, Callable] = field(default_factory=dict)  # extra files: name -> writer(path)
    version: str = __version__
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _sample_ensemble(cfg):
    header = ["ensemble", "trial", "trace", "frobenius", "lambda_min", "lambda_max"]
    rows, artifacts = [], {}
    for name in cfg.ensembles:
        spec = EnsembleSpec(name, cfg.N, cfg.master_seed)
        for trial in range(cfg.trials):
            M = spec.sample(trial)
            if np.iscomplexobj(M):
                from .linalg import hermitian_eigenvalues
                lam = hermitian_eigenvalues(M)
            else:
                lam = symmetric_eigen(M).values
            rows.append((spec.kind.value, trial, float(np.real(np.trace(M))), float(np.linalg.norm(M)),
                         float(lam[0]), float(lam[-1])))
            artifacts[f"matrices/{spec.kind.value}_{trial}.csv"] = (lambda path, M=M: write_matrix_csv(path, M))
    return RunResult(cfg.to_dict(), header, rows, {"samples": len(rows)}, artifacts=artifacts)


def _chopped_roots(M):
    """Roots of each chopped polynomial j = 1..n//2, None where degenerate."""
    n = M.shape[0]
    if n > 8:
        return None
    out = []
    for j in range(1, n // 2 + 1):
        cs = flows.chopped_spectrum(M, j)
        out.append(None if cs.degenerate else cs.roots)
    return out


def _chopped_drift(chop, chop0):
    if chop is None or chop0 is None:
        return math.nan
    diffs = [flows.root_set_distance(a, b) for a, b in zip(chop, chop0) if a is not None and b is not None]
    return float(max(diffs)) if diffs else math.nan


def _toda_trace(cfg):
    M0 = EnsembleSpec(cfg.ensembles[0], cfg.N, cfg.master_seed).sample(0)
    n = M0.shape[0]
    lam0 = symmetric_eigen(M0).values
    chop0 = _chopped_roots(M0)
    header = (["t"] + [f"a_{i + 1}" for i in range(n)] + [f"block_norm_{k}" for k in range(1, n)]
              + ["spectrum_drift", "chopped_drift"])
    flow = flows.EigenbasisFlow(M0)
    rows = []
    steps = int(math.floor(cfg.t_max / cfg.dt + 1e-9))
    for i in range(steps + 1):
        t = i * cfg.dt
        if i:
            flow.advance(cfg.dt)
        M = flow.matrix()
        drift = float(np.max(np.abs(symmetric_eigen(M).values - lam0)))
        cdrift = _chopped_drift(_chopped_roots(M), chop0)
        rows.append((t, *np.diag(M), *deflation.block_profile(M), drift, cdrift))
    summary = {"max_spectrum_drift": max(r[-2] for r in rows),
               "max_chopped_drift": float(np.nanmax([r[-1] for r in rows]))
               if any(not math.isnan(r[-1]) for r in rows) else math.nan}
    return RunResult(cfg.to_dict(), header, rows, summary)


def _qr_trace(cfg):
    M = EnsembleSpec(cfg.ensembles[0], cfg.N, cfg.master_seed).sample(0)
    n = M.shape[0]
    lam0 = symmetric_eigen(M).values
    header = ["step"] + [f"a_{i + 1}" for i in range(n)] + [f"block_norm_{k}" for k in range(1, n)] + ["spectrum_drift"]
    rows = []
    for k in range(cfg.steps + 1):
        if k:
            M = flows.qr_step(M)
        drift = float(np.max(np.abs(symmetric_eigen(M).values - lam0)))
        rows.append((k, *np.diag(M), *deflation.block_profile(M), drift))
    return RunResult(cfg.to_dict(), header, rows, {"max_spectrum_drift": max(r[-1] for r in rows)})


def random_pd_tridiagonal(n, seed, trial):
    """Random Jacobi matrix shifted so its smallest eigenvalue is 1."""
    rng = trial_rng(seed, trial, STROBE_STREAM)
    a = rng.standard_normal(n)
    b = np.abs(rng.standard_normal(n - 1)) + 0.1
    T = TridiagonalMatrix(a, b)
    lam_min = symmetric_eigen(T.to_dense()).values[0]
    return TridiagonalMatrix(a - lam_min + 1.0, b).to_dense()


def _strobe_check(cfg):
    header = ["trial", "k", "deviation", "bound", "ok"]
    rows = []
    for trial in range(cfg.trials):
        M0 = random_pd_tridiagonal(cfg.N, cfg.master_seed, trial)
        norm = float(np.linalg.norm(M0))
        for k in range(1, cfg.k_max + 1):
            dev = flows.stroboscope_check(M0, k)
            bound = 1e-8 * k * norm
            rows.append((trial, k, dev, bound, int(dev < bound)))
    summary = {"max_deviation": max(r[2] for r in rows), "all_within_bound": all(r[4] for r in rows)}
    return RunResult(cfg.to_dict(), header, rows, summary)


def _deflate_universality(cfg):
    res = deflation.universality_experiment(cfg)
    header = ["ensemble", "trial", "T", "k_hat", "top_gap", "epsilon", "d_T", "T_normalized"]
    rows = []
    for name, recs in res.records.items():
        for rec, z in zip(recs, res.normalized[name]):
            rows.append((name, rec.trial, rec.T, rec.k_hat, rec.top_gap, rec.epsilon, rec.d_T, float(z)))
    names = list(res.histograms)
    hist_header = ["bin_left", "bin_right"] + [f"count_{n}" for n in names]
    hist = [
        (float(res.bin_edges[i]), float(res.bin_edges[i + 1]), *(int(res.histograms[n][i]) for n in names))
        for i in range(len(res.bin_edges) - 1)
    ]
    summary = {
        "algorithm": res.algorithm,
        "means": res.means,
        "variances": res.variances,
        "normalized_moments": {k: [float(v.mean()), float(v.var(ddof=1))] for k, v in res.normalized.items()},
        "ks": res.ks,
        "non_halting": res.non_halting,
        "non_halting_trials": res.failures,
    }
    return RunResult(cfg.to_dict(), header, rows, summary, hist_header, hist)


def _gap_law(cfg):
    res = deflation.gap_statistic_experiment(cfg)
    header = ["trial", "T1", "top_entry", "lambda_max", "gap", "scaled_T1", "scaled_inverse_gap"]
    rows = [
        (i, *map(float, vals))
        for i, vals in enumerate(zip(res.T1, res.top_entry, res.lambda_max, res.gaps, res.scaled_T1,
                                     res.scaled_inverse_gap))
    ]
    summary = {
        "ks_median_matched": res.ks,
        "spearman_T1_inverse_gap": res.spearman,
        "scaling_exponent": res.scaling_exponent,
        "scaling_region_accepted": res.accepted,
        "non_halting": res.non_halting,
        "top_entry_violations": res.top_entry_violations,
    }
    return RunResult(cfg.to_dict(), header, rows, summary)


def _tw_table(cfg):
    sol = painleve.default_solution()
    header = ["t", "F_pii", "F_airy", "abs_diff"]
    rows = []
    for t in cfg.t_values:
        a = painleve.tracy_widom_pii(t, sol)
        b = painleve.airy_kernel_det(t, cfg.quadrature_nodes)
        rows.append((float(t), a, b, abs(a - b)))
    summary = {"max_abs_diff": max(r[3] for r in rows), "painleve_residual": sol.residual}
    return RunResult(cfg.to_dict(), header, rows, summary)


def _sine_gap(cfg):
    header = ["s", "P", "product_residual", "doubling_change"]
    rows = []
    for s in cfg.s_values:
        if s == 0:
            rows.append((0.0, 1.0, 0.0, 0.0))
            continue
        kernel = fredholm.sine_kernel(s)
        det = fredholm.fredholm_det(kernel, cfg.quadrature_nodes)
        lam = fredholm.kernel_eigenvalues(kernel, cfg.quadrature_nodes)
        P = float(np.real(det.value))
        rows.append((float(s), P, abs(float(np.prod(1 - lam)) - P), det.change))
    return RunResult(cfg.to_dict(), header, rows, {"max_product_residual": max(r[2] for r in rows)})


def _xy(cfg):
    header = ["t", "X", "im_det", "converged"]
    rows = []
    for t in cfg.t_values:
        det = fredholm.xy_determinant(t, cfg.beta, cfg.quadrature_nodes)
        value = complex(det.value)
        rows.append((float(t), math.exp(-0.5 * t * t) * value.real, value.imag, int(det.converged)))
    fit = [(t, x) for t, x, _, _ in rows if 5 <= t <= 10 and x > 0]
    slope = float(np.polyfit(*zip(*[(t, math.log(x)) for t, x in fit]), 1)[0]) if len(fit) >= 2 else math.nan
    summary = {
        "max_abs_im_det": max(abs(r[2]) for r in rows),
        "real_within_1e-8": all(abs(r[2]) < 1e-8 for r in rows),
        "fitted_slope_5_10": slope,
        "asymptotic_slope": fredholm.xy_asymptotic_slope(cfg.beta),
    }
    return RunResult(cfg.to_dict(), header, rows, summary)


def load_cdf_table(path):
    """Linear interpolant of a (t, F) CSV; the first two columns are used."""
    with open(path) as fh:
        reader = csv.reader(fh)
        next(reader)
        data = np.array([[float(r[0]), float(r[1])] for r in reader if r])
    order = np.argsort(data[:, 0])
    t, F = data[order, 0], data[order, 1]
    return lambda x: float(np.interp(x, t, F))


def _lis_mc(cfg):
    sample = ulam.lis_monte_carlo(cfg.N, cfg.trials, cfg.master_seed, cfg.workers)
    cdf = load_cdf_table(cfg.tw_table) if cfg.tw_table else painleve.tracy_widom_pii
    ks = ulam.ks_against_cdf(sample, cdf)
    scaled = ulam.scaled_statistic(sample.lengths, cfg.N)
    rows = [(i, int(l), float(s)) for i, (l, s) in enumerate(zip(sample.lengths, scaled))]
    summary = {
        "ks_lattice": ks.lattice,
        "ks_sup": ks.sup,
        "mean_scaled": float(scaled.mean()),
        "mean_lis_over_sqrt_N": float(sample.lengths.mean() / math.sqrt(cfg.N)),
    }
    return RunResult(cfg.to_dict(), ["trial", "lis", "scaled"], rows, summary)


DISPATCH = {
    "sample-ensemble": _sample_ensemble,
    "toda-trace": _toda_trace,
    "qr-trace": _qr_trace,
    "strobe-check": _strobe_check,
    "deflate-universality": _deflate_universality,
    "gap-law": _gap_law,
    "tw-table": _tw_table,
    "sine-gap": _sine_gap,
    "xy": _xy,
    "lis-mc": _lis_mc,
}


def run(cfg):
    start = time.perf_counter()
    result = DISPATCH[cfg.command](cfg)
    result.wall_time = time.perf_counter() - start
    return result


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def _csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(x) for x in row) + "\n")
    return buf.getvalue()


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def default_output_dir(cfg):
    return cfg.output_dir or os.path.join("runs", cfg.command)


def write_outputs(result, out_dir):
    """records.csv, histogram.csv (when present), extra artifacts, then summary.json last."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"records": os.path.join(out_dir, "records.csv")}
    atomic_write(paths["records"], _csv_text(result.header, result.records))
    if result.histogram is not None:
        paths["histogram"] = os.path.join(out_dir, "histogram.csv")
        atomic_write(paths["histogram"], _csv_text(result.histogram_header, result.histogram))
    for name, writer in result.artifacts.items():
        path = os.path.join(out_dir, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-")
        os.close(fd)
        writer(tmp)
        os.replace(tmp, path)
    summary = {
        "config": result.config,
        "version": result.version,
        "backend": backend(),
        "wall_time_seconds": result.wall_time,
        **result.summary,
    }
    paths["summary"] = os.path.join(out_dir, "summary.json")
    atomic_write(paths["summary"], json.dumps(_json_safe(summary), indent=2, sort_keys=True) + "\n")
    return paths
