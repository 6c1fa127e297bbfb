"""Experiment runners: single identification, seed ensembles and plot data."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FourierIdentError, InvalidParameterError
from .fourier_system import build_dictionary, build_system
from .grid import NoiseSpec, Trajectory, add_noise
from .io import load_trajectory
from .metrics import Metrics, compute_metrics, truth_vector
from .pipeline import FinalResult, RunConfig, StageError, Workspace, identify, prepare
from .regions import accumulated_responses, decay_fit_series, rectangle
from .simulate import EQUATIONS, TRUE_COEFFICIENTS, InitialCondition, benchmark_spec, simulate

log = logging.getLogger(__name__)


def _run_stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except FourierIdentError as exc:
        raise StageError(stage, exc) from exc


def run_identify(traj, config: RunConfig = RunConfig(), truth=None):
    """Identify the PDE behind ``traj`` (a Trajectory or a file path).

    ``truth`` holds ``(alpha, beta, c)`` triples; without it no metrics are
    computed.  Returns ``(FinalResult, Metrics or None)``.  Failures are raised
    as :class:`StageError` naming the step that failed.
    """
    if not isinstance(traj, Trajectory):
        traj = _run_stage("load", load_trajectory, traj)
    ws: Workspace = _run_stage("prepare", prepare, traj, config)
    result = _run_stage("identify", identify, traj, config, workspace=ws)
    metrics = None
    if truth is not None:
        metrics = _run_stage("metrics", metrics_for, result, ws, truth)
    return result, metrics


def metrics_for(result: FinalResult, ws: Workspace, truth) -> Metrics:
    """Metrics with the residual taken on the unsmoothed rows of the detected region.

    The detected rectangle is used even when the run disabled the restriction,
    so residuals stay comparable across ablations.
    """
    c_true = truth_vector(truth, result.dictionary)
    d = result.diagnostics
    region = rectangle(ws.system.map, d["a_x_star"], d["a_t_star"])
    F = ws.system.rows(region.indices)
    b = ws.system.rhs(region.indices)
    return compute_metrics(result.coefficients, c_true, F, b)


# --- JSON ----------------------------------------------------------------------


def _clean(value):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def result_to_dict(result: FinalResult, metrics: Metrics | None = None,
                   config: RunConfig | None = None) -> dict:
    names = result.dictionary.names
    entries = result.dictionary.entries
    out = {
        "equation": result.equation(),
        "support": [
            {"alpha": entries[l][0], "beta": entries[l][1], "name": names[l],
             "coefficient": float(result.coefficients[l])}
            for l in result.support
        ],
        "chosen_region": result.chosen_region,
        "k_star": result.k_star,
        "energies": [
            {
                "k": e.k,
                "support": [names[l] for l in e.support],
                "initial_support": [names[l] for l in e.initial_support],
                "trim_iterations": e.trim_iterations,
                "e1": e.e1,
                "e2": e.e2,
                "total": e.total,
                "notes": list(e.diagnostics),
            }
            for e in result.per_k
        ],
        "region_residuals": result.region_residuals,
        "diagnostics": result.diagnostics,
        "metrics": metrics.to_dict() if metrics is not None else None,
    }
    if config is not None:
        out["config"] = config.to_dict()
    return _clean(out)


def result_json(result: FinalResult, metrics: Metrics | None = None, config: RunConfig | None = None) -> str:
    return json.dumps(result_to_dict(result, metrics, config), indent=2, sort_keys=True, allow_nan=False) + "\n"


# --- ensembles -----------------------------------------------------------------

ENSEMBLE_FIELDS = ("equation", "nsr", "seed", "status", "e2", "e_res", "tpr", "ppv",
                   "k_star", "chosen_region", "support", "error")


def _one_run(clean: Trajectory, eq: str, nsr: float, seed: int, config: RunConfig) -> dict:
    row = dict(equation=eq, nsr=nsr, seed=seed, status="ok", e2="", e_res="", tpr="", ppv="",
               k_star="", chosen_region="", support="", error="")
    try:
        noisy = add_noise(clean, NoiseSpec(nsr, seed))
        result, m = run_identify(noisy, config, TRUE_COEFFICIENTS[eq])
    except FourierIdentError as exc:
        row.update(status="failed", error=str(exc))
        return row
    row.update(e2=m.e2, e_res=m.e_res, tpr=m.tpr, ppv=m.ppv, k_star=result.k_star,
               chosen_region=result.chosen_region,
               support=" ".join(result.dictionary.names[l] for l in result.support))
    return row


def run_ensemble(eq: str, nsr_list, seeds, config: RunConfig = RunConfig(),
                 ic: InitialCondition | None = None, workers: int = 1) -> list:
    """One identification per ``(nsr, seed)`` on noisy copies of one clean benchmark run.

    Failed runs come back as rows with ``status == "failed"``.
    """
    if eq not in EQUATIONS:
        raise InvalidParameterError(f"unknown equation {eq!r}; choose from {EQUATIONS}")
    seeds = [int(s) for s in seeds]
    nsr_list = [float(v) for v in nsr_list]
    if not seeds:
        raise InvalidParameterError("ensemble needs at least one seed")
    if not nsr_list:
        raise InvalidParameterError("ensemble needs at least one noise level")
    clean = simulate(benchmark_spec(eq, ic))
    jobs = [(clean, eq, nsr, seed, config) for nsr in nsr_list for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one_run, *zip(*jobs)))
    return [_one_run(*job) for job in jobs]


def write_rows(rows, path, fields=ENSEMBLE_FIELDS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in fields})


def _fmt(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return v


def read_rows(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class EnsembleSummary:
    equation: str
    nsr: float
    runs: int
    failed: int
    exact: float  # fraction of runs with TPR = PPV = 1
    e2_q1: float
    e2_median: float
    e2_q3: float
    e_res_q1: float
    e_res_median: float
    e_res_q3: float
    tpr_mean: float
    ppv_mean: float


def _num(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def summarize(rows) -> list:
    """Per ``(equation, nsr)`` quartiles of e2/e_res and mean TPR/PPV over successful runs."""
    groups = {}
    for row in rows:
        groups.setdefault((row["equation"], _num(row["nsr"])), []).append(row)
    out = []
    for (eq, nsr), grp in sorted(groups.items()):
        ok = [r for r in grp if r["status"] == "ok"]
        e2 = np.array([_num(r["e2"]) for r in ok])
        er = np.array([_num(r["e_res"]) for r in ok])
        tpr = np.array([_num(r["tpr"]) for r in ok])
        ppv = np.array([_num(r["ppv"]) for r in ok])
        q = (lambda a: np.percentile(a, [25, 50, 75]) if a.size else [math.nan] * 3)  # noqa: E731
        exact = float(np.sum((tpr == 1) & (ppv == 1))) / len(grp)
        out.append(EnsembleSummary(
            eq, nsr, len(grp), len(grp) - len(ok), exact,
            *map(float, q(e2)), *map(float, q(er)),
            float(tpr.mean()) if ok else math.nan, float(ppv.mean()) if ok else math.nan,
        ))
    return out


# --- plot data -----------------------------------------------------------------


def decay_rows(traj: Trajectory, config: RunConfig = RunConfig()) -> list:
    """Accumulated spectra along each axis with the two-piece fit."""
    system = build_system(traj, build_dictionary(1, 1), config.extension, config.frequencies)
    rows = []
    for axis, y in zip(("x", "t"), accumulated_responses(system)):
        s = decay_fit_series(y)
        for i, mode in enumerate(s["mode"]):
            rows.append(dict(axis=axis, mode=int(mode), response=s["response"][i],
                             decay_fit=s["decay_fit"][i], flat_fit=s["flat_fit"][i],
                             cost=s["cost"][i], transition=s["transition"]))
    return rows


DECAY_FIELDS = ("axis", "mode", "response", "decay_fit", "flat_fit", "cost", "transition")


def energy_rows(result: FinalResult) -> list:
    names = result.dictionary.names
    return [dict(k=e.k, e1=e.e1, e2=e.e2, total=e.total, selected=int(e.k == result.k_star),
                 support=" ".join(names[l] for l in e.support))
            for e in result.per_k]


ENERGY_FIELDS = ("k", "e1", "e2", "total", "selected", "support")


def boxplot_rows(rows) -> list:
    """Five-number summaries of e2 and e_res per ``(equation, nsr)`` from ensemble rows."""
    groups = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        groups.setdefault((row["equation"], _num(row["nsr"])), []).append(row)
    out = []
    for (eq, nsr), grp in sorted(groups.items()):
        for metric in ("e2", "e_res"):
            v = np.array([_num(r[metric]) for r in grp])
            lo, q1, med, q3, hi = np.percentile(v, [0, 25, 50, 75, 100])
            out.append(dict(equation=eq, nsr=nsr, metric=metric, n=v.size,
                            min=lo, q1=q1, median=med, q3=q3, max=hi))
    return out


BOXPLOT_FIELDS = ("equation", "nsr", "metric", "n", "min", "q1", "median", "q3", "max")
