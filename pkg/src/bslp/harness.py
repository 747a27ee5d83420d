"""Seeded multi-trial recovery experiments with CSV output.

Each experiment sweeps one parameter and runs ``trials`` independent
instances per sweep point, for one or more recovery methods:

=================  ==========  ===============================
experiment         sweep axis  methods
=================  ==========  ===============================
lambda-sweep       lam         group-lp
block-vs-nonblock  n           group-lp, lp, oga
snr-vs-p           p           group-lp, lp
snr-vs-k           k           group-lp, lp
error-vs-n         n           group-lp
algo-compare       d           group-lp, bomp
=================  ==========  ===============================

``group-lp`` is ADMM on the block partition, ``lp`` the same solver on the
singleton partition, ``oga`` OMP (BOMP with singleton blocks) and ``bomp``
Block-OMP. Sparsity is given as ``k`` nonzero entries, i.e. ``s = k/d`` blocks.

ADMM runs with lambda continuation in every experiment except
``lambda-sweep``, whose subject is the fixed penalty weight itself.

Trial ``i`` draws its matrix, signal and noise from the seed
``derive_seed(master_seed, i)``, shared by every sweep point and method, so
rows are reproducible individually and comparisons use common random numbers.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError

from .baselines import BompConfig, block_omp
from .block_model import BlockPartition
from .sensing import MatrixEnsemble, NoiseModel, derive_seed, generate_block_sparse_signal, generate_matrix, measure
from .solver import AdmmConfig, Continuation, SolverDiverged, admm_solve

__all__ = [
    "EXPERIMENTS",
    "CSV_COLUMNS",
    "SUMMARY_COLUMNS",
    "ExperimentConfig",
    "TrialRecord",
    "ConfigError",
    "default_config",
    "run_experiment",
    "summarize",
    "read_trials_csv",
    "write_outputs",
    "read_summary_csv",
    "theory_report",
    "validate",
]

CSV_COLUMNS = (
    "experiment", "sweep_value", "trial", "seed", "N", "n", "d", "s", "p", "lambda",
    "gamma", "noise_level", "relative_error", "snr_db", "iterations", "converged", "runtime_s",
)
SUMMARY_COLUMNS = (
    "experiment", "sweep_value", "trials", "failed", "mean_relative_error",
    "median_relative_error", "mean_snr_db", "median_snr_db", "converged_fraction",
)

EXPERIMENTS = {
    "lambda-sweep": ("lam", ("group-lp",)),
    "block-vs-nonblock": ("n", ("group-lp", "lp", "oga")),
    "snr-vs-p": ("p", ("group-lp", "lp")),
    "snr-vs-k": ("k", ("group-lp", "lp")),
    "error-vs-n": ("n", ("group-lp",)),
    "algo-compare": ("d", ("group-lp", "bomp")),
    "theory-report": (None, ()),
}

_DESK = {
    "lambda-sweep": dict(N=256, n=64, d=2, k=64, p=0.4, trials=20,
                         sweep=(1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)),
    "block-vs-nonblock": dict(continuation=True, N=256, d=2, k=16, p=0.4, trials=20, sweep=(32, 48, 64, 80, 96)),
    "snr-vs-p": dict(continuation=True, N=256, n=64, d=2, k=8, noise=1e-3, trials=20,
                     sweep=(0.01, 0.2, 0.4, 0.6, 0.8, 1.0)),
    "snr-vs-k": dict(continuation=True, N=256, n=64, d=2, p=0.4, noise=1e-3, trials=20, sweep=(4, 8, 12, 16, 20, 24)),
    "error-vs-n": dict(continuation=True, N=256, d=2, k=16, p=0.4, trials=30, sweep=(32, 48, 64, 80, 96)),
    "algo-compare": dict(continuation=True, N=256, n=64, k=32, p=0.4, noise=1e-3, trials=20, sweep=(2, 4, 8, 16, 32)),
    "theory-report": dict(N=20, n=16, d=2, k=4, p=0.5, trials=1),
}

_FULL_SCALE = {
    "lambda-sweep": dict(N=1024, n=128, k=128, trials=100),
    "block-vs-nonblock": dict(N=1024, k=64, trials=100, sweep=(64, 96, 128, 160, 192, 224, 256)),
    "snr-vs-p": dict(N=1024, n=128, k=8, trials=100,
                     sweep=(0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)),
    "snr-vs-k": dict(N=1024, n=128, trials=100, sweep=(8, 16, 24, 32, 40, 48)),
    "error-vs-n": dict(N=1024, k=16, trials=100, sweep=(32, 48, 64, 80, 96, 112, 128)),
    "algo-compare": dict(N=1024, n=128, k=32, trials=100),
    "theory-report": dict(N=1024, n=128, d=2, k=64),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    N: int = 256
    n: int = 128
    d: int = 2
    k: int = 16
    p: float = 0.4
    lam: float = 1e-4
    gamma: float = 0.1
    noise: float = 0.0
    trials: int = 20
    seed: int = 0
    t: float = 2.0
    prox_mode: str = "block-exact"
    sweep: tuple = ()
    continuation: bool = False
    max_iters: int = 5000
    timing: bool = False
    workers: int = 1
    mc_trials: int = 1000
    ensemble: str = "gaussian"

    @property
    def axis(self) -> Optional[str]:
        return EXPERIMENTS[self.experiment][0]

    @property
    def methods(self) -> tuple:
        return EXPERIMENTS[self.experiment][1]

    def at(self, value) -> "ExperimentConfig":
        """Copy with the sweep axis set to ``value``."""
        axis = self.axis
        if axis in ("n", "d", "k"):
            value = int(value)
        return replace(self, **{axis: value})

    def header(self) -> list[str]:
        out = []
        for f in fields(self):
            if f.name == "workers":  # does not affect results
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(a)) if isinstance(a, float) else str(a) for a in v)
            out.append(f"# {f.name}={v}")
        return out


def default_config(experiment: str, paper_scale: bool = False, **overrides) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    vals = dict(_DESK[experiment])
    if paper_scale:
        vals.update(_FULL_SCALE[experiment])
    vals.update({k: v for k, v in overrides.items() if v is not None})
    if "sweep" in vals:
        vals["sweep"] = tuple(vals["sweep"])
    cfg = ExperimentConfig(experiment=experiment, **vals)
    validate(cfg)
    return cfg


def _validate_point(cfg: ExperimentConfig, where: str) -> None:
    if cfg.N < 1 or cfg.n < 1:
        raise ConfigError(f"{where}: N and n must be positive (N={cfg.N}, n={cfg.n})")
    if cfg.d < 1 or cfg.N % cfg.d:
        raise ConfigError(f"{where}: N={cfg.N} is not divisible by d={cfg.d}")
    if cfg.k < 1 or cfg.k % cfg.d:
        raise ConfigError(f"{where}: k={cfg.k} nonzero entries is not a positive multiple of d={cfg.d}")
    if cfg.k > cfg.N:
        raise ConfigError(f"{where}: k={cfg.k} exceeds N={cfg.N}")
    if not (0 < cfg.p <= 1):
        raise ConfigError(f"{where}: p={cfg.p} must lie in (0, 1]")
    if not cfg.lam > 0:
        raise ConfigError(f"{where}: lambda={cfg.lam} must be positive")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.trials < 1:
        raise ConfigError(f"trials={cfg.trials} must be >= 1")
    if cfg.workers < 1:
        raise ConfigError(f"workers={cfg.workers} must be >= 1")
    if not cfg.gamma > 0:
        raise ConfigError(f"gamma={cfg.gamma} must be positive")
    if cfg.noise < 0:
        raise ConfigError(f"noise={cfg.noise} must be nonnegative")
    if cfg.max_iters < 1:
        raise ConfigError(f"max_iters={cfg.max_iters} must be >= 1")
    if cfg.prox_mode not in ("block-exact", "elementwise-surrogate"):
        raise ConfigError(f"prox_mode={cfg.prox_mode!r} is not a known mode")
    if cfg.experiment == "theory-report":
        if not (1 < cfg.t <= 2):
            raise ConfigError(f"t={cfg.t} must lie in (1, 2]")
        _validate_point(cfg, "theory-report")
        return
    if not cfg.sweep:
        raise ConfigError(f"{cfg.experiment} needs at least one sweep value")
    for v in cfg.sweep:
        try:
            _validate_point(cfg.at(v), f"sweep {cfg.axis}={v}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class TrialRecord:
    experiment: str
    sweep_value: float
    trial: int
    seed: int
    N: int
    n: int
    d: int
    s: int
    p: float
    lam: float
    gamma: float
    noise_level: float
    relative_error: float
    snr_db: float
    iterations: int
    converged: bool
    runtime_s: float
    failed: bool = False

    def csv_row(self) -> list[str]:
        vals = asdict(self)
        vals["lambda"] = vals.pop("lam")
        return [_fmt(vals[c]) for c in CSV_COLUMNS]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sweep_repr(v):
    return float(v)


def _trial_instance(cfg: ExperimentConfig, trial: int):
    seed = derive_seed(cfg.seed, trial)
    part = BlockPartition.from_length(cfg.N, cfg.d)
    phi = generate_matrix(MatrixEnsemble(cfg.ensemble, cfg.n, cfg.N, derive_seed(seed, 0)))
    x, _ = generate_block_sparse_signal(part, cfg.k // cfg.d, derive_seed(seed, 1))
    y, _ = measure(phi, x, NoiseModel.gaussian(cfg.noise), derive_seed(seed, 2))
    return seed, part, phi, x, y


def _solve(cfg: ExperimentConfig, method: str, phi, y, part: BlockPartition):
    if method in ("group-lp", "lp"):
        if method == "lp":
            part = BlockPartition.uniform(1, cfg.N)
        acfg = AdmmConfig(
            lam=cfg.lam, gamma=cfg.gamma, p=cfg.p, max_iters=cfg.max_iters,
            prox_mode=cfg.prox_mode, continuation=Continuation() if cfg.continuation else None,
        )
        return admm_solve(phi, y, part, acfg), part
    if method == "oga":
        part = BlockPartition.uniform(1, cfg.N)
    budget = min(cfg.k // part.block_sizes[0], part.M)
    return block_omp(phi, y, part, BompConfig(max_blocks=budget)), part


def run_trial(cfg: ExperimentConfig, sweep_value, method: str, trial: int) -> TrialRecord:
    point = cfg.at(sweep_value)
    name = cfg.experiment if len(cfg.methods) == 1 else f"{cfg.experiment}:{method}"
    seed, part, phi, x, y = _trial_instance(point, trial)
    t0 = time.perf_counter()
    failed = False
    try:
        res, used = _solve(point, method, phi, y, part)
        err = float(np.linalg.norm(x - res.x_hat))
        iters, conv = res.iterations, bool(res.converged)
    except (SolverDiverged, LinAlgError, FloatingPointError):
        used = part
        err, iters, conv, failed = math.nan, 0, False, True
    elapsed = time.perf_counter() - t0
    xnorm = float(np.linalg.norm(x))
    rel = err / xnorm
    if failed:
        snr = math.nan
    elif err == 0:
        snr = math.inf
    else:
        snr = 20.0 * math.log10(xnorm / err)
    return TrialRecord(
        experiment=name, sweep_value=_sweep_repr(sweep_value), trial=trial, seed=seed,
        N=point.N, n=point.n, d=used.block_sizes[0], s=point.k // used.block_sizes[0],
        p=float(point.p), lam=float(point.lam), gamma=float(point.gamma),
        noise_level=float(point.noise), relative_error=rel, snr_db=snr, iterations=iters,
        converged=conv, runtime_s=elapsed if cfg.timing else math.nan, failed=failed,
    )


def _run_task(args):
    return run_trial(*args)


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    """Run every (sweep value, method, trial) and summarize.

    Returns ``(records, summary)``. Records are ordered by sweep value,
    method and trial whatever the worker count. With ``out_dir`` the trial
    CSV and the summary CSV are written there atomically.
    """
    validate(cfg)
    if cfg.experiment == "theory-report":
        raise ConfigError("theory-report is not a trial experiment; use theory_report()")
    tasks = [(cfg, v, m, i) for v in cfg.sweep for m in cfg.methods for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        records = [_run_task(t) for t in tasks]
    order = {(v, m, i): j for j, (_, v, m, i) in enumerate(tasks)}
    records.sort(key=lambda r: order[(r.sweep_value, _method_of(r, cfg), r.trial)])
    summary = summarize(records)
    if out_dir is not None:
        write_outputs(cfg, records, summary, out_dir)
    return records, summary


def _method_of(rec, cfg):
    return rec.experiment.split(":", 1)[1] if ":" in rec.experiment else cfg.methods[0]


def _stats(values):
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return math.nan, math.nan
    if any(math.isinf(v) for v in vals):
        mean = math.inf if all(v > 0 for v in vals if math.isinf(v)) else math.nan
    else:
        mean = math.fsum(vals) / len(vals)
    return mean, statistics.median(vals)


def summarize(records) -> list[dict]:
    """Mean and median error/SNR per (experiment label, sweep value).

    Accepts :class:`TrialRecord` objects or the dict rows of
    :func:`read_trials_csv`. Failed trials (NaN error) are counted but
    excluded from the statistics.
    """
    groups: dict = {}
    for r in records:
        row = r if isinstance(r, dict) else {
            "experiment": r.experiment, "sweep_value": r.sweep_value,
            "relative_error": r.relative_error, "snr_db": r.snr_db, "converged": r.converged,
        }
        groups.setdefault((row["experiment"], float(row["sweep_value"])), []).append(row)
    out = []
    for (exp, sv), rows in groups.items():
        rel = [float(r["relative_error"]) for r in rows]
        snr = [float(r["snr_db"]) for r in rows]
        mean_rel, med_rel = _stats(rel)
        mean_snr, med_snr = _stats(snr)
        conv = [bool(int(r["converged"])) if isinstance(r["converged"], str) else bool(r["converged"]) for r in rows]
        out.append({
            "experiment": exp,
            "sweep_value": sv,
            "trials": len(rows),
            "failed": sum(math.isnan(v) for v in rel),
            "mean_relative_error": mean_rel,
            "median_relative_error": med_rel,
            "mean_snr_db": mean_snr,
            "median_snr_db": med_snr,
            "converged_fraction": sum(conv) / len(conv),
        })
    return out


def _csv_text(header_lines, columns, rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(cfg: ExperimentConfig, records, summary, out_dir: str) -> tuple[str, str]:
    trials_path = os.path.join(out_dir, f"{cfg.experiment}.csv")
    summary_path = os.path.join(out_dir, f"{cfg.experiment}_summary.csv")
    header = cfg.header()
    _atomic_write(trials_path, _csv_text(header, CSV_COLUMNS, [r.csv_row() for r in records]))
    srows = [[_fmt(row[c]) for c in SUMMARY_COLUMNS] for row in summary]
    _atomic_write(summary_path, _csv_text(header, SUMMARY_COLUMNS, srows))
    return trials_path, summary_path


def read_trials_csv(path: str) -> list[dict]:
    """Rows of a trial CSV as dicts of strings (config comment lines skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def read_summary_csv(path: str) -> list[dict]:
    rows = read_trials_csv(path)
    out = []
    for r in rows:
        out.append({
            "experiment": r["experiment"],
            "sweep_value": float(r["sweep_value"]),
            "trials": int(r["trials"]),
            "failed": int(r["failed"]),
            **{c: float(r[c]) for c in SUMMARY_COLUMNS[4:]},
        })
    return out


def theory_report(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    """Generate one matrix from ``cfg`` and certify it at order ``cfg.t``.

    The RIP constant is exact when enumerable; otherwise a Monte-Carlo lower
    bound with ``cfg.mc_trials`` draws is used (``mc_trials=0`` disables the
    fallback, so an oversized instance raises
    :class:`~bslp.theory.EnumerationCapExceeded`). With ``out_dir`` the report
    is written to ``theory-report.txt`` there.
    """
    from .theory import ThresholdParams, build_report

    validate(cfg)
    part = BlockPartition.from_length(cfg.N, cfg.d)
    phi = generate_matrix(MatrixEnsemble(cfg.ensemble, cfg.n, cfg.N, derive_seed(cfg.seed, 0)))
    report = build_report(
        phi, part, cfg.k // cfg.d, ThresholdParams(t=cfg.t, p=cfg.p),
        mc_trials=cfg.mc_trials if cfg.mc_trials > 0 else None, seed=derive_seed(cfg.seed, 1),
    )
    if out_dir is not None:
        text = "\n".join(cfg.header()) + "\n" + report.to_text()
        _atomic_write(os.path.join(out_dir, "theory-report.txt"), text)
    return report
