"""Command-line entry point: ``bslp <experiment> [options]``.

Settings are layered: experiment defaults, then ``--paper-scale``, then the
``--config`` file (``key=value`` lines, ``#`` comments), then explicit flags.
Exit status is 0 on success, 1 on a configuration error and 2 when some
trials failed.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import EXPERIMENTS, ConfigError, default_config, run_experiment, theory_report
from .theory import EnumerationCapExceeded

# flag name -> (ExperimentConfig field, parser)
_KEYS = {
    "N": ("N", int),
    "n": ("n", int),
    "d": ("d", int),
    "k": ("k", int),
    "p": ("p", float),
    "lambda": ("lam", float),
    "gamma": ("gamma", float),
    "noise": ("noise", float),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "t": ("t", float),
    "prox-mode": ("prox_mode", str),
    "max-iters": ("max_iters", int),
    "workers": ("workers", int),
    "mc-trials": ("mc_trials", int),
    "ensemble": ("ensemble", str),
}
_BOOL_KEYS = {"continuation": "continuation", "timing": "timing", "paper-scale": "paper_scale"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_sweep(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"sweep must be a comma-separated list of numbers, got {text!r}") from None


def read_config_file(path: str) -> dict:
    """Parse a ``key=value`` file into ExperimentConfig overrides."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip().lstrip("-").replace("_", "-"), val.strip()
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            if key == "lam":
                key = "lambda"
            try:
                if key in _KEYS:
                    name, conv = _KEYS[key]
                    out[name] = conv(val)
                elif key in _BOOL_KEYS:
                    out[_BOOL_KEYS[key]] = _parse_bool(val)
                elif key == "sweep":
                    out["sweep"] = _parse_sweep(val)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bslp", description="Block-sparse mixed l2/lp recovery experiments.")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    for key, (_, conv) in _KEYS.items():
        ap.add_argument(f"--{key}", type=conv, default=None, dest=_KEYS[key][0])
    ap.add_argument("--sweep", default=None, help="comma-separated sweep values")
    ap.add_argument("--paper-scale", action="store_true", help="N=1024, n=128, 100 trials")
    ap.add_argument("--continuation", action=argparse.BooleanOptionalAction, default=None,
                    help="lambda continuation in ADMM (default on except for lambda-sweep)")
    ap.add_argument("--timing", action="store_true", default=None, help="record wall time per trial")
    ap.add_argument("--config", default=None, help="key=value file of overrides")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args: argparse.Namespace):
    overrides = read_config_file(args.config) if args.config else {}
    paper = bool(overrides.pop("paper_scale", False)) or args.paper_scale
    for _, (name, _) in _KEYS.items():
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    for name in ("continuation", "timing"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if args.sweep is not None:
        overrides["sweep"] = _parse_sweep(args.sweep)
    try:
        return default_config(args.experiment, paper_scale=paper, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"bslp: config error: {exc}", file=sys.stderr)
        return 1

    if cfg.experiment == "theory-report":
        try:
            report = theory_report(cfg, args.out)
        except (EnumerationCapExceeded, ValueError) as exc:
            print(f"bslp: config error: {exc}", file=sys.stderr)
            return 1
        sys.stdout.write(report.to_text())
        return 0

    records, summary = run_experiment(cfg, args.out)
    print(f"{'experiment':<28} {'sweep':>10} {'trials':>6} {'failed':>6} {'mean_err':>11} {'median_err':>11} {'mean_snr':>9}")
    for row in summary:
        print(
            f"{row['experiment']:<28} {row['sweep_value']:>10.4g} {row['trials']:>6d} {row['failed']:>6d} "
            f"{row['mean_relative_error']:>11.4e} {row['median_relative_error']:>11.4e} {row['mean_snr_db']:>9.2f}"
        )
    failed = sum(r.failed for r in records)
    if failed:
        print(f"bslp: {failed} of {len(records)} trials failed", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
