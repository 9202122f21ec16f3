"""Command-line runner for the relay study and the streaming study.

Outputs are plot-ready long-format CSV plus a manifest recording command,
config digest, seeds, and version, so identical manifests reproduce
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import stats as _sstats

from . import __version__
from .access import Strategy
from .allocation import expected_competitive_ratio
from .config import (config_digest, dbm_to_watts, load_config,
                     packaged_config_path, relay_scenario, stream_scenario)
from .errors import (CapacityLimitError, ConfigError, CrlabError,
                     DegenerateChainError, NonConvergenceError,
                     QuadratureError, RankDeficiencyError, SingularMatrixError)
from .simulator import sweep
from .video import PROPOSED, SCHEMES, run_gop

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_CONFIG_ERRORS = (ConfigError, CapacityLimitError, DegenerateChainError)
_NUMERIC_ERRORS = (QuadratureError, NonConvergenceError, SingularMatrixError,
                   RankDeficiencyError, FloatingPointError)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return __version__


def _write_manifest(outdir: Path, argv: list[str], config_path: Path, seeds: list[int]):
    manifest = {
        "command": "crlab " + " ".join(argv),
        "config": str(config_path),
        "config_sha256": config_digest(config_path),
        "seeds": seeds,
        "out": str(outdir),
        "version": _version_string(),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _workers() -> int:
    raw = os.environ.get("CRLAB_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CRLAB_WORKERS={raw!r} is not an integer") from exc
    if value < 1:
        raise ConfigError(f"CRLAB_WORKERS={value} must be >= 1")
    return value


def _grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError(f"step {step} must be positive")
    if stop < start:
        raise ConfigError(f"empty sweep range [{start}, {stop}]")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def _mean_ci(samples: list[float]) -> tuple[float, float]:
    mean = float(np.mean(samples))
    if len(samples) < 2:
        return mean, 0.0
    half = float(_sstats.t.ppf(0.975, len(samples) - 1)
                 * np.std(samples, ddof=1) / math.sqrt(len(samples)))
    return mean, half


def cmd_relay(args, argv) -> int:
    default = "table2_relay_links" if args.sweep == "relay_power" else "table2_relay"
    config_path = Path(args.config) if args.config else packaged_config_path(default)
    seeds = list(range(args.seeds))
    scenario = relay_scenario(load_config(config_path), seeds)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    display = _grid(args.from_, args.to, args.step)
    if args.sweep == "channels":
        display = [int(v) for v in display]
        grid = display
    elif args.sweep == "relay_power":
        grid = [dbm_to_watts(v) for v in display]  # config parses dBm, engine runs in watts
    else:
        grid = display

    points = sweep(scenario, args.sweep, grid, workers=_workers())
    n_strategies = len(Strategy)
    rows = []
    for i, point in enumerate(points):
        rows.append((display[i // n_strategies], point.strategy.value,
                     point.stats.mean_bps, point.stats.ci95_bps,
                     point.analytical_bps))
    _write_csv(outdir / f"sweep_{args.sweep}.csv",
               ["param_value", "strategy", "throughput_mean_bps",
                "ci95_bps", "analytical_bps"], rows)
    _write_manifest(outdir, argv, config_path, seeds)
    print(f"wrote {outdir / f'sweep_{args.sweep}.csv'} "
          f"({len(rows)} rows, {len(display)} grid points)")
    return EXIT_OK


def _ratio_table(args, argv, outdir: Path) -> int:
    try:
        start, stop, step = (float(x) for x in args.eta_grid.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--eta-grid must be start:stop:step, got {args.eta_grid!r}") from exc
    rows = [(eta, args.M, expected_competitive_ratio(eta, args.M))
            for eta in _grid(start, stop, step)]
    _write_csv(outdir / "ratio_table.csv",
               ["eta", "n_channels", "expected_ratio"], rows)
    print(f"wrote {outdir / 'ratio_table.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_ia(args, argv) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.ratio_table:
        return _ratio_table(args, argv, outdir)
    if not args.scenario:
        raise ConfigError("either --scenario or --ratio-table is required")

    config_path = Path(args.config) if args.config else packaged_config_path(args.scenario)
    scenario = stream_scenario(load_config(config_path))
    seeds = list(range(args.seeds))

    if args.sweep == "eta":
        grid = _grid(args.from_, args.to, args.step)
        rows = []
        for eta in grid:
            sc = replace(scenario, eta=eta)
            per_scheme = {scheme: [] for scheme in SCHEMES}
            bounds = []
            for seed in seeds:
                result = run_gop(sc, seed)
                for scheme in SCHEMES:
                    per_scheme[scheme].append(result.mean_psnr[scheme])
                bounds.append(result.bound_geo_mean)
            for scheme in SCHEMES:
                mean, half = _mean_ci(per_scheme[scheme])
                rows.append((eta, scheme, mean, half))
            mean, half = _mean_ci(bounds)
            rows.append((eta, "bound", mean, half))
        _write_csv(outdir / "eta_sweep.csv",
                   ["eta", "scheme", "mean_psnr_db", "ci95_db"], rows)
        _write_manifest(outdir, argv, config_path, seeds)
        print(f"wrote {outdir / 'eta_sweep.csv'} ({len(rows)} rows)")
        return EXIT_OK

    per_user = {scheme: [] for scheme in SCHEMES}
    first = None
    for seed in seeds:
        result = run_gop(scenario, seed, collect_solver_trace=(seed == seeds[0]))
        if first is None:
            first = result
        for scheme in SCHEMES:
            per_user[scheme].append(result.final_psnr[scheme])
    rows = []
    for scheme in SCHEMES:
        stacked = np.stack(per_user[scheme])  # (seeds, users)
        for j in range(scenario.n_users):
            mean, half = _mean_ci(list(stacked[:, j]))
            rows.append((scheme, j, scenario.videos[j].name, mean, half))
    _write_csv(outdir / "psnr.csv",
               ["scheme", "user", "video", "psnr_db_mean", "ci95_db"], rows)
    if first.solver_trace:
        _write_csv(outdir / "convergence_trace.csv",
                   ["tau", "q_dual", "q_primal", "gap", "mu_norm"],
                   first.solver_trace)
    _write_csv(outdir / "video_trace.csv",
               ["t", "user", "channel", "p_success", "lambda_db", "w_db"],
               first.trace_rows)
    _write_manifest(outdir, argv, config_path, seeds)
    print(f"wrote {outdir / 'psnr.csv'} ({len(rows)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crlab",
        description="cooperative-relay capacity study and aligned video streaming")
    sub = parser.add_subparsers(dest="command", required=True)

    relay = sub.add_parser("relay", help="throughput sweeps: simulation vs analysis")
    relay.add_argument("--config", help="scenario config (default: packaged)")
    relay.add_argument("--sweep", required=True,
                       choices=["channels", "eta", "relay_power"])
    relay.add_argument("--from", dest="from_", type=float, required=True)
    relay.add_argument("--to", type=float, required=True)
    relay.add_argument("--step", type=float, default=1.0)
    relay.add_argument("--seeds", type=int, default=10)
    relay.add_argument("--out", default="out")

    ia = sub.add_parser("ia", help="aligned streaming scenarios")
    ia.add_argument("--config", help="scenario config (default: packaged)")
    ia.add_argument("--scenario", choices=["single-channel", "multi-nobond", "bonding"])
    ia.add_argument("--sweep", choices=["eta"])
    ia.add_argument("--from", dest="from_", type=float, default=0.3)
    ia.add_argument("--to", type=float, default=0.9)
    ia.add_argument("--step", type=float, default=0.15)
    ia.add_argument("--seeds", type=int, default=10)
    ia.add_argument("--out", default="out")
    ia.add_argument("--ratio-table", action="store_true",
                    help="emit the expected competitive-ratio table")
    ia.add_argument("--M", type=int, default=6, help="channel count for --ratio-table")
    ia.add_argument("--eta-grid", default="0.05:0.95:0.05",
                    help="start:stop:step for --ratio-table")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "relay":
            return cmd_relay(args, argv)
        return cmd_ia(args, argv)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
