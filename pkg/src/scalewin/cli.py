"""Command-line entry point.

Every run writes its outputs into ``--out DIR`` together with a
``manifest.json`` recording the command, the full parameter set (seed
included), package versions, the output file list and the wall-clock
duration.  Re-running with the recorded parameters reproduces the data
files byte for byte; wall-clock timestamps live only in the manifest.

Exit codes: 0 success, 1 argument error, 2 data error, 3 resource-budget
error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy
import numba

from . import __version__
from .errors import (
    ArgumentError,
    DataError,
    ResourceBudgetError,
    ScalewinError,
)
from .models import (
    Constant,
    ExponentialAffine,
    HurstExponent,
    ScalingModel,
    load_tabulated_csv,
    scaling_density,
    density_to_csv,
)
from .simulate import (
    DailySchedule,
    SimConfig,
    ensemble_from_binary,
    ensemble_from_csv,
    ensemble_to_csv,
    series_from_binary,
    series_from_csv,
    series_to_csv,
    simulate_daily_pattern,
    simulate_ensemble,
    simulate_fbm,
    simulate_path,
)
from . import estimators as est
from . import ingest as ing


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that exits with status 1 (not 2) on bad usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _parse_shape(text: str):
    if text == "exp-eq34":
        return ExponentialAffine(convention="eq34")
    if text == "exp-fig2a":
        return ExponentialAffine(convention="fig2a")
    if text == "constant":
        return Constant(1.0)
    if text.startswith("constant:"):
        return Constant(float(text.split(":", 1)[1]))
    if text.startswith("table:"):
        return load_tabulated_csv(text.split(":", 1)[1])
    raise ArgumentError(
        f"unknown shape {text!r}: expected constant[:D0], exp-eq34, exp-fig2a or table:FILE"
    )


def _float_list(text: str) -> list:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ArgumentError(f"could not parse {text!r} as a comma-separated number list")
    if not values:
        raise ArgumentError("empty number list")
    return values


class _Run:
    """Collects outputs for one invocation and writes the manifest."""

    def __init__(self, command: str, params: dict, out_dir: str):
        self.command = command
        self.params = params
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self._t0 = time.monotonic()
        self._started = datetime.now(timezone.utc).isoformat()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.dir / name

    def write_json(self, name: str, payload) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "parameters": self.params,
            "versions": {
                "scalewin": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "numba": numba.__version__,
                "python": ".".join(str(v) for v in sys.version_info[:3]),
            },
            "outputs": self.outputs,
            "started_at": self._started,
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "duration_seconds": time.monotonic() - self._t0,
        }
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load_ensemble(path: str):
    if path.endswith(".bin"):
        return ensemble_from_binary(path)
    return ensemble_from_csv(path)


def _load_series(path: str):
    if path.endswith(".bin"):
        return series_from_binary(path)
    return series_from_csv(path)


def _write_series(series, run: _Run, stem: str, fmt: str) -> None:
    if fmt == "json":
        run.write_json(stem + ".json", {
            "timestamps": series.timestamps.tolist(),
            "values": series.values.tolist(),
            "origin_tag": series.origin_tag,
        })
    else:
        series_to_csv(series, run.path(stem + ".csv"))


def _write_ensemble(ensemble, run: _Run, stem: str, fmt: str) -> None:
    if fmt == "json":
        run.write_json(stem + ".json", {
            "sample_times": ensemble.sample_times.tolist(),
            "values": ensemble.values.tolist(),
            "model_tag": ensemble.model_tag,
        })
    else:
        ensemble_to_csv(ensemble, run.path(stem + ".csv"))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate_ensemble(args) -> int:
    run = _Run("simulate-ensemble", _params(args), args.out)
    model = ScalingModel(HurstExponent(args.hurst), _parse_shape(args.shape))
    config = SimConfig(seed=args.seed, steps_per_unit_time=args.steps_per_unit_time)
    ensemble = simulate_ensemble(model, args.paths, _float_list(args.times), config)
    _write_ensemble(ensemble, run, "ensemble", args.format)
    run.finish()
    return 0


def _cmd_simulate_path(args) -> int:
    run = _Run("simulate-path", _params(args), args.out)
    model = ScalingModel(HurstExponent(args.hurst), _parse_shape(args.shape))
    config = SimConfig(seed=args.seed, steps_per_unit_time=args.steps_per_unit_time)
    series = simulate_path(model, args.t_max, args.interval, config)
    _write_series(series, run, "path", args.format)
    run.finish()
    return 0


def _cmd_simulate_fbm(args) -> int:
    run = _Run("simulate-fbm", _params(args), args.out)
    series = simulate_fbm(HurstExponent(args.hurst), args.n, args.dt,
                          args.prefactor, SimConfig(seed=args.seed))
    _write_series(series, run, "fbm", args.format)
    run.finish()
    return 0


def _default_schedule(t_day: float) -> DailySchedule:
    quarters = np.linspace(0.0, t_day, 5)
    hs = (0.35, 0.5, 0.6, 0.4)
    intervals = tuple(
        (float(quarters[k]), float(quarters[k + 1]), HurstExponent(hs[k]),
         ExponentialAffine(convention="eq34"))
        for k in range(4)
    )
    return DailySchedule(intervals=intervals, t_day=t_day)


def _load_schedule(path: str, t_day: float) -> DailySchedule:
    """Schedule CSV: header then rows start,end,hurst,shape."""
    import csv as _csv

    try:
        fh = open(path, "r", newline="")
    except OSError as exc:
        raise DataError(f"cannot read schedule file: {exc}") from None
    with fh:
        rows = [r for r in _csv.reader(fh) if r]
    intervals = []
    for row in rows[1:]:
        if len(row) != 4:
            raise DataError(f"{path}: schedule rows need start,end,hurst,shape")
        intervals.append((float(row[0]), float(row[1]),
                          HurstExponent(float(row[2])), _parse_shape(row[3])))
    return DailySchedule(intervals=tuple(intervals), t_day=t_day)


def _cmd_simulate_daily(args) -> int:
    run = _Run("simulate-daily", _params(args), args.out)
    schedule = (_load_schedule(args.schedule, args.t_day) if args.schedule
                else _default_schedule(args.t_day))
    interval = args.interval if args.interval is not None else args.t_day / 144.0
    config = SimConfig(seed=args.seed, steps_per_unit_time=args.steps_per_unit_time)
    series = simulate_daily_pattern(schedule, args.days, interval, config)
    _write_series(series, run, "daily", args.format)
    run.finish()
    return 0


def _cmd_ingest(args) -> int:
    run = _Run("ingest", _params(args), args.out)
    config = ing.IngestConfig(
        timestamp_column=args.timestamp_column,
        price_column=args.price_column,
        timestamp_format=args.timestamp_format,
        day_start_seconds=args.day_start,
        grid_interval=args.grid_interval,
    )
    parsed = ing.parse_csv(args.input, config)
    returns = ing.log_returns(parsed.records, day_start_seconds=args.day_start)
    aligned = ing.day_align(returns, config, fill_threshold=args.fill_threshold)
    aligned.to_csv(run.path("aligned.csv"))
    run.write_json("ingest_report.json", {
        "rows": len(parsed.records),
        "skipped_lines": parsed.skipped_lines,
        "duplicates": parsed.duplicates,
        "days": int(aligned.returns.shape[0]),
        "slots_per_day": int(aligned.returns.shape[1]),
        "dropped_days": int(aligned.dropped_days),
        "missing_fraction": float(np.mean(aligned.missing)),
    })
    run.finish()
    return 0


def _cmd_analyze_ensemble(args) -> int:
    run = _Run("analyze-ensemble", _params(args), args.out)
    ensemble = _load_ensemble(args.input)
    h = HurstExponent(args.hurst)
    times = ensemble.sample_times
    idx = ([ensemble.time_index(t) for t in _float_list(args.times)]
           if args.times else [i for i, t in enumerate(times) if t > 0])

    for i in idx:
        estimate = est.ensemble_density(ensemble, i, bins=args.bins)
        estimate.to_csv(run.path(f"density_t{times[i]:g}.csv"))

    estimates, score = est.collapse(ensemble, idx, h, bins=args.bins)
    with open(run.path("collapse.csv"), "w") as fh:
        fh.write("bin_left,bin_right," +
                 ",".join(f"density_t{times[i]:g}" for i in idx) + "\n")
        edges = estimates[0].bin_edges
        cols = np.array([e.probability_density for e in estimates])
        for j in range(edges.size - 1):
            fh.write(f"{edges[j]:.17g},{edges[j + 1]:.17g},"
                     + ",".join(f"{v:.17g}" for v in cols[:, j]) + "\n")
    run.write_json("collapse_score.json", {"score": score, "hurst": h.value})

    fit = est.fit_hurst_variance(ensemble)
    run.write_json("hurst_ensemble.json", fit.to_dict())

    if args.cond_t is not None and args.cond_lag is not None:
        report = est.conditional_mean_test(
            ensemble,
            ensemble.time_index(args.cond_t),
            ensemble.time_index(args.cond_t + args.cond_lag),
        )
        run.write_json("conditional_mean.json", report.to_dict())
    run.finish()
    return 0


def _cmd_analyze_sliding(args) -> int:
    run = _Run("analyze-sliding", _params(args), args.out)
    series = _load_series(args.input)
    lags = _float_list(args.lags)

    fit = est.fit_hurst_sliding(series, lags)
    run.write_json("hurst_sliding.json", fit.to_dict())

    density = est.sliding_density(series, lags[0], HurstExponent(args.hs), bins=args.bins)
    density.to_csv(run.path("fs_density.csv"))

    if args.tail_region:
        lo, hi = _float_list(args.tail_region)
    else:
        if density.samples is not None:
            sigma = float(np.std(density.samples))
        else:
            c = density.bin_centers
            p = density.probability_density * np.diff(density.bin_edges)
            sigma = float(np.sqrt(np.sum(p * c**2) - np.sum(p * c) ** 2))
        lo, hi = 2.0 * sigma, 4.8 * sigma
    tails = est.tail_diagnostics(density, (lo, hi))
    run.write_json("tails.json", tails.to_dict())
    run.finish()
    return 0


def _is_aligned_csv(path: str) -> bool:
    try:
        with open(path, "r") as fh:
            return fh.readline().strip().startswith("day_id,slot_seconds")
    except (OSError, UnicodeDecodeError):
        return False


def _cmd_diagnose(args) -> int:
    run = _Run("diagnose", _params(args), args.out)
    if args.ensemble:
        source = _load_ensemble(args.input)
    elif _is_aligned_csv(args.input):
        source = ing.DailyAlignedSeries.from_csv(args.input)
    else:
        source = _load_series(args.input)

    if args.t is not None:
        report = est.increment_autocorr(source, args.t, args.lag)
        run.write_json("autocorr.json", report.to_dict())

    profile = est.msf_profile(source, args.lag, day_length=args.day_length)
    profile.to_csv(run.path("msf.csv"))
    verdict = est.stationarity_verdict(profile)
    run.write_json("verdict.json", verdict.to_dict())
    run.finish()
    return 0


def _cmd_demo_fig2(args) -> int:
    """Canned contrast: correct ensemble analysis versus sliding windows.

    The same model (H = 0.35, exponentially-tailed scaling density) is
    simulated twice -- as an ensemble analyzed at fixed times, and as one
    long path analyzed by pooling sliding windows.  The ensemble recovers
    H and the exponential density; the sliding windows return H_s near
    1/2 and a fattened pooled density.
    """
    params = _params(args)
    n_paths = 5_000_000 if args.full else args.paths
    params["effective_paths"] = n_paths
    run = _Run("demo-fig2", params, args.out)

    h = HurstExponent(0.35)
    shape = ExponentialAffine(convention="eq34")
    model = ScalingModel(h, shape)

    # ensemble branch: densities at t = 10, 100, 1000 rescaled to u = x/t^H
    ensemble = simulate_ensemble(model, n_paths, [10.0, 100.0, 1000.0],
                                 SimConfig(seed=args.seed))
    idx = [0, 1, 2]
    estimates, score = est.collapse(ensemble, idx, h, bins=args.bins)
    reference = scaling_density(shape, h)
    with open(run.path("f_table.csv"), "w") as fh:
        fh.write("u,density_t10,density_t100,density_t1000,reference\n")
        centers = estimates[0].bin_centers
        ref = np.interp(centers, reference.grid, reference.values)
        cols = np.array([e.probability_density for e in estimates])
        for j, u in enumerate(centers):
            fh.write(f"{u:.17g}," + ",".join(f"{v:.17g}" for v in cols[:, j])
                     + f",{ref[j]:.17g}\n")
    fit_ensemble = est.fit_hurst_variance(ensemble)
    payload = fit_ensemble.to_dict()
    payload["collapse_score"] = score
    run.write_json("hurst_ensemble.json", payload)

    # sliding branch: one long path, pooled increments
    series = simulate_path(model, float(args.path_length), 1.0,
                           SimConfig(seed=args.seed + 1))
    lags = [10.0, 20.0, 40.0, 80.0, 160.0]
    fit_sliding = est.fit_hurst_sliding(series, lags)
    density = est.sliding_density(series, lags[0], HurstExponent(0.5), bins=args.bins)
    density.to_csv(run.path("fs_table.csv"))
    run.write_json("hurst_sliding.json", fit_sliding.to_dict())

    density_to_csv(reference, run.path("reference_density.csv"))
    run.finish()
    print(f"ensemble exponent {fit_ensemble.exponent:.4f}  "
          f"sliding exponent {fit_sliding.exponent:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def _params(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _add_common(p, seed=0):
    p.add_argument("--seed", type=int, default=seed, help="base random seed")
    p.add_argument("--out", default=".", help="output directory")


def _add_format(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="data file format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scalewin",
                     description="Simulate scaling processes and contrast "
                                 "ensemble analysis with sliding-window analysis.")
    parser.add_argument("--version", action="version", version=f"scalewin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-ensemble", help="many independent paths on a shared time grid")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--shape", default="exp-eq34",
                   help="constant[:D0] | exp-eq34 | exp-fig2a | table:FILE")
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--times", default="10,100,1000", help="comma-separated sample times")
    p.add_argument("--steps-per-unit-time", type=int, default=100)
    _add_common(p)
    _add_format(p)
    p.set_defaults(func=_cmd_simulate_ensemble)

    p = sub.add_parser("simulate-path", help="one long path on a uniform grid")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--shape", default="exp-eq34")
    p.add_argument("--t-max", type=float, default=1e6)
    p.add_argument("--interval", type=float, default=1.0)
    p.add_argument("--steps-per-unit-time", type=int, default=100)
    _add_common(p)
    _add_format(p)
    p.set_defaults(func=_cmd_simulate_path)

    p = sub.add_parser("simulate-fbm", help="exact fractional Brownian motion sample")
    p.add_argument("--hurst", type=float, default=0.7)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--prefactor", type=float, default=1.0)
    _add_common(p)
    _add_format(p)
    p.set_defaults(func=_cmd_simulate_fbm)

    p = sub.add_parser("simulate-daily", help="repeated intraday regime pattern")
    p.add_argument("--schedule", default=None,
                   help="CSV of start,end,hurst,shape rows (default: built-in 4-interval pattern)")
    p.add_argument("--days", type=int, default=200)
    p.add_argument("--t-day", type=float, default=1.0)
    p.add_argument("--interval", type=float, default=None,
                   help="sample interval (default t_day/144)")
    p.add_argument("--steps-per-unit-time", type=int, default=2000)
    _add_common(p)
    _add_format(p)
    p.set_defaults(func=_cmd_simulate_daily)

    p = sub.add_parser("ingest", help="tick CSV to day-aligned log returns")
    p.add_argument("--input", required=True)
    p.add_argument("--timestamp-column", default="timestamp")
    p.add_argument("--price-column", default="price")
    p.add_argument("--timestamp-format", choices=("epoch_seconds", "iso8601"),
                   default="epoch_seconds")
    p.add_argument("--day-start", type=int, default=0)
    p.add_argument("--grid-interval", type=int, default=600)
    p.add_argument("--fill-threshold", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("analyze-ensemble",
                       help="fixed-time densities, collapse, exponent fit, conditional mean")
    p.add_argument("--input", required=True, help="ensemble file (.csv or .bin)")
    p.add_argument("--hurst", type=float, required=True, help="exponent used for rescaling")
    p.add_argument("--times", default=None, help="sample times to analyze (default: all positive)")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--cond-t", type=float, default=None)
    p.add_argument("--cond-lag", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_analyze_ensemble)

    p = sub.add_parser("analyze-sliding",
                       help="pooled sliding-window density, exponent and tails")
    p.add_argument("--input", required=True, help="series file (.csv or .bin)")
    p.add_argument("--lags", default="10,20,40,80,160")
    p.add_argument("--hs", type=float, default=0.5, help="rescaling exponent for the pooled density")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--tail-region", default=None, help="lo,hi for the tail fits")
    _add_common(p)
    p.set_defaults(func=_cmd_analyze_sliding)

    p = sub.add_parser("diagnose", help="increment autocorrelation, MSF profile, verdict")
    p.add_argument("--input", required=True)
    p.add_argument("--ensemble", action="store_true", help="treat the input as an ensemble file")
    p.add_argument("--lag", type=float, required=True)
    p.add_argument("--t", type=float, default=None, help="center time for the autocorrelation")
    p.add_argument("--day-length", type=float, default=None,
                   help="fold a long series into repeated days of this length")
    _add_common(p)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("demo-fig2",
                       help="canned contrast: ensemble analysis vs sliding windows")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--path-length", type=int, default=1_000_000)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--full", action="store_true", help="paper-scale run (5,000,000 paths)")
    _add_common(p)
    p.set_defaults(func=_cmd_demo_fig2)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceBudgetError as exc:
        sys.stderr.write(f"scalewin: resource budget error: {exc}\n")
        return 3
    except DataError as exc:
        sys.stderr.write(f"scalewin: data error: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"scalewin: data error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"scalewin: data error: {exc}\n")
        return 2
    except ScalewinError as exc:
        sys.stderr.write(f"scalewin: error: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"scalewin: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
