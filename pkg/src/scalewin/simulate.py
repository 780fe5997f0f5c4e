"""Sample-path generation: scaling martingales, fBm, daily patterns.

Scaling diffusions are integrated by Euler-Maruyama in transformed time
s = t**(2H).  The substitution turns dx = sqrt(t**(2H-1) D(u)) dB(t) into
dx = sqrt(D(u)/2H) dB(s) with u = x/sqrt(s), which is regular at the time
origin for every H in (0, 1) and lets all paths start exactly at x(0) = 0.

Determinism: each request derives a single PCG64 stream from its seed and
consumes normal draws in a fixed (step, path) layout, so outputs are
bit-identical across runs and across any number of compute threads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import ArgumentError, DataError, FormatError, NumericError, ResourceBudgetError
from .models import Constant, DiffusionShape, ExponentialAffine, HurstExponent, ScalingModel, Tabulated

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "TimeSeries",
    "DailySchedule",
    "simulate_ensemble",
    "simulate_path",
    "simulate_fbm",
    "simulate_daily_pattern",
    "ensemble_to_csv",
    "ensemble_to_binary",
    "ensemble_from_binary",
    "series_to_csv",
    "series_to_binary",
    "series_from_binary",
    "max_path_samples",
    "max_ensemble_cells",
]

_ENSEMBLE_MAGIC = b"SWENS001"
_SERIES_MAGIC = b"SWSER001"


def max_path_samples() -> int:
    """Budget on samples in a single simulated series (env-overridable)."""
    return int(float(os.environ.get("SCALEWIN_MAX_PATH_SAMPLES", 1e7)))


def max_ensemble_cells() -> int:
    """Budget on n_paths * n_times for an ensemble (env-overridable)."""
    return int(float(os.environ.get("SCALEWIN_MAX_ENSEMBLE_CELLS", 1e9)))


def _max_work() -> int:
    """Budget on n_paths * integration steps (env-overridable)."""
    return int(float(os.environ.get("SCALEWIN_MAX_WORK", 1e11)))


@dataclass(frozen=True)
class SimConfig:
    """Reproducibility knobs for a simulation request.

    ``steps_per_unit_time`` counts Euler steps per unit of *transformed*
    time s = t**(2H).  The scheme field exists for forward compatibility;
    only transformed-time integration is implemented.
    """

    seed: int
    steps_per_unit_time: int = 100
    scheme: str = "transformed-time"

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ArgumentError("seed must be a 64-bit unsigned integer")
        if self.steps_per_unit_time < 1:
            raise ArgumentError("steps_per_unit_time must be a positive integer")
        if self.scheme != "transformed-time":
            raise ArgumentError(f"unknown scheme {self.scheme!r}")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PathEnsemble:
    """N independent trajectories on a shared time grid, all from x(0) = 0."""

    sample_times: np.ndarray
    values: np.ndarray  # (n_paths, n_times)
    model_tag: str = ""

    def __post_init__(self):
        times = _freeze(self.sample_times)
        values = _freeze(self.values)
        if times.ndim != 1 or values.ndim != 2 or values.shape[1] != times.size:
            raise ArgumentError("ensemble values must be (n_paths, n_times)")
        if values.shape[0] < 1 or times.size < 1:
            raise ArgumentError("ensemble needs at least one path and one time")
        if np.any(np.diff(times) <= 0):
            raise ArgumentError("sample times must be strictly increasing")
        object.__setattr__(self, "sample_times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def time_index(self, t: float) -> int:
        """Index of a sample time, matched within floating-point slack."""
        i = int(np.argmin(np.abs(self.sample_times - t)))
        if abs(self.sample_times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ArgumentError(f"t={t} is not one of the ensemble sample times")
        return i


@dataclass(frozen=True)
class TimeSeries:
    """One trajectory with timestamps; simulated or ingested."""

    timestamps: np.ndarray
    values: np.ndarray
    origin_tag: str = "simulated"  # simulated | ingested | fbm | daily-pattern

    def __post_init__(self):
        ts = _freeze(self.timestamps)
        vals = _freeze(self.values)
        if ts.ndim != 1 or ts.shape != vals.shape or ts.size < 1:
            raise ArgumentError("series needs matching 1-d timestamps and values")
        if np.any(np.diff(ts) <= 0):
            raise ArgumentError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("series values must be finite")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    @property
    def sample_interval(self) -> float:
        """Grid spacing; raises unless the series is uniformly sampled."""
        dt = np.diff(self.timestamps)
        if dt.size == 0:
            raise ArgumentError("series has a single sample, no interval")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12 * max(1.0, dt[0])):
            raise ArgumentError("series is not uniformly sampled")
        return float(dt[0])


@dataclass(frozen=True)
class DailySchedule:
    """Piecewise intraday regime: (start, end, H, shape) intervals over one day."""

    intervals: tuple
    t_day: float

    def __post_init__(self):
        if not (self.t_day > 0):
            raise ArgumentError("t_day must be positive")
        ivs = tuple(self.intervals)
        if not ivs:
            raise ArgumentError("schedule needs at least one interval")
        tol = 1e-9 * self.t_day
        expect = 0.0
        for start, end, h, shape in ivs:
            if abs(start - expect) > tol:
                raise ArgumentError("schedule intervals must partition the day with no gaps or overlaps")
            if end <= start:
                raise ArgumentError("schedule interval must have positive length")
            if not isinstance(h, HurstExponent):
                raise ArgumentError("schedule entries need a HurstExponent")
            expect = end
        if abs(expect - self.t_day) > tol:
            raise ArgumentError("schedule intervals must cover the full day")
        object.__setattr__(self, "intervals", ivs)


def _kernel_dispatch(shape: DiffusionShape, h: HurstExponent):
    """Map a shape to (kind, p0, tab_u, tab_d) with the 1/2H factor folded in."""
    empty = np.empty(0)
    if isinstance(shape, Constant):
        return _kernels.KIND_CONSTANT, shape.d0 / (2 * h.value), empty, empty
    if isinstance(shape, ExponentialAffine):
        if shape.convention == "eq34":
            return _kernels.KIND_AFFINE_UNIT, 0.0, empty, empty
        return _kernels.KIND_AFFINE_SCALED, 1.0 / (2 * h.value), empty, empty
    if isinstance(shape, Tabulated):
        return _kernels.KIND_TABULATED, 1.0 / (2 * h.value), shape.u, shape.d
    raise ArgumentError(f"unsupported diffusion shape {shape!r}")


def _build_nodes(s_samples: np.ndarray, steps_per_unit: int):
    """Transformed-time integration nodes: uniform grid merged with sample points."""
    s_max = float(s_samples[-1])
    ds = 1.0 / steps_per_unit
    base = np.arange(0.0, s_max, ds)
    nodes = np.union1d(np.union1d(base, s_samples), [0.0])
    tol = 1e-12 * max(1.0, s_max)
    keep = np.concatenate([[True], np.diff(nodes) > tol])
    nodes = nodes[keep]
    # locate each sample point among the surviving nodes
    idx = np.searchsorted(nodes, s_samples)
    idx = np.clip(idx, 0, nodes.size - 1)
    left = np.clip(idx - 1, 0, nodes.size - 1)
    use_left = np.abs(nodes[left] - s_samples) < np.abs(nodes[idx] - s_samples)
    idx = np.where(use_left, left, idx)
    return nodes, idx


def _integrate(model: ScalingModel, n_paths: int, sample_times: np.ndarray, config: SimConfig,
               rng: np.random.Generator) -> np.ndarray:
    """Euler-Maruyama in transformed time; returns (n_paths, n_times) values."""
    h = model.h.value
    out = np.zeros((n_paths, sample_times.size))
    positive = sample_times > 0
    if not np.any(positive):
        return out
    s_samples = sample_times[positive] ** (2 * h)
    nodes, rec_idx = _build_nodes(s_samples, config.steps_per_unit_time)
    n_steps = nodes.size - 1
    if n_paths * n_steps > _max_work():
        raise ResourceBudgetError(
            f"request needs {n_paths * n_steps:.3g} path-steps, over the budget of {_max_work():.3g}"
            " (override with SCALEWIN_MAX_WORK)"
        )

    rec_rows = np.full(n_steps, -1, dtype=np.int64)
    cols = np.nonzero(positive)[0]
    for col, node_i in zip(cols, rec_idx):
        rec_rows[node_i - 1] = col  # record after the step arriving at this node

    x = np.zeros(n_paths)
    rec_out = out  # kernel writes columns directly
    chunk = max(1, min(n_steps, int(8_000_000 / max(1, n_paths)) + 1))
    i0 = 0
    while i0 < n_steps:
        m = min(chunk, n_steps - i0)
        z = rng.standard_normal((m, n_paths))
        kind, p0, tab_u, tab_d = _kernel_dispatch(model.shape, model.h)
        _kernels.advance_block(x, nodes, i0, z, rec_rows[i0 : i0 + m], rec_out, kind, p0, tab_u, tab_d)
        i0 += m

    if model.drift_rate is not None:
        out += _drift_integral(model.drift_rate, sample_times)[None, :]
    return out


def _drift_integral(rate, sample_times: np.ndarray) -> np.ndarray:
    """Cumulative integral of a time-only drift rate at the sample times."""
    t_max = float(sample_times[-1])
    fine = np.union1d(np.linspace(0.0, t_max, max(1001, 4 * sample_times.size)), sample_times)
    r = np.array([float(rate(t)) for t in fine])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(fine))])
    return np.interp(sample_times, fine, cum)


def _validate_times(sample_times) -> np.ndarray:
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ArgumentError("sample_times must be a nonempty 1-d sequence")
    if np.any(np.diff(times) <= 0):
        raise ArgumentError("sample_times must be strictly increasing")
    if times[0] < 0 or not np.all(np.isfinite(times)):
        raise ArgumentError("sample_times must be finite and nonnegative")
    return times


def _model_tag(model: ScalingModel) -> str:
    return f"H={model.h.value:g} shape={type(model.shape).__name__}"


def simulate_ensemble(model: ScalingModel, n_paths: int, sample_times, config: SimConfig) -> PathEnsemble:
    """Generate n_paths independent trajectories sampled at the given times.

    The drift rate, if present, must depend on time only; it is integrated
    deterministically and added after the stochastic integration.  Tabulated
    diffusion shapes are clamped to their edge values if a path wanders
    outside the tabulated range.
    """
    if n_paths < 1:
        raise ArgumentError("n_paths must be positive")
    times = _validate_times(sample_times)
    if n_paths * times.size > max_ensemble_cells():
        raise ResourceBudgetError(
            f"ensemble of {n_paths}x{times.size} cells exceeds the budget of {max_ensemble_cells():.3g}"
            " (override with SCALEWIN_MAX_ENSEMBLE_CELLS)"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    values = _integrate(model, n_paths, times, config, rng)
    return PathEnsemble(sample_times=times, values=values, model_tag=_model_tag(model))


def simulate_path(model: ScalingModel, t_max: float, sample_interval: float, config: SimConfig) -> TimeSeries:
    """One long trajectory from x(0) = 0 on a uniform grid."""
    if not (t_max > 0) or not (sample_interval > 0):
        raise ArgumentError("t_max and sample_interval must be positive")
    n = int(round(t_max / sample_interval))
    if n < 1:
        raise ArgumentError("t_max must cover at least one sample interval")
    if n > max_path_samples():
        raise ResourceBudgetError(
            f"path of {n} samples exceeds the budget of {max_path_samples():.3g}"
            " (override with SCALEWIN_MAX_PATH_SAMPLES)"
        )
    times = np.arange(1, n + 1) * sample_interval
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    values = _integrate(model, 1, times, config, rng)
    return TimeSeries(timestamps=times, values=values[0], origin_tag="simulated")


@lru_cache(maxsize=2)
def _fgn_cholesky(h_value: float, n: int, dt: float, c: float) -> np.ndarray:
    """Lower Cholesky factor of the exact fractional-noise covariance."""
    k = np.arange(n, dtype=float)
    gamma = 0.5 * c * dt ** (2 * h_value) * (
        np.abs(k + 1) ** (2 * h_value) + np.abs(k - 1) ** (2 * h_value) - 2 * k ** (2 * h_value)
    )
    cov = scipy.linalg.toeplitz(gamma)
    try:
        return scipy.linalg.cholesky(cov, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(
            "fractional-noise covariance is numerically non-positive-definite; "
            "reduce n or increase dt"
        ) from exc


def simulate_fbm(h: HurstExponent, n: int, dt: float, variance_prefactor: float, config: SimConfig) -> TimeSeries:
    """Exact Gaussian sample of fractional Brownian motion on t_k = k dt.

    The covariance is Cov(x(t), x(s)) = (c/2)(t**2H + s**2H - |t-s|**2H)
    with c = variance_prefactor, realized through a Cholesky factorization
    of the stationary increment covariance followed by a cumulative sum.
    x(0) = 0 and the returned grid starts at t = dt.
    """
    if n < 1 or n > 8192:
        raise ArgumentError("fbm length must satisfy 1 <= n <= 8192 (exact method is O(n^2)-O(n^3))")
    if not (dt > 0) or not (variance_prefactor > 0):
        raise ArgumentError("dt and variance_prefactor must be positive")
    factor = _fgn_cholesky(h.value, n, float(dt), float(variance_prefactor))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    fgn = factor @ rng.standard_normal(n)
    return TimeSeries(
        timestamps=np.arange(1, n + 1) * float(dt),
        values=np.cumsum(fgn),
        origin_tag="fbm",
    )


def simulate_daily_pattern(schedule: DailySchedule, n_days: int, sample_interval: float,
                           config: SimConfig) -> TimeSeries:
    """Concatenate n_days independent realizations of the intraday schedule.

    Each day restarts from x = 0.  Within a day, every schedule interval
    runs a fresh scaling process in its own local time (so each interval
    scales from its start), and x stays continuous by offsetting each
    interval by the value accumulated so far that day.
    """
    if n_days < 1:
        raise ArgumentError("n_days must be positive")
    if not (sample_interval > 0):
        raise ArgumentError("sample_interval must be positive")
    t_day = schedule.t_day
    m = round(t_day / sample_interval)
    if m < 1 or abs(m * sample_interval - t_day) > 1e-9 * t_day:
        raise ArgumentError("sample_interval must divide the day length")
    if n_days * m > max_path_samples():
        raise ResourceBudgetError(
            f"daily-pattern series of {n_days * m} samples exceeds the budget of {max_path_samples():.3g}"
        )

    slot_times = np.arange(1, m + 1) * sample_interval
    day_values = np.zeros((n_days, m))
    offset = np.zeros(n_days)
    for k, (start, end, h, shape) in enumerate(schedule.intervals):
        in_iv = (slot_times > start + 1e-9 * t_day) & (slot_times <= end + 1e-9 * t_day)
        local = slot_times[in_iv] - start
        local_times = np.union1d(local, [end - start])
        model = ScalingModel(h=h, shape=shape)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.seed, k))))
        vals = _integrate(model, n_days, local_times, config, rng)
        sel = np.searchsorted(local_times, local)
        day_values[:, in_iv] = offset[:, None] + vals[:, sel]
        offset = offset + vals[:, -1]

    timestamps = (np.arange(n_days)[:, None] * t_day + slot_times[None, :]).ravel()
    return TimeSeries(timestamps=timestamps, values=day_values.ravel(), origin_tag="daily-pattern")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def ensemble_to_csv(ensemble: PathEnsemble, target) -> None:
    """CSV export: header row of sample times, one row per path."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            ensemble_to_csv(ensemble, fh)
            return
    target.write(",".join(f"{t:.17g}" for t in ensemble.sample_times) + "\n")
    for row in ensemble.values:
        target.write(",".join(f"{v:.17g}" for v in row) + "\n")


def ensemble_from_csv(path) -> PathEnsemble:
    """Inverse of ensemble_to_csv."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: not an ensemble CSV file ({exc})") from None
    if data.shape[0] < 2:
        raise FormatError(f"{path}: ensemble CSV needs a time row and at least one path row")
    return PathEnsemble(sample_times=data[0], values=data[1:])


def ensemble_to_binary(ensemble: PathEnsemble, path) -> None:
    """Compact binary export: magic, dims, then little-endian 64-bit floats."""
    n_paths, n_times = ensemble.values.shape
    with open(path, "wb") as fh:
        fh.write(_ENSEMBLE_MAGIC)
        np.array([n_paths, n_times], dtype="<u8").tofile(fh)
        ensemble.sample_times.astype("<f8").tofile(fh)
        ensemble.values.astype("<f8").tofile(fh)


def ensemble_from_binary(path) -> PathEnsemble:
    with open(path, "rb") as fh:
        if fh.read(8) != _ENSEMBLE_MAGIC:
            raise FormatError(f"{path}: not an ensemble binary file")
        n_paths, n_times = (int(v) for v in np.fromfile(fh, dtype="<u8", count=2))
        times = np.fromfile(fh, dtype="<f8", count=n_times)
        values = np.fromfile(fh, dtype="<f8", count=n_paths * n_times)
    if values.size != n_paths * n_times:
        raise FormatError(f"{path}: truncated ensemble binary file")
    return PathEnsemble(sample_times=times, values=values.reshape(n_paths, n_times))


def series_to_csv(series: TimeSeries, target) -> None:
    """CSV export with columns timestamp,value."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            series_to_csv(series, fh)
            return
    target.write("timestamp,value\n")
    for t, v in zip(series.timestamps, series.values):
        target.write(f"{t:.17g},{v:.17g}\n")


def series_from_csv(path, origin_tag: str = "ingested") -> TimeSeries:
    """Inverse of series_to_csv (the origin tag is not stored in CSV)."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: not a series CSV file ({exc})") from None
    if data.shape[1] != 2:
        raise FormatError(f"{path}: series CSV must have exactly two columns")
    return TimeSeries(timestamps=data[:, 0], values=data[:, 1], origin_tag=origin_tag)


def series_to_binary(series: TimeSeries, path) -> None:
    tag = series.origin_tag.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_SERIES_MAGIC)
        np.array([series.values.size, len(tag)], dtype="<u8").tofile(fh)
        fh.write(tag)
        series.timestamps.astype("<f8").tofile(fh)
        series.values.astype("<f8").tofile(fh)


def series_from_binary(path) -> TimeSeries:
    with open(path, "rb") as fh:
        if fh.read(8) != _SERIES_MAGIC:
            raise FormatError(f"{path}: not a series binary file")
        n, tag_len = (int(v) for v in np.fromfile(fh, dtype="<u8", count=2))
        tag = fh.read(tag_len).decode("utf-8")
        ts = np.fromfile(fh, dtype="<f8", count=n)
        values = np.fromfile(fh, dtype="<f8", count=n)
    if values.size != n:
        raise FormatError(f"{path}: truncated series binary file")
    return TimeSeries(timestamps=ts, values=values, origin_tag=tag)
