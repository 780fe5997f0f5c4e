"""Ensemble diagnostics versus the sliding-window method.

The correct route treats fixed-t cross sections of an ensemble (or of
day-aligned data, with days acting as realizations) as the object of
study: densities at fixed t, their collapse under u = x/t**H, and the
variance-scaling exponent.  The flawed-but-ubiquitous route pools
increments z = x(t+T) - x(t) over all window positions t of a single
series; on data with nonstationary increments this fabricates fat tails
and pins the fitted exponent at 1/2.  Both routes live here, side by
side, together with martingale and stationarity diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ArgumentError, NumericError
from .models import HurstExponent
from .simulate import PathEnsemble, TimeSeries

__all__ = [
    "DensityEstimate",
    "HurstFit",
    "MsfProfile",
    "AutocorrReport",
    "TailReport",
    "ConditionalMeanReport",
    "StationarityVerdict",
    "ensemble_density",
    "collapse",
    "fit_hurst_variance",
    "sliding_increments",
    "sliding_density",
    "fit_hurst_sliding",
    "increment_autocorr",
    "msf_profile",
    "stationarity_verdict",
    "conditional_mean_test",
    "tail_diagnostics",
]

#: Default histogram bin count (equal width over +-5 sample sigma).
DEFAULT_BINS = 101

#: Minimum counts for a bin to enter sup-norm style comparisons.
POPULATED_BIN_COUNT = 100


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DensityEstimate:
    """Normalized histogram: density = count / (n_binned * width).

    Samples falling outside the bin range are excluded and do not count
    toward ``sample_count``, so the density always integrates to one.
    The raw samples are kept (when practical) for moment diagnostics.
    """

    bin_edges: np.ndarray
    probability_density: np.ndarray
    sample_count: int
    rescale_tag: Optional[tuple] = None
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        edges = _freeze(self.bin_edges)
        dens = _freeze(self.probability_density)
        if edges.size != dens.size + 1:
            raise ArgumentError("need len(bin_edges) == len(density) + 1")
        if np.any(np.diff(edges) <= 0):
            raise ArgumentError("bin edges must be strictly increasing")
        if np.any(dens < 0):
            raise ArgumentError("densities must be nonnegative")
        total = float(np.sum(dens * np.diff(edges)))
        if self.sample_count > 0 and abs(total - 1.0) > 1e-9:
            raise NumericError(f"density integrates to {total!r}, expected 1 within 1e-9")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "probability_density", dens)
        if self.samples is not None:
            object.__setattr__(self, "samples", _freeze(self.samples))

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def counts(self):
        return np.rint(self.probability_density * np.diff(self.bin_edges) * self.sample_count)

    def to_csv(self, target):
        """CSV export with columns bin_left, bin_right, density."""
        if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
            with open(target, "w", newline="") as fh:
                self.to_csv(fh)
                return
        target.write("bin_left,bin_right,density\n")
        for lo, hi, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.probability_density):
            target.write(f"{lo:.17g},{hi:.17g},{d:.17g}\n")


@dataclass(frozen=True)
class HurstFit:
    """Least-squares scaling fit on log-log axes; exponent = slope / 2."""

    exponent: float
    log_intercept: float
    r_squared: float
    points: tuple  # of (log_abscissa, log_ordinate, residual)
    kind: str  # "ensemble-variance" | "sliding-msf"

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "log_intercept": self.log_intercept,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
            "kind": self.kind,
        }

    def to_json(self, target):
        if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
            with open(target, "w") as fh:
                self.to_json(fh)
                return
        json.dump(self.to_dict(), target, indent=2, sort_keys=True)
        target.write("\n")


@dataclass(frozen=True)
class MsfProfile:
    """Mean square fluctuation <(x(t+T) - x(t))**2> versus start time t."""

    t_grid: np.ndarray
    msf: np.ndarray
    lag: float
    standard_errors: np.ndarray
    slot_counts: np.ndarray
    low_count_flag: bool = False

    def __post_init__(self):
        for name in ("t_grid", "msf", "standard_errors", "slot_counts"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        if not (self.t_grid.size == self.msf.size == self.standard_errors.size == self.slot_counts.size):
            raise ArgumentError("profile arrays must have equal lengths")
        if np.any(self.msf < 0):
            raise ArgumentError("mean square fluctuations must be nonnegative")

    def to_csv(self, target):
        """CSV export with columns t, msf, standard_error, count."""
        if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
            with open(target, "w", newline="") as fh:
                self.to_csv(fh)
                return
        target.write("t,msf,standard_error,count\n")
        for t, m, s, c in zip(self.t_grid, self.msf, self.standard_errors, self.slot_counts):
            target.write(f"{t:.17g},{m:.17g},{s:.17g},{int(c)}\n")


@dataclass(frozen=True)
class AutocorrReport:
    """Correlation of adjacent increments z- = x(t) - x(t-T), z+ = x(t+T) - x(t)."""

    raw: float
    normalized: float
    sample_count: int
    three_sigma_band: float
    pooled: bool = False  # True when averaged over t along one series

    def __post_init__(self):
        if abs(self.normalized) > 1.0 + 1e-9:
            raise NumericError("normalized autocorrelation outside [-1, 1]")

    def to_dict(self):
        return {
            "raw": self.raw,
            "normalized": self.normalized,
            "sample_count": self.sample_count,
            "three_sigma_band": self.three_sigma_band,
            "pooled": self.pooled,
        }


@dataclass(frozen=True)
class TailReport:
    """Fat-tail diagnostics: excess kurtosis plus tail-fit quality.

    Interpretation rule (this toolkit's quantification; the choice of
    thresholds is a modeling decision, not a theorem): semilog_r2 well
    above loglog_r2 indicates an exponential tail, the reverse indicates
    power-law-like tails.
    """

    excess_kurtosis: float
    semilog_r2: float
    loglog_r2: float
    tail_region: tuple

    @property
    def tail_shape(self):
        return "exponential" if self.semilog_r2 >= self.loglog_r2 else "power-law-like"

    def to_dict(self):
        return {
            "excess_kurtosis": self.excess_kurtosis,
            "semilog_r2": self.semilog_r2,
            "loglog_r2": self.loglog_r2,
            "tail_region": list(self.tail_region),
            "tail_shape": self.tail_shape,
        }


@dataclass(frozen=True)
class ConditionalMeanReport:
    """Conditional mean E[x(t+T) | x(t) in bin] against the bin's own mean."""

    bin_centers: np.ndarray
    conditional_means: np.ndarray
    counts: np.ndarray
    standard_errors: np.ndarray
    max_abs_deviation: float
    max_sigma: float  # max over bins of |deviation| / standard error

    def __post_init__(self):
        for name in ("bin_centers", "conditional_means", "counts", "standard_errors"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    def to_dict(self):
        return {
            "bin_centers": list(self.bin_centers),
            "conditional_means": list(self.conditional_means),
            "counts": [int(c) for c in self.counts],
            "standard_errors": list(self.standard_errors),
            "max_abs_deviation": self.max_abs_deviation,
            "max_sigma": self.max_sigma,
        }


@dataclass(frozen=True)
class StationarityVerdict:
    """Chi-square verdict on the flatness of an MSF profile."""

    verdict: str  # "stationary-increments" | "nonstationary-increments"
    p_value: float
    chi_square: float
    dof: int

    @property
    def stationary(self):
        return self.verdict == "stationary-increments"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "p_value": self.p_value,
            "chi_square": self.chi_square,
            "dof": self.dof,
        }


# ---------------------------------------------------------------------------
# histograms
# ---------------------------------------------------------------------------

def _resolve_bins(samples: np.ndarray, bins):
    if bins is None:
        bins = DEFAULT_BINS
    if np.isscalar(bins):
        sigma = float(np.std(samples))
        if sigma == 0:
            sigma = max(abs(float(np.mean(samples))), 1.0)
        return np.linspace(-5 * sigma, 5 * sigma, int(bins) + 1)
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ArgumentError("explicit bins must be strictly increasing edges")
    return edges


def _histogram(samples: np.ndarray, bins, rescale_tag=None, keep_samples=True) -> DensityEstimate:
    edges = _resolve_bins(samples, bins)
    counts, _ = np.histogram(samples, bins=edges)
    n = int(counts.sum())
    if n == 0:
        raise ArgumentError("no samples fall inside the bin range")
    density = counts / (n * np.diff(edges))
    return DensityEstimate(
        bin_edges=edges,
        probability_density=density,
        sample_count=n,
        rescale_tag=rescale_tag,
        samples=samples if keep_samples and samples.size <= 20_000_000 else None,
    )


def ensemble_density(ensemble: PathEnsemble, time_index: int, bins=None) -> DensityEstimate:
    """Cross-ensemble histogram of x at one fixed sample time."""
    if not (-ensemble.sample_times.size <= time_index < ensemble.sample_times.size):
        raise ArgumentError(f"time_index {time_index} out of range")
    if ensemble.n_paths < 100:
        raise ArgumentError("need at least 100 paths for a density estimate")
    samples = ensemble.values[:, time_index]
    t = float(ensemble.sample_times[time_index])
    return _histogram(samples, bins, rescale_tag=("time", t))


def collapse(ensemble: PathEnsemble, time_indices: Sequence[int], h: HurstExponent, bins=None):
    """Rescale fixed-t densities to u = x/t**H and score their overlay.

    All times share one u bin grid.  The collapse score is the largest
    across-time spread of the rescaled density, restricted to bins holding
    at least ``POPULATED_BIN_COUNT`` samples at every time.
    """
    idx = list(time_indices)
    if len(idx) < 2:
        raise ArgumentError("collapse needs at least 2 time indices")
    if ensemble.n_paths < 100:
        raise ArgumentError("need at least 100 paths for a density estimate")
    times = [float(ensemble.sample_times[i]) for i in idx]
    rescaled = [ensemble.values[:, i] / t ** h.value for i, t in zip(idx, times)]
    edges = _resolve_bins(np.concatenate(rescaled), bins)

    estimates, count_rows, density_rows = [], [], []
    for t, u in zip(times, rescaled):
        est = _histogram(u, edges, rescale_tag=("collapse", h.value, t))
        estimates.append(est)
        count_rows.append(est.counts)
        density_rows.append(est.probability_density)
    counts = np.array(count_rows)
    dens = np.array(density_rows)
    ok = np.all(counts >= POPULATED_BIN_COUNT, axis=0)
    if not np.any(ok):
        raise ArgumentError("no bin is populated at every requested time")
    score = float(np.max(dens[:, ok].max(axis=0) - dens[:, ok].min(axis=0)))
    return estimates, score


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------

def _loglog_fit(x: np.ndarray, y: np.ndarray, kind: str) -> HurstFit:
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    resid = ly - pred
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    points = tuple((float(a), float(b), float(r)) for a, b, r in zip(lx, ly, resid))
    return HurstFit(
        exponent=float(slope) / 2.0,
        log_intercept=float(intercept),
        r_squared=r2,
        points=points,
        kind=kind,
    )


def fit_hurst_variance(ensemble: PathEnsemble) -> HurstFit:
    """Exponent from the growth of the ensemble second moment with t."""
    times = ensemble.sample_times
    pos = times > 0
    times = times[pos]
    if times.size < 3 or times[-1] / times[0] < 10:
        raise ArgumentError("need >= 3 positive sample times spanning at least one decade")
    m2 = np.mean(ensemble.values[:, pos] ** 2, axis=0)
    if np.any(m2 <= 0):
        raise NumericError("nonpositive sample variance; cannot fit on log axes")
    return _loglog_fit(times, m2, "ensemble-variance")


def _lag_steps(series: TimeSeries, lag: float) -> int:
    interval = series.sample_interval
    k = lag / interval
    ki = int(round(k))
    if ki < 1 or abs(k - ki) > 1e-6:
        raise ArgumentError(f"lag {lag} is not a positive multiple of the sampling interval {interval}")
    return ki


def sliding_increments(series: TimeSeries, lag: float, stride: int = 1) -> np.ndarray:
    """All increments x(t+T) - x(t) with start index stepping by ``stride``."""
    if stride < 1:
        raise ArgumentError("stride must be a positive integer")
    k = _lag_steps(series, lag)
    if series.values.size <= k:
        raise ArgumentError("series shorter than the requested lag")
    z = series.values[k:] - series.values[:-k]
    return z[::stride]


def sliding_density(series: TimeSeries, lag: float, h_s: HurstExponent, bins=None) -> DensityEstimate:
    """Histogram of rescaled pooled increments u_s = z / T**H_s.

    This is the sliding-window construction: implicitly it assumes the
    increment distribution does not depend on the window start, which
    holds only for stationary increments.
    """
    z = sliding_increments(series, lag)
    u_s = z / float(lag) ** h_s.value
    return _histogram(u_s, bins, rescale_tag=("sliding", h_s.value, float(lag)))


def fit_hurst_sliding(series: TimeSeries, lags: Sequence[float]) -> HurstFit:
    """Exponent of the pooled mean square increment versus lag."""
    lags = np.asarray(sorted(float(l) for l in lags))
    if lags.size < 3 or lags[-1] / lags[0] < 10:
        raise ArgumentError("need >= 3 lags spanning at least one decade")
    span = float(series.timestamps[-1] - series.timestamps[0])
    if lags[-1] > span / 100:
        raise ArgumentError(f"largest lag {lags[-1]} exceeds 1% of the series span {span}")
    msd = np.array([float(np.mean(sliding_increments(series, lag) ** 2)) for lag in lags])
    if np.any(msd <= 0):
        raise NumericError("nonpositive pooled mean square increment")
    return _loglog_fit(lags, msd, "sliding-msf")


# ---------------------------------------------------------------------------
# increment correlation / MSF / martingale diagnostics
# ---------------------------------------------------------------------------

def increment_autocorr(source, t: float, lag: float) -> AutocorrReport:
    """Correlation of the increments before and after time t at lag T.

    For an ensemble the average runs across paths at the fixed t.  For a
    single series it pools over all window positions; that pooling is
    meaningful only under stationary increments, so the report carries
    ``pooled=True`` as a caveat flag.
    """
    if t - lag < 0:
        raise ArgumentError("need t - lag >= 0")
    if isinstance(source, PathEnsemble):
        i_minus = source.time_index(t - lag) if t - lag > 0 else None
        i0 = source.time_index(t)
        i_plus = source.time_index(t + lag)
        x0 = source.values[:, i0]
        x_minus = source.values[:, i_minus] if i_minus is not None else 0.0
        zm = x0 - x_minus
        zp = source.values[:, i_plus] - x0
        pooled = False
    elif isinstance(source, TimeSeries):
        k = _lag_steps(source, lag)
        x = source.values
        if x.size < 2 * k + 1:
            raise ArgumentError("series too short for adjacent increments at this lag")
        zm = x[k:-k] - x[:-2 * k]
        zp = x[2 * k:] - x[k:-k]
        pooled = True
    else:
        raise ArgumentError(f"unsupported source type {type(source).__name__}")

    n = int(np.size(zp))
    rms_m = float(np.sqrt(np.mean(np.square(zm))))
    rms_p = float(np.sqrt(np.mean(np.square(zp))))
    if rms_m == 0 or rms_p == 0:
        raise NumericError("degenerate increments: zero rms")
    raw = float(np.mean(zm * zp))
    return AutocorrReport(
        raw=raw,
        normalized=raw / (rms_m * rms_p),
        sample_count=n,
        three_sigma_band=3.0 / math.sqrt(n),
        pooled=pooled,
    )


def _profile_from_matrix(offsets: np.ndarray, z_matrix: np.ndarray, lag: float) -> MsfProfile:
    """Build an MSF profile from per-slot increment samples (rows = realizations)."""
    with np.errstate(invalid="ignore"):
        sq = np.square(z_matrix)
        counts = np.sum(~np.isnan(sq), axis=0)
        msf = np.nanmean(sq, axis=0)
        se = np.nanstd(sq, axis=0, ddof=1) / np.sqrt(np.maximum(counts, 1))
    good = counts >= 2
    if not np.any(good):
        raise ArgumentError("no slot has enough increment samples")
    return MsfProfile(
        t_grid=offsets[good],
        msf=msf[good],
        lag=float(lag),
        standard_errors=se[good],
        slot_counts=counts[good],
        low_count_flag=bool(np.any(counts[good] < 30)),
    )


def msf_profile(source, lag: float, day_length: Optional[float] = None) -> MsfProfile:
    """Mean square fluctuation versus start time (or time of day).

    Sources: a PathEnsemble (average across paths at each start time); a
    uniformly sampled TimeSeries with ``day_length`` set, folded so that
    repeated days act as the ensemble; or a day-aligned matrix from the
    ingestion pipeline (anything exposing ``slot_seconds`` and ``returns``).
    """
    if isinstance(source, PathEnsemble):
        times = source.sample_times
        starts, cols = [], []
        for i, t in enumerate(times):
            j = np.argmin(np.abs(times - (t + lag)))
            if abs(times[j] - (t + lag)) <= 1e-9 * max(1.0, t + lag):
                starts.append(i)
                cols.append(int(j))
        if not starts:
            raise ArgumentError("no (t, t+lag) pair lies on the ensemble time grid")
        z = source.values[:, cols] - source.values[:, starts]
        return _profile_from_matrix(times[starts], z, lag)

    if hasattr(source, "slot_seconds") and hasattr(source, "returns"):
        slots = np.asarray(source.slot_seconds, dtype=float)
        step = slots[1] - slots[0]
        k = int(round(lag / step))
        if k < 1 or abs(k * step - lag) > 1e-6 * max(1.0, lag):
            raise ArgumentError("lag must be a positive multiple of the slot interval")
        x = np.asarray(source.returns, dtype=float)
        if x.shape[1] <= k:
            raise ArgumentError("day grid shorter than the requested lag")
        z = x[:, k:] - x[:, :-k]
        return _profile_from_matrix(slots[:-k], z, lag)

    if isinstance(source, TimeSeries):
        if day_length is None:
            raise ArgumentError("a plain series needs day_length to fold into a day ensemble")
        interval = source.sample_interval
        per_day = int(round(day_length / interval))
        if per_day < 2 or abs(per_day * interval - day_length) > 1e-9 * day_length:
            raise ArgumentError("day_length must be a multiple of the sampling interval")
        k = _lag_steps(source, lag)
        if k >= per_day:
            raise ArgumentError("lag must be shorter than the folded day")
        n_days = source.values.size // per_day
        if n_days < 2:
            raise ArgumentError("series too short to fold into at least 2 days")
        x = source.values[: n_days * per_day].reshape(n_days, per_day)
        z = x[:, k:] - x[:, :-k]
        offsets = (np.arange(per_day - k) + 1) * interval
        return _profile_from_matrix(offsets, z, lag)

    raise ArgumentError(f"unsupported source type {type(source).__name__}")


def stationarity_verdict(profile: MsfProfile) -> StationarityVerdict:
    """Chi-square test of the MSF profile against its weighted mean.

    A flat profile (within its standard errors) means the increment
    distribution's second moment does not depend on the start time; the
    verdict is nonstationary when flatness is rejected at p < 0.01.
    """
    if profile.t_grid.size < 10:
        raise ArgumentError("need at least 10 profile slots for a verdict")
    se = profile.standard_errors
    if np.any(se <= 0):
        raise NumericError("profile has zero standard errors")
    w = 1.0 / se**2
    mean = float(np.sum(w * profile.msf) / np.sum(w))
    chi2 = float(np.sum(((profile.msf - mean) / se) ** 2))
    dof = profile.t_grid.size - 1
    p = float(stats.chi2.sf(chi2, dof))
    verdict = "nonstationary-increments" if p < 0.01 else "stationary-increments"
    return StationarityVerdict(verdict=verdict, p_value=p, chi_square=chi2, dof=dof)


def conditional_mean_test(ensemble: PathEnsemble, t_index: int, lag_index: int,
                          bins=25, min_count: int = POPULATED_BIN_COUNT) -> ConditionalMeanReport:
    """Bin paths by x(t) and compare E[x(t+T) | bin] with the bin mean of x(t).

    For a martingale the two agree within sampling error in every
    populated bin.  Persistent processes (positively correlated
    increments) show a systematic outward deviation instead.
    """
    if lag_index <= t_index:
        raise ArgumentError("lag_index must be a later time index than t_index")
    x_t = ensemble.values[:, t_index]
    x_T = ensemble.values[:, lag_index]
    edges = _resolve_bins(x_t, bins)
    which = np.digitize(x_t, edges) - 1
    inside = (which >= 0) & (which < edges.size - 1)

    centers, means, counts, ses = [], [], [], []
    for b in range(edges.size - 1):
        sel = inside & (which == b)
        n = int(np.sum(sel))
        if n < min_count:
            continue
        inc = x_T[sel] - x_t[sel]
        centers.append(float(np.mean(x_t[sel])))
        means.append(float(np.mean(x_T[sel])))
        counts.append(n)
        ses.append(float(np.std(inc, ddof=1)) / math.sqrt(n))
    if len(centers) <= 1:
        raise ArgumentError("degenerate binning: all conditional mass in at most one bin")

    dev = np.abs(np.array(means) - np.array(centers))
    sig = dev / np.array(ses)
    return ConditionalMeanReport(
        bin_centers=np.array(centers),
        conditional_means=np.array(means),
        counts=np.array(counts),
        standard_errors=np.array(ses),
        max_abs_deviation=float(dev.max()),
        max_sigma=float(sig.max()),
    )


def tail_diagnostics(density: DensityEstimate, tail_region: tuple) -> TailReport:
    """Quantify tail weight of a density estimate.

    Excess kurtosis comes from the raw samples when the estimate retains
    them, otherwise from the binned density.  The tail fits regress log
    density against |u| (semilog) and against log |u| (loglog) over bins
    whose centers fall in the tail region on either side.
    """
    u_lo, u_hi = map(float, tail_region)
    if not (0 < u_lo < u_hi):
        raise ArgumentError("tail_region must satisfy 0 < u_lo < u_hi")
    centers = density.bin_centers
    dens = density.probability_density
    sel = (np.abs(centers) >= u_lo) & (np.abs(centers) <= u_hi) & (dens > 0)
    if np.sum(sel & (centers > 0)) < 10 or np.sum(sel & (centers < 0)) < 10:
        raise ArgumentError("tail region must contain >= 10 populated bins on each side")

    if density.samples is not None:
        s = density.samples
        m = float(np.mean(s))
        m2 = float(np.mean((s - m) ** 2))
        m4 = float(np.mean((s - m) ** 4))
    else:
        w = dens * np.diff(density.bin_edges)
        m = float(np.sum(w * centers))
        m2 = float(np.sum(w * (centers - m) ** 2))
        m4 = float(np.sum(w * (centers - m) ** 4))
    excess = m4 / m2**2 - 3.0

    au = np.abs(centers[sel])
    ld = np.log(dens[sel])
    semilog_r2 = _fit_r2(au, ld)
    loglog_r2 = _fit_r2(np.log(au), ld)
    return TailReport(
        excess_kurtosis=excess,
        semilog_r2=semilog_r2,
        loglog_r2=loglog_r2,
        tail_region=(u_lo, u_hi),
    )


def _fit_r2(x: np.ndarray, y: np.ndarray) -> float:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
