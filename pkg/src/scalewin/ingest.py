"""Market-data ingestion: CSV ticks -> log returns -> day-aligned matrix.

Returns are referenced to each day's opening price.  The reference price
is unobservable in principle, but every diagnostic downstream (increment
autocorrelation, MSF profiles, sliding densities) consumes increments
x(t+T) - x(t) = ln(p(t+T)/p(t)) only, which are independent of the
reference, so the day-open choice is a pure bookkeeping convention.

Missing slots are never interpolated or carried backward: interpolation
would manufacture spurious increment correlations.  Slots without a
preceding tick are flagged missing and excluded pairwise downstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .errors import ArgumentError, CoverageError, DataError, FormatError
from .simulate import TimeSeries

__all__ = [
    "TickRecord",
    "IngestConfig",
    "ParseResult",
    "DailyAlignedSeries",
    "parse_csv",
    "log_returns",
    "day_align",
    "detrend",
]

SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class TickRecord:
    """One price observation at an integer epoch-second timestamp."""

    timestamp: int
    price: float

    def __post_init__(self):
        if not (self.price > 0):
            raise DataError(f"nonpositive price {self.price!r}")


@dataclass(frozen=True)
class IngestConfig:
    """Column mapping and day-grid layout for tick ingestion."""

    timestamp_column: str | int = "timestamp"
    price_column: str | int = "price"
    timestamp_format: str = "epoch_seconds"  # or "iso8601"
    day_start_seconds: int = 0
    grid_interval: int = 600

    def __post_init__(self):
        if self.timestamp_format not in ("epoch_seconds", "iso8601"):
            raise ArgumentError(f"unknown timestamp format {self.timestamp_format!r}")
        if not (0 <= self.day_start_seconds < SECONDS_PER_DAY):
            raise ArgumentError("day_start_seconds must lie in [0, 86400)")
        if self.grid_interval <= 0 or SECONDS_PER_DAY % self.grid_interval != 0:
            raise ArgumentError("grid_interval must be a positive divisor of 86400")


@dataclass(frozen=True)
class ParseResult:
    """Sorted, deduplicated ticks plus per-file parse statistics."""

    records: tuple
    skipped_lines: int
    duplicates: int

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _parse_timestamp(raw: str, fmt: str) -> int:
    if fmt == "epoch_seconds":
        return int(float(raw))
    dt = datetime.fromisoformat(raw.strip())
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_csv(source, config: IngestConfig = IngestConfig()) -> ParseResult:
    """Read tick records from CSV with a header row.

    Unparseable lines are skipped and counted; a parseable row with a
    nonpositive price raises :class:`DataError` naming the line.  When
    several rows share a timestamp, the last one wins.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        try:
            fh = open(source, "r", newline="")
        except OSError as exc:
            raise DataError(f"cannot open {source}: {exc}") from exc
        with fh:
            return parse_csv(fh, config)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty input: no header row")

    def column_index(spec, what):
        if isinstance(spec, int):
            if not (0 <= spec < len(header)):
                raise FormatError(f"{what} column index {spec} out of range")
            return spec
        try:
            return header.index(spec)
        except ValueError:
            raise FormatError(f"{what} column {spec!r} not found in header {header}")

    i_ts = column_index(config.timestamp_column, "timestamp")
    i_p = column_index(config.price_column, "price")

    by_timestamp = {}
    skipped = 0
    duplicates = 0
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            ts = _parse_timestamp(row[i_ts], config.timestamp_format)
            price = float(row[i_p])
        except (ValueError, IndexError):
            skipped += 1
            continue
        if not (price > 0) or not math.isfinite(price):
            raise DataError(f"nonpositive or non-finite price {row[i_p]!r}", line=lineno)
        if ts in by_timestamp:
            duplicates += 1
        by_timestamp[ts] = price

    if not by_timestamp:
        raise FormatError("no parseable data rows")
    records = tuple(TickRecord(ts, by_timestamp[ts]) for ts in sorted(by_timestamp))
    return ParseResult(records=records, skipped_lines=skipped, duplicates=duplicates)


def log_returns(ticks, reference: str = "day-open", day_start_seconds: int = 0) -> TimeSeries:
    """Log returns x(t) = ln(p(t) / p_open) referenced to each day's open.

    Increments of x are reference-free, so any downstream quantity built
    from increments is unaffected by this choice.
    """
    if reference != "day-open":
        raise ArgumentError(f"unsupported reference {reference!r}; only 'day-open' is defined")
    records = list(ticks)
    if not records:
        raise ArgumentError("tick list is empty")
    timestamps = np.array([r.timestamp for r in records], dtype=float)
    prices = np.array([r.price for r in records], dtype=float)
    day = np.floor_divide(timestamps - day_start_seconds, SECONDS_PER_DAY).astype(int)
    x = np.empty_like(prices)
    for d in np.unique(day):
        sel = day == d
        x[sel] = np.log(prices[sel] / prices[sel][0])  # records sorted: [0] is the day's first tick
    return TimeSeries(timestamps=timestamps, values=x, origin_tag="ingested")


@dataclass(frozen=True)
class DailyAlignedSeries:
    """Day x time-of-day matrix of log returns; NaN marks missing slots."""

    slot_seconds: np.ndarray
    returns: np.ndarray  # (n_days, n_slots), NaN where missing
    day_ids: np.ndarray
    dropped_days: int = 0

    def __post_init__(self):
        slots = np.ascontiguousarray(self.slot_seconds, dtype=float)
        rets = np.ascontiguousarray(self.returns, dtype=float)
        ids = np.ascontiguousarray(self.day_ids, dtype=int)
        if rets.ndim != 2 or rets.shape != (ids.size, slots.size):
            raise ArgumentError("returns must be (n_days, n_slots)")
        for a in (slots, rets, ids):
            a.flags.writeable = False
        object.__setattr__(self, "slot_seconds", slots)
        object.__setattr__(self, "returns", rets)
        object.__setattr__(self, "day_ids", ids)

    @property
    def missing(self):
        return np.isnan(self.returns)

    def to_csv(self, target):
        """Columns: day_id, slot_seconds, log_return, missing_flag."""
        if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
            with open(target, "w", newline="") as fh:
                self.to_csv(fh)
                return
        target.write("day_id,slot_seconds,log_return,missing_flag\n")
        for d, day_id in enumerate(self.day_ids):
            for j, slot in enumerate(self.slot_seconds):
                v = self.returns[d, j]
                if np.isnan(v):
                    target.write(f"{day_id},{slot:.17g},,1\n")
                else:
                    target.write(f"{day_id},{slot:.17g},{v:.17g},0\n")

    @classmethod
    def from_csv(cls, source):
        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            with open(source, "r", newline="") as fh:
                return cls.from_csv(fh)
        reader = csv.reader(source)
        header = next(reader, None)
        if header != ["day_id", "slot_seconds", "log_return", "missing_flag"]:
            raise FormatError("not a day-aligned CSV (unexpected header)")
        data = {}
        slots = {}
        for row in reader:
            if not row:
                continue
            day_id = int(row[0])
            slot = float(row[1])
            value = math.nan if row[3] == "1" else float(row[2])
            data.setdefault(day_id, {})[slot] = value
            slots[slot] = None
        if not data:
            raise FormatError("day-aligned CSV has no data rows")
        slot_arr = np.array(sorted(slots))
        day_ids = np.array(sorted(data))
        returns = np.full((day_ids.size, slot_arr.size), math.nan)
        for d, day_id in enumerate(day_ids):
            for j, slot in enumerate(slot_arr):
                returns[d, j] = data[day_id].get(slot, math.nan)
        return cls(slot_seconds=slot_arr, returns=returns, day_ids=day_ids)


def day_align(series: TimeSeries, config: IngestConfig = IngestConfig(),
              fill_threshold: float = 0.5) -> DailyAlignedSeries:
    """Snap a tick-level return series onto the time-of-day grid.

    Each slot takes the last observation at or before its time within the
    same day (never from a previous day).  Days filling fewer than
    ``fill_threshold`` of their slots are dropped and counted.  Retained
    days are re-referenced to their first available grid slot.
    """
    ts = series.timestamps
    vals = series.values
    day = np.floor_divide(ts - config.day_start_seconds, SECONDS_PER_DAY).astype(int)
    offset = ts - config.day_start_seconds - day * SECONDS_PER_DAY
    n_slots = SECONDS_PER_DAY // config.grid_interval
    slot_seconds = np.arange(n_slots) * float(config.grid_interval)

    kept_rows, kept_ids, dropped = [], [], 0
    for d in np.unique(day):
        sel = day == d
        off = offset[sel]
        v = vals[sel]
        order = np.argsort(off, kind="stable")
        off, v = off[order], v[order]
        idx = np.searchsorted(off, slot_seconds, side="right") - 1
        row = np.where(idx >= 0, v[np.clip(idx, 0, None)], math.nan)
        filled = np.sum(idx >= 0)
        if filled < fill_threshold * n_slots:
            dropped += 1
            continue
        first = int(np.argmax(~np.isnan(row)))
        row = row - row[first]
        kept_rows.append(row)
        kept_ids.append(int(d))
    if not kept_rows:
        raise CoverageError(f"no day passed the {fill_threshold:.0%} fill threshold")
    return DailyAlignedSeries(
        slot_seconds=slot_seconds,
        returns=np.array(kept_rows),
        day_ids=np.array(kept_ids),
        dropped_days=dropped,
    )


def detrend(series: TimeSeries, drift_rate) -> TimeSeries:
    """Subtract the cumulative integral of a time-only drift rate.

    ``drift_rate`` may be a constant or a callable of time; the integral
    is taken by the trapezoid rule on the series grid and vanishes at the
    first timestamp.
    """
    ts = series.timestamps
    if callable(drift_rate):
        r = np.array([float(drift_rate(t)) for t in ts])
    else:
        r = np.full(ts.size, float(drift_rate))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(ts))])
    return TimeSeries(timestamps=ts, values=series.values - cum, origin_tag=series.origin_tag)
