"""Spot price traces: CSV ingestion, validation, synthesis, hourly resampling."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

HOUR_S = 3600

TRACE_HEADER = "timestamp,price"

# Format is deliberately narrow: integer epoch seconds, plain decimal price
# with at most six fractional digits. No scientific notation.
_TIMESTAMP_RE = re.compile(r"^-?\d+$")
_PRICE_RE = re.compile(r"^\d+(\.\d{1,6})?$")


@dataclass(frozen=True)
class PricePoint:
    """One observed spot price at an epoch timestamp (seconds)."""

    timestamp: int
    price: float

    def __post_init__(self):
        if self.price < 0:
            raise ValidationError(f"price must be >= 0, got {self.price}")


@dataclass(frozen=True)
class PriceTrace:
    """A validated price series for one market over a fixed observation window."""

    market_id: str
    points: tuple[PricePoint, ...]
    window_start: int
    window_end: int

    def __post_init__(self):
        if not self.points:
            raise ValidationError(f"{self.market_id}: trace has no points")
        if self.window_end < self.window_start:
            raise ValidationError(f"{self.market_id}: window ends before it starts")
        prev = None
        for pt in self.points:
            if prev is not None and pt.timestamp <= prev:
                raise ValidationError(
                    f"{self.market_id}: non-monotone timestamps ({prev} then {pt.timestamp})"
                )
            if not (self.window_start <= pt.timestamp <= self.window_end):
                raise ValidationError(
                    f"{self.market_id}: timestamp {pt.timestamp} outside window"
                )
            prev = pt.timestamp

    @property
    def window_hours(self) -> float:
        return (self.window_end - self.window_start) / HOUR_S


@dataclass(frozen=True)
class SyntheticTraceSpec:
    """Recipe for a synthetic trace: a flat base price plus revocation-inducing spikes.

    Spike start times follow a Poisson process with ``spike_rate`` events per
    hour; each spike lifts the price to a value drawn uniformly from
    (on_demand_price, 2 * on_demand_price] for ``spike_duration_hours``.
    """

    base_price: float
    on_demand_price: float
    spike_rate: float
    spike_duration_hours: float = 1.0
    sample_interval_seconds: int = 3600
    window_hours: float = 2160.0
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.base_price < self.on_demand_price):
            raise ValidationError(
                f"need 0 < base_price < on_demand_price, got {self.base_price} / {self.on_demand_price}"
            )
        if self.spike_rate < 0:
            raise ValidationError("spike_rate must be >= 0")
        if self.spike_duration_hours <= 0:
            raise ValidationError("spike_duration_hours must be > 0")
        if self.sample_interval_seconds <= 0:
            raise ValidationError("sample_interval_seconds must be > 0")
        if self.window_hours <= 0:
            raise ValidationError("window_hours must be > 0")


def load_trace(path, market_id: str) -> PriceTrace:
    """Read a ``timestamp,price`` CSV into a validated PriceTrace.

    The window is the span from the first to the last timestamp. Rows must be
    strictly increasing in time; duplicates and reversals are rejected.
    """
    path = Path(path)
    with open(path, encoding="utf-8-sig", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or all(not ln.strip() for ln in lines):
        raise ValidationError(f"{path}: empty trace file")
    if lines[0].strip() != TRACE_HEADER:
        raise ParseError(f"expected header {TRACE_HEADER!r}", path=path, line=1)

    points: list[PricePoint] = []
    prev_ts: int | None = None
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != 2:
            raise ParseError(f"expected 2 columns, got {len(cells)}", path=path, line=lineno)
        ts_s, price_s = cells[0].strip(), cells[1].strip()
        if not _TIMESTAMP_RE.match(ts_s):
            raise ParseError(f"bad timestamp {ts_s!r}", path=path, line=lineno)
        if not _PRICE_RE.match(price_s):
            raise ParseError(f"bad price {price_s!r}", path=path, line=lineno)
        ts = int(ts_s)
        if prev_ts is not None and ts == prev_ts:
            raise ValidationError(f"{path}: line {lineno}: duplicate timestamp {ts}")
        if prev_ts is not None and ts < prev_ts:
            raise ValidationError(f"{path}: line {lineno}: non-monotone timestamp {ts}")
        points.append(PricePoint(ts, float(price_s)))
        prev_ts = ts
    if not points:
        raise ValidationError(f"{path}: empty trace file")
    return PriceTrace(market_id, tuple(points), points[0].timestamp, points[-1].timestamp)


def write_trace_csv(trace: PriceTrace, path) -> None:
    """Write a trace back out in the canonical CSV format (6 fractional digits)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        for pt in trace.points:
            fh.write(f"{pt.timestamp},{pt.price:.6f}\n")


def generate_synthetic(spec: SyntheticTraceSpec, market_id: str = "synthetic") -> PriceTrace:
    """Generate a deterministic synthetic trace from a spike-process spec.

    Spikes that start and end strictly between two sample instants leave no
    mark on the trace; at the default hourly sampling a spike lasting a full
    hour always covers at least one sample.
    """
    rng = np.random.default_rng(spec.seed)
    window_s = round(spec.window_hours * HOUR_S)
    interval = spec.sample_interval_seconds
    n_samples = max(1, math.ceil(window_s / interval))
    prices = np.full(n_samples, spec.base_price, dtype=float)

    n_spikes = int(rng.poisson(spec.spike_rate * spec.window_hours))
    starts = np.sort(rng.uniform(0.0, window_s, size=n_spikes))
    # 2 - u with u in [0, 1) lands in (1, 2], keeping spikes strictly above on-demand.
    spike_prices = spec.on_demand_price * (2.0 - rng.random(n_spikes))
    dur_s = spec.spike_duration_hours * HOUR_S
    for st, price in zip(starts, spike_prices):
        lo = math.ceil(st / interval)
        hi = math.ceil((st + dur_s) / interval)
        if lo >= n_samples or hi <= lo:
            continue
        prices[lo : min(hi, n_samples)] = price

    points = tuple(PricePoint(i * interval, float(p)) for i, p in enumerate(prices))
    return PriceTrace(market_id, points, 0, window_s)


def resample_hourly(trace: PriceTrace) -> list[tuple[int, float]]:
    """Step-interpolate the trace onto whole hours of its window.

    The value for hour h is the price in effect at the end of that hour: the
    last observation before the next hour boundary. Hours that end before the
    first observation carry the first observed price. Output length is
    ceil(window_hours), so a partial trailing hour still gets a value.
    """
    n_hours = math.ceil(trace.window_hours)
    pts = trace.points
    out: list[tuple[int, float]] = []
    idx = -1
    for h in range(n_hours):
        boundary = trace.window_start + (h + 1) * HOUR_S
        while idx + 1 < len(pts) and pts[idx + 1].timestamp < boundary:
            idx += 1
        out.append((h, pts[max(idx, 0)].price))
    return out


def hourly_prices(trace: PriceTrace) -> list[float]:
    """Just the price column of resample_hourly."""
    return [price for _, price in resample_hourly(trace)]
