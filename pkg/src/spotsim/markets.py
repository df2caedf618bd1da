"""Market catalog and the per-market features that drive provisioning decisions.

Three features are derived from each market's price trace, all at hourly
granularity: the mean time to revocation, the set of revocation hours, and
the pairwise revocation correlation between markets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .trace import PriceTrace, hourly_prices, load_trace
from .workload import Job


@dataclass(frozen=True)
class Market:
    """One spot market: an instance type in one availability zone and region."""

    market_id: str
    on_demand_price: float
    memory_gb: float
    vcpus: int
    trace: PriceTrace | None = None
    instance_type: str = ""
    az: str = ""
    region: str = ""

    def __post_init__(self):
        if self.on_demand_price <= 0:
            raise ValidationError(f"{self.market_id}: on_demand_price must be > 0")
        if self.memory_gb <= 0:
            raise ValidationError(f"{self.market_id}: memory_gb must be > 0")
        if self.vcpus <= 0:
            raise ValidationError(f"{self.market_id}: vcpus must be > 0")

    def current_spot_price(self) -> float:
        if self.trace is None:
            raise ConfigError(f"{self.market_id}: market has no trace")
        return self.trace.points[-1].price


@dataclass(frozen=True)
class RevocationHourSet:
    market_id: str
    hours: frozenset[int]


@dataclass(frozen=True)
class LifetimeEstimate:
    """Mean time to revocation in hours; censored when the window saw no revocation."""

    market_id: str
    mttr_hours: float
    censored: bool

    def __post_init__(self):
        if self.mttr_hours <= 0:
            raise ValidationError(f"{self.market_id}: mttr_hours must be > 0")


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric matrix of pairwise revocation correlations, indexed by market id."""

    market_ids: tuple[str, ...]
    values: np.ndarray

    def get(self, a: str, b: str) -> float:
        ids = self.market_ids
        try:
            return float(self.values[ids.index(a), ids.index(b)])
        except ValueError:
            raise ConfigError(f"market not in correlation matrix: {a!r} or {b!r}") from None


def revocation_hours(trace: PriceTrace, on_demand_price: float) -> RevocationHourSet:
    """Hours where the hourly price crosses up to or above the on-demand price.

    Hour 0 counts as a crossing when the trace opens at or above on-demand.
    Hours that merely stay above after a crossing are not counted again.
    """
    hours: set[int] = set()
    prev_below = True
    for h, price in enumerate(hourly_prices(trace)):
        above = price >= on_demand_price
        if above and prev_below:
            hours.add(h)
        prev_below = not above
    return RevocationHourSet(trace.market_id, frozenset(hours))


def compute_mttr(trace: PriceTrace, on_demand_price: float) -> LifetimeEstimate:
    """Mean length of the maximal availability intervals in the hourly series.

    An availability interval is a run of consecutive hours priced below
    on-demand. The final interval, truncated by the window end, is included.
    A window with no revocation at all reports the window length and is
    flagged censored. A window with no available hour at all has no interval
    to average; it reports the one-hour floor (capped by the window length),
    the smallest lifetime the hourly series can resolve.
    """
    prices = hourly_prices(trace)
    if not prices:
        raise ValidationError(f"{trace.market_id}: window shorter than one hour")
    intervals: list[int] = []
    run = 0
    revoked = False
    for price in prices:
        if price < on_demand_price:
            run += 1
        else:
            revoked = True
            if run:
                intervals.append(run)
            run = 0
    if not revoked:
        return LifetimeEstimate(trace.market_id, trace.window_hours, True)
    if run:
        intervals.append(run)
    if not intervals:
        return LifetimeEstimate(trace.market_id, min(1.0, trace.window_hours), False)
    return LifetimeEstimate(trace.market_id, sum(intervals) / len(intervals), False)


def compute_correlation(a: RevocationHourSet, b: RevocationHourSet) -> float:
    """Jaccard coefficient of two revocation-hour sets; 0.0 when both are empty."""
    union = a.hours | b.hours
    if not union:
        return 0.0
    return len(a.hours & b.hours) / len(union)


def _require_traces(catalog: list[Market]) -> None:
    for market in catalog:
        if market.trace is None:
            raise ConfigError(f"{market.market_id}: market has no trace")


def _require_shared_window(catalog: list[Market]) -> None:
    windows = {(m.trace.window_start, m.trace.window_end) for m in catalog}
    if len(windows) > 1:
        raise ConfigError(f"traces do not share one observation window: {sorted(windows)}")


def build_lifetime_table(catalog: list[Market]) -> dict[str, LifetimeEstimate]:
    _require_traces(catalog)
    return {m.market_id: compute_mttr(m.trace, m.on_demand_price) for m in catalog}


def build_revocation_sets(catalog: list[Market]) -> dict[str, RevocationHourSet]:
    _require_traces(catalog)
    return {m.market_id: revocation_hours(m.trace, m.on_demand_price) for m in catalog}


def build_correlation_matrix(catalog: list[Market]) -> CorrelationMatrix:
    """Pairwise revocation correlation over a catalog sharing one window."""
    _require_traces(catalog)
    if catalog:
        _require_shared_window(catalog)
    sets = build_revocation_sets(catalog)
    ids = tuple(m.market_id for m in catalog)
    n = len(ids)
    values = np.zeros((n, n), dtype=float)
    for i in range(n):
        for j in range(i, n):
            corr = compute_correlation(sets[ids[i]], sets[ids[j]])
            values[i, j] = corr
            values[j, i] = corr
    return CorrelationMatrix(ids, values)


def revocation_probability(job_length_hours: float, lifetime: LifetimeEstimate) -> float:
    """Chance of losing the instance before the job finishes: length over MTTR, capped at 1."""
    if job_length_hours <= 0:
        raise ValidationError("job_length_hours must be > 0")
    return min(job_length_hours / lifetime.mttr_hours, 1.0)


def find_suitable(catalog: list[Market], job: Job) -> list[Market]:
    """Markets whose instances have enough memory for the job. May be empty."""
    return [m for m in catalog if m.memory_gb >= job.memory_footprint_gb]


def candidates_by_lifetime(
    job: Job,
    suitable: list[Market],
    lifetimes: dict[str, LifetimeEstimate],
    lifetime_factor_k: float,
) -> list[Market]:
    """Suitable markets expected to outlive the job by factor k, best lifetime first.

    Ties break toward the cheaper current spot price, then the market id.
    """
    if lifetime_factor_k < 1:
        raise ValidationError("lifetime_factor_k must be >= 1")
    eligible = [
        m
        for m in suitable
        if lifetimes[m.market_id].mttr_hours >= lifetime_factor_k * job.execution_length_hours
    ]
    return sorted(
        eligible,
        key=lambda m: (-lifetimes[m.market_id].mttr_hours, m.current_spot_price(), m.market_id),
    )


def find_low_correlation(
    matrix: CorrelationMatrix, revoked_id: str, threshold: float
) -> set[str]:
    """Markets whose revocations overlap little with the revoked market's."""
    if revoked_id not in matrix.market_ids:
        raise ConfigError(f"market not in correlation matrix: {revoked_id!r}")
    return {
        other
        for other in matrix.market_ids
        if other != revoked_id and matrix.get(other, revoked_id) < threshold
    }


@dataclass(eq=False)
class MarketAnalytics:
    """Per-catalog derived data, built once and shared by every simulation."""

    markets: tuple[Market, ...]
    lifetimes: dict[str, LifetimeEstimate]
    revocation_sets: dict[str, RevocationHourSet]
    correlation: CorrelationMatrix
    hourly: dict[str, list[float]] = field(default_factory=dict)
    mean_prices: dict[str, float] = field(default_factory=dict)
    crossing_hours: dict[str, list[int]] = field(default_factory=dict)

    @classmethod
    def build(cls, catalog: list[Market]) -> "MarketAnalytics":
        _require_traces(catalog)
        if catalog:
            _require_shared_window(catalog)
        lifetimes = build_lifetime_table(catalog)
        sets = build_revocation_sets(catalog)
        matrix = build_correlation_matrix(catalog)
        hourly = {m.market_id: hourly_prices(m.trace) for m in catalog}
        mean_prices = {mid: sum(prices) / len(prices) for mid, prices in hourly.items()}
        crossings = {mid: sorted(sets[mid].hours) for mid in sets}
        return cls(tuple(catalog), lifetimes, sets, matrix, hourly, mean_prices, crossings)

    def market(self, market_id: str) -> Market:
        for m in self.markets:
            if m.market_id == market_id:
                return m
        raise ConfigError(f"unknown market {market_id!r}")


_CATALOG_KEYS = {
    "market_id": str,
    "instance_type": str,
    "az": str,
    "region": str,
    "on_demand_price": (int, float),
    "memory_gb": (int, float),
    "vcpus": int,
    "trace_file": str,
}


def load_catalog(path) -> list[Market]:
    """Load a JSON market catalog, resolving trace files relative to it."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read catalog: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: catalog must be a JSON array of markets")

    markets: list[Market] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: market #{i} is not an object")
        for key, types in _CATALOG_KEYS.items():
            if key not in entry:
                raise ConfigError(f"{path}: market #{i} missing key {key!r}")
            if not isinstance(entry[key], types) or isinstance(entry[key], bool):
                raise ConfigError(f"{path}: market #{i}: bad type for {key!r}")
        market_id = entry["market_id"]
        if market_id in seen:
            raise ConfigError(f"{path}: duplicate market_id {market_id!r}")
        seen.add(market_id)
        trace = load_trace(path.parent / entry["trace_file"], market_id)
        markets.append(
            Market(
                market_id=market_id,
                on_demand_price=float(entry["on_demand_price"]),
                memory_gb=float(entry["memory_gb"]),
                vcpus=int(entry["vcpus"]),
                trace=trace,
                instance_type=entry["instance_type"],
                az=entry["az"],
                region=entry["region"],
            )
        )
    return markets
