"""Job-level simulation: provisioning attempts, revocation injection, billing.

Every simulated job produces a sequence of billed segments (one per
provisioned instance) and two decompositions of the run: wall-clock time and
deployment cost, each split into useful work, startup, checkpointing,
recovery, and re-execution, with cost carrying an extra buffer category for
the charged-but-unused tail of each billing cycle.

Revocation instants sampled by the random injector modes are measured in
hours of work performed, so a sampled instant is the job progress at which
the instance disappears. Trace replay instead cuts the attempt at a
wall-clock offset, because price crossings live on the wall clock.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import math
import random
from dataclasses import dataclass, replace

from .errors import ConfigError, SimulationError, ValidationError
from .markets import (
    LifetimeEstimate,
    Market,
    MarketAnalytics,
    find_suitable,
    revocation_hours,
    revocation_probability,
)
from .policies import (
    CheckpointConfig,
    DecisionKind,
    MigrationConfig,
    OnDemandConfig,
    PolicyConfig,
    PSiwoftConfig,
    ReplicationConfig,
    checkpoint_cost_time,
    checkpoint_schedule,
    migration_feasible,
    psiwoft_on_revocation,
    psiwoft_select_initial,
    replication_outcome,
)
from .workload import Job

ON_DEMAND_MARKET_ID = "on-demand"


class InjectionMode(enum.Enum):
    TRACE_REPLAY = "trace_replay"
    PROBABILISTIC = "probabilistic"
    FIXED_RATE = "fixed_rate"


@dataclass(frozen=True)
class RevocationInjector:
    """How revocations are generated.

    probabilistic drives the lifetime-ranked policy from trace-derived MTTRs;
    under it the fault-tolerance baselines fall back to their own fixed
    per-day rate, which is the standard pairing for comparisons. An explicit
    fixed_rate or trace_replay mode applies to every policy uniformly.
    """

    mode: InjectionMode
    seed: int = 0
    revocations_per_day: float = 0.0
    exact_count: bool = False

    def __post_init__(self):
        if self.revocations_per_day < 0:
            raise ValidationError("revocations_per_day must be >= 0")


@dataclass(frozen=True)
class EngineSettings:
    startup_seconds: float = 120.0
    max_attempts: int = 1_000_000

    def __post_init__(self):
        if self.startup_seconds < 0:
            raise ValidationError("startup_seconds must be >= 0")
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be >= 1")

    @property
    def startup_hours(self) -> float:
        return self.startup_seconds / 3600.0


@dataclass(frozen=True)
class Segment:
    """One billed stretch on one instance. Durations partition the wall span."""

    market_id: str
    start_time: float
    end_time: float
    price_per_hour: float
    useful_hours: float = 0.0
    startup_hours: float = 0.0
    checkpoint_hours: float = 0.0
    recovery_hours: float = 0.0
    reexecution_hours: float = 0.0
    billed_cost: float = 0.0
    buffer_cost: float = 0.0

    @property
    def duration_hours(self) -> float:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class TimeDecomposition:
    useful: float = 0.0
    startup: float = 0.0
    checkpoint: float = 0.0
    recovery: float = 0.0
    reexecution: float = 0.0

    def total(self) -> float:
        return self.useful + self.startup + self.checkpoint + self.recovery + self.reexecution


@dataclass(frozen=True)
class CostDecomposition:
    useful: float = 0.0
    startup: float = 0.0
    checkpoint: float = 0.0
    recovery: float = 0.0
    reexecution: float = 0.0
    buffer: float = 0.0

    def total(self) -> float:
        return (
            self.useful
            + self.startup
            + self.checkpoint
            + self.recovery
            + self.reexecution
            + self.buffer
        )


@dataclass(frozen=True)
class JobOutcome:
    job_id: str
    segments: tuple[Segment, ...]
    time_decomposition: TimeDecomposition
    cost_decomposition: CostDecomposition
    completion_time_hours: float
    total_cost_usd: float
    num_revocations: int
    used_fallback: bool


@dataclass(frozen=True)
class SimulationResult:
    outcomes: tuple[JobOutcome, ...]
    aggregate_time_hours: float
    aggregate_cost_usd: float


def bill_segment(duration_hours: float, price_per_hour: float) -> tuple[float, float]:
    """Hourly-cycle billing: every started cycle is charged in full.

    Returns (billed, buffer); buffer is the charge for started but unused
    cycle time. A zero-duration segment bills nothing.
    """
    if duration_hours < 0 or price_per_hour < 0:
        raise ValidationError("duration and price must be >= 0")
    billed = math.ceil(duration_hours) * price_per_hour
    return billed, billed - duration_hours * price_per_hour


def _attempt_rng(injector_seed: int, run_seed: int, job_id: str, attempt_index: int) -> random.Random:
    key = f"{injector_seed}:{run_seed}:{job_id}:{attempt_index}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _poisson_chunk(rng: random.Random, lam: float) -> int:
    limit = math.exp(-lam)
    k = 0
    prod = rng.random()
    while prod > limit:
        k += 1
        prod *= rng.random()
    return k


def _poisson(rng: random.Random, lam: float) -> int:
    """Poisson sample by the multiplicative method, chunked to dodge exp underflow."""
    if lam <= 0:
        return 0
    count = 0
    while lam > 500.0:
        count += _poisson_chunk(rng, 500.0)
        lam -= 500.0
    return count + _poisson_chunk(rng, lam)


def sample_revocation(
    injector: RevocationInjector,
    job: Job,
    market: Market | None,
    lifetime: LifetimeEstimate | None,
    budget_hours: float,
    *,
    attempt_index: int = 1,
    run_seed: int = 0,
    wall_start_hours: float = 0.0,
    crossing_hours: list[int] | None = None,
) -> float | None:
    """Draw the next revocation instant for one provisioning attempt, or None.

    probabilistic: with probability budget/MTTR (capped at 1) the attempt is
    revoked at an instant uniform in (0, budget), measured in work-hours.

    fixed_rate: Poisson(rate * budget / 24) candidate instants, each uniform
    in (0, budget); the earliest wins. With exact_count the Poisson draw is
    replaced by round(rate * budget / 24). Also work-hours.

    trace_replay: the first upward price crossing strictly after the
    provisioning instant, as a wall-clock offset from it. No randomness.

    The random modes are pure functions of (injector seed, run seed, job id,
    attempt index).
    """
    if budget_hours <= 0:
        raise ValidationError("budget_hours must be > 0")
    if injector.mode is InjectionMode.TRACE_REPLAY:
        if crossing_hours is None:
            if market is None or market.trace is None:
                raise ConfigError("trace_replay needs a market with a trace")
            crossing_hours = sorted(
                revocation_hours(market.trace, market.on_demand_price).hours
            )
        i = bisect.bisect_right(crossing_hours, wall_start_hours)
        if i >= len(crossing_hours):
            return None
        return crossing_hours[i] - wall_start_hours
    rng = _attempt_rng(injector.seed, run_seed, job.job_id, attempt_index)
    if injector.mode is InjectionMode.PROBABILISTIC:
        if lifetime is None:
            raise ConfigError("probabilistic mode needs a lifetime estimate")
        v = revocation_probability(budget_hours, lifetime)
        if rng.random() < v:
            return rng.uniform(0.0, budget_hours)
        return None
    lam = injector.revocations_per_day * budget_hours / 24.0
    count = round(lam) if injector.exact_count else _poisson(rng, lam)
    if count <= 0:
        return None
    return min(rng.uniform(0.0, budget_hours) for _ in range(count))


@dataclass
class _Attempt:
    """Category durations of one provisioning attempt, plus where it left the job."""

    revoked: bool
    useful: float = 0.0
    startup: float = 0.0
    checkpoint: float = 0.0
    recovery: float = 0.0
    reexecution: float = 0.0
    durable: float = 0.0

    @property
    def span(self) -> float:
        return self.useful + self.startup + self.checkpoint + self.recovery + self.reexecution


def _completion_span(d0: float, length: float, marks, s_h: float, restore_h: float, c_h: float) -> float:
    pending = sum(1 for m in marks if m > d0)
    return s_h + restore_h + (length - d0) + pending * c_h


def _run_attempt(
    d0: float,
    length: float,
    marks,
    s_h: float,
    restore_h: float,
    c_h: float,
    cut: float | None,
    cut_is_wall: bool,
) -> _Attempt:
    """Walk one attempt's schedule (boot, restore, work, checkpoint pauses).

    ``cut`` interrupts the attempt: in work coordinates it is the progress
    made when the instance dies; in wall coordinates it is elapsed time, so
    it can also land inside the boot, the restore, or a checkpoint write. A
    write interrupted mid-flight is discarded; the last completed checkpoint
    governs how much work survives. Work that survives (newly durable) counts
    as useful; work past the last durable checkpoint is charged to
    re-execution here, in the attempt that lost it.
    """
    if cut is None:
        pending = sum(1 for m in marks if m > d0)
        return _Attempt(
            revoked=False,
            useful=length - d0,
            startup=s_h,
            checkpoint=pending * c_h,
            recovery=restore_h,
            durable=length,
        )

    if not cut_is_wall:
        p = d0 + cut
        passed = [m for m in marks if d0 < m < p]
        durable = passed[-1] if passed else d0
        return _Attempt(
            revoked=True,
            useful=durable - d0,
            startup=s_h,
            checkpoint=len(passed) * c_h,
            recovery=restore_h,
            reexecution=p - durable,
            durable=durable,
        )

    # Wall-clock cut: consume the schedule phase by phase.
    rem = cut
    startup = min(rem, s_h)
    rem -= startup
    recovery = min(rem, restore_h)
    rem -= recovery
    cur = d0
    durable = d0
    full_pauses = 0
    partial_pause = 0.0
    work_time = 0.0
    p = d0
    for m in (m for m in marks if m > d0):
        chunk = m - cur
        if rem < chunk:
            work_time += rem
            p = cur + rem
            rem = 0.0
            break
        work_time += chunk
        rem -= chunk
        cur = m
        p = m
        if rem < c_h:
            # revoked while writing the checkpoint at m: the write is lost
            partial_pause = rem
            rem = 0.0
            break
        rem -= c_h
        full_pauses += 1
        durable = m
    else:
        tail = length - cur
        if rem < tail:
            work_time += rem
            p = cur + rem
        else:
            # cut at or past the natural end; callers treat that as completion
            work_time += tail
            p = length
            durable = length
    useful = durable - d0
    return _Attempt(
        revoked=True,
        useful=useful,
        startup=startup,
        checkpoint=full_pauses * c_h + partial_pause,
        recovery=recovery,
        reexecution=work_time - useful,
        durable=durable,
    )


_CAT_NAMES = ("useful", "startup", "checkpoint", "recovery", "reexecution")


class _Recorder:
    """Accumulates segments, time categories, and costs for one job run."""

    def __init__(self):
        self.segments: list[Segment] = []
        self.time = dict.fromkeys(_CAT_NAMES, 0.0)
        self.cost = dict.fromkeys(_CAT_NAMES, 0.0)
        self.buffer_cost = 0.0
        self.total_billed = 0.0
        self.wall = 0.0
        self.revocations = 0
        self.used_fallback = False

    def add_time(self, att: _Attempt) -> None:
        self.time["useful"] += att.useful
        self.time["startup"] += att.startup
        self.time["checkpoint"] += att.checkpoint
        self.time["recovery"] += att.recovery
        self.time["reexecution"] += att.reexecution

    def advance(self, span: float) -> None:
        self.wall += span

    def add_segment(self, market_id: str, pricing, att: _Attempt, *, count_time: bool = True) -> None:
        cats = (att.useful, att.startup, att.checkpoint, att.recovery, att.reexecution)
        span = att.span
        billed, buffer, cat_costs, price = _bill(pricing, span, self.wall, cats)
        self.segments.append(
            Segment(
                market_id=market_id,
                start_time=self.wall,
                end_time=self.wall + span,
                price_per_hour=price,
                useful_hours=att.useful,
                startup_hours=att.startup,
                checkpoint_hours=att.checkpoint,
                recovery_hours=att.recovery,
                reexecution_hours=att.reexecution,
                billed_cost=billed,
                buffer_cost=buffer,
            )
        )
        for name, cost in zip(_CAT_NAMES, cat_costs):
            self.cost[name] += cost
        self.buffer_cost += buffer
        self.total_billed += billed
        if count_time:
            self.add_time(att)

    def outcome(self, job_id: str) -> JobOutcome:
        time = TimeDecomposition(**self.time)
        cost = CostDecomposition(buffer=self.buffer_cost, **self.cost)
        return JobOutcome(
            job_id=job_id,
            segments=tuple(self.segments),
            time_decomposition=time,
            cost_decomposition=cost,
            completion_time_hours=time.total(),
            total_cost_usd=self.total_billed,
            num_revocations=self.revocations,
            used_fallback=self.used_fallback,
        )


def _bill(pricing, span: float, wall_start: float, cats):
    """Bill one segment. Returns (billed, buffer, per-category costs, price).

    Constant pricing charges ceil(span) cycles at one rate. Trace pricing
    reprices each billing cycle at the trace's hourly price for the hour the
    cycle starts in, holding the last hour's price once the trace runs out;
    category costs then use the usage-weighted effective rate. The buffer is
    defined as billed minus the category costs, so the cost decomposition is
    conservative by construction.
    """
    kind, data = pricing
    if span <= 0:
        idle_price = data if kind == "const" else (data[0] if data else 0.0)
        return 0.0, 0.0, (0.0,) * len(cats), idle_price
    if kind == "const":
        price = data
        billed, _ = bill_segment(span, price)
    else:
        hourly = data
        base = int(math.floor(wall_start))
        last = len(hourly) - 1
        billed = 0.0
        usage = 0.0
        for i in range(math.ceil(span)):
            cycle_price = hourly[min(base + i, last)]
            billed += cycle_price
            usage += cycle_price * min(1.0, span - i)
        price = usage / span
    cat_costs = tuple(d * price for d in cats)
    buffer = billed - sum(cat_costs)
    return billed, buffer, cat_costs, price


def _cheapest_spot_market(analytics: MarketAnalytics, job: Job) -> Market:
    """Baseline policies rent the suitable market with the lowest mean price."""
    suitable = find_suitable(list(analytics.markets), job)
    if not suitable:
        raise SimulationError(
            f"{job.job_id}: no market offers {job.memory_footprint_gb} GB of memory"
        )
    return min(suitable, key=lambda m: (analytics.mean_prices[m.market_id], m.market_id))


def _cheapest_on_demand_price(analytics: MarketAnalytics, job: Job) -> float:
    suitable = find_suitable(list(analytics.markets), job)
    if not suitable:
        raise SimulationError(
            f"{job.job_id}: no on-demand instance offers {job.memory_footprint_gb} GB"
        )
    return min((m.on_demand_price, m.market_id) for m in suitable)[0]


def _policy_injector(cfg: PolicyConfig, injector: RevocationInjector) -> RevocationInjector:
    """Fault-tolerance baselines get their own fixed rate under the default pairing."""
    if isinstance(cfg, (CheckpointConfig, MigrationConfig, ReplicationConfig)):
        if injector.mode is InjectionMode.PROBABILISTIC:
            return replace(
                injector,
                mode=InjectionMode.FIXED_RATE,
                revocations_per_day=cfg.revocations_per_day,
            )
    return injector


def _spot_pricing(analytics: MarketAnalytics, market: Market, injector: RevocationInjector):
    if injector.mode is InjectionMode.TRACE_REPLAY:
        return ("trace", analytics.hourly[market.market_id])
    return ("const", analytics.mean_prices[market.market_id])


def _is_revoked(cut: float | None, wall_mode: bool, budget: float, completion_span: float) -> bool:
    if cut is None:
        return False
    if wall_mode:
        return cut < completion_span
    return cut < budget


def _simulate_on_demand(job: Job, analytics: MarketAnalytics, settings: EngineSettings) -> JobOutcome:
    rec = _Recorder()
    price = _cheapest_on_demand_price(analytics, job)
    att = _run_attempt(0.0, job.execution_length_hours, (), settings.startup_hours, 0.0, 0.0, None, False)
    rec.add_segment(ON_DEMAND_MARKET_ID, ("const", price), att)
    rec.advance(att.span)
    return rec.outcome(job.job_id)


def _simulate_psiwoft(
    job: Job,
    cfg: PSiwoftConfig,
    analytics: MarketAnalytics,
    injector: RevocationInjector,
    run_seed: int,
    settings: EngineSettings,
) -> JobOutcome:
    rec = _Recorder()
    s_h = settings.startup_hours
    length = job.execution_length_hours
    wall_mode = injector.mode is InjectionMode.TRACE_REPLAY
    decision, state = psiwoft_select_initial(job, analytics, cfg)
    while True:
        if state.attempt_index > settings.max_attempts:
            raise SimulationError(f"{job.job_id}: attempt limit exceeded")
        if decision.kind is DecisionKind.FAILURE:
            raise SimulationError(
                f"{job.job_id}: no qualifying spot market and on-demand fallback disabled"
            )
        if decision.kind is DecisionKind.ON_DEMAND:
            price = _cheapest_on_demand_price(analytics, job)
            att = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, None, False)
            rec.add_segment(ON_DEMAND_MARKET_ID, ("const", price), att)
            rec.advance(att.span)
            rec.used_fallback = True
            return rec.outcome(job.job_id)
        market = decision.market
        lifetime = analytics.lifetimes[market.market_id]
        cut = sample_revocation(
            injector,
            job,
            market,
            lifetime,
            length,
            attempt_index=state.attempt_index,
            run_seed=run_seed,
            wall_start_hours=rec.wall,
            crossing_hours=analytics.crossing_hours.get(market.market_id),
        )
        pricing = _spot_pricing(analytics, market, injector)
        if not _is_revoked(cut, wall_mode, length, s_h + length):
            att = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, None, False)
            rec.add_segment(market.market_id, pricing, att)
            rec.advance(att.span)
            return rec.outcome(job.job_id)
        att = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, cut, wall_mode)
        rec.add_segment(market.market_id, pricing, att)
        rec.advance(att.span)
        rec.revocations += 1
        decision, state = psiwoft_on_revocation(state, market, analytics, cfg)


def _simulate_checkpoint(
    job: Job,
    cfg: CheckpointConfig,
    analytics: MarketAnalytics,
    injector: RevocationInjector,
    run_seed: int,
    settings: EngineSettings,
) -> JobOutcome:
    rec = _Recorder()
    market = _cheapest_spot_market(analytics, job)
    inj = _policy_injector(cfg, injector)
    wall_mode = inj.mode is InjectionMode.TRACE_REPLAY
    pricing = _spot_pricing(analytics, market, inj)
    lifetime = analytics.lifetimes[market.market_id]
    crossings = analytics.crossing_hours.get(market.market_id)
    s_h = settings.startup_hours
    length = job.execution_length_hours
    marks = tuple(checkpoint_schedule(job, cfg.num_checkpoints))
    c_h = checkpoint_cost_time(job, cfg.checkpoint_bandwidth_gb_per_s) / 3600.0
    r_h = checkpoint_cost_time(job, cfg.restore_bandwidth_gb_per_s) / 3600.0
    durable = 0.0
    attempt = 1
    while True:
        if attempt > settings.max_attempts:
            raise SimulationError(f"{job.job_id}: attempt limit exceeded")
        budget = length - durable
        restore = r_h if durable > 0 else 0.0
        cut = sample_revocation(
            inj,
            job,
            market,
            lifetime,
            budget,
            attempt_index=attempt,
            run_seed=run_seed,
            wall_start_hours=rec.wall,
            crossing_hours=crossings,
        )
        span_c = _completion_span(durable, length, marks, s_h, restore, c_h)
        if not _is_revoked(cut, wall_mode, budget, span_c):
            att = _run_attempt(durable, length, marks, s_h, restore, c_h, None, False)
            rec.add_segment(market.market_id, pricing, att)
            rec.advance(att.span)
            return rec.outcome(job.job_id)
        att = _run_attempt(durable, length, marks, s_h, restore, c_h, cut, wall_mode)
        rec.add_segment(market.market_id, pricing, att)
        rec.advance(att.span)
        rec.revocations += 1
        durable = att.durable
        attempt += 1


def _simulate_migration(
    job: Job,
    cfg: MigrationConfig,
    analytics: MarketAnalytics,
    injector: RevocationInjector,
    run_seed: int,
    settings: EngineSettings,
) -> JobOutcome:
    rec = _Recorder()
    market = _cheapest_spot_market(analytics, job)
    inj = _policy_injector(cfg, injector)
    wall_mode = inj.mode is InjectionMode.TRACE_REPLAY
    pricing = _spot_pricing(analytics, market, inj)
    lifetime = analytics.lifetimes[market.market_id]
    crossings = analytics.crossing_hours.get(market.market_id)
    s_h = settings.startup_hours
    length = job.execution_length_hours
    transfer_h = checkpoint_cost_time(job, cfg.migration_bandwidth_gb_per_s) / 3600.0
    feasible = migration_feasible(job, cfg)
    durable = 0.0
    attempt = 1
    while True:
        if attempt > settings.max_attempts:
            raise SimulationError(f"{job.job_id}: attempt limit exceeded")
        budget = length - durable
        cut = sample_revocation(
            inj,
            job,
            market,
            lifetime,
            budget,
            attempt_index=attempt,
            run_seed=run_seed,
            wall_start_hours=rec.wall,
            crossing_hours=crossings,
        )
        if not _is_revoked(cut, wall_mode, budget, s_h + budget):
            att = _run_attempt(durable, length, (), s_h, 0.0, 0.0, None, False)
            rec.add_segment(market.market_id, pricing, att)
            rec.advance(att.span)
            return rec.outcome(job.job_id)
        att = _run_attempt(durable, length, (), s_h, 0.0, 0.0, cut, wall_mode)
        if feasible:
            # The state moves through the notice window: progress survives and
            # the transfer is the recovery charge on the dying instance.
            progress = att.useful + att.reexecution
            att = _Attempt(
                revoked=True,
                useful=progress,
                startup=att.startup,
                checkpoint=0.0,
                recovery=att.recovery + transfer_h,
                reexecution=0.0,
                durable=durable + progress,
            )
        rec.add_segment(market.market_id, pricing, att)
        rec.advance(att.span)
        rec.revocations += 1
        durable = att.durable
        attempt += 1


def _simulate_replication(
    job: Job,
    cfg: ReplicationConfig,
    analytics: MarketAnalytics,
    injector: RevocationInjector,
    run_seed: int,
    settings: EngineSettings,
) -> JobOutcome:
    rec = _Recorder()
    market = _cheapest_spot_market(analytics, job)
    inj = _policy_injector(cfg, injector)
    wall_mode = inj.mode is InjectionMode.TRACE_REPLAY
    pricing = _spot_pricing(analytics, market, inj)
    lifetime = analytics.lifetimes[market.market_id]
    crossings = analytics.crossing_hours.get(market.market_id)
    s_h = settings.startup_hours
    length = job.execution_length_hours
    attempt = 1
    while True:
        if attempt > settings.max_attempts:
            raise SimulationError(f"{job.job_id}: attempt limit exceeded")
        span_c = s_h + length
        cuts: list[float | None] = []
        for _ in range(cfg.degree):
            cuts.append(
                sample_revocation(
                    inj,
                    job,
                    market,
                    lifetime,
                    length,
                    attempt_index=attempt,
                    run_seed=run_seed,
                    wall_start_hours=rec.wall,
                    crossing_hours=crossings,
                )
            )
            attempt += 1
        revoked_flags = [_is_revoked(c, wall_mode, length, span_c) for c in cuts]
        if replication_outcome(revoked_flags):
            # Some replica finishes; the first surviving one carries the
            # wall-clock timeline, the other survivors only burn money.
            primary_seen = False
            for flag, cut in zip(revoked_flags, cuts):
                if flag:
                    att = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, cut, wall_mode)
                    rec.add_segment(market.market_id, pricing, att, count_time=False)
                    rec.revocations += 1
                    continue
                att = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, None, False)
                if not primary_seen:
                    rec.add_segment(market.market_id, pricing, att)
                    primary_seen = True
                else:
                    redundant = _Attempt(
                        revoked=False,
                        startup=att.startup,
                        reexecution=att.useful,
                        durable=length,
                    )
                    rec.add_segment(market.market_id, pricing, redundant, count_time=False)
            rec.advance(s_h + length)
            return rec.outcome(job.job_id)
        # Total loss: the round's wall time runs to the last replica's death
        # and yields no progress, so it is all startup plus re-execution.
        for cut in cuts:
            att = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, cut, wall_mode)
            rec.add_segment(market.market_id, pricing, att, count_time=False)
            rec.revocations += 1
        primary = _run_attempt(0.0, length, (), s_h, 0.0, 0.0, max(cuts), wall_mode)
        rec.add_time(primary)
        rec.advance(primary.span)


def simulate_job(
    job: Job,
    policy: PolicyConfig,
    analytics: MarketAnalytics,
    injector: RevocationInjector,
    seed: int = 0,
    settings: EngineSettings = EngineSettings(),
) -> JobOutcome:
    """Run one job to completion under one policy. Deterministic per (config, seed)."""
    if isinstance(policy, OnDemandConfig):
        return _simulate_on_demand(job, analytics, settings)
    if isinstance(policy, PSiwoftConfig):
        return _simulate_psiwoft(job, policy, analytics, injector, seed, settings)
    if isinstance(policy, CheckpointConfig):
        return _simulate_checkpoint(job, policy, analytics, injector, seed, settings)
    if isinstance(policy, MigrationConfig):
        return _simulate_migration(job, policy, analytics, injector, seed, settings)
    if isinstance(policy, ReplicationConfig):
        return _simulate_replication(job, policy, analytics, injector, seed, settings)
    raise ConfigError(f"unknown policy config {type(policy).__name__}")


def aggregate(outcomes: list[JobOutcome]) -> SimulationResult:
    """Combine job outcomes into one result, ordered by job id."""
    ordered = tuple(sorted(outcomes, key=lambda o: o.job_id))
    return SimulationResult(
        outcomes=ordered,
        aggregate_time_hours=sum(o.completion_time_hours for o in ordered),
        aggregate_cost_usd=sum(o.total_cost_usd for o in ordered),
    )
