"""Provisioning policies.

The headline policy provisions spot instances by expected lifetime and, after
a revocation, re-provisions only in markets whose revocations are weakly
correlated with the lost one. It keeps no checkpoints: a revoked attempt
restarts from scratch. The remaining policies are the classical
fault-tolerance baselines (checkpointing, live migration, replication) plus a
plain on-demand rental.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

from .errors import ConfigError, ValidationError
from .markets import (
    Market,
    MarketAnalytics,
    candidates_by_lifetime,
    find_low_correlation,
    find_suitable,
)
from .workload import Job


@dataclass(frozen=True)
class PSiwoftConfig:
    """Lifetime-ranked spot provisioning without fault tolerance."""

    lifetime_factor_k: float = 2.0
    correlation_threshold: float = 0.2
    fallback_to_on_demand: bool = True

    def __post_init__(self):
        if self.lifetime_factor_k < 1:
            raise ValidationError("lifetime_factor_k must be >= 1")
        if not (0 <= self.correlation_threshold <= 1):
            raise ValidationError("correlation_threshold must be in [0, 1]")


@dataclass(frozen=True)
class CheckpointConfig:
    """Periodic synchronous checkpointing to remote storage."""

    num_checkpoints: int
    revocations_per_day: float
    checkpoint_bandwidth_gb_per_s: float = 0.5
    restore_bandwidth_gb_per_s: float = 0.5

    def __post_init__(self):
        if self.num_checkpoints < 0:
            raise ValidationError("num_checkpoints must be >= 0")
        if self.revocations_per_day < 0:
            raise ValidationError("revocations_per_day must be >= 0")
        if self.checkpoint_bandwidth_gb_per_s <= 0 or self.restore_bandwidth_gb_per_s <= 0:
            raise ValidationError("bandwidths must be > 0")


@dataclass(frozen=True)
class MigrationConfig:
    """Reactive live migration within the revocation notice window."""

    revocations_per_day: float
    migration_bandwidth_gb_per_s: float = 0.5
    notice_window_s: float = 120.0

    def __post_init__(self):
        if self.revocations_per_day < 0:
            raise ValidationError("revocations_per_day must be >= 0")
        if self.migration_bandwidth_gb_per_s <= 0:
            raise ValidationError("migration_bandwidth_gb_per_s must be > 0")
        if self.notice_window_s <= 0:
            raise ValidationError("notice_window_s must be > 0")


# Live migration is only workable for small states that fit through the
# notice window; larger ones cannot finish the transfer before termination.
MIGRATION_MEMORY_LIMIT_GB = 4.0


@dataclass(frozen=True)
class ReplicationConfig:
    """Run the job on several instances at once; restart only on total loss."""

    degree: int
    revocations_per_day: float

    def __post_init__(self):
        if self.degree < 2:
            raise ValidationError("degree must be >= 2")
        if self.revocations_per_day < 0:
            raise ValidationError("revocations_per_day must be >= 0")


@dataclass(frozen=True)
class OnDemandConfig:
    """Rent on-demand: no revocations, full price."""


PolicyConfig = (
    PSiwoftConfig | CheckpointConfig | MigrationConfig | ReplicationConfig | OnDemandConfig
)

POLICY_TYPES: dict[str, type] = {
    "psiwoft": PSiwoftConfig,
    "checkpoint": CheckpointConfig,
    "migration": MigrationConfig,
    "replication": ReplicationConfig,
    "on_demand": OnDemandConfig,
}


def policy_type_name(cfg: PolicyConfig) -> str:
    for name, cls in POLICY_TYPES.items():
        if isinstance(cfg, cls):
            return name
    raise ConfigError(f"unknown policy config {type(cfg).__name__}")


def parse_policy(obj: dict) -> PolicyConfig:
    """Build a policy config from a JSON object with a ``type`` discriminator.

    Unknown keys are rejected rather than ignored so that typos fail loudly.
    """
    if not isinstance(obj, dict):
        raise ConfigError("policy must be a JSON object")
    if "type" not in obj:
        raise ConfigError("policy object missing 'type'")
    type_name = obj["type"]
    cls = POLICY_TYPES.get(type_name)
    if cls is None:
        raise ConfigError(f"unknown policy type {type_name!r}")
    field_names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - field_names - {"type"}
    if unknown:
        raise ConfigError(f"policy {type_name!r}: unknown keys {sorted(unknown)}")
    kwargs = {k: v for k, v in obj.items() if k != "type"}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"policy {type_name!r}: {exc}") from exc


class DecisionKind(enum.Enum):
    MARKET = "market"
    ON_DEMAND = "on_demand"
    FAILURE = "failure"


@dataclass(frozen=True)
class ProvisionDecision:
    """Where the next attempt runs: a spot market, on-demand, or nowhere."""

    kind: DecisionKind
    market: Market | None = None

    def __post_init__(self):
        if (self.kind is DecisionKind.MARKET) != (self.market is not None):
            raise ValidationError("market must be set exactly when kind is MARKET")

    @classmethod
    def for_market(cls, market: Market) -> "ProvisionDecision":
        return cls(DecisionKind.MARKET, market)

    @classmethod
    def on_demand(cls) -> "ProvisionDecision":
        return cls(DecisionKind.ON_DEMAND)

    @classmethod
    def failure(cls) -> "ProvisionDecision":
        return cls(DecisionKind.FAILURE)


@dataclass(frozen=True)
class AttemptState:
    """Loop state of the lifetime-ranked policy across provisioning attempts."""

    job: Job
    progress_hours: float = 0.0
    last_checkpoint_progress_hours: float = 0.0
    attempt_index: int = 1
    candidates_remaining: tuple[Market, ...] = ()

    def __post_init__(self):
        if self.attempt_index < 1:
            raise ValidationError("attempt_index must be >= 1")
        if not (
            0
            <= self.last_checkpoint_progress_hours
            <= self.progress_hours
            <= self.job.execution_length_hours
        ):
            raise ValidationError("need 0 <= last_checkpoint <= progress <= length")


def psiwoft_select_initial(
    job: Job, analytics: MarketAnalytics, cfg: PSiwoftConfig
) -> tuple[ProvisionDecision, AttemptState]:
    """Rank the suitable markets by lifetime and pick the best one.

    With no qualifying market the decision falls back to on-demand, or
    reports failure when the fallback is disabled.
    """
    suitable = find_suitable(list(analytics.markets), job)
    candidates = candidates_by_lifetime(job, suitable, analytics.lifetimes, cfg.lifetime_factor_k)
    state = AttemptState(job=job, candidates_remaining=tuple(candidates))
    if candidates:
        head = candidates[0]
        # The ranking filter already guarantees this; keep it as a tripwire.
        assert (
            analytics.lifetimes[head.market_id].mttr_hours
            >= cfg.lifetime_factor_k * job.execution_length_hours
        )
        return ProvisionDecision.for_market(head), state
    if cfg.fallback_to_on_demand:
        return ProvisionDecision.on_demand(), state
    return ProvisionDecision.failure(), state


def psiwoft_on_revocation(
    state: AttemptState, revoked: Market, analytics: MarketAnalytics, cfg: PSiwoftConfig
) -> tuple[ProvisionDecision, AttemptState]:
    """Drop the revoked market, keep only weakly correlated survivors, restart.

    Progress resets to zero: this policy never checkpoints. The candidate
    list strictly shrinks on every revocation, so the loop terminates.
    """
    allowed = find_low_correlation(
        analytics.correlation, revoked.market_id, cfg.correlation_threshold
    )
    remaining = tuple(
        m
        for m in state.candidates_remaining
        if m.market_id != revoked.market_id and m.market_id in allowed
    )
    new_state = AttemptState(
        job=state.job,
        progress_hours=0.0,
        last_checkpoint_progress_hours=0.0,
        attempt_index=state.attempt_index + 1,
        candidates_remaining=remaining,
    )
    if remaining:
        return ProvisionDecision.for_market(remaining[0]), new_state
    if cfg.fallback_to_on_demand:
        return ProvisionDecision.on_demand(), new_state
    return ProvisionDecision.failure(), new_state


def checkpoint_schedule(job: Job, num_checkpoints: int) -> list[float]:
    """Evenly spaced checkpoint marks strictly inside (0, length)."""
    if num_checkpoints < 0:
        raise ValidationError("num_checkpoints must be >= 0")
    length = job.execution_length_hours
    return [i * length / (num_checkpoints + 1) for i in range(1, num_checkpoints + 1)]


def checkpoint_cost_time(job: Job, bandwidth_gb_per_s: float) -> float:
    """Seconds to move the job's memory footprint at the given bandwidth.

    The same transfer model prices checkpoint writes, restores, and live
    migrations.
    """
    if bandwidth_gb_per_s <= 0:
        raise ValidationError("bandwidth must be > 0")
    return job.memory_footprint_gb / bandwidth_gb_per_s


def migration_feasible(job: Job, cfg: MigrationConfig) -> bool:
    """True when the state is small enough and transfers within the notice window."""
    if job.memory_footprint_gb > MIGRATION_MEMORY_LIMIT_GB:
        return False
    return checkpoint_cost_time(job, cfg.migration_bandwidth_gb_per_s) <= cfg.notice_window_s


def replication_outcome(per_replica_revoked: list[bool]) -> bool:
    """True when at least one replica survived, i.e. the round completed."""
    if not per_replica_revoked:
        raise ValidationError("per_replica_revoked must be non-empty")
    return not all(per_replica_revoked)
