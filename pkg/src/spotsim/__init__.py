"""Trace-driven simulator for transient cloud capacity provisioning policies."""

from .engine import (
    ON_DEMAND_MARKET_ID,
    CostDecomposition,
    EngineSettings,
    InjectionMode,
    JobOutcome,
    RevocationInjector,
    Segment,
    SimulationResult,
    TimeDecomposition,
    aggregate,
    bill_segment,
    sample_revocation,
    simulate_job,
)
from .errors import (
    ConfigError,
    ParseError,
    SimulationError,
    SpotSimError,
    ValidationError,
)
from .markets import (
    CorrelationMatrix,
    LifetimeEstimate,
    Market,
    MarketAnalytics,
    RevocationHourSet,
    build_correlation_matrix,
    build_lifetime_table,
    candidates_by_lifetime,
    compute_correlation,
    compute_mttr,
    find_low_correlation,
    find_suitable,
    load_catalog,
    revocation_hours,
    revocation_probability,
)
from .policies import (
    MIGRATION_MEMORY_LIMIT_GB,
    CheckpointConfig,
    MigrationConfig,
    OnDemandConfig,
    PolicyConfig,
    ProvisionDecision,
    PSiwoftConfig,
    ReplicationConfig,
    checkpoint_cost_time,
    checkpoint_schedule,
    migration_feasible,
    parse_policy,
    policy_type_name,
    psiwoft_on_revocation,
    psiwoft_select_initial,
    replication_outcome,
)
from .trace import (
    PricePoint,
    PriceTrace,
    SyntheticTraceSpec,
    generate_synthetic,
    hourly_prices,
    load_trace,
    resample_hourly,
    write_trace_csv,
)
from .workload import Job, WorkloadSpec, generate_workload, load_workload, write_workload_csv

__version__ = "0.1.0"

__all__ = [
    "ON_DEMAND_MARKET_ID",
    "MIGRATION_MEMORY_LIMIT_GB",
    "CheckpointConfig",
    "ConfigError",
    "CorrelationMatrix",
    "CostDecomposition",
    "EngineSettings",
    "InjectionMode",
    "Job",
    "JobOutcome",
    "LifetimeEstimate",
    "Market",
    "MarketAnalytics",
    "MigrationConfig",
    "OnDemandConfig",
    "ParseError",
    "PolicyConfig",
    "PricePoint",
    "PriceTrace",
    "ProvisionDecision",
    "PSiwoftConfig",
    "ReplicationConfig",
    "RevocationHourSet",
    "RevocationInjector",
    "Segment",
    "SimulationError",
    "SimulationResult",
    "SpotSimError",
    "SyntheticTraceSpec",
    "TimeDecomposition",
    "ValidationError",
    "WorkloadSpec",
    "aggregate",
    "bill_segment",
    "build_correlation_matrix",
    "build_lifetime_table",
    "candidates_by_lifetime",
    "checkpoint_cost_time",
    "checkpoint_schedule",
    "compute_correlation",
    "compute_mttr",
    "find_low_correlation",
    "find_suitable",
    "generate_synthetic",
    "generate_workload",
    "hourly_prices",
    "load_catalog",
    "load_trace",
    "load_workload",
    "migration_feasible",
    "parse_policy",
    "policy_type_name",
    "psiwoft_on_revocation",
    "psiwoft_select_initial",
    "replication_outcome",
    "resample_hourly",
    "revocation_hours",
    "revocation_probability",
    "sample_revocation",
    "simulate_job",
    "write_trace_csv",
    "write_workload_csv",
]
