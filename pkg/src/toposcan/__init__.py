"""Topology-aware scan serialization with cached index service and gated fusion."""

from .bench import (
    BenchReport,
    Scenario,
    StageModel,
    analytic_hit_rate,
    emit_report,
    make_scenario,
    run_cache_stress,
    run_scenario,
)
from .hsic_gate import (
    BranchPair,
    GateConfig,
    GateDiagnostics,
    fuse,
    fuse_with_diagnostics,
    gate_weight,
    hsic_estimate,
    median_bandwidth,
    project_and_normalize,
    projection_matrix,
    rbf_kernel,
)
from .scan_cache import CacheEntry, CacheKey, CacheStats, ScanCache
from .scan_order import (
    CrossIndexPair,
    GridShape,
    IndexPair,
    adjacent_step_distances,
    build_base_antidiagonal,
    build_base_diagonal,
    build_cross_indices,
    build_topoa_indices,
)
from .ssm import (
    FeatureMap,
    SsmParams,
    default_params,
    discretize,
    multi_direction_scan,
    passthrough_params,
    scan_sequence,
)
from .topo_metrics import (
    AggregateReport,
    TopoErrors,
    TopoSummary,
    aggregate,
    count_components,
    count_holes,
    topo_errors,
    topo_summary,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateReport",
    "BenchReport",
    "BranchPair",
    "CacheEntry",
    "CacheKey",
    "CacheStats",
    "CrossIndexPair",
    "FeatureMap",
    "GateConfig",
    "GateDiagnostics",
    "GridShape",
    "IndexPair",
    "Scenario",
    "ScanCache",
    "SsmParams",
    "StageModel",
    "TopoErrors",
    "TopoSummary",
    "adjacent_step_distances",
    "aggregate",
    "analytic_hit_rate",
    "build_base_antidiagonal",
    "build_base_diagonal",
    "build_cross_indices",
    "build_topoa_indices",
    "count_components",
    "count_holes",
    "default_params",
    "discretize",
    "emit_report",
    "fuse",
    "fuse_with_diagnostics",
    "gate_weight",
    "hsic_estimate",
    "make_scenario",
    "median_bandwidth",
    "multi_direction_scan",
    "passthrough_params",
    "project_and_normalize",
    "projection_matrix",
    "rbf_kernel",
    "run_cache_stress",
    "run_scenario",
    "scan_sequence",
    "topo_errors",
    "topo_summary",
]
