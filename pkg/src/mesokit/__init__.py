"""Delayed-aggregation point-cloud kernels, cost model and aggregation-unit simulator."""

__version__ = "0.1.0"

from .tensor import Activation, Mlp, ShapeError, matmul, mlp_forward, reduce_max_rows, sub_rowwise
from .geometry import CorruptNitError, NeighborIndexTable, knn_search, sample_centroids
from .pipeline import (
    ConfigError,
    Mode,
    ModuleConfig,
    NetworkConfig,
    SearchSpace,
    aggregate_offsets,
    divergence_report,
    run_module_baseline,
    run_module_delayed,
    run_network,
)
from .costmodel import CostReport, ModuleShape, count_macs, activation_footprint, critical_path, mac_ratio
from .ausim import AuConfig, AuStats, bank_of, functional_aggregate_via_sim, partition_pft, schedule_rounds, simulate
from .formats import ParseError, ingest_cloud, read_nit_binary, write_nit_binary

__all__ = [
    "Activation", "Mlp", "ShapeError", "matmul", "mlp_forward", "reduce_max_rows", "sub_rowwise",
    "CorruptNitError", "NeighborIndexTable", "knn_search", "sample_centroids",
    "ConfigError", "Mode", "ModuleConfig", "NetworkConfig", "SearchSpace", "aggregate_offsets",
    "divergence_report", "run_module_baseline", "run_module_delayed", "run_network",
    "CostReport", "ModuleShape", "count_macs", "activation_footprint", "critical_path", "mac_ratio",
    "AuConfig", "AuStats", "bank_of", "functional_aggregate_via_sim", "partition_pft",
    "schedule_rounds", "simulate",
    "ParseError", "ingest_cloud", "read_nit_binary", "write_nit_binary",
]
