"""Aggregation-tree FDR testing for two-cohort marker data.

The extension module carries the full pipeline: ingest, partitioning, the
layered testing loop, and the simulation harness. See the project README for
the matching CLI.
"""

from ._core import (  # noqa: F401
    ConfigError,
    DataError,
    DiscreteDist,
    GaussComponent,
    LayerMetrics,
    LayerRecord,
    LayeredNull,
    LeafBinning,
    LeafRegion,
    LeafTruth,
    MarkerMatrix,
    Metrics,
    Partition,
    PartitionSpec,
    ReadSchema,
    Rect,
    ReplicationConfig,
    ReplicationRow,
    ReplicationSummaryRow,
    ReplicationTable,
    Scheme,
    LeafOrder,
    SimSetting,
    StoppingRule,
    TeamConfig,
    TeamResult,
    ThresholdResult,
    build_layer_null,
    build_partition,
    compute_metrics,
    convolve,
    default_bins_per_dim,
    default_layer_count,
    find_threshold,
    generate_cohorts,
    generate_cohorts_rep,
    leaf_truth,
    make_leaf_null,
    order_dimensions,
    quantile_normalize,
    read_matrix,
    read_matrix_two_files,
    run_replications,
    run_team,
    threshold_count,
    truncate_renormalize,
    write_leaf_table,
    write_matrix,
    write_replication_rows,
    write_replication_summary,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
