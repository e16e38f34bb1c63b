"""Triangle-based community detection with incremental micro-batch maintenance."""

from .engine import (
    BatchMetrics,
    BorderSet,
    EngineState,
    MicroBatch,
    StaticMetrics,
    bootstrap,
    detect_static,
    ingest,
    merge_batch,
    patch_stats,
)
from .errors import ContractViolation, EdgeListParseError
from .estimators import IncrementalWccCommunities, WccCommunities
from .graph import (
    GlobalStats,
    Graph,
    GraphView,
    VertexStats,
    VertexStatsMap,
    canonicalize,
    compute_global_stats,
    compute_vertex_stats,
    load_edge_list,
    triangle_filtered_view,
)
from .initial import (
    initial_partition_incremental,
    initial_partition_static,
    refine_centers,
    vertex_order,
)
from .metric import (
    CommunityStats,
    Partition,
    VertexCommunityLink,
    community_stats,
    vertex_links,
    wcc_global,
    wcc_vertex,
)
from .oracle import wcc_global_oracle, wcc_vertex_oracle
from .refine import (
    Movement,
    RefineConfig,
    apply_movements,
    best_movement,
    movement_gain_exact,
    movement_gain_heuristic,
    refine,
)
from .stream import (
    MetricsReport,
    StreamPlan,
    dump_communities,
    read_communities,
    run_static,
    run_stream,
    score_communities,
    split_into_batches,
)

__version__ = "0.1.0"

__all__ = [
    "BatchMetrics",
    "BorderSet",
    "CommunityStats",
    "ContractViolation",
    "EdgeListParseError",
    "EngineState",
    "GlobalStats",
    "Graph",
    "GraphView",
    "IncrementalWccCommunities",
    "MetricsReport",
    "MicroBatch",
    "Movement",
    "Partition",
    "RefineConfig",
    "StaticMetrics",
    "StreamPlan",
    "VertexCommunityLink",
    "VertexStats",
    "VertexStatsMap",
    "WccCommunities",
    "apply_movements",
    "best_movement",
    "bootstrap",
    "canonicalize",
    "community_stats",
    "compute_global_stats",
    "compute_vertex_stats",
    "detect_static",
    "dump_communities",
    "ingest",
    "initial_partition_incremental",
    "initial_partition_static",
    "load_edge_list",
    "merge_batch",
    "movement_gain_exact",
    "movement_gain_heuristic",
    "patch_stats",
    "read_communities",
    "refine",
    "refine_centers",
    "run_static",
    "run_stream",
    "score_communities",
    "split_into_batches",
    "triangle_filtered_view",
    "vertex_links",
    "vertex_order",
    "wcc_global",
    "wcc_global_oracle",
    "wcc_vertex",
    "wcc_vertex_oracle",
]
