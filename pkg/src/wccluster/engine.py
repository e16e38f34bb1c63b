"""Engine state across micro-batches: merge, patch statistics, re-partition, refine.

The engine accepts node-grained micro-batches: every batch edge touches at
least one genuinely new vertex, so no edge ever appears between two
pre-existing vertices. Under that contract every triangle created by a
batch contains a new vertex, which is what makes the statistics patch exact:

* untouched old vertices keep their triangle statistics unchanged,
* new vertices get statistics computed from scratch on the merged graph,
* border vertices (old vertices gaining batch edges) are patched by
  enumerating only triangles through them that contain a new vertex, on the
  merged graph. Counting on the merged graph matters: a triangle can use an
  old edge between two old vertices plus a new vertex adjacent to both, and
  a batch-only view would miss it.

A batch is processed in three phases (merge + statistics, restricted
partitioning, fixed-iteration refinement). The refinement runs blind: no
global score is evaluated inside the loop; one score is computed at the end
for reporting. The full static pipeline is also provided, both for
bootstrapping a stream and as the from-scratch comparison baseline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import ContractViolation
from .graph import (
    Graph,
    GlobalStats,
    VertexStatsMap,
    clustering_value,
    compute_global_stats,
    compute_vertex_stats,
    triangle_filtered_view,
)
from .initial import (
    initial_partition_incremental,
    initial_partition_static,
    refine_centers,
)
from .metric import Partition, wcc_global
from .refine import RefineConfig, RefineTrace, refine


@dataclass(frozen=True)
class MicroBatch:
    """One node-grained stream increment: new vertex labels plus their edges."""

    new_vertices: frozenset[int]
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def make(cls, new_vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> "MicroBatch":
        return cls(frozenset(new_vertices), tuple((int(a), int(b)) for a, b in edges))

    @property
    def is_empty(self) -> bool:
        return not self.new_vertices and not self.edges


@dataclass(frozen=True)
class BorderSet:
    """Vertex ids touched by a batch: pre-existing (border) vs genuinely new (inner)."""

    border: frozenset[int]
    inner: frozenset[int]


@dataclass(frozen=True)
class EngineState:
    """Everything carried across batches; treat as an immutable snapshot."""

    graph: Graph
    stats: VertexStatsMap
    global_stats: GlobalStats
    partition: Partition
    epoch: int = 0


@dataclass
class PhaseTimes:
    merge: float = 0.0
    stats: float = 0.0
    partition: float = 0.0
    refine: float = 0.0

    @property
    def total(self) -> float:
        return self.merge + self.stats + self.partition + self.refine


@dataclass
class BatchMetrics:
    """Per-ingest record: sizes, phase wall times, movement counts, final score."""

    epoch: int
    n: int
    m: int
    batch_vertices: int
    batch_edges: int
    times: PhaseTimes = field(default_factory=PhaseTimes)
    movement_counts: list[int] = field(default_factory=list)
    wcc: float = 0.0


@dataclass
class StaticMetrics:
    """Per-run record of the full static pipeline."""

    n: int
    m: int
    step_times: dict[str, float] = field(default_factory=dict)
    movement_counts: list[int] = field(default_factory=list)
    iterations: int = 0
    wcc: float = 0.0

    @property
    def total_time(self) -> float:
        return sum(self.step_times.values())


def merge_batch(state: EngineState, batch: MicroBatch) -> tuple[EngineState, BorderSet]:
    """Merge a batch into the graph and isolate every touched old vertex.

    Returns the merged state (statistics still those of the previous epoch;
    :func:`patch_stats` completes them) and the border/inner split. Border
    vertices and new vertices all end up in fresh singleton communities.
    """
    g = state.graph
    for label in batch.new_vertices:
        if g.has_label(label):
            raise ContractViolation(f"new vertex {label} already exists in the graph")

    new_labels = set(batch.new_vertices)
    border_labels: set[int] = set()
    for a, b in batch.edges:
        a_new = a in new_labels
        b_new = b in new_labels
        if not a_new and not b_new:
            if g.has_label(a) and g.has_label(b):
                raise ContractViolation(
                    f"batch edge ({a}, {b}) joins two pre-existing vertices"
                )
            missing = a if not g.has_label(a) else b
            raise ContractViolation(
                f"batch edge ({a}, {b}) references undeclared new vertex {missing}"
            )
        for label, is_new in ((a, a_new), (b, b_new)):
            if not is_new:
                if not g.has_label(label):
                    raise ContractViolation(
                        f"batch edge ({a}, {b}) references unknown vertex {label}"
                    )
                border_labels.add(label)

    if batch.is_empty:
        return state, BorderSet(frozenset(), frozenset())

    merged = g.extended(sorted(new_labels), batch.edges)
    inner_ids = frozenset(merged.id_for(label) for label in new_labels)
    border_ids = frozenset(merged.id_for(label) for label in border_labels)

    # new vertices join as fresh singletons (appended ids are consecutive),
    # then each border vertex is pulled out into a fresh singleton of its own
    old_assignment = state.partition.assignment
    next_id = state.partition.next_id
    assignment = np.empty(merged.n, dtype=np.int64)
    assignment[: g.n] = old_assignment
    for offset in range(merged.n - g.n):
        assignment[g.n + offset] = next_id
        next_id += 1
    if len(old_assignment):
        ids, counts = np.unique(old_assignment, return_counts=True)
        size_of = {int(c): int(k) for c, k in zip(ids, counts)}
    else:
        size_of = {}
    for v in sorted(border_ids):
        cid = int(assignment[v])
        if size_of.get(cid, 1) == 1:
            continue  # already alone, keeps its community id
        size_of[cid] -= 1
        assignment[v] = next_id
        size_of[next_id] = 1
        next_id += 1
    partition = Partition(assignment, None, next_id)

    new_state = replace(state, graph=merged, partition=partition)
    return new_state, BorderSet(border=border_ids, inner=inner_ids)


def patch_stats(state: EngineState, border_set: BorderSet) -> EngineState:
    """Bring triangle statistics up to date after a merge, exactly.

    Only border vertices are patched and only new vertices are computed
    fresh; everyone else's numbers are carried over verbatim. The patch for
    a border vertex x enumerates pairs of x's neighbors containing at least
    one batch vertex: those are precisely the triangles x gained.
    """
    g = state.graph
    old = state.stats
    old_n = old.n
    n = g.n
    if n == old_n and not border_set.border:
        return replace(state, global_stats=compute_global_stats(g, old))

    triangles = np.zeros(n, dtype=np.int64)
    triangles[:old_n] = old.triangles
    degrees = np.zeros(n, dtype=np.int64)
    degrees[:old_n] = old.degrees
    clustering = np.zeros(n, dtype=np.float64)
    clustering[:old_n] = old.clustering
    # untouched vertices share their triangle-neighbor structures verbatim
    tn_sorted: list[tuple[int, ...]] = list(old.tn_sorted) + [()] * (n - old_n)
    tn_sets: list[frozenset[int]] = list(old.tn_sets) + [frozenset()] * (n - old_n)

    fresh = compute_vertex_stats(g, restrict_to=border_set.inner)
    for v in sorted(border_set.inner):
        triangles[v] = fresh.triangles[v]
        degrees[v] = fresh.degrees[v]
        tn_sorted[v] = fresh.tn_sorted[v]
        tn_sets[v] = fresh.tn_sets[v]
        clustering[v] = fresh.clustering[v]

    for x in sorted(border_set.border):
        adj_x = g.neighbor_set(x)
        new_nbrs = [u for u in g.neighbors(x) if u >= old_n]
        gained = 0
        partners: set[int] = set()
        for u in new_nbrs:
            common = adj_x & g.neighbor_set(u)
            for z in common:
                if z >= old_n and z < u:
                    continue  # both-new pair, counted from its smaller member
                gained += 1
                partners.add(z)
            if common:
                partners.add(u)
        triangles[x] += gained
        degrees[x] = g.degree(x)
        if partners:
            merged = tn_sets[x] | partners
            tn_sets[x] = frozenset(merged)
            tn_sorted[x] = tuple(sorted(merged))
        clustering[x] = clustering_value(int(triangles[x]), int(degrees[x]))

    stats = VertexStatsMap(triangles, degrees, clustering, tn_sorted, tn_sets=tn_sets)
    return replace(
        state, stats=stats, global_stats=compute_global_stats(g, stats)
    )


def ingest(
    state: EngineState, batch: MicroBatch, cfg: RefineConfig
) -> tuple[EngineState, BatchMetrics]:
    """Run the three-phase incremental pipeline for one batch.

    Refinement always runs blind here with the configured fixed iteration
    count; the reported score is computed once afterwards. An empty batch
    leaves graph, statistics, and partition untouched.
    """
    metrics = BatchMetrics(
        epoch=state.epoch + 1,
        n=state.graph.n,
        m=state.graph.m,
        batch_vertices=len(batch.new_vertices),
        batch_edges=0,
    )
    if batch.is_empty:
        merged_state, _ = merge_batch(state, batch)  # still validates the contract
        out = replace(merged_state, epoch=state.epoch + 1)
        metrics.wcc = wcc_global(out.partition, out.graph, out.stats, workers=cfg.workers)
        return out, metrics

    t0 = time.perf_counter()
    merged, border_set = merge_batch(state, batch)
    t1 = time.perf_counter()
    patched = patch_stats(merged, border_set)
    t2 = time.perf_counter()
    view = triangle_filtered_view(patched.graph, patched.stats)
    touched = set(border_set.border | border_set.inner)
    partitioned = initial_partition_incremental(
        patched.partition, touched, view, patched.stats
    )
    t3 = time.perf_counter()
    blind_cfg = replace(cfg, wcc_check=False)
    refined, trace = refine(
        partitioned, view, patched.stats, blind_cfg, patched.global_stats
    )
    t4 = time.perf_counter()

    out = replace(patched, partition=refined, epoch=state.epoch + 1)
    metrics.n = out.graph.n
    metrics.m = out.graph.m
    metrics.batch_edges = out.graph.m - state.graph.m
    metrics.times = PhaseTimes(
        merge=t1 - t0, stats=t2 - t1, partition=t3 - t2, refine=t4 - t3
    )
    metrics.movement_counts = trace.movement_counts
    metrics.wcc = wcc_global(refined, out.graph, out.stats, workers=cfg.workers)
    return out, metrics


def bootstrap(
    g: Graph, cfg: RefineConfig, center_rounds: int = 10
) -> tuple[EngineState, StaticMetrics, RefineTrace]:
    """Full static pipeline on a canonical graph, packaged as epoch-0 state.

    Steps: triangle statistics, triangle filter, greedy initial partition
    with center refinement, then score-checked movement refinement.
    """
    metrics = StaticMetrics(n=g.n, m=g.m)

    t0 = time.perf_counter()
    stats = compute_vertex_stats(g, workers=cfg.workers)
    gs = compute_global_stats(g, stats)
    t1 = time.perf_counter()
    view = triangle_filtered_view(g, stats)
    t2 = time.perf_counter()
    P0 = initial_partition_static(view, stats)
    P1 = refine_centers(P0, view, stats, max_rounds=center_rounds)
    t3 = time.perf_counter()
    checked_cfg = replace(cfg, wcc_check=True)
    refined, trace = refine(P1, view, stats, checked_cfg, gs)
    t4 = time.perf_counter()

    metrics.step_times = {
        "vertex_stats": t1 - t0,
        "graph_filter": t2 - t1,
        "initial_partition": t3 - t2,
        "refinement": t4 - t3,
    }
    metrics.movement_counts = trace.movement_counts
    metrics.iterations = trace.iterations
    metrics.wcc = trace.final_wcc if trace.final_wcc is not None else 0.0

    state = EngineState(
        graph=g, stats=stats, global_stats=gs, partition=refined, epoch=0
    )
    return state, metrics, trace


def detect_static(
    g: Graph, cfg: RefineConfig, center_rounds: int = 10
) -> tuple[Partition, StaticMetrics]:
    """One-shot static community detection; returns the partition and run metrics."""
    state, metrics, _ = bootstrap(g, cfg, center_rounds)
    return state.partition, metrics
