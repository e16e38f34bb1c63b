"""Stream synthesis from static edge lists, run drivers, and report plumbing.

A static dataset is turned into a node-grained stream by choosing a vertex
arrival order, taking a bulk prefix, and slicing the remaining vertices into
batches. Every edge travels with its later-arriving endpoint, which is the
unique assignment that both preserves the node-grained contract (no edge
between two already-present vertices) and reconstructs the full edge set
exactly.
"""

from __future__ import annotations

import io
import json
import math
import random
import time
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from .engine import EngineState, MicroBatch, bootstrap, ingest
from .errors import ContractViolation
from .graph import Graph, canonicalize, parse_edge_list
from .metric import Partition, wcc_global
from .refine import RefineConfig


@dataclass(frozen=True)
class StreamPlan:
    """How to slice a static dataset into a bulk prefix plus micro-batches."""

    bulk_fraction: float = 0.5
    num_batches: int = 10
    seed: int = 0
    vertex_order: str = "random"

    def __post_init__(self):
        if not 0 < self.bulk_fraction <= 1:
            raise ValueError("bulk_fraction must be in (0, 1]")
        if self.num_batches < 1:
            raise ValueError("num_batches must be >= 1")
        if self.vertex_order not in ("input", "random"):
            raise ValueError("vertex_order must be 'input' or 'random'")


@dataclass
class SplitResult:
    bulk_vertices: list[int]
    bulk_edges: list[tuple[int, int]]
    batches: list[MicroBatch]
    warnings: list[str] = field(default_factory=list)


def _arrival_order(
    raw_edges: Iterable[tuple[int, int]],
    canonical: Graph,
    plan: StreamPlan,
) -> list[int]:
    labels = {int(canonical.labels[v]) for v in canonical.vertices()}
    if plan.vertex_order == "input":
        order: list[int] = []
        seen: set[int] = set()
        for a, b in raw_edges:
            for lab in (a, b):
                if lab in labels and lab not in seen:
                    seen.add(lab)
                    order.append(lab)
        for lab in sorted(labels - seen):
            order.append(lab)
        return order
    order = sorted(labels)
    random.Random(plan.seed).shuffle(order)
    return order


def split_into_batches(
    raw_edges: list[tuple[int, int]],
    plan: StreamPlan,
    extra_vertices: Iterable[int] = (),
) -> SplitResult:
    """Slice raw label-pair edges into a bulk prefix and node-grained batches.

    The union of the bulk and all batches reconstructs the canonical edge
    set exactly; every batch satisfies the engine's node-grained contract by
    construction. Asking for more batches than there are leftover vertices
    yields fewer, non-empty batches and a warning.
    """
    canonical = canonicalize(raw_edges, extra_vertices)
    order = _arrival_order(raw_edges, canonical, plan)
    n = len(order)
    warnings: list[str] = []
    if n == 0:
        return SplitResult([], [], [], warnings)

    position = {lab: i for i, lab in enumerate(order)}
    bulk_count = min(n, math.ceil(plan.bulk_fraction * n))
    remaining = order[bulk_count:]

    n_batches = min(plan.num_batches, len(remaining))
    if remaining and n_batches < plan.num_batches:
        warnings.append(
            f"only {len(remaining)} vertices left after the bulk; "
            f"emitting {n_batches} batches instead of {plan.num_batches}"
        )
    if not remaining and plan.bulk_fraction < 1:
        warnings.append("bulk fraction consumed every vertex; no batches emitted")

    slices: list[list[int]] = []
    if n_batches:
        base, extra = divmod(len(remaining), n_batches)
        at = 0
        for i in range(n_batches):
            size = base + (1 if i < extra else 0)
            slices.append(remaining[at : at + size])
            at += size

    slice_of = {lab: i for i, chunk in enumerate(slices) for lab in chunk}
    bulk_edges: list[tuple[int, int]] = []
    batch_edges: list[list[tuple[int, int]]] = [[] for _ in slices]
    for u, v in canonical.edges():
        lu, lv = canonical.label_for(u), canonical.label_for(v)
        later = lu if position[lu] >= position[lv] else lv
        if position[later] < bulk_count:
            bulk_edges.append((lu, lv))
        else:
            batch_edges[slice_of[later]].append((lu, lv))

    batches = [
        MicroBatch.make(chunk, edges) for chunk, edges in zip(slices, batch_edges)
    ]
    return SplitResult(order[:bulk_count], bulk_edges, batches, warnings)


@dataclass
class MetricsReport:
    """Run header plus one record per epoch; serializable as JSONL and CSV."""

    header: dict
    records: list[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        out = io.StringIO()
        out.write(json.dumps({"header": self.header}, sort_keys=True) + "\n")
        for rec in self.records:
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        return out.getvalue()

    def to_csv(self) -> str:
        keys: list[str] = []
        for rec in self.records:
            for k in rec:
                if k not in keys:
                    keys.append(k)
        keys = sorted(keys)
        lines = [",".join(keys)]
        for rec in self.records:
            lines.append(
                ",".join(_csv_cell(rec.get(k)) for k in keys)
            )
        return "\n".join(lines) + "\n"

    def non_timing_view(self) -> str:
        """Canonical serialization with wall times removed; the determinism surface."""
        def strip(d: dict) -> dict:
            return {
                k: v
                for k, v in d.items()
                if not k.startswith("time") and not k.endswith("_time")
            }

        out = [json.dumps({"header": strip(self.header)}, sort_keys=True)]
        out.extend(json.dumps(strip(rec), sort_keys=True) for rec in self.records)
        return "\n".join(out)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return '"' + json.dumps(list(value)) + '"'
    return str(value)


def _static_record(epoch: int, metrics, extra: Mapping | None = None) -> dict:
    rec = {
        "epoch": epoch,
        "mode": "static",
        "n": metrics.n,
        "m": metrics.m,
        "wcc": metrics.wcc,
        "movements": list(metrics.movement_counts),
        "iterations": metrics.iterations,
        "time_total": metrics.total_time,
    }
    for step, seconds in metrics.step_times.items():
        rec[f"time_{step}"] = seconds
    if extra:
        rec.update(extra)
    return rec


def run_static(
    source: str | bytes | IO | Graph,
    cfg: RefineConfig,
    center_rounds: int = 10,
    dataset_name: str = "<memory>",
) -> tuple[MetricsReport, Partition, Graph]:
    """Load (if needed), run the static pipeline once, and package the report."""
    g = source if isinstance(source, Graph) else canonicalize(parse_edge_list(source))
    state, metrics, _ = bootstrap(g, cfg, center_rounds)
    report = MetricsReport(
        header={
            "dataset": dataset_name,
            "mode": "static",
            "config": _config_echo(cfg),
            "center_rounds": center_rounds,
        },
        records=[_static_record(0, metrics)],
    )
    return report, state.partition, g


def run_stream(
    raw_edges: list[tuple[int, int]],
    plan: StreamPlan,
    cfg: RefineConfig,
    compare: bool = False,
    center_rounds: int = 10,
    dataset_name: str = "<memory>",
) -> tuple[MetricsReport, EngineState, SplitResult]:
    """Bulk bootstrap followed by one ingest per batch.

    With ``compare`` on, the static pipeline additionally runs from scratch
    on each post-merge graph and its score and wall time are recorded next
    to the incremental ones.
    """
    split = split_into_batches(raw_edges, plan)
    header = {
        "dataset": dataset_name,
        "mode": "stream",
        "config": _config_echo(cfg),
        "center_rounds": center_rounds,
        "plan": {
            "bulk_fraction": plan.bulk_fraction,
            "num_batches": plan.num_batches,
            "seed": plan.seed,
            "vertex_order": plan.vertex_order,
        },
        "compare": compare,
        "warnings": list(split.warnings),
    }
    report = MetricsReport(header=header)

    bulk_graph = canonicalize(split.bulk_edges, extra_vertices=split.bulk_vertices)
    state, bulk_metrics, _ = bootstrap(bulk_graph, cfg, center_rounds)
    report.records.append(
        _static_record(0, bulk_metrics, {"mode": "bulk", "batch_vertices": 0, "batch_edges": 0})
    )

    for batch in split.batches:
        state, bm = ingest(state, batch, cfg)
        rec = {
            "epoch": state.epoch,
            "mode": "incremental",
            "n": bm.n,
            "m": bm.m,
            "batch_vertices": bm.batch_vertices,
            "batch_edges": bm.batch_edges,
            "wcc": bm.wcc,
            "movements": list(bm.movement_counts),
            "time_merge": bm.times.merge,
            "time_stats": bm.times.stats,
            "time_partition": bm.times.partition,
            "time_refine": bm.times.refine,
            "time_total": bm.times.total,
        }
        if compare:
            t0 = time.perf_counter()
            _, static_metrics, _ = bootstrap(state.graph, cfg, center_rounds)
            rec["static_wcc"] = static_metrics.wcc
            rec["static_time"] = time.perf_counter() - t0
        report.records.append(rec)
    return report, state, split


def _config_echo(cfg: RefineConfig) -> dict:
    return {
        "max_iterations": cfg.max_iterations,
        "wcc_check": cfg.wcc_check,
        "improvement_threshold": cfg.improvement_threshold,
        "gain_mode": cfg.gain_mode,
        "workers": cfg.workers,
    }


def dump_communities(P: Partition, labels, sink: IO | None = None) -> str:
    """One `label<TAB>community` line per vertex, sorted by external label.

    Community ids are renumbered densely in order of first appearance down
    the dump, so equal partitions always serialize identically.
    """
    rows = sorted((int(labels[v]), v) for v in range(P.n_vertices))
    dense: dict[int, int] = {}
    lines = []
    for label, v in rows:
        cid = P.community_of(v)
        if cid not in dense:
            dense[cid] = len(dense)
        lines.append(f"{label}\t{dense[cid]}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if sink is not None:
        sink.write(text)
    return text


def read_communities(source: str | IO) -> dict[int, int]:
    """Parse a community dump back into a label -> community mapping."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = source.readlines()
    mapping: dict[int, int] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'label<TAB>community'")
        label, cid = int(parts[0]), int(parts[1])
        if label in mapping:
            raise ValueError(f"line {lineno}: duplicate label {label}")
        mapping[label] = cid
    return mapping


def partition_from_labels(g: Graph, mapping: Mapping[int, int]) -> Partition:
    """Partition over g's vertex ids from an external-label community mapping."""
    missing = [int(g.labels[v]) for v in g.vertices() if int(g.labels[v]) not in mapping]
    if missing:
        raise ContractViolation(
            f"community mapping misses {len(missing)} vertices (first: {missing[:3]})"
        )
    return Partition.from_assignment(mapping[int(g.labels[v])] for v in g.vertices())


def score_communities(g: Graph, mapping: Mapping[int, int], workers: int = 1) -> float:
    """Global score of an external community assignment against a graph."""
    from .graph import compute_vertex_stats

    P = partition_from_labels(g, mapping)
    stats = compute_vertex_stats(g, workers=workers)
    return wcc_global(P, g, stats, workers=workers)
