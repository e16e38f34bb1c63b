"""Command line driver: stats, detect, split, stream, score.

Exit codes: 0 success, 1 usage error, 2 data or contract error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ContractViolation, EdgeListParseError
from .graph import canonicalize, compute_global_stats, compute_vertex_stats, parse_edge_list
from .oracle import wcc_global_oracle
from .refine import RefineConfig
from .stream import (
    StreamPlan,
    dump_communities,
    partition_from_labels,
    read_communities,
    run_static,
    run_stream,
    score_communities,
    split_into_batches,
)

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iterations", type=int, default=5,
                   help="refinement sweeps per run (default 5)")
    p.add_argument("--gain-mode", choices=["exact", "heuristic"], default="exact",
                   help="movement gain evaluator (default exact)")
    p.add_argument("--threshold", type=float, default=1e-3,
                   help="relative improvement below which score-checked refinement stops")
    p.add_argument("--workers", type=int, default=1, help="worker count for parallel phases")
    p.add_argument("--center-rounds", type=int, default=10,
                   help="max center-refinement rounds in the initial partition")


def _add_plan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bulk-fraction", type=float, default=0.5,
                   help="fraction of vertices loaded as the static bulk (default 0.5)")
    p.add_argument("--num-batches", type=int, default=10,
                   help="number of micro-batches for the remainder (default 10)")
    p.add_argument("--seed", type=int, default=0, help="stream synthesis seed")
    p.add_argument("--vertex-order", choices=["input", "random"], default="random",
                   help="vertex arrival order (default random)")


def _config(args) -> RefineConfig:
    return RefineConfig(
        max_iterations=args.max_iterations,
        improvement_threshold=args.threshold,
        gain_mode=args.gain_mode,
        workers=args.workers,
    )


def _plan(args) -> StreamPlan:
    return StreamPlan(
        bulk_fraction=args.bulk_fraction,
        num_batches=args.num_batches,
        seed=args.seed,
        vertex_order=args.vertex_order,
    )


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wccluster",
                     description="Triangle-based community detection over static "
                                 "and micro-batch streaming graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="graph summary: sizes, triangles, clustering")
    p_stats.add_argument("dataset")
    p_stats.add_argument("--workers", type=int, default=1)

    p_detect = sub.add_parser("detect", help="run the static pipeline once")
    p_detect.add_argument("dataset")
    _add_config_flags(p_detect)
    p_detect.add_argument("--communities-out", default="-",
                          help="community TSV output path (default stdout)")
    p_detect.add_argument("--metrics-out", help="metrics JSONL output path")
    p_detect.add_argument("--csv-out", help="metrics CSV output path")

    p_split = sub.add_parser("split", help="synthesize a node-grained micro-batch stream")
    p_split.add_argument("dataset")
    _add_plan_flags(p_split)
    p_split.add_argument("--out", default="-", help="JSONL output path (default stdout)")

    p_stream = sub.add_parser("stream", help="bulk bootstrap plus incremental ingestion")
    p_stream.add_argument("dataset")
    _add_plan_flags(p_stream)
    _add_config_flags(p_stream)
    p_stream.add_argument("--compare", action="store_true",
                          help="also run the static pipeline from scratch per batch")
    p_stream.add_argument("--communities-out", help="final community TSV output path")
    p_stream.add_argument("--metrics-out", default="-",
                          help="metrics JSONL output path (default stdout)")
    p_stream.add_argument("--csv-out", help="metrics CSV output path")

    p_score = sub.add_parser("score", help="re-score a community TSV against a dataset")
    p_score.add_argument("dataset")
    p_score.add_argument("communities")
    p_score.add_argument("--oracle", action="store_true",
                         help="score with the brute-force reference instead of the fast path")
    p_score.add_argument("--workers", type=int, default=1)
    return parser


def _cmd_stats(args) -> int:
    g = canonicalize(parse_edge_list(args.dataset))
    stats = compute_vertex_stats(g, workers=args.workers)
    gs = compute_global_stats(g, stats)
    print(json.dumps({
        "n": g.n,
        "m": g.m,
        "triangles": gs.total_triangles,
        "mean_clustering": gs.mean_clustering,
    }, sort_keys=True))
    return 0


def _cmd_detect(args) -> int:
    report, partition, g = run_static(
        args.dataset, _config(args), args.center_rounds, dataset_name=args.dataset
    )
    _write(args.communities_out, dump_communities(partition, g.labels))
    if args.metrics_out:
        _write(args.metrics_out, report.to_jsonl())
    if args.csv_out:
        _write(args.csv_out, report.to_csv())
    rec = report.records[0]
    print(f"communities={partition.n_communities()} wcc={rec['wcc']:.6f} "
          f"time={rec['time_total']:.3f}s", file=sys.stderr)
    return 0


def _cmd_split(args) -> int:
    edges = parse_edge_list(args.dataset)
    result = split_into_batches(edges, _plan(args))
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    lines = [json.dumps({
        "kind": "bulk",
        "vertices": list(result.bulk_vertices),
        "edges": [list(e) for e in result.bulk_edges],
    }, sort_keys=True)]
    for i, batch in enumerate(result.batches):
        lines.append(json.dumps({
            "kind": "batch",
            "index": i,
            "new_vertices": sorted(batch.new_vertices),
            "edges": [list(e) for e in batch.edges],
        }, sort_keys=True))
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_stream(args) -> int:
    edges = parse_edge_list(args.dataset)
    report, state, split = run_stream(
        edges, _plan(args), _config(args),
        compare=args.compare, center_rounds=args.center_rounds,
        dataset_name=args.dataset,
    )
    for warning in split.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _write(args.metrics_out, report.to_jsonl())
    if args.csv_out:
        _write(args.csv_out, report.to_csv())
    if args.communities_out:
        _write(args.communities_out,
               dump_communities(state.partition, state.graph.labels))
    last = report.records[-1]
    print(f"epochs={len(report.records)} n={state.graph.n} m={state.graph.m} "
          f"final_wcc={last['wcc']:.6f}", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    g = canonicalize(parse_edge_list(args.dataset))
    mapping = read_communities(args.communities)
    if args.oracle:
        P = partition_from_labels(g, mapping)
        value = wcc_global_oracle(P, g)
    else:
        value = score_communities(g, mapping, workers=args.workers)
    print(json.dumps({"wcc": value}, sort_keys=True))
    return 0


_COMMANDS = {
    "stats": _cmd_stats,
    "detect": _cmd_detect,
    "split": _cmd_split,
    "stream": _cmd_stream,
    "score": _cmd_score,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:  # out-of-range flag values are usage errors, not data errors
        if hasattr(args, "bulk_fraction"):
            _plan(args)
        if hasattr(args, "max_iterations"):
            _config(args)
    except ValueError as err:
        parser.error(str(err))
    try:
        return _COMMANDS[args.command](args)
    except (EdgeListParseError, ContractViolation, ValueError, OSError) as err:
        print(f"wccluster: error: {err}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
