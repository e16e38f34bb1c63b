"""Hill-climbing partition refinement with synchronized movement sweeps.

Each iteration evaluates, for every vertex against an immutable partition
snapshot, the best of: staying put, leaving for a fresh singleton, or
transferring to a community containing at least one neighbor. All chosen
movements are then applied atomically (two-phase superstep: the evaluation
phase is embarrassingly parallel, the commit is single-writer).

Two gain evaluators exist. The exact one re-scores the affected vertices
(the mover plus the source and target communities; nothing else can change)
and is the correctness baseline. The heuristic one prices a movement in
O(1) per candidate from statistics that are already maintained or cheaply
aggregated per sweep: the vertex's edge split toward the community, the
community's size, boundary, density and mean member triangle counts, the
mover's own triangle counts, and the graph's mean clustering coefficient.
It never recomputes triangles or walks adjacency lists.

Gains are in sum form (change of the summed per-vertex score, i.e. the
average times n); the argmax is unaffected by the positive scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from ._parallel import chunked_map
from .errors import ContractViolation
from .graph import Graph, GraphView, GlobalStats, VertexStatsMap, compute_global_stats
from .metric import (
    CommunityStats,
    Partition,
    community_stats,
    vertex_links,
    wcc_global,
    wcc_vertex,
)

STAY: Literal["stay"] = "stay"
REMOVE: Literal["remove"] = "remove"
TRANSFER: Literal["transfer"] = "transfer"

Action = Literal["stay", "remove", "transfer"]


@dataclass(frozen=True)
class Movement:
    """One vertex's chosen action for the current sweep."""

    vertex: int
    action: Action
    target: int | None = None
    gain: float = 0.0


@dataclass(frozen=True)
class RefineConfig:
    """Knobs of the refinement loop.

    With ``wcc_check`` on, the global score is evaluated every iteration,
    the best-scoring partition wins, and the loop stops early once an
    accepted improvement falls below ``improvement_threshold`` (see
    :func:`refine` for the interference handling per gain mode). With it
    off, exactly ``max_iterations`` sweeps run blind.
    """

    max_iterations: int = 5
    wcc_check: bool = True
    improvement_threshold: float = 1e-3
    gain_mode: Literal["exact", "heuristic"] = "exact"
    workers: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.improvement_threshold < 0:
            raise ValueError("improvement_threshold must be >= 0")
        if self.gain_mode not in ("exact", "heuristic"):
            raise ValueError(f"unknown gain_mode {self.gain_mode!r}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    moved: int
    wcc: float | None = None
    accepted: bool = True


@dataclass
class RefineTrace:
    records: list[IterationRecord] = field(default_factory=list)
    initial_wcc: float | None = None
    final_wcc: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def movement_counts(self) -> list[int]:
        return [r.moved for r in self.records]


# ---------------------------------------------------------------------------
# exact gains
# ---------------------------------------------------------------------------

def _score_members(members: Iterable[int], comm: set[int], g, stats) -> float:
    return math.fsum(wcc_vertex(y, comm, g, stats) for y in sorted(members))


def movement_gain_exact(
    x: int,
    action: Action,
    target: int | None,
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
) -> float:
    """Exact change of the summed per-vertex score under the hypothetical move.

    Only the mover and the members of the source and target communities are
    re-scored: any other vertex keeps its community, its graph-wide triangle
    terms, and its community's membership, so its score cannot change.
    """
    own = P.community_of(x)
    if action == STAY:
        return 0.0
    source = P.members(own)
    if action == REMOVE:
        if len(source) == 1:
            return 0.0
        reduced = set(source) - {x}
        before = _score_members(source, set(source), g, stats)
        after = _score_members(reduced, reduced, g, stats) + wcc_vertex(x, {x}, g, stats)
        return after - before
    if action != TRANSFER or target is None:
        raise ValueError(f"invalid action {action!r}")
    if target == own:
        return 0.0
    dest = P.members(target)
    before = _score_members(source, set(source), g, stats) + _score_members(
        dest, set(dest), g, stats
    )
    reduced = set(source) - {x}
    grown = set(dest) | {x}
    after = _score_members(reduced, reduced, g, stats) + _score_members(
        grown, grown, g, stats
    )
    return after - before


# ---------------------------------------------------------------------------
# heuristic gains
# ---------------------------------------------------------------------------

_EPS = 1e-300


def _pairs(k: np.ndarray) -> np.ndarray:
    return np.maximum(k * (k - 1.0) / 2.0, 0.0)


def _insertion_gain_arrays(
    d_in: np.ndarray,
    d_out: np.ndarray,
    r: np.ndarray,
    density: np.ndarray,
    boundary: np.ndarray,
    member_triangles: np.ndarray,
    member_partners: np.ndarray,
    mover_triangles: np.ndarray,
    mover_partners: np.ndarray,
    omega: float,
) -> np.ndarray:
    """Modeled score change of inserting a vertex into a community.

    Three contributions: members adjacent to the mover gain internal
    triangles and trade an external triangle partner for an internal one,
    members not adjacent only see their community grow, and the mover itself
    starts scoring against the community it joins.

    The model treats the community as a homogeneous quasi-clique (pairwise
    adjacency at rate `density`, wedges closing at rate `density * omega`,
    the boundary spread evenly over members), but every total is anchored to
    the maintained per-vertex triangle statistics: the mover's own triangle
    and partner counts, and the mean counts over community members. No
    adjacency or triangle recomputation happens here.
    """
    d_in = np.asarray(d_in, dtype=np.float64)
    d_out = np.asarray(d_out, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    density = np.asarray(density, dtype=np.float64)
    boundary = np.asarray(boundary, dtype=np.float64)
    t_y = np.asarray(member_triangles, dtype=np.float64)
    vt_y = np.asarray(member_partners, dtype=np.float64)
    t_x = np.asarray(mover_triangles, dtype=np.float64)
    vt_x = np.asarray(mover_partners, dtype=np.float64)

    closure = density * omega

    # a typical current member: estimated internal split of its true totals
    p = density * np.maximum(r - 1.0, 0.0)
    e = boundary / np.maximum(r, 1.0)
    t_in_y = np.minimum(closure * _pairs(p), t_y)
    vt_in_y = np.minimum(
        p
        * (
            1.0
            - (1.0 - closure) ** np.maximum(p - 1.0, 0.0) * (1.0 - omega) ** e
        ),
        vt_y,
    )
    vt_out_y = vt_y - vt_in_y

    before = np.where(
        t_y > 0.0,
        (t_in_y / np.maximum(t_y, _EPS))
        * vt_y
        / np.maximum(r - 1.0 + vt_out_y, _EPS),
        0.0,
    )
    # non-adjacent member: only the denominator grows
    after_far = np.where(
        t_y > 0.0,
        (t_in_y / np.maximum(t_y, _EPS)) * vt_y / np.maximum(r + vt_out_y, _EPS),
        0.0,
    )
    theta2 = after_far - before

    # the mover: internal triangles it would keep, anchored to its true counts
    t_in_x = np.minimum(closure * _pairs(d_in), t_x)
    vt_in_x = np.minimum(
        d_in
        * (
            1.0
            - (1.0 - closure) ** np.maximum(d_in - 1.0, 0.0)
            * (1.0 - omega) ** d_out
        ),
        vt_x,
    )
    vt_out_x = vt_x - vt_in_x
    theta3 = np.where(
        t_x > 0.0,
        (t_in_x / np.maximum(t_x, _EPS)) * vt_x / np.maximum(r + vt_out_x, _EPS),
        0.0,
    )

    # adjacent member: the mover's internal triangles are shared with two
    # adjacent members each, and it stops counting as an external partner
    tau = 2.0 * t_in_x / np.maximum(d_in, 1.0)
    a_xy = np.minimum(vt_in_x / np.maximum(d_in, 1.0), 1.0)
    t_all_adj = np.maximum(t_y, t_in_y + tau)
    after_adj = np.where(
        t_all_adj > 0.0,
        ((t_in_y + tau) / np.maximum(t_all_adj, _EPS))
        * vt_y
        / np.maximum(r + np.maximum(vt_out_y - a_xy, 0.0), _EPS),
        0.0,
    )
    theta1 = np.where(t_x > 0.0, after_adj - before, theta2)

    return d_in * theta1 + (r - d_in) * theta2 + theta3


def _member_means(
    cid: int, P: Partition, stats: VertexStatsMap, exclude: int | None = None
) -> tuple[float, float]:
    """Mean triangle and partner counts over a community's members."""
    mem = P.members(cid)
    count = len(mem) - (1 if exclude in mem else 0)
    if count <= 0:
        return 0.0, 0.0
    t_sum = sum(int(stats.triangles[v]) for v in sorted(mem) if v != exclude)
    vt_sum = sum(int(stats.triangle_neighbors[v]) for v in sorted(mem) if v != exclude)
    return t_sum / count, vt_sum / count


def _scalar_insertion_gain(
    d_in: int,
    d_out: int,
    r: int,
    density: float,
    boundary: int,
    member_means: tuple[float, float],
    x: int,
    stats: VertexStatsMap,
    omega: float,
) -> float:
    out = _insertion_gain_arrays(
        np.array([d_in], dtype=np.float64),
        np.array([d_out], dtype=np.float64),
        np.array([r], dtype=np.float64),
        np.array([density], dtype=np.float64),
        np.array([boundary], dtype=np.float64),
        np.array([member_means[0]], dtype=np.float64),
        np.array([member_means[1]], dtype=np.float64),
        np.array([int(stats.triangles[x])], dtype=np.float64),
        np.array([int(stats.triangle_neighbors[x])], dtype=np.float64),
        omega,
    )
    return float(out[0])


def movement_gain_heuristic(
    x: int,
    action: Action,
    target: int | None,
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    global_stats: GlobalStats | None = None,
    community_statistics: dict[int, CommunityStats] | None = None,
) -> float:
    """Approximate movement gain from aggregate statistics only.

    Removal is priced as the negated insertion into the mover's community
    without it; a transfer composes that removal with an insertion into the
    target. Inputs are the mover's edge split, the communities' size,
    boundary and density aggregates, the graph's mean clustering, and the
    maintained (never recomputed) triangle statistics of the mover and the
    community members.
    """
    if action == STAY:
        return 0.0
    if global_stats is None:
        global_stats = compute_global_stats(g, stats)
    if community_statistics is None:
        community_statistics = community_stats(P, g)
    omega = global_stats.mean_clustering
    own = P.community_of(x)
    own_cs = community_statistics[own]
    own_link = vertex_links(x, own, P, g)
    r_m = own_cs.size - 1
    internal_m = own_cs.internal_edges - own_link.edges_inside
    boundary_m = own_cs.boundary_edges - own_link.edges_outside + own_link.edges_inside
    density_m = internal_m / (r_m * (r_m - 1) / 2) if r_m >= 2 else 0.0
    remove_gain = -_scalar_insertion_gain(
        own_link.edges_inside,
        own_link.edges_outside,
        r_m,
        density_m,
        boundary_m,
        _member_means(own, P, stats, exclude=x),
        x,
        stats,
        omega,
    )
    if action == REMOVE:
        if own_cs.size == 1:
            return 0.0
        return remove_gain
    if action != TRANSFER or target is None:
        raise ValueError(f"invalid action {action!r}")
    if target == own:
        return 0.0
    link = vertex_links(x, target, P, g)
    tcs = community_statistics[target]
    return remove_gain + _scalar_insertion_gain(
        link.edges_inside,
        link.edges_outside,
        tcs.size,
        tcs.density,
        tcs.boundary_edges,
        _member_means(target, P, stats),
        x,
        stats,
        omega,
    )


# ---------------------------------------------------------------------------
# best movement and sweep
# ---------------------------------------------------------------------------

def _neighbor_communities(x: int, P: Partition, g: Graph | GraphView) -> list[int]:
    assignment = P.assignment
    own = int(assignment[x])
    return sorted({int(assignment[y]) for y in g.neighbors(x)} - {own})


def best_movement(
    x: int,
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    cfg: RefineConfig,
    global_stats: GlobalStats | None = None,
    community_statistics: dict[int, CommunityStats] | None = None,
) -> Movement:
    """Best of Stay / Remove / Transfer-to-neighboring-community for one vertex.

    Ties break toward Stay, then Remove, then the lowest target community id.
    """
    if cfg.gain_mode == "exact":
        def gain(action: Action, target: int | None) -> float:
            return movement_gain_exact(x, action, target, P, g, stats)
    else:
        if global_stats is None:
            global_stats = compute_global_stats(g, stats)
        if community_statistics is None:
            community_statistics = community_stats(P, g)

        def gain(action: Action, target: int | None) -> float:
            return movement_gain_heuristic(
                x, action, target, P, g, stats, global_stats, community_statistics
            )

    best = Movement(vertex=x, action=STAY, gain=0.0)
    candidate = Movement(vertex=x, action=REMOVE, gain=gain(REMOVE, None))
    if candidate.gain > best.gain:
        best = candidate
    for cid in _neighbor_communities(x, P, g):
        candidate = Movement(vertex=x, action=TRANSFER, target=cid, gain=gain(TRANSFER, cid))
        if candidate.gain > best.gain:
            best = candidate
    return best


def _heuristic_movements(
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    global_stats: GlobalStats,
    include_stay: bool = True,
) -> list[Movement]:
    """Vectorized best movements for every vertex against one snapshot.

    Produces exactly what per-vertex :func:`best_movement` would in
    heuristic mode, in one numpy pass. With ``include_stay`` off only the
    non-stay movements are materialized (the sweep's implicit default).
    """
    n = g.n
    assignment = P.assignment
    ids = np.asarray(P.community_ids(), dtype=np.int64)
    K = len(ids)
    comp = np.searchsorted(ids, assignment)

    r = np.bincount(comp, minlength=K).astype(np.float64)
    us, vs = g.edge_arrays()
    if len(us):
        cu, cv = comp[us], comp[vs]
        same = cu == cv
        internal = np.bincount(cu[same], minlength=K).astype(np.float64)
        boundary = (
            np.bincount(cu[~same], minlength=K) + np.bincount(cv[~same], minlength=K)
        ).astype(np.float64)
    else:
        internal = np.zeros(K)
        boundary = np.zeros(K)
    capacity = np.maximum(r * (r - 1.0) / 2.0, 1.0)
    density = np.where(r >= 2.0, internal / capacity, 0.0)
    omega = global_stats.mean_clustering

    triangles = stats.triangles.astype(np.float64)
    partners = stats.triangle_neighbors.astype(np.float64)
    sum_t = np.bincount(comp, weights=triangles, minlength=K)
    sum_vt = np.bincount(comp, weights=partners, minlength=K)
    mean_t = sum_t / np.maximum(r, 1.0)
    mean_vt = sum_vt / np.maximum(r, 1.0)

    indptr, flat_nbrs = g.adjacency_csr()
    nbr_counts = np.diff(indptr)
    degrees = nbr_counts.astype(np.float64)
    row_ids = np.repeat(np.arange(n, dtype=np.int64), nbr_counts)
    keys = row_ids * K + comp[flat_nbrs]
    uniq, counts = np.unique(keys, return_counts=True)
    cand_row = uniq // K
    cand_comp = uniq % K
    cand_din = counts.astype(np.float64)

    own_keys = np.arange(n, dtype=np.int64) * K + comp
    pos = np.searchsorted(uniq, own_keys)
    pos_ok = (pos < len(uniq))
    safe_pos = np.where(pos_ok, pos, 0)
    own_din = np.where(
        pos_ok & (uniq[safe_pos] == own_keys) if len(uniq) else np.zeros(n, bool),
        counts[safe_pos] if len(uniq) else 0,
        0,
    ).astype(np.float64)

    # removal: price re-inserting into own community without self, negated
    r_own = r[comp]
    r_minus = r_own - 1.0
    int_minus = internal[comp] - own_din
    b_minus = boundary[comp] - (degrees - own_din) + own_din
    cap_minus = np.maximum(r_minus * (r_minus - 1.0) / 2.0, 1.0)
    density_minus = np.where(r_minus >= 2.0, int_minus / cap_minus, 0.0)
    safe_r_minus = np.maximum(r_minus, 1.0)
    mean_t_minus = np.where(r_minus > 0.0, (sum_t[comp] - triangles) / safe_r_minus, 0.0)
    mean_vt_minus = np.where(r_minus > 0.0, (sum_vt[comp] - partners) / safe_r_minus, 0.0)
    remove_gain = -_insertion_gain_arrays(
        own_din,
        degrees - own_din,
        r_minus,
        density_minus,
        b_minus,
        mean_t_minus,
        mean_vt_minus,
        triangles,
        partners,
        omega,
    )

    other = cand_comp != comp[cand_row]
    t_row = cand_row[other]
    t_comp = cand_comp[other]
    t_din = cand_din[other]
    insert_gain = _insertion_gain_arrays(
        t_din,
        degrees[t_row] - t_din,
        r[t_comp],
        density[t_comp],
        boundary[t_comp],
        mean_t[t_comp],
        mean_vt[t_comp],
        triangles[t_row],
        partners[t_row],
        omega,
    )
    transfer_gain = remove_gain[t_row] + insert_gain

    singleton = r_own <= 1.0
    remove_eff = np.where(singleton, 0.0, remove_gain)

    rows = np.concatenate([np.arange(n), np.arange(n), t_row])
    gains = np.concatenate([np.zeros(n), remove_eff, transfer_gain])
    prio = np.concatenate(
        [np.zeros(n, np.int8), np.ones(n, np.int8), np.full(len(t_row), 2, np.int8)]
    )
    targets = np.concatenate(
        [np.full(n, -1, np.int64), np.full(n, -1, np.int64), ids[t_comp]]
    )
    order = np.lexsort((targets, prio, -gains, rows))
    first = np.unique(rows[order], return_index=True)[1]
    chosen = order[first]

    movements: list[Movement] = []
    for idx in chosen:
        v = int(rows[idx])
        p = int(prio[idx])
        if p == 0:
            if include_stay:
                movements.append(Movement(vertex=v, action=STAY, gain=0.0))
        elif p == 1:
            movements.append(Movement(vertex=v, action=REMOVE, gain=float(gains[idx])))
        else:
            movements.append(
                Movement(
                    vertex=v,
                    action=TRANSFER,
                    target=int(targets[idx]),
                    gain=float(gains[idx]),
                )
            )
    return movements


def compute_all_movements(
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    cfg: RefineConfig,
    global_stats: GlobalStats | None = None,
) -> list[Movement]:
    """Best movement for every vertex against the same snapshot of P.

    Per-vertex decisions are independent, so the result does not depend on
    evaluation order or worker count.
    """
    if cfg.gain_mode == "heuristic":
        if global_stats is None:
            global_stats = compute_global_stats(g, stats)
        return _heuristic_movements(P, g, stats, global_stats)
    return chunked_map(
        lambda x: best_movement(x, P, g, stats, cfg),
        range(g.n),
        workers=cfg.workers,
    )


def _sweep_movements(
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    cfg: RefineConfig,
    global_stats: GlobalStats | None,
) -> list[Movement]:
    """Non-stay movements of one sweep (absent vertices implicitly stay)."""
    if cfg.gain_mode == "heuristic":
        if global_stats is None:
            global_stats = compute_global_stats(g, stats)
        return _heuristic_movements(P, g, stats, global_stats, include_stay=False)
    return [
        m
        for m in chunked_map(
            lambda x: best_movement(x, P, g, stats, cfg),
            range(g.n),
            workers=cfg.workers,
        )
        if m.action != STAY
    ]


def apply_movements(P: Partition, movements: Sequence[Movement]) -> Partition:
    """Apply one sweep's movements atomically against the snapshot they used.

    At most one movement per vertex. Removals allocate fresh singleton ids
    in vertex order; communities emptied by the sweep disappear. Removing
    from a snapshot singleton is a no-op.
    """
    seen: set[int] = set()
    for m in movements:
        if m.vertex in seen:
            raise ContractViolation(f"duplicate movement for vertex {m.vertex}")
        if not 0 <= m.vertex < P.n_vertices:
            raise ContractViolation(f"movement for unknown vertex {m.vertex}")
        seen.add(m.vertex)

    snapshot = P.assignment
    if len(snapshot):
        ids, counts = np.unique(snapshot, return_counts=True)
        size_of = {int(c): int(k) for c, k in zip(ids, counts)}
    else:
        size_of = {}

    assignment = snapshot.copy()
    next_id = P.next_id
    for m in sorted(movements, key=lambda m: m.vertex):
        if m.action == STAY:
            continue
        if m.action == REMOVE:
            if size_of[int(snapshot[m.vertex])] == 1:
                continue
            assignment[m.vertex] = next_id
            next_id += 1
        elif m.action == TRANSFER:
            if m.target is None or m.target not in size_of:
                raise ContractViolation(
                    f"transfer of vertex {m.vertex} targets unknown community {m.target}"
                )
            assignment[m.vertex] = m.target
        else:
            raise ContractViolation(f"unknown action {m.action!r}")
    return Partition(assignment, None, next_id)


def refine(
    P0: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    cfg: RefineConfig,
    global_stats: GlobalStats | None = None,
) -> tuple[Partition, RefineTrace]:
    """Run movement sweeps until the configured stop rule fires.

    With ``wcc_check`` on, the global score is measured after each sweep and
    the best-scoring partition seen is what gets returned. A sweep that sets
    a new best is accepted; once an accepted improvement falls below the
    relative threshold the climb stops. Simultaneous movements can interfere
    and lower the score: under exact gains such a sweep is rolled back and
    the climb stops (the accepted score sequence is strictly a hill climb),
    while under heuristic gains sweeping continues through the dip, since
    later sweeps routinely recover it, and the best state still wins.

    With ``wcc_check`` off, exactly ``max_iterations`` sweeps run blind with
    no score evaluation at all.
    """
    if cfg.gain_mode == "heuristic" and global_stats is None:
        global_stats = compute_global_stats(g, stats)

    P = P0
    trace = RefineTrace()
    if not cfg.wcc_check:
        for iteration in range(1, cfg.max_iterations + 1):
            movements = _sweep_movements(P, g, stats, cfg, global_stats)
            P = apply_movements(P, movements)
            trace.records.append(IterationRecord(iteration, len(movements), None))
        return P, trace

    w_best = wcc_global(P, g, stats, workers=cfg.workers)
    best_P = P
    trace.initial_wcc = w_best

    for iteration in range(1, cfg.max_iterations + 1):
        movements = _sweep_movements(P, g, stats, cfg, global_stats)
        moved = len(movements)
        P_next = apply_movements(P, movements)
        w_next = wcc_global(P_next, g, stats, workers=cfg.workers)

        if w_next > w_best:
            relative = (w_next - w_best) / w_best if w_best > 0 else math.inf
            best_P, w_best = P_next, w_next
            P = P_next
            trace.records.append(IterationRecord(iteration, moved, w_next))
            if relative < cfg.improvement_threshold:
                break
        else:
            trace.records.append(IterationRecord(iteration, moved, w_next, accepted=False))
            if cfg.gain_mode == "exact":
                break
            P = P_next

    trace.final_wcc = w_best
    return best_P, trace
