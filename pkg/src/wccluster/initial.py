"""Initial community assignment around high-clustering centers.

A greedy sweep over vertices ordered by descending local clustering
coefficient seeds one community per unvisited vertex and pulls in its
unvisited neighbors. The incremental variant runs the same sweep over the
full vertex order but only ever reassigns the designated new-or-border
vertices; everything else anchors its existing community.

Both sweeps are meant to run on the triangle-filtered view, so vertices in
no triangle come out as singletons. The greedy sweep is order-dependent and
therefore sequential by contract; center refinement is round-based with a
barrier between rounds.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation
from .graph import Graph, GraphView, VertexStatsMap
from .metric import Partition


def sort_key(v: int, stats: VertexStatsMap) -> tuple[float, int, int]:
    """Total order used everywhere a 'highest clustering' choice is made.

    Clustering coefficient descending, degree descending, id ascending;
    expressed so that bigger tuples win.
    """
    return (float(stats.clustering[v]), int(stats.degrees[v]), -v)


def vertex_order(stats: VertexStatsMap) -> list[int]:
    """All vertices sorted best-first under :func:`sort_key`. Stable across runs."""
    order = np.lexsort(
        (np.arange(stats.n), -stats.degrees, -stats.clustering)
    )
    return order.tolist()


def initial_partition_static(g: Graph | GraphView, stats: VertexStatsMap) -> Partition:
    """Greedy full partition: each unvisited vertex in order seeds a community
    containing itself and its unvisited neighbors.

    The seed is the community's center and always carries the maximal sort
    key among members, because recruits necessarily come later in the order.
    """
    n = g.n
    order = vertex_order(stats)
    visited = bytearray(n)
    assignment = np.empty(n, dtype=np.int64)
    members: dict[int, set[int]] = {}
    next_id = 0
    for v in order:
        if visited[v]:
            continue
        visited[v] = 1
        cid = next_id
        next_id += 1
        comm = {v}
        for u in g.neighbors(v):
            if not visited[u]:
                visited[u] = 1
                comm.add(u)
        for w in comm:
            assignment[w] = cid
        members[cid] = comm
    return Partition(assignment, members, next_id)


def initial_partition_incremental(
    P_prev: Partition,
    new_and_border: set[int],
    g: Graph | GraphView,
    stats: VertexStatsMap,
) -> Partition:
    """Restricted sweep after a micro-batch merge.

    Precondition: every vertex in ``new_and_border`` is currently a
    singleton (the merge isolated border vertices and added new ones as
    singletons). The sweep walks the full order; an unvisited vertex from
    the restricted set seeds with its own singleton community, an unvisited
    old vertex anchors its previous community, and in either case unvisited
    restricted neighbors join the current community. Old vertices are never
    reassigned.
    """
    n = g.n
    for v in new_and_border:
        if len(P_prev.members(P_prev.community_of(v))) != 1:
            raise ContractViolation(
                f"vertex {v} must enter restricted partitioning as a singleton"
            )
    P = P_prev.copy()
    visited = bytearray(n)
    for v in vertex_order(stats):
        if visited[v]:
            continue
        visited[v] = 1
        cid = P.community_of(v)
        for u in g.neighbors(v):
            if not visited[u]:
                visited[u] = 1
                if u in new_and_border:
                    P.move_vertex(u, cid)
    return P


def community_centers(P: Partition, stats: VertexStatsMap) -> dict[int, int]:
    """Center of each community: the member with the maximal sort key."""
    return {
        cid: max(P.members(cid), key=lambda v: sort_key(v, stats))
        for cid in P.community_ids()
    }


def refine_centers(
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    max_rounds: int = 10,
) -> Partition:
    """Iteratively pull border vertices toward better neighboring centers.

    In each round every non-center vertex looks at neighboring vertices that
    are centers of their own communities; if the best of them beats its own
    community's center under the sort order, it moves there. Rounds repeat
    until a fixpoint or ``max_rounds``. Each move strictly increases the
    mover's adopted center key, so a fixpoint is always reached.
    """
    P = P.copy()
    for _ in range(max_rounds):
        centers = community_centers(P, stats)
        is_center = bytearray(g.n)
        for c in centers.values():
            is_center[c] = 1
        moves: list[tuple[int, int]] = []
        for y in range(g.n):
            own_center = centers[P.community_of(y)]
            if y == own_center:
                continue
            own_key = sort_key(own_center, stats)
            best = None
            best_key = own_key
            for z in g.neighbors(y):
                if is_center[z]:
                    z_key = sort_key(z, stats)
                    if z_key > best_key:
                        best = z
                        best_key = z_key
            if best is not None:
                moves.append((y, P.community_of(best)))
        if not moves:
            break
        for y, cid in moves:
            P.move_vertex(y, cid)
    return P
