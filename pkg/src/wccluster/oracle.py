"""Brute-force reference implementations used as correctness baselines.

Everything here is computed from scratch by enumerating vertex triples over
a privately rebuilt adjacency structure: no triangle counts, neighbor
caches, or partial sums are shared with the fast paths these functions
check. Cubic cost, so a vertex cap guards against accidental misuse.
"""

from __future__ import annotations

import math
from typing import Iterable

from .graph import Graph, GraphView
from .metric import Partition

ORACLE_VERTEX_CAP = 2000


def _own_adjacency(g: Graph | GraphView) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in g.edges():
        adj[u].add(v)
        adj[v].add(u)
    return adj


def _check_cap(g: Graph | GraphView, cap: int) -> None:
    if g.n > cap:
        raise ValueError(
            f"oracle refuses graphs with more than {cap} vertices (got {g.n}); "
            "it exists for tests, not production runs"
        )


def enumerate_triangles(g: Graph | GraphView, cap: int = ORACLE_VERTEX_CAP) -> list[tuple[int, int, int]]:
    """All triangles as (i, j, k) triples with i < j < k, by full triple enumeration."""
    _check_cap(g, cap)
    adj = _own_adjacency(g)
    n = g.n
    out: list[tuple[int, int, int]] = []
    for i in range(n):
        for j in range(i + 1, n):
            if j not in adj[i]:
                continue
            for k in range(j + 1, n):
                if k in adj[i] and k in adj[j]:
                    out.append((i, j, k))
    return out


def triangle_count_oracle(g: Graph | GraphView, cap: int = ORACLE_VERTEX_CAP) -> dict[int, int]:
    """Per-vertex triangle counts from the full triangle list."""
    counts = {v: 0 for v in range(g.n)}
    for i, j, k in enumerate_triangles(g, cap):
        counts[i] += 1
        counts[j] += 1
        counts[k] += 1
    return counts


def triangle_partners_oracle(g: Graph | GraphView, cap: int = ORACLE_VERTEX_CAP) -> dict[int, set[int]]:
    """For each vertex, the set of vertices it shares at least one triangle with."""
    partners: dict[int, set[int]] = {v: set() for v in range(g.n)}
    for i, j, k in enumerate_triangles(g, cap):
        partners[i].update((j, k))
        partners[j].update((i, k))
        partners[k].update((i, j))
    return partners


def wcc_vertex_oracle(
    x: int,
    community: Iterable[int],
    g: Graph | GraphView,
    cap: int = ORACLE_VERTEX_CAP,
) -> float:
    """Score of x in its community, every term from scratch triple enumeration."""
    comm = set(community)
    if x not in comm:
        raise ValueError(f"vertex {x} is not a member of the given community")
    triangles = enumerate_triangles(g, cap)
    t_all = 0
    t_in = 0
    partners: set[int] = set()
    for tri in triangles:
        if x not in tri:
            continue
        others = [v for v in tri if v != x]
        t_all += 1
        partners.update(others)
        if others[0] in comm and others[1] in comm:
            t_in += 1
    if t_all == 0:
        return 0.0
    vt_all = len(partners)
    vt_out = len(partners - comm)
    denom = (len(comm) - 1) + vt_out
    return (t_in / t_all) * (vt_all / denom)


def wcc_global_oracle(P: Partition, g: Graph | GraphView, cap: int = ORACLE_VERTEX_CAP) -> float:
    """Graph-level score by full triple enumeration; baseline for every fast path."""
    _check_cap(g, cap)
    n = g.n
    if n == 0:
        return 0.0
    triangles = enumerate_triangles(g, cap)
    per_vertex: list[float] = []
    for x in range(n):
        comm = P.members(P.community_of(x))
        t_all = 0
        t_in = 0
        partners: set[int] = set()
        for tri in triangles:
            if x not in tri:
                continue
            others = [v for v in tri if v != x]
            t_all += 1
            partners.update(others)
            if others[0] in comm and others[1] in comm:
                t_in += 1
        if t_all == 0:
            per_vertex.append(0.0)
            continue
        vt_out = len(partners - set(comm))
        denom = (len(comm) - 1) + vt_out
        per_vertex.append((t_in / t_all) * (len(partners) / denom))
    return math.fsum(per_vertex) / n
