"""Community partitions and the triangle-based community clustering metric.

A vertex's score inside its community is the fraction of its triangles kept
inside the community, damped by how much of its triangle neighborhood the
community fails to capture:

    score(x, C) = (t_in / t_all) * (vt_all / (|C \\ {x}| + vt_out))

where t_in counts triangles through x with both other endpoints in C, t_all
all triangles through x, vt_all the vertices forming at least one triangle
with x, and vt_out those of them outside C (the third vertex of a qualifying
triangle may lie anywhere in the graph). A vertex in no triangle scores 0.
The graph-level score is the average over all vertices.

Triangle terms are invariant under the triangle filter, so these functions
accept either the authoritative graph or its filtered view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ._parallel import chunked_map
from .graph import Graph, GraphView, VertexStatsMap


class Partition:
    """Total assignment of vertices to communities.

    Mutating methods are engine plumbing; treat instances handed to you as
    read-only snapshots. Community ids are non-negative ints, stable within
    an engine epoch; fresh singletons always get previously unused ids. The
    assignment array is authoritative; member sets are materialized from it
    on first use so that sweep-heavy loops that never touch them stay cheap.
    """

    __slots__ = ("_assignment", "_members", "_next_id")

    def __init__(
        self,
        assignment: np.ndarray,
        members: dict[int, set[int]] | None,
        next_id: int,
    ):
        self._assignment = assignment
        self._members = members
        self._next_id = next_id

    @classmethod
    def from_assignment(cls, assignment: Iterable[int]) -> "Partition":
        arr = np.asarray(list(assignment), dtype=np.int64)
        next_id = (int(arr.max()) + 1) if len(arr) else 0
        return cls(arr, None, next_id)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n, dtype=np.int64), None, n)

    def _member_map(self) -> dict[int, set[int]]:
        if self._members is None:
            members: dict[int, set[int]] = {}
            for v, cid in enumerate(self._assignment):
                members.setdefault(int(cid), set()).add(v)
            self._members = members
        return self._members

    @property
    def n_vertices(self) -> int:
        return len(self._assignment)

    @property
    def assignment(self) -> np.ndarray:
        """Vertex -> community id array; do not modify."""
        return self._assignment

    @property
    def next_id(self) -> int:
        """Smallest community id never used so far."""
        return self._next_id

    def community_of(self, v: int) -> int:
        return int(self._assignment[v])

    def members(self, cid: int) -> set[int]:
        """Member set of a community; do not modify."""
        return self._member_map()[cid]

    def community_ids(self) -> list[int]:
        if self._members is not None:
            return sorted(self._members)
        return np.unique(self._assignment).tolist()

    def n_communities(self) -> int:
        if self._members is not None:
            return len(self._members)
        return len(np.unique(self._assignment))

    def __contains__(self, cid: int) -> bool:
        if self._members is not None:
            return cid in self._members
        return bool(np.any(self._assignment == cid))

    def copy(self) -> "Partition":
        members = (
            {cid: set(mem) for cid, mem in self._members.items()}
            if self._members is not None
            else None
        )
        return Partition(self._assignment.copy(), members, self._next_id)

    def fresh_id(self) -> int:
        cid = self._next_id
        self._next_id += 1
        return cid

    def move_vertex(self, v: int, cid: int) -> None:
        """Reassign v; empties are deleted, unseen target ids are created."""
        old = int(self._assignment[v])
        if old == cid:
            return
        members = self._member_map()
        old_members = members[old]
        old_members.discard(v)
        if not old_members:
            del members[old]
        members.setdefault(cid, set()).add(v)
        self._assignment[v] = cid
        if cid >= self._next_id:
            self._next_id = cid + 1

    def isolate_vertex(self, v: int) -> int:
        """Move v into a fresh singleton community; returns the new id."""
        if len(self.members(self.community_of(v))) == 1:
            return self.community_of(v)
        cid = self.fresh_id()
        self.move_vertex(v, cid)
        return cid

    def extend_singletons(self, count: int) -> list[int]:
        """Append `count` new vertices, each in a fresh singleton community."""
        members = self._member_map()
        start = len(self._assignment)
        new_ids = []
        new_assign = np.empty(start + count, dtype=np.int64)
        new_assign[:start] = self._assignment
        for i in range(count):
            cid = self.fresh_id()
            new_ids.append(cid)
            new_assign[start + i] = cid
            members[cid] = {start + i}
        self._assignment = new_assign
        return new_ids

    def validate(self) -> None:
        seen: set[int] = set()
        for cid, mem in self._member_map().items():
            if not mem:
                raise AssertionError(f"empty community {cid}")
            for v in mem:
                if int(self._assignment[v]) != cid:
                    raise AssertionError(f"assignment/members mismatch at vertex {v}")
                seen.add(v)
        if len(seen) != len(self._assignment):
            raise AssertionError("assignment does not cover every vertex exactly once")
        if len(self._assignment) and int(self._assignment.max()) >= self._next_id:
            raise AssertionError("next_id collides with a live community id")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self._assignment, other._assignment)

    def __repr__(self) -> str:
        return f"Partition(n={self.n_vertices}, communities={self.n_communities()})"


@dataclass(frozen=True)
class CommunityStats:
    """Aggregates of one community: size, boundary edge count, internal edges, density."""

    size: int
    boundary_edges: int
    internal_edges: int
    density: float


@dataclass(frozen=True)
class VertexCommunityLink:
    """Edge split of one vertex against one community: inside vs outside."""

    edges_inside: int
    edges_outside: int


def wcc_vertex(
    x: int,
    community: Iterable[int],
    g: Graph | GraphView,
    stats: VertexStatsMap,
) -> float:
    """Community clustering score of x within its community (member set)."""
    comm = community if isinstance(community, (set, frozenset)) else set(community)
    if x not in comm:
        raise ValueError(f"vertex {x} is not a member of the given community")
    t_all = int(stats.triangles[x])
    if t_all == 0:
        return 0.0
    inside = g.neighbor_set(x) & comm
    t_in = sum(len(g.neighbor_set(y) & inside) for y in inside) // 2
    tn = stats.tn_sets[x]
    vt_all = len(tn)
    vt_out = vt_all - len(tn & comm)
    denom = (len(comm) - 1) + vt_out
    return (t_in / t_all) * (vt_all / denom)


def wcc_global(
    P: Partition,
    g: Graph | GraphView,
    stats: VertexStatsMap,
    workers: int = 1,
) -> float:
    """Average vertex score over the whole graph; 0 for the empty graph.

    Summed with fsum in vertex-id order: bit-identical for any worker count.
    """
    n = g.n
    if n == 0:
        return 0.0
    assignment = P.assignment

    def score(x: int) -> float:
        return wcc_vertex(x, P.members(int(assignment[x])), g, stats)

    values = chunked_map(score, range(n), workers=workers)
    return math.fsum(values) / n


def community_stats(P: Partition, g: Graph | GraphView) -> dict[int, CommunityStats]:
    """Exact size, boundary, internal edge count and density per community."""
    assignment = P.assignment
    us, vs = g.edge_arrays()
    internal: dict[int, int] = {}
    boundary: dict[int, int] = {}
    if len(us):
        cu = assignment[us]
        cv = assignment[vs]
        same = cu == cv
        ids, counts = np.unique(cu[same], return_counts=True)
        internal = {int(c): int(k) for c, k in zip(ids, counts)}
        cross_u = cu[~same]
        cross_v = cv[~same]
        ids, counts = np.unique(np.concatenate([cross_u, cross_v]), return_counts=True)
        boundary = {int(c): int(k) for c, k in zip(ids, counts)}

    out: dict[int, CommunityStats] = {}
    for cid in P.community_ids():
        r = len(P.members(cid))
        inner = internal.get(cid, 0)
        density = inner / (r * (r - 1) / 2) if r >= 2 else 0.0
        out[cid] = CommunityStats(
            size=r,
            boundary_edges=boundary.get(cid, 0),
            internal_edges=inner,
            density=density,
        )
    return out


def vertex_links(
    x: int,
    cid: int,
    P: Partition,
    g: Graph | GraphView,
) -> VertexCommunityLink:
    """Edge counts from x into and out of community cid (x need not belong to it)."""
    assignment = P.assignment
    inside = sum(1 for y in g.neighbors(x) if int(assignment[y]) == cid)
    return VertexCommunityLink(edges_inside=inside, edges_outside=g.degree(x) - inside)


def partition_from_mapping(n: int, mapping: Mapping[int, int]) -> Partition:
    """Partition over n vertices from a vertex -> community mapping (must be total)."""
    if len(mapping) != n or set(mapping) != set(range(n)):
        raise ValueError("mapping must assign every vertex exactly once")
    return Partition.from_assignment(mapping[v] for v in range(n))
