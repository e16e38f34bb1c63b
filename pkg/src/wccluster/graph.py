"""Canonical undirected graph storage and triangle statistics.

The graph is immutable after construction: vertex labels are remapped to
dense ids 0..n-1, self-loops are dropped, duplicate and reversed edges are
merged, and every neighbor list is kept strictly sorted. All per-vertex
triangle statistics (triangle count, triangle-neighbor set, local clustering
coefficient) are computed here, along with the derived view that keeps only
edges participating in at least one triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from ._parallel import chunked_map
from .errors import EdgeListParseError

MAX_LABEL = 2**63 - 1


def clustering_value(triangles: int, degree: int) -> float:
    """Local clustering coefficient; 0 for degree < 2 so the vertex order stays total."""
    if degree < 2:
        return 0.0
    return 2.0 * triangles / (degree * (degree - 1))


class Graph:
    """Canonical undirected graph over dense vertex ids.

    Construct through :func:`canonicalize` or :func:`load_edge_list`; the
    raw constructor trusts its arguments.
    """

    __slots__ = ("_adj", "_adj_sets", "_labels", "_id_of", "_m", "_edge_arrays", "_csr")

    def __init__(
        self,
        adjacency: list[tuple[int, ...]],
        labels: np.ndarray,
        id_of: dict[int, int],
        adj_sets: list[frozenset[int]] | None = None,
    ):
        self._adj = adjacency
        self._adj_sets = (
            adj_sets if adj_sets is not None else [frozenset(nbrs) for nbrs in adjacency]
        )
        self._labels = labels
        self._id_of = id_of
        self._m = sum(len(nbrs) for nbrs in adjacency) // 2
        self._edge_arrays: tuple[np.ndarray, np.ndarray] | None = None
        self._csr: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n(self) -> int:
        return len(self._adj)

    @property
    def m(self) -> int:
        return self._m

    def vertices(self) -> range:
        return range(self.n)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def neighbor_set(self, v: int) -> frozenset[int]:
        return self._adj_sets[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj_sets[u]

    def edges(self) -> Iterator[tuple[int, int]]:
        """All edges as (u, v) pairs with u < v, in lexicographic order."""
        for u in range(self.n):
            for v in self._adj[u]:
                if v > u:
                    yield (u, v)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge endpoints as two parallel int64 arrays (u < v), cached."""
        if self._edge_arrays is None:
            us = np.empty(self.m, dtype=np.int64)
            vs = np.empty(self.m, dtype=np.int64)
            for i, (u, v) in enumerate(self.edges()):
                us[i] = u
                vs[i] = v
            self._edge_arrays = (us, vs)
        return self._edge_arrays

    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) arrays of the sorted adjacency, cached."""
        if self._csr is None:
            self._csr = _build_csr(self._adj)
        return self._csr

    def label_for(self, v: int) -> int:
        return int(self._labels[v])

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def id_for(self, label: int) -> int:
        return self._id_of[label]

    def has_label(self, label: int) -> bool:
        return label in self._id_of

    def extended(self, new_labels: Sequence[int], new_edges: Iterable[tuple[int, int]]) -> "Graph":
        """New graph with extra vertices and edges; existing ids are preserved.

        ``new_labels`` must be previously unseen labels; they get the next ids
        in sorted-label order. ``new_edges`` are label pairs whose endpoints
        all exist afterwards; self-loops and duplicates are dropped. Neighbor
        structures of untouched vertices are shared with this graph, keeping
        the merge proportional to the batch, not the full graph.
        """
        ordered_new = sorted(new_labels)
        id_of = dict(self._id_of)
        for label in ordered_new:
            if label in id_of:
                raise ValueError(f"label {label} already present")
            id_of[label] = len(id_of)
        labels = np.concatenate([self._labels, np.asarray(ordered_new, dtype=np.int64)])

        added: dict[int, set[int]] = {}
        for a, b in new_edges:
            u, v = id_of[a], id_of[b]
            if u == v:
                continue
            added.setdefault(u, set()).add(v)
            added.setdefault(v, set()).add(u)

        adjacency = list(self._adj) + [()] * len(ordered_new)
        adj_sets = list(self._adj_sets) + [frozenset()] * len(ordered_new)
        for u, extra in added.items():
            base = adjacency[u] if u < len(self._adj) else ()
            merged = frozenset(base) | extra
            adjacency[u] = tuple(sorted(merged))
            adj_sets[u] = merged
        return Graph(adjacency, labels, id_of, adj_sets)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


class GraphView:
    """Read-only subgraph sharing the base graph's vertices and labels.

    Used for the triangle filter: same vertex set, restricted edge set. The
    base graph is never modified; an edge absent from the view can re-enter
    a later view once new vertices close a triangle through it.
    """

    __slots__ = ("base", "_adj", "_adj_sets", "_m", "_edge_arrays", "_csr")

    def __init__(
        self,
        base: Graph,
        adjacency: list[tuple[int, ...]],
        adj_sets: list[frozenset[int]] | None = None,
    ):
        self.base = base
        self._adj = adjacency
        self._adj_sets = (
            adj_sets if adj_sets is not None else [frozenset(nbrs) for nbrs in adjacency]
        )
        self._m = sum(len(nbrs) for nbrs in adjacency) // 2
        self._edge_arrays: tuple[np.ndarray, np.ndarray] | None = None
        self._csr: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return self._m

    def vertices(self) -> range:
        return range(self.n)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def neighbor_set(self, v: int) -> frozenset[int]:
        return self._adj_sets[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj_sets[u]

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in self._adj[u]:
                if v > u:
                    yield (u, v)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._edge_arrays is None:
            us = np.empty(self.m, dtype=np.int64)
            vs = np.empty(self.m, dtype=np.int64)
            for i, (u, v) in enumerate(self.edges()):
                us[i] = u
                vs[i] = v
            self._edge_arrays = (us, vs)
        return self._edge_arrays

    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray]:
        if self._csr is None:
            self._csr = _build_csr(self._adj)
        return self._csr

    def label_for(self, v: int) -> int:
        return self.base.label_for(v)

    @property
    def labels(self) -> np.ndarray:
        return self.base.labels

    def id_for(self, label: int) -> int:
        return self.base.id_for(label)

    def __repr__(self) -> str:
        return f"GraphView(n={self.n}, m={self.m})"


def _build_csr(adjacency: list[tuple[int, ...]]) -> tuple[np.ndarray, np.ndarray]:
    counts = np.fromiter((len(nbrs) for nbrs in adjacency), dtype=np.int64,
                         count=len(adjacency))
    indptr = np.zeros(len(adjacency) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    total = int(indptr[-1])
    indices = np.fromiter(
        (u for nbrs in adjacency for u in nbrs), dtype=np.int64, count=total
    )
    return indptr, indices


def canonicalize(
    raw_edges: Iterable[tuple[int, int]],
    extra_vertices: Iterable[int] = (),
) -> Graph:
    """Build a canonical Graph from label pairs.

    Self-loops are dropped, duplicate and reversed duplicates merged, and
    labels densely remapped in sorted order, so any permutation or
    orientation of the same edge multiset yields an identical Graph.
    Idempotent: re-canonicalizing a canonical graph's edges is a no-op.
    """
    label_set: set[int] = set(extra_vertices)
    edge_list: list[tuple[int, int]] = []
    for a, b in raw_edges:
        if a == b:
            continue
        label_set.add(a)
        label_set.add(b)
        edge_list.append((a, b))

    ordered = sorted(label_set)
    id_of = {label: i for i, label in enumerate(ordered)}
    labels = np.asarray(ordered, dtype=np.int64)

    adj_sets: list[set[int]] = [set() for _ in ordered]
    for a, b in edge_list:
        u, v = id_of[a], id_of[b]
        adj_sets[u].add(v)
        adj_sets[v].add(u)
    adjacency = [tuple(sorted(s)) for s in adj_sets]
    return Graph(adjacency, labels, id_of)


def parse_edge_list(source: str | bytes | IO | Iterable) -> list[tuple[int, int]]:
    """Parse SNAP-style edge-list text into label pairs.

    One ``u v`` pair per line, arbitrary whitespace, ``#`` comment lines,
    labels unsigned integers up to 2**63 - 1. Raises
    :class:`EdgeListParseError` with the offending line number.
    """
    if isinstance(source, str):
        with open(source, "rb") as fh:
            lines: Iterable = fh.readlines()
    elif isinstance(source, bytes):
        lines = source.splitlines()
    elif hasattr(source, "read"):
        lines = source.readlines()
    else:
        lines = source

    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            line = raw.decode("utf-8", errors="replace")
        else:
            line = raw
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise EdgeListParseError(f"expected 2 tokens, found {len(tokens)}", lineno)
        pair = []
        for tok in tokens:
            try:
                value = int(tok)
            except ValueError:
                raise EdgeListParseError(f"non-integer token {tok!r}", lineno) from None
            if value < 0 or value > MAX_LABEL:
                raise EdgeListParseError(f"label {value} out of range", lineno)
            pair.append(value)
        edges.append((pair[0], pair[1]))
    return edges


def load_edge_list(source: str | bytes | IO | Iterable) -> Graph:
    """Parse and canonicalize a SNAP edge list. Empty input yields an empty graph."""
    return canonicalize(parse_edge_list(source))


@dataclass(frozen=True)
class VertexStats:
    """Triangle statistics for one vertex."""

    triangles: int
    triangle_neighbors: int
    degree: int
    clustering: float


@dataclass(frozen=True)
class GlobalStats:
    """Graph-level clustering summary: mean local coefficient and triangle total."""

    mean_clustering: float
    total_triangles: int


class VertexStatsMap:
    """Per-vertex triangle statistics, array-backed.

    Covers either all vertices or an explicit subset (``covered``); lookups
    outside the covered set raise. Alongside the counts it keeps each
    vertex's triangle-neighbor set, which doubles as the adjacency of the
    triangle-filtered view.
    """

    __slots__ = ("triangles", "triangle_neighbors", "degrees", "clustering",
                 "tn_sorted", "tn_sets", "covered")

    def __init__(
        self,
        triangles: np.ndarray,
        degrees: np.ndarray,
        clustering: np.ndarray,
        tn_sorted: list[tuple[int, ...]],
        covered: frozenset[int] | None = None,
        tn_sets: list[frozenset[int]] | None = None,
    ):
        self.triangles = triangles
        self.degrees = degrees
        self.clustering = clustering
        self.tn_sorted = tn_sorted
        self.tn_sets = tn_sets if tn_sets is not None else [frozenset(t) for t in tn_sorted]
        self.triangle_neighbors = np.asarray([len(t) for t in tn_sorted], dtype=np.int64)
        self.covered = covered

    @property
    def n(self) -> int:
        return len(self.tn_sorted)

    def covers_all(self) -> bool:
        return self.covered is None

    def _check(self, v: int) -> None:
        if self.covered is not None and v not in self.covered:
            raise ValueError(f"vertex {v} not covered by this stats map")
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range")

    def __getitem__(self, v: int) -> VertexStats:
        self._check(v)
        return VertexStats(
            triangles=int(self.triangles[v]),
            triangle_neighbors=int(self.triangle_neighbors[v]),
            degree=int(self.degrees[v]),
            clustering=float(self.clustering[v]),
        )

    def __contains__(self, v: int) -> bool:
        if self.covered is not None:
            return v in self.covered
        return 0 <= v < self.n

    def triangle_neighbor_set(self, v: int) -> frozenset[int]:
        self._check(v)
        return self.tn_sets[v]


def _triangle_kernel(g: Graph | GraphView, x: int) -> tuple[int, tuple[int, ...]]:
    """Triangle count and triangle-neighbor list of x via sorted-adjacency intersection.

    Each triangle {x, y, z} is seen twice (once through y, once through z),
    hence the halving.
    """
    adj_x = g.neighbor_set(x)
    twice = 0
    tn: list[int] = []
    for y in g.neighbors(x):
        common = len(adj_x & g.neighbor_set(y))
        if common:
            tn.append(y)
            twice += common
    return twice // 2, tuple(tn)


def compute_vertex_stats(
    g: Graph | GraphView,
    restrict_to: Iterable[int] | None = None,
    workers: int = 1,
) -> VertexStatsMap:
    """Triangle statistics for the requested vertices (all when unrestricted).

    Restricting to a set S gives exactly the unrestricted result projected
    to S. The per-vertex kernel is pure, so results are identical for any
    worker count.
    """
    n = g.n
    if restrict_to is None:
        targets: Sequence[int] = range(n)
        covered = None
    else:
        targets = sorted(set(restrict_to))
        for v in targets:
            if not 0 <= v < n:
                raise ValueError(f"unknown vertex id {v}")
        covered = frozenset(targets)

    results = chunked_map(lambda x: _triangle_kernel(g, x), targets, workers=workers)

    triangles = np.zeros(n, dtype=np.int64)
    degrees = np.zeros(n, dtype=np.int64)
    clustering = np.zeros(n, dtype=np.float64)
    tn_sorted: list[tuple[int, ...]] = [() for _ in range(n)]
    for x, (t, tn) in zip(targets, results):
        triangles[x] = t
        degrees[x] = g.degree(x)
        clustering[x] = clustering_value(t, g.degree(x))
        tn_sorted[x] = tn
    return VertexStatsMap(triangles, degrees, clustering, tn_sorted, covered)


def compute_global_stats(g: Graph | GraphView, stats: VertexStatsMap) -> GlobalStats:
    """Mean local clustering coefficient and total triangle count.

    The mean is accumulated with :func:`math.fsum` in vertex-id order, so it
    is bit-identical regardless of how the per-vertex values were produced.
    """
    if not stats.covers_all() or stats.n != g.n:
        raise ValueError("global stats require vertex stats covering the whole graph")
    if g.n == 0:
        return GlobalStats(mean_clustering=0.0, total_triangles=0)
    mean_cc = math.fsum(float(c) for c in stats.clustering) / g.n
    total = int(stats.triangles.sum()) // 3
    return GlobalStats(mean_clustering=mean_cc, total_triangles=total)


def triangle_filtered_view(g: Graph, stats: VertexStatsMap) -> GraphView:
    """View keeping exactly the edges that close at least one triangle.

    An edge {x, y} is in some triangle iff y is a triangle-neighbor of x, so
    the view's adjacency is the triangle-neighbor lists, shared with the
    stats map rather than rebuilt. The authoritative graph is untouched.
    """
    if not stats.covers_all() or stats.n != g.n:
        raise ValueError("triangle filter requires vertex stats covering the whole graph")
    return GraphView(g, list(stats.tn_sorted), adj_sets=list(stats.tn_sets))
