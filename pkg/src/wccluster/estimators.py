"""scikit-learn style estimators wrapping the detection pipelines.

The static detector is a clusterer: ``fit(X)`` takes a graph (edge array,
scipy sparse adjacency, or a prebuilt :class:`~wccluster.graph.Graph`) and
exposes ``labels_`` over the canonical vertex ids. The incremental detector
adds ``partial_fit``: the first call bootstraps the bulk graph, every later
call ingests one node-grained micro-batch.

    >>> import numpy as np
    >>> from wccluster.estimators import WccCommunities
    >>> edges = np.array([[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]])
    >>> WccCommunities().fit_predict(edges)
    array([0, 0, 0, 1, 1, 1])
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .engine import MicroBatch, bootstrap, ingest
from .graph import Graph, canonicalize
from .metric import Partition
from .refine import RefineConfig


def as_edge_array(X) -> np.ndarray:
    """Validate and coerce edge input to an (m, 2) integer array.

    Accepts sequences of label pairs or integer arrays of shape (m, 2).
    Square scipy sparse matrices are treated as adjacency matrices instead;
    see :func:`as_canonical_graph`.
    """
    arr = np.asarray(X)
    if arr.size == 0:
        return arr.reshape(0, 2).astype(np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"edge input must have shape (m, 2), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if np.issubdtype(arr.dtype, np.floating) and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise ValueError("edge input must contain integer vertex labels")
    if (arr < 0).any():
        raise ValueError("vertex labels must be non-negative")
    return arr.astype(np.int64)


def as_canonical_graph(X, extra_vertices: Iterable[int] = ()) -> Graph:
    """Coerce supported graph inputs to a canonical Graph."""
    if isinstance(X, Graph):
        return X
    try:
        from scipy import sparse
    except ImportError:  # pragma: no cover - scipy ships with scikit-learn
        sparse = None
    if sparse is not None and sparse.issparse(X):
        if X.shape[0] != X.shape[1]:
            raise ValueError("sparse adjacency must be square")
        coo = X.tocoo()
        edges = [(int(i), int(j)) for i, j in zip(coo.row, coo.col) if i < j]
        return canonicalize(edges, extra_vertices=range(X.shape[0]))
    arr = as_edge_array(X)
    return canonicalize(
        [(int(a), int(b)) for a, b in arr], extra_vertices=extra_vertices
    )


def _dense_labels(P: Partition) -> np.ndarray:
    """Community indices per vertex id, renumbered by first appearance."""
    dense: dict[int, int] = {}
    out = np.empty(P.n_vertices, dtype=np.int64)
    for v in range(P.n_vertices):
        cid = P.community_of(v)
        if cid not in dense:
            dense[cid] = len(dense)
        out[v] = dense[cid]
    return out


class WccCommunities(ClusterMixin, BaseEstimator):
    """Static triangle-based community detection as a clusterer.

    Parameters mirror the pipeline configuration: refinement sweep count,
    early-stop threshold (the global score is checked every sweep), gain
    evaluator, center-refinement rounds, and worker count.
    """

    def __init__(
        self,
        max_iterations: int = 5,
        improvement_threshold: float = 1e-3,
        gain_mode: str = "exact",
        center_rounds: int = 10,
        workers: int = 1,
    ):
        self.max_iterations = max_iterations
        self.improvement_threshold = improvement_threshold
        self.gain_mode = gain_mode
        self.center_rounds = center_rounds
        self.workers = workers

    def _config(self) -> RefineConfig:
        return RefineConfig(
            max_iterations=self.max_iterations,
            improvement_threshold=self.improvement_threshold,
            gain_mode=self.gain_mode,
            workers=self.workers,
        )

    def fit(self, X, y=None):
        g = as_canonical_graph(X)
        state, metrics, _ = bootstrap(g, self._config(), self.center_rounds)
        self.graph_ = g
        self.partition_ = state.partition
        self.labels_ = _dense_labels(state.partition)
        self.vertex_labels_ = g.labels.copy()
        self.wcc_ = metrics.wcc
        self.n_communities_ = state.partition.n_communities()
        return self


class IncrementalWccCommunities(ClusterMixin, BaseEstimator):
    """Streaming community maintenance over node-grained micro-batches.

    ``fit`` (or the first ``partial_fit``) bootstraps the bulk graph with
    the static pipeline; every further ``partial_fit`` merges one batch and
    updates the communities incrementally. Batch edges must each touch at
    least one previously unseen vertex; isolated new vertices can be passed
    via ``new_vertices``.
    """

    def __init__(
        self,
        max_iterations: int = 5,
        improvement_threshold: float = 1e-3,
        gain_mode: str = "exact",
        center_rounds: int = 10,
        workers: int = 1,
    ):
        self.max_iterations = max_iterations
        self.improvement_threshold = improvement_threshold
        self.gain_mode = gain_mode
        self.center_rounds = center_rounds
        self.workers = workers

    def _config(self) -> RefineConfig:
        return RefineConfig(
            max_iterations=self.max_iterations,
            improvement_threshold=self.improvement_threshold,
            gain_mode=self.gain_mode,
            workers=self.workers,
        )

    def fit(self, X, y=None, new_vertices: Iterable[int] = ()):
        g = as_canonical_graph(X, extra_vertices=new_vertices)
        state, metrics, _ = bootstrap(g, self._config(), self.center_rounds)
        self.state_ = state
        self.wcc_ = metrics.wcc
        self._sync()
        return self

    def partial_fit(self, X, y=None, new_vertices: Iterable[int] = ()):
        if not hasattr(self, "state_"):
            return self.fit(X, new_vertices=new_vertices)
        arr = as_edge_array(X)
        g = self.state_.graph
        declared = set(int(v) for v in new_vertices)
        for a, b in arr:
            for lab in (int(a), int(b)):
                if not g.has_label(lab):
                    declared.add(lab)
        batch = MicroBatch.make(declared, [(int(a), int(b)) for a, b in arr])
        self.state_, metrics = ingest(self.state_, batch, self._config())
        self.wcc_ = metrics.wcc
        self._sync()
        return self

    def _sync(self) -> None:
        self.labels_ = _dense_labels(self.state_.partition)
        self.vertex_labels_ = self.state_.graph.labels.copy()
        self.n_communities_ = self.state_.partition.n_communities()
        self.epoch_ = self.state_.epoch

    def fit_predict(self, X, y=None, **kwargs):
        return self.fit(X, **kwargs).labels_
