"""Shared graph builders and random-instance helpers."""

from __future__ import annotations

import random

import pytest

from wccluster.graph import Graph, canonicalize
from wccluster.metric import Partition


def k3() -> Graph:
    return canonicalize([(0, 1), (0, 2), (1, 2)])


def k3_plus_isolated() -> Graph:
    return canonicalize([(0, 1), (0, 2), (1, 2)], extra_vertices=[9])


def path3() -> Graph:
    return canonicalize([(0, 1), (1, 2)])


def bowtie() -> Graph:
    """Two triangles {x,a,b} and {x,c,d} sharing x; ids x=0 a=1 b=2 c=3 d=4."""
    return canonicalize([(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)])


def k3_pendant() -> Graph:
    """Triangle {0,1,2} plus pendant edge (2,3)."""
    return canonicalize([(0, 1), (0, 2), (1, 2), (2, 3)])


def two_triangles() -> Graph:
    """Two vertex-disjoint triangles {0,1,2} and {3,4,5}."""
    return canonicalize([(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


def bridged_triangles() -> Graph:
    """Triangles {0,1,2} and {3,4,5} joined by the bridge edge (2,3)."""
    return canonicalize([(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])


def random_graph(rng: random.Random, n: int, p: float) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return canonicalize(edges, extra_vertices=range(n))


def planted_partition_edges(
    seed: int,
    n_communities: int,
    community_size: int,
    p_in: float = 0.55,
    avg_external: float = 1.0,
) -> list[tuple[int, int]]:
    """Label-pair edges of a seeded planted-partition graph."""
    rng = random.Random(seed)
    n = n_communities * community_size
    edges: list[tuple[int, int]] = []
    for c in range(n_communities):
        base = c * community_size
        for i in range(community_size):
            for j in range(i + 1, community_size):
                if rng.random() < p_in:
                    edges.append((base + i, base + j))
    for _ in range(int(avg_external * n / 2)):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.append((u, v))
    return edges


def random_partition(rng: random.Random, n: int, max_communities: int | None = None) -> Partition:
    if n == 0:
        return Partition.from_assignment([])
    k = rng.randint(1, max_communities or max(1, n // 2))
    labels = list(range(k))
    assignment = [rng.choice(labels) for _ in range(n)]
    # renumber densely so every community is non-empty
    remap: dict[int, int] = {}
    dense = []
    for a in assignment:
        if a not in remap:
            remap[a] = len(remap)
        dense.append(remap[a])
    return Partition.from_assignment(dense)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)
