"""Initial partitioning sweep, incremental variant, and center refinement."""

from __future__ import annotations

import pytest

from wccluster.errors import ContractViolation
from wccluster.graph import canonicalize, compute_vertex_stats, triangle_filtered_view
from wccluster.initial import (
    community_centers,
    initial_partition_incremental,
    initial_partition_static,
    refine_centers,
    sort_key,
    vertex_order,
)
from wccluster.metric import Partition

from conftest import bowtie, bridged_triangles, k3, path3, random_graph, two_triangles


def prepared(g):
    stats = compute_vertex_stats(g)
    return stats, triangle_filtered_view(g, stats)


class TestVertexOrder:
    def test_clustering_dominates_then_degree_then_id(self):
        g = bowtie()
        stats = compute_vertex_stats(g)
        # leaves all have clustering 1.0 and degree 2, center 1/3 and degree 4
        assert vertex_order(stats) == [1, 2, 3, 4, 0]

    def test_degree_breaks_clustering_ties(self):
        # two disjoint triangles, one with an extra pendant on each vertex would
        # change cc; instead compare a triangle vertex (deg 2) with one of a
        # 4-clique (deg 3), both cc = 1
        g = canonicalize(
            [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6)]
        )
        stats = compute_vertex_stats(g)
        order = vertex_order(stats)
        assert order == [3, 4, 5, 6, 0, 1, 2]

    def test_stable_total_order(self, rng):
        g = random_graph(rng, 30, 0.2)
        stats = compute_vertex_stats(g)
        assert vertex_order(stats) == vertex_order(stats)
        assert sorted(vertex_order(stats)) == list(range(g.n))


class TestInitialPartitionStatic:
    def test_k3_single_community(self):
        g = k3()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        P.validate()
        assert P.n_communities() == 1

    def test_two_disjoint_triangles(self):
        g = two_triangles()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        assert P.n_communities() == 2
        assert P.members(P.community_of(0)) == {0, 1, 2}
        assert P.members(P.community_of(3)) == {3, 4, 5}

    def test_bowtie_pinned(self):
        # leaves sort before the center; a=1 seeds {a, x, b}, then c=3 seeds {c, d}
        g = bowtie()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        assert P.members(P.community_of(1)) == {0, 1, 2}
        assert P.members(P.community_of(3)) == {3, 4}

    def test_triangle_free_gives_singletons(self):
        g = path3()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        assert P.n_communities() == g.n

    def test_center_has_maximal_sort_key(self, rng):
        for _ in range(10):
            g = random_graph(rng, 35, 0.15)
            stats, view = prepared(g)
            P = initial_partition_static(view, stats)
            P.validate()
            centers = community_centers(P, stats)
            for cid, center in centers.items():
                best = max(P.members(cid), key=lambda v: sort_key(v, stats))
                assert sort_key(center, stats) == sort_key(best, stats)

    def test_borders_adjacent_to_center_in_view(self, rng):
        g = random_graph(rng, 35, 0.15)
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        for cid, center in community_centers(P, stats).items():
            for y in P.members(cid):
                if y != center:
                    assert view.has_edge(center, y)


class TestInitialPartitionIncremental:
    def test_empty_restricted_set_is_identity(self):
        g = two_triangles()
        stats, view = prepared(g)
        P_prev = initial_partition_static(view, stats)
        P = initial_partition_incremental(P_prev, set(), view, stats)
        assert P == P_prev

    def test_k3_plus_new_vertex_pinned(self):
        # previous graph K3 {0,1,2} in one community; new vertex 3 adjacent to
        # 0 and 1, border vertices 0,1 isolated upstream. On the merged graph
        # vertex 2 anchors the old community and recruits 0 and 1 back; 3
        # seeds its own singleton because its neighbors are already visited.
        g = canonicalize([(0, 1), (0, 2), (1, 2), (3, 0), (3, 1)])
        stats, view = prepared(g)
        P_prev = Partition.from_assignment([1, 2, 0, 3])    # 0,1,3 isolated; 2 keeps 0
        P = initial_partition_incremental(P_prev, {0, 1, 3}, view, stats)
        P.validate()
        assert P.members(0) == {0, 1, 2}
        assert P.members(P.community_of(3)) == {3}

    def test_disconnected_new_vertices_stay_singletons(self):
        g = canonicalize([(0, 1), (0, 2), (1, 2)], extra_vertices=[5, 6, 7])
        stats, view = prepared(g)
        base = initial_partition_static(view, stats)
        new_ids = {g.id_for(5), g.id_for(6), g.id_for(7)}
        P = initial_partition_incremental(base, new_ids, view, stats)
        for v in new_ids:
            assert P.members(P.community_of(v)) == {v}

    def test_old_vertices_never_reassigned(self, rng):
        g = random_graph(rng, 30, 0.2)
        stats, view = prepared(g)
        base = initial_partition_static(view, stats)
        # isolate a random subset as if they were border vertices
        moved = {3, 7, 11}
        prev = base.copy()
        for v in sorted(moved):
            prev.isolate_vertex(v)
        P = initial_partition_incremental(prev, moved, view, stats)
        P.validate()
        for v in range(g.n):
            if v not in moved:
                assert P.community_of(v) == prev.community_of(v)

    def test_non_singleton_restricted_vertex_rejected(self):
        g = two_triangles()
        stats, view = prepared(g)
        P_prev = initial_partition_static(view, stats)
        with pytest.raises(ContractViolation):
            initial_partition_incremental(P_prev, {0}, view, stats)


class TestRefineCenters:
    def test_consistent_partition_unchanged(self):
        g = two_triangles()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        assert refine_centers(P, view, stats) == P

    def test_max_rounds_zero_is_identity(self):
        g = bowtie()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        assert refine_centers(P, view, stats, max_rounds=0) == P

    def test_border_moves_to_better_neighboring_center(self):
        # Community 0 = {0,1,2,3}: a triangle diluted by pendants, center 0
        # with clustering 1/3. Community 1 = K4 {4,5,6,7}, every member
        # clustering 1/2 (one pendant each), center 4. Vertex 3 borders both
        # and hops to the better center.
        g = canonicalize(
            [(0, 1), (0, 2), (1, 2), (0, 3), (1, 11), (2, 12),
             (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7),
             (5, 8), (6, 9), (7, 10), (3, 4)]
        )
        stats = compute_vertex_stats(g)
        P = Partition.from_assignment([0, 0, 0, 0, 1, 1, 1, 1, 2, 3, 4, 5, 6])
        assert community_centers(P, stats)[0] == 0
        assert community_centers(P, stats)[1] == 4
        out = refine_centers(P, g, stats, max_rounds=5)
        out.validate()
        assert out.community_of(3) == 1
        assert out.members(0) == {0, 1, 2}
        # fixpoint: a second pass changes nothing
        assert refine_centers(out, g, stats, max_rounds=5) == out

    def test_adopted_center_keys_never_decrease(self, rng):
        g = random_graph(rng, 40, 0.15)
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        centers0 = community_centers(P, stats)
        keys_before = {
            y: sort_key(centers0[P.community_of(y)], stats)
            for y in range(g.n)
            if y != centers0[P.community_of(y)]
        }
        out = refine_centers(P, view, stats)
        centers1 = community_centers(out, stats)
        for y, before in keys_before.items():
            after = sort_key(centers1[out.community_of(y)], stats)
            assert after >= before

    def test_bridged_triangles_stable(self):
        g = bridged_triangles()
        stats, view = prepared(g)
        P = initial_partition_static(view, stats)
        out = refine_centers(P, view, stats)
        assert out.members(out.community_of(0)) == {0, 1, 2}
        assert out.members(out.community_of(3)) == {3, 4, 5}
