"""Movement gains (exact and heuristic), sweep application, and the refine loop."""

from __future__ import annotations

import random

import pytest

from wccluster.errors import ContractViolation
from wccluster.graph import (
    canonicalize,
    compute_global_stats,
    compute_vertex_stats,
    triangle_filtered_view,
)
from wccluster.initial import initial_partition_static, refine_centers
from wccluster.metric import Partition, community_stats, wcc_global
from wccluster.oracle import wcc_global_oracle
from wccluster.refine import (
    Movement,
    RefineConfig,
    apply_movements,
    best_movement,
    compute_all_movements,
    movement_gain_exact,
    movement_gain_heuristic,
    refine,
)

from conftest import bowtie, bridged_triangles, k3, random_graph, random_partition

EXACT = RefineConfig(gain_mode="exact")
HEUR = RefineConfig(gain_mode="heuristic")


def k3_split():
    g = k3()
    stats = compute_vertex_stats(g)
    P = Partition.from_assignment([0, 1, 1])
    return g, stats, P


class TestMovementGainExact:
    def test_stay_is_zero_everywhere(self, rng):
        g = random_graph(rng, 15, 0.3)
        stats = compute_vertex_stats(g)
        P = random_partition(rng, g.n)
        for x in g.vertices():
            assert movement_gain_exact(x, "stay", None, P, g, stats) == 0.0

    def test_k3_split_transfer_gain(self):
        g, stats, P = k3_split()
        gain = movement_gain_exact(0, "transfer", 1, P, g, stats)
        assert gain == pytest.approx(3.0, abs=1e-12)

    def test_remove_from_singleton_is_noop(self):
        g, stats, P = k3_split()
        assert movement_gain_exact(0, "remove", None, P, g, stats) == 0.0

    def test_matches_full_recompute_oracle(self, rng):
        # the affected-set shortcut must equal a from-scratch global delta
        for _ in range(25):
            g = random_graph(rng, rng.randint(4, 16), rng.uniform(0.2, 0.6))
            if g.n < 2:
                continue
            stats = compute_vertex_stats(g)
            P = random_partition(rng, g.n)
            x = rng.randrange(g.n)
            before = wcc_global_oracle(P, g) * g.n
            candidates = [("remove", None)] + [
                ("transfer", cid)
                for cid in sorted({P.community_of(y) for y in g.neighbors(x)} - {P.community_of(x)})
            ]
            for action, target in candidates:
                shortcut = movement_gain_exact(x, action, target, P, g, stats)
                Q = P.copy()
                if action == "remove":
                    if len(P.members(P.community_of(x))) == 1:
                        continue
                    Q.isolate_vertex(x)
                else:
                    Q.move_vertex(x, target)
                after = wcc_global_oracle(Q, g) * g.n
                assert shortcut == pytest.approx(after - before, abs=1e-9)


class TestMovementGainHeuristic:
    def test_stay_is_zero(self):
        g, stats, P = k3_split()
        assert movement_gain_heuristic(0, "stay", None, P, g, stats) == 0.0

    def test_k3_split_positive_and_argmax_matches_exact(self):
        g, stats, P = k3_split()
        h = movement_gain_heuristic(0, "transfer", 1, P, g, stats)
        assert h > 0
        me = best_movement(0, P, g, stats, EXACT)
        mh = best_movement(0, P, g, stats, HEUR)
        assert (me.action, me.target) == (mh.action, mh.target) == ("transfer", 1)

    def test_no_links_into_sparse_community_never_helps(self, rng):
        # joining a community you touch nowhere, with zero internal density,
        # can only grow denominators: the insertion component (transfer minus
        # removal) is non-positive, for the heuristic and the exact evaluator
        checked = 0
        while checked < 40:
            g = random_graph(rng, 5, rng.uniform(0.2, 0.8))
            if g.n < 4:
                continue
            stats = compute_vertex_stats(g)
            P = random_partition(rng, g.n)
            cs = community_stats(P, g)
            gs = compute_global_stats(g, stats)
            for x in g.vertices():
                own = P.community_of(x)
                if len(P.members(own)) == 1:
                    continue  # removal is a no-op there, composition breaks down
                for cid, c in cs.items():
                    if cid == own or c.density != 0.0:
                        continue
                    if any(P.community_of(y) == cid for y in g.neighbors(x)):
                        continue
                    h_insert = movement_gain_heuristic(
                        x, "transfer", cid, P, g, stats, gs, cs
                    ) - movement_gain_heuristic(x, "remove", None, P, g, stats, gs, cs)
                    e_insert = movement_gain_exact(
                        x, "transfer", cid, P, g, stats
                    ) - movement_gain_exact(x, "remove", None, P, g, stats)
                    assert h_insert <= 1e-12
                    assert e_insert <= 1e-12
                    checked += 1

    def test_argmax_agreement_at_least_80_percent(self):
        rng = random.Random(1)
        match = 0
        total = 0
        while total < 500:
            n = rng.randint(5, 30)
            g = random_graph(rng, n, rng.uniform(0.1, 0.5))
            if g.n == 0:
                continue
            stats = compute_vertex_stats(g)
            gs = compute_global_stats(g, stats)
            P = random_partition(rng, g.n)
            cs = community_stats(P, g)
            for _ in range(min(5, g.n)):
                x = rng.randrange(g.n)
                me = best_movement(x, P, g, stats, EXACT)
                mh = best_movement(x, P, g, stats, HEUR, gs, cs)
                total += 1
                if (me.action, me.target) == (mh.action, mh.target):
                    match += 1
                if total >= 500:
                    break
        assert match / total >= 0.80, f"agreement {match / total:.3f} below gate"

    def test_refine_quality_within_10_percent_statistically(self):
        # statistical gate, not per-case: aggregate final quality of
        # heuristic-driven refinement within 10% of exact-driven on the same
        # instance ensemble, and per-case misses rare
        rng = random.Random(21)
        ratios = []
        for _ in range(20):
            n = rng.randint(10, 30)
            g = random_graph(rng, n, rng.uniform(0.15, 0.45))
            stats = compute_vertex_stats(g)
            view = triangle_filtered_view(g, stats)
            P0 = refine_centers(initial_partition_static(view, stats), view, stats)
            pe, _ = refine(P0, view, stats, RefineConfig(gain_mode="exact", max_iterations=8))
            ph, _ = refine(P0, view, stats, RefineConfig(gain_mode="heuristic", max_iterations=8))
            we = wcc_global(pe, g, stats)
            wh = wcc_global(ph, g, stats)
            if we > 0:
                ratios.append(wh / we)
        mean_ratio = sum(ratios) / len(ratios)
        below = sum(1 for r in ratios if r < 0.9)
        assert mean_ratio >= 0.9, f"mean quality ratio {mean_ratio:.3f}"
        assert below <= len(ratios) // 5, f"{below}/{len(ratios)} instances below 0.9"


class TestBestMovement:
    def test_isolated_vertex_stays(self):
        g = canonicalize([(0, 1), (0, 2), (1, 2)], extra_vertices=[9])
        stats = compute_vertex_stats(g)
        P = Partition.from_assignment([0, 0, 0, 1])
        m = best_movement(g.id_for(9), P, g, stats, EXACT)
        assert m.action == "stay"

    def test_k3_split_transfers(self):
        g, stats, P = k3_split()
        m = best_movement(0, P, g, stats, EXACT)
        assert (m.action, m.target) == ("transfer", 1)
        assert m.gain == pytest.approx(3.0, abs=1e-12)

    def test_bowtie_center_stays_in_own_triangle(self):
        # {x,a,b} vs {c,d}: transferring x across is exactly neutral, so the
        # tie breaks to Stay
        g = bowtie()
        stats = compute_vertex_stats(g)
        P = Partition.from_assignment([0, 0, 0, 1, 1])
        m = best_movement(0, P, g, stats, EXACT)
        assert m.action == "stay"

    def test_ties_prefer_lowest_target_id(self):
        # two identical triangle communities adjacent to x through one edge
        # each: gains tie, lowest community id wins if transfers are best
        g = canonicalize(
            [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (6, 0), (6, 3)]
        )
        stats = compute_vertex_stats(g)
        P = Partition.from_assignment([0, 0, 0, 1, 1, 1, 2])
        m = best_movement(6, P, g, stats, EXACT)
        # joining either triangle is a pure loss for its members; staying wins
        assert m.action == "stay"
        heur = best_movement(6, P, g, stats, HEUR)
        assert heur.action == "stay"

    def test_positive_tie_takes_lowest_target_id(self):
        # x touches two members of each of two identical triangles; the two
        # transfers gain equally and positively, so the lower id wins
        g = canonicalize(
            [(1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6),
             (0, 1), (0, 2), (0, 4), (0, 5)]
        )
        stats = compute_vertex_stats(g)
        P = Partition.from_assignment([2, 0, 0, 0, 1, 1, 1])
        gain_a = movement_gain_exact(0, "transfer", 0, P, g, stats)
        gain_b = movement_gain_exact(0, "transfer", 1, P, g, stats)
        assert gain_a == gain_b > 0
        m = best_movement(0, P, g, stats, EXACT)
        assert (m.action, m.target) == ("transfer", 0)
        mh = best_movement(0, P, g, stats, HEUR)
        assert (mh.action, mh.target) == ("transfer", 0)

    def test_exact_movement_set_worker_independent(self, rng):
        g = random_graph(rng, 20, 0.3)
        stats = compute_vertex_stats(g)
        P = random_partition(rng, g.n)
        one = compute_all_movements(P, g, stats, RefineConfig(gain_mode="exact", workers=1))
        four = compute_all_movements(P, g, stats, RefineConfig(gain_mode="exact", workers=4))
        assert one == four

    def test_heuristic_batch_equals_scalar(self, rng):
        for _ in range(10):
            g = random_graph(rng, rng.randint(2, 30), rng.uniform(0.1, 0.5))
            stats = compute_vertex_stats(g)
            gs = compute_global_stats(g, stats)
            P = random_partition(rng, g.n)
            cs = community_stats(P, g)
            batch = compute_all_movements(P, g, stats, HEUR, gs)
            for x in g.vertices():
                single = best_movement(x, P, g, stats, HEUR, gs, cs)
                assert (batch[x].action, batch[x].target, batch[x].gain) == (
                    single.action,
                    single.target,
                    single.gain,
                )


class TestApplyMovements:
    def test_all_stay_is_identity(self):
        g, stats, P = k3_split()
        moves = [Movement(vertex=v, action="stay") for v in g.vertices()]
        assert apply_movements(P, moves) == P

    def test_k3_split_converges_to_one_community(self):
        g, stats, P = k3_split()
        moves = compute_all_movements(P, g, stats, EXACT)
        out = apply_movements(P, moves)
        out.validate()
        assert out.n_communities() == 1

    def test_snapshot_swap_keeps_validity(self):
        # two vertices transfer into each other's snapshot communities
        P = Partition.from_assignment([0, 1])
        moves = [
            Movement(vertex=0, action="transfer", target=1),
            Movement(vertex=1, action="transfer", target=0),
        ]
        out = apply_movements(P, moves)
        out.validate()
        assert out.community_of(0) == 1
        assert out.community_of(1) == 0

    def test_duplicate_vertex_rejected(self):
        P = Partition.from_assignment([0, 1])
        moves = [Movement(vertex=0, action="stay"), Movement(vertex=0, action="remove")]
        with pytest.raises(ContractViolation):
            apply_movements(P, moves)

    def test_unknown_target_rejected(self):
        P = Partition.from_assignment([0, 1])
        with pytest.raises(ContractViolation):
            apply_movements(P, [Movement(vertex=0, action="transfer", target=9)])

    def test_remove_allocates_fresh_ids_in_vertex_order(self):
        P = Partition.from_assignment([0, 0, 0])
        moves = [
            Movement(vertex=2, action="remove"),
            Movement(vertex=1, action="remove"),
        ]
        out = apply_movements(P, moves)
        out.validate()
        assert out.members(1) == {1}
        assert out.members(2) == {2}

    def test_validity_preserved_on_random_legal_sets(self, rng):
        for _ in range(15):
            g = random_graph(rng, 18, 0.3)
            stats = compute_vertex_stats(g)
            P = random_partition(rng, g.n)
            moves = compute_all_movements(P, g, stats, EXACT)
            out = apply_movements(P, moves)
            out.validate()


class TestRefine:
    def test_optimal_k3_stops_early_with_no_moves(self):
        g = k3()
        stats = compute_vertex_stats(g)
        P0 = Partition.from_assignment([0, 0, 0])
        out, trace = refine(P0, g, stats, RefineConfig(gain_mode="exact"))
        assert out == P0
        assert trace.iterations == 1
        assert trace.movement_counts == [0]
        assert trace.final_wcc == 1.0

    def test_k3_split_reaches_perfect_within_two_iterations(self):
        g, stats, P = k3_split()
        out, trace = refine(P, g, stats, RefineConfig(gain_mode="exact"))
        assert trace.final_wcc == 1.0
        assert trace.iterations <= 2
        assert out.n_communities() == 1

    def test_all_singletons_on_bridged_triangles_is_a_fixpoint(self):
        # single-vertex moves from all-singletons cannot create any triangle
        # containment (2-communities hold no triangles), so every exact gain
        # is 0 and the tie-break keeps everything in place
        g = bridged_triangles()
        stats = compute_vertex_stats(g)
        P0 = Partition.singletons(g.n)
        out, trace = refine(P0, g, stats, RefineConfig(gain_mode="exact", max_iterations=5))
        assert out == P0
        assert trace.final_wcc == 0.0

    def test_bridged_triangles_from_initial_partition(self):
        g = bridged_triangles()
        stats = compute_vertex_stats(g)
        view = triangle_filtered_view(g, stats)
        P0 = refine_centers(initial_partition_static(view, stats), view, stats)
        out, trace = refine(P0, view, stats, RefineConfig(gain_mode="exact"))
        assert trace.final_wcc == 1.0
        assert out.members(out.community_of(0)) == {0, 1, 2}

    def test_blind_mode_runs_exactly_max_iterations(self):
        g, stats, P = k3_split()
        cfg = RefineConfig(gain_mode="exact", wcc_check=False, max_iterations=4)
        out, trace = refine(P, g, stats, cfg)
        assert trace.iterations == 4
        assert all(r.wcc is None for r in trace.records)
        assert out.n_communities() == 1

    def test_exact_check_trace_is_non_decreasing(self, rng):
        for _ in range(10):
            g = random_graph(rng, 20, 0.3)
            stats = compute_vertex_stats(g)
            view = triangle_filtered_view(g, stats)
            P0 = refine_centers(initial_partition_static(view, stats), view, stats)
            _, trace = refine(P0, view, stats, RefineConfig(gain_mode="exact", max_iterations=6))
            seq = [trace.initial_wcc] + [r.wcc for r in trace.records if r.accepted]
            assert all(b >= a for a, b in zip(seq, seq[1:]))
            assert trace.final_wcc == max(seq)
