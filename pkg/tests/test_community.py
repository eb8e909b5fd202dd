"""Threshold-sweep community detection, reports, and member ranking."""

import numpy as np
import pytest
from conftest import (
    as_partition_sets,
    brute_components,
    brute_means,
    brute_quality,
    planted_network,
    random_network,
)
from sklearn.metrics import adjusted_rand_score

from mlion import (
    DistanceField,
    MultilayerNetwork,
    Partition,
    communicability,
    community_report,
    components_at_threshold,
    detect_communities,
    detect_monolayer,
    distance_field,
    quality,
    rank_members,
    symmetrize,
)


def _dist(net) -> DistanceField:
    return distance_field(communicability(symmetrize(net), mode="weighted"))


def _hand_distance_field(xi, n_nodes, n_layers) -> DistanceField:
    rows, gm = brute_means([list(map(float, r)) for r in xi])
    return DistanceField(
        xi=np.asarray(xi, dtype=float), row_means=np.asarray(rows),
        global_mean=gm, n_nodes=n_nodes, n_layers=n_layers,
    )


class TestComponentsAtThreshold:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("quantile", [0.1, 0.5, 0.9])
    def test_matches_boolean_closure(self, seed, quantile):
        dist = _dist(random_network(seed, n_nodes=4, n_layers=3, symmetric=True))
        off = dist.xi[np.triu_indices(dist.size, 1)]
        threshold = float(np.quantile(off, quantile))
        part = components_at_threshold(dist, threshold)
        assert as_partition_sets(part.assignment) == brute_components(dist.xi, threshold)

    def test_canonical_ids(self):
        # xi designed so components are {0,1,2}, {3,4}, {5}
        big = 100.0
        xi = np.full((6, 6), big)
        np.fill_diagonal(xi, 0.0)
        for a, b in [(0, 1), (1, 2), (3, 4)]:
            xi[a, b] = xi[b, a] = 1.0
        dist = _hand_distance_field(xi, 6, 1)
        part = components_at_threshold(dist, 1.0)
        assert part.assignment.tolist() == [0, 0, 0, 1, 1, 2]
        assert part.isolated == frozenset({5})
        assert part.sizes.tolist() == [3, 2, 1]

    def test_size_ties_break_by_smallest_member(self):
        big = 100.0
        xi = np.full((6, 6), big)
        np.fill_diagonal(xi, 0.0)
        # components {0, 5} and {1, 2} and {3, 4}: all size 2
        for a, b in [(0, 5), (1, 2), (3, 4)]:
            xi[a, b] = xi[b, a] = 1.0
        dist = _hand_distance_field(xi, 6, 1)
        part = components_at_threshold(dist, 1.0)
        assert part.assignment.tolist() == [0, 1, 1, 2, 2, 0]

    def test_quality_recorded(self):
        dist = _dist(random_network(5, n_nodes=3, n_layers=2, symmetric=True))
        part = components_at_threshold(dist, float(np.median(dist.xi)))
        expected = brute_quality(dist.xi.tolist(), part.assignment.tolist())
        assert part.quality == pytest.approx(expected, abs=1e-10)

    def test_rejects_non_finite_threshold(self):
        dist = _dist(random_network(6, n_nodes=3, n_layers=1, symmetric=True))
        with pytest.raises(ValueError):
            components_at_threshold(dist, float("nan"))


class TestDetect:
    def test_two_cliques_recovered_exactly(self):
        net, truth = planted_network(
            0, block_sizes=(2, 2), n_layers=2, intra=(1.0, 1.0), cross=(0.0, 0.0)
        )
        part, trace = detect_communities(net, r=50)
        assert adjusted_rand_score(truth, part.assignment) == 1.0
        assert part.quality > 0
        assert not trace.degenerate
        assert part.isolated == frozenset()

    @pytest.mark.parametrize("seed", [0, 1])
    def test_planted_blocks_recovered(self, seed):
        net, truth = planted_network(seed)
        part, _ = detect_communities(net, r=100)
        assert adjusted_rand_score(truth, part.assignment) == 1.0

    def test_trace_structure(self):
        net, _ = planted_network(3, block_sizes=(4, 3), n_layers=2)
        part, trace = detect_communities(net, r=20)
        assert len(trace.entries) == 21
        thresholds = [t for t, _, _ in trace.entries]
        counts = [c for _, c, _ in trace.entries]
        qualities = [q for _, _, q in trace.entries]
        # uniform grid from the smallest to the largest pair distance
        dist = _dist(net)
        off = dist.xi[np.triu_indices(dist.size, 1)]
        assert thresholds[0] == float(off.min())
        assert thresholds[-1] == float(off.max())
        step = (off.max() - off.min()) / 20
        assert np.allclose(np.diff(thresholds), step, rtol=1e-9)
        # components only ever merge as the threshold grows
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 1
        # last entry is the all-in-one partition: quality exactly zero up to
        # accumulated rounding
        assert qualities[-1] == pytest.approx(0.0, abs=1e-8)

    def test_optimum_matches_trace_and_tie_rule(self):
        net, _ = planted_network(4, block_sizes=(3, 3), n_layers=2)
        part, trace = detect_communities(net, r=30)
        qualities = [q for _, _, q in trace.entries]
        best = qualities.index(max(qualities))  # first index on ties
        assert part.quality == qualities[best]
        assert part.threshold == trace.entries[best][0]

    def test_partition_agrees_with_components_at_threshold(self):
        net, _ = planted_network(5, block_sizes=(3, 2), n_layers=2)
        part, _ = detect_communities(net, r=25)
        recomputed = components_at_threshold(_dist(net), part.threshold)
        assert np.array_equal(part.assignment, recomputed.assignment)
        assert part.isolated == recomputed.isolated
        assert part.quality == pytest.approx(recomputed.quality, rel=1e-9, abs=1e-9)

    def test_quality_consistent_with_quality_function(self):
        net, _ = planted_network(6)
        part, _ = detect_communities(net, r=40)
        dist = _dist(net)
        assert part.quality == pytest.approx(quality(dist, part), rel=1e-9, abs=1e-9)

    def test_deterministic(self):
        net, _ = planted_network(7, block_sizes=(4, 4), n_layers=3)
        a_part, a_trace = detect_communities(net, r=35)
        b_part, b_trace = detect_communities(net, r=35)
        assert np.array_equal(a_part.assignment, b_part.assignment)
        assert a_part.threshold == b_part.threshold
        assert a_part.quality == b_part.quality
        assert a_trace.entries == b_trace.entries

    def test_equivariant_under_country_permutation(self):
        net, _ = planted_network(8, block_sizes=(4, 2), n_layers=2)
        n, n_layers = net.n_nodes, net.n_layers
        rng = np.random.default_rng(0)
        perm = rng.permutation(n)
        # new cell (k, a) takes old cell (perm[k], a)
        pi = np.concatenate([a * n + perm for a in range(n_layers)])
        permuted = MultilayerNetwork(
            tuple(net.node_labels[i] for i in perm), net.layer_labels,
            net.supra[np.ix_(pi, pi)],
        )
        base, _ = detect_communities(net, r=20)
        moved, _ = detect_communities(permuted, r=20)
        assert np.array_equal(moved.assignment, base.assignment[pi])

    def test_directed_input_symmetrized(self, t1):
        a_part, a_trace = detect_communities(t1, r=15)
        b_part, b_trace = detect_communities(symmetrize(t1), r=15)
        assert np.array_equal(a_part.assignment, b_part.assignment)
        assert a_trace.entries == b_trace.entries

    def test_degenerate_single_pair(self):
        net = MultilayerNetwork(("a", "b"), ("x",), [[0.0, 2.0], [2.0, 0.0]])
        part, trace = detect_communities(net, r=10)
        assert trace.degenerate
        assert len(trace.entries) == 1
        assert part.assignment.tolist() == [0, 0]

    def test_single_cell_network(self):
        net = MultilayerNetwork(("a",), ("x",), [[0.0]])
        part, trace = detect_communities(net, r=5)
        assert trace.degenerate
        assert part.assignment.tolist() == [0]
        assert part.isolated == frozenset({0})

    def test_rejects_bad_resolution(self, t1):
        with pytest.raises(ValueError):
            detect_communities(t1, r=0)


class TestDetectMonolayer:
    def test_blocks_survive_aggregation(self):
        net, _ = planted_network(9, block_sizes=(5, 4), n_layers=3)
        node_truth = np.repeat([0, 1], [5, 4])
        part, _ = detect_monolayer(net, r=50)
        assert part.n_layers == 1
        assert part.assignment.size == net.n_nodes
        assert adjusted_rand_score(node_truth, part.assignment) == 1.0

    def test_single_country(self):
        net = MultilayerNetwork(("a",), ("x", "y"), np.zeros((2, 2)))
        part, trace = detect_monolayer(net, r=10)
        assert part.assignment.tolist() == [0]
        assert part.isolated == frozenset({0})
        assert trace.degenerate


def _hand_partition() -> Partition:
    # 4 countries (A..D) x 5 sectors; already-canonical ids:
    # community 0 (9 cells), 1 (C's row, 5), 2 (4 cells), 3 and 4 singletons
    assignment = np.array([
        0, 0, 1, 2,
        0, 0, 1, 3,
        0, 2, 1, 0,
        0, 2, 1, 0,
        2, 4, 1, 0,
    ])
    return Partition(
        assignment=assignment, threshold=0.5, quality=1.0,
        isolated=frozenset({7, 17}), n_nodes=4, n_layers=5,
    )


def _hand_network() -> MultilayerNetwork:
    n = 20
    return MultilayerNetwork(tuple("ABCD"), tuple(f"s{a}" for a in range(5)), np.zeros((n, n)))


class TestCommunityReport:
    def test_per_country_rows(self):
        report = community_report(_hand_partition(), _hand_network(), min_size=4, top_k=2)
        rows = {row.label: row for row in report.per_node}
        a, b, c, d = rows["A"], rows["B"], rows["C"], rows["D"]
        assert (a.top_counts, a.isolated, a.other, a.dominant) == ((4, 0), 0, 1, 0)
        assert a.gini == pytest.approx(1 - (16 + 1) / 25, abs=1e-12)
        # B ties communities 0 and 2 at two cells each: smaller id wins
        assert (b.top_counts, b.isolated, b.other, b.dominant) == ((2, 0), 1, 2, 0)
        assert b.gini == pytest.approx(1 - (4 + 4 + 1) / 25, abs=1e-12)
        assert (c.top_counts, c.isolated, c.other, c.dominant) == ((0, 5), 0, 0, 1)
        assert c.gini == 0.0
        assert (d.top_counts, d.isolated, d.other, d.dominant) == ((3, 0), 1, 1, 0)
        assert d.gini == pytest.approx(1 - (9 + 1 + 1) / 25, abs=1e-12)

    def test_per_sector_rows(self):
        report = community_report(_hand_partition(), _hand_network(), min_size=4, top_k=2)
        rows = {row.label: row for row in report.per_layer}
        s0, s1, s4 = rows["s0"], rows["s1"], rows["s4"]
        assert (s0.top_counts, s0.isolated, s0.other, s0.dominant) == ((2, 1), 0, 1, 0)
        assert s0.gini == pytest.approx(1 - 6 / 16, abs=1e-12)
        assert (s1.top_counts, s1.isolated, s1.other, s1.dominant) == ((2, 1), 1, 0, 0)
        # s4 spreads one cell each over communities 2, 4, 1, 0
        assert (s4.top_counts, s4.isolated, s4.other, s4.dominant) == ((1, 1), 1, 1, 0)
        assert s4.gini == pytest.approx(0.75, abs=1e-12)

    def test_rows_account_for_every_cell(self):
        net, _ = planted_network(11, block_sizes=(3, 2, 2), n_layers=3)
        part, _ = detect_communities(net, r=30)
        report = community_report(part, net, min_size=2, top_k=3)
        for row in report.per_node:
            assert sum(row.top_counts) + row.isolated + row.other == net.n_layers
        for row in report.per_layer:
            assert sum(row.top_counts) + row.isolated + row.other == net.n_nodes

    def test_membership_grid_sentinel(self):
        report = community_report(_hand_partition(), _hand_network(), min_size=4, top_k=2)
        expected = np.array([
            [0, 0, 0, 0, 2],
            [0, 0, 2, 2, -1],
            [1, 1, 1, 1, 1],
            [2, -1, 0, 0, 0],
        ])
        assert np.array_equal(report.membership_grid, expected)
        stricter = community_report(_hand_partition(), _hand_network(), min_size=6, top_k=2)
        assert np.array_equal(
            stricter.membership_grid[1], [0, 0, -1, -1, -1]
        )
        assert (stricter.membership_grid[2] == -1).all()

    def test_all_singletons_degenerate_partition(self):
        assignment = np.arange(20)
        part = Partition(
            assignment=assignment, threshold=0.0, quality=0.0,
            isolated=frozenset(range(20)), n_nodes=4, n_layers=5,
        )
        report = community_report(part, _hand_network(), min_size=4, top_k=2)
        for row in report.per_node:
            assert row.top_counts == (0, 0)
            assert row.isolated == 5
            assert row.other == 0
            assert row.dominant is None
            assert row.gini == pytest.approx(1 - 5 / 25, abs=1e-12)
        assert (report.membership_grid == -1).all()

    def test_isolated_as_one_class(self):
        part = Partition(
            assignment=np.arange(20), threshold=0.0, quality=0.0,
            isolated=frozenset(range(20)), n_nodes=4, n_layers=5,
        )
        report = community_report(
            part, _hand_network(), min_size=4, top_k=2, isolated_as_one_class=True
        )
        for row in report.per_node:
            assert row.gini == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            community_report(_hand_partition(), _hand_network(), min_size=0)
        with pytest.raises(ValueError):
            community_report(_hand_partition(), _hand_network(), top_k=0)
        small = MultilayerNetwork(("a",), ("x",), [[0.0]])
        with pytest.raises(ValueError):
            community_report(_hand_partition(), small)


class TestRankMembers:
    def test_t1_all_cells_by_out_strength(self, t1):
        ranked = rank_members(t1, [(0, 0), (1, 0), (0, 1), (1, 1)], direction="out")
        assert ranked == [
            ((1, 1), 5.0),
            ((0, 1), 3.0),
            ((0, 0), 2.0),
            ((1, 0), 1.0),
        ]

    def test_sum_direction(self, t1):
        ranked = rank_members(t1, [(0, 0), (1, 0), (0, 1), (1, 1)], direction="sum")
        strengths = dict(ranked)
        assert strengths[(0, 0)] == 7.0  # out 2 + in 5
        assert strengths[(1, 1)] == 7.0
        # tie between (u,x) at supra index 0 and (v,y) at index 3: index order
        assert [cell for cell, _ in ranked[:2]] == [(0, 0), (1, 1)]

    def test_subset_only_counts_internal_weights(self, t1):
        # members (u,x) and (v,y): only weights between them count
        ranked = rank_members(t1, [(0, 0), (1, 1)], direction="out")
        strengths = dict(ranked)
        assert strengths[(0, 0)] == 0.0  # supra[(x,u),(y,v)] = 0
        assert strengths[(1, 1)] == 4.0  # supra[(y,v),(x,u)] = 4

    def test_replica_weights_excluded(self, t1):
        # (v,x) and (v,y) are the same country: no internal strength at all
        ranked = rank_members(t1, [(1, 0), (1, 1)], direction="sum")
        assert all(s == 0.0 for _, s in ranked)

    def test_singleton(self, t1):
        assert rank_members(t1, [(0, 1)], direction="in") == [((0, 1), 0.0)]

    def test_bad_direction(self, t1):
        with pytest.raises(ValueError):
            rank_members(t1, [(0, 0)], direction="total")
