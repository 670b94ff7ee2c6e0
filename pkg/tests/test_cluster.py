import itertools

import numpy as np
import pytest

from conftest import std_panel
from riskfactors.cluster import ClusterAssignment, cut, ward_cluster
from riskfactors.synthetic import block_factor_data, panel_from_values


def brute_force_ward(points):
    """O(d^4) Ward oracle: recompute total within-cluster sum of squares for
    every candidate merge at every step; same node ids and tie-break as the
    production path."""
    d = len(points)

    def ess(leaves):
        pts = points[list(leaves)]
        centroid = pts.mean(axis=0)
        return float(np.sum((pts - centroid) ** 2))

    clusters = {i: (i,) for i in range(d)}  # node id -> leaves
    merges = []
    for step in range(d - 1):
        best = (np.inf, None)
        for i, j in itertools.combinations(sorted(clusters), 2):
            cost = ess(clusters[i] + clusters[j]) - ess(clusters[i]) - ess(clusters[j])
            if cost < best[0]:
                best = (cost, (i, j))
        cost, (i, j) = best
        new = d + step
        clusters[new] = clusters.pop(i) + clusters.pop(j)
        merges.append((i, j, cost, len(clusters[new])))
    return merges


def rand_index(a, b):
    """Fraction of point pairs on which two partitions agree."""
    labels = list(a)
    agree = total = 0
    for x, y in itertools.combinations(labels, 2):
        same_a = a[x] == a[y]
        same_b = b[x] == b[y]
        agree += same_a == same_b
        total += 1
    return agree / total


class TestWardCluster:
    def test_identical_pair_merges_first(self, rng):
        x = rng.standard_normal(50)
        y = rng.standard_normal(50)
        panel = std_panel(np.column_stack([x, x, y]))
        dendrogram = ward_cluster(panel)
        first = dendrogram.merges[0]
        assert (first.left, first.right) == (0, 1)
        assert first.height == 0.0

    def test_duplicate_pairs_merge_at_zero(self, rng):
        x = rng.standard_normal(60)
        y = rng.standard_normal(60)
        panel = std_panel(np.column_stack([x, y, x, y]))
        dendrogram = ward_cluster(panel)
        zero_merges = [m for m in dendrogram.merges if m.height == 0.0]
        assert len(zero_merges) == 2
        merged_pairs = {(m.left, m.right) for m in zero_merges}
        assert merged_pairs == {(0, 2), (1, 3)}
        # duplicates always merge before any positive-height merge
        heights = [m.height for m in dendrogram.merges]
        assert heights[:2] == [0.0, 0.0]
        assert all(h > 0 for h in heights[2:])

    def test_matches_brute_force(self):
        for seed in range(4):
            rng = np.random.default_rng(seed)
            panel = std_panel(rng.standard_normal((30, 6)))
            dendrogram = ward_cluster(panel)
            oracle = brute_force_ward(panel.values.T)
            for merge, (i, j, cost, size) in zip(dendrogram.merges, oracle):
                assert (merge.left, merge.right) == (i, j)
                assert merge.size == size
                assert abs(merge.height - cost) <= 1e-9 * max(1.0, cost)

    def test_monotone_heights(self, rng):
        panel = std_panel(rng.standard_normal((40, 8)))
        heights = [m.height for m in ward_cluster(panel).merges]
        assert all(b >= a - 1e-12 for a, b in zip(heights, heights[1:]))

    def test_permutation_invariance(self, rng):
        values = rng.standard_normal((50, 7))
        panel = std_panel(values)
        perm = rng.permutation(7)
        shuffled = std_panel(values[:, perm],
                             labels=[panel.labels[j] for j in perm])
        for k in (2, 3, 4):
            a = cut(ward_cluster(panel), k).by_label
            b = cut(ward_cluster(shuffled), k).by_label
            assert rand_index(a, b) == 1.0


class TestCut:
    def test_everyone_alone(self, rng):
        panel = std_panel(rng.standard_normal((30, 5)))
        assignment = cut(ward_cluster(panel), 5)
        assert sorted(assignment.by_label.values()) == [1, 2, 3, 4, 5]

    def test_single_cluster(self, rng):
        panel = std_panel(rng.standard_normal((30, 5)))
        assignment = cut(ward_cluster(panel), 1)
        assert set(assignment.by_label.values()) == {1}

    def test_out_of_range(self, rng):
        dendrogram = ward_cluster(std_panel(rng.standard_normal((30, 4))))
        with pytest.raises(ValueError):
            cut(dendrogram, 0)
        with pytest.raises(ValueError):
            cut(dendrogram, 5)

    def test_recovers_planted_blocks(self, rng):
        values, _, blocks = block_factor_data(rng, 2000, [4, 4, 4, 4, 4, 4],
                                              rho_within=0.8, rho_between=0.05)
        panel = std_panel(values)
        assignment = cut(ward_cluster(panel), 6)
        planted = {lab: int(blocks[j]) for j, lab in enumerate(panel.labels)}
        assert rand_index(assignment.by_label, planted) >= 0.95

    def test_k_refines_k_minus_one(self, rng):
        panel = std_panel(rng.standard_normal((60, 8)))
        dendrogram = ward_cluster(panel)
        for k in range(2, 9):
            fine = cut(dendrogram, k)
            coarse = cut(dendrogram, k - 1)
            for cid in range(1, k + 1):
                members = fine.members(cid)
                parents = {coarse.by_label[lab] for lab in members}
                assert len(parents) == 1

    def test_nonempty_clusters(self, rng):
        panel = std_panel(rng.standard_normal((40, 6)))
        dendrogram = ward_cluster(panel)
        for k in range(1, 7):
            assignment = cut(dendrogram, k)
            assert assignment.n_clusters == k
            for cid in range(1, k + 1):
                assert assignment.members(cid)


class TestFromCategories:
    def test_id_order_follows_labels(self):
        cats = {"A": "Europe", "B": "Asia", "C": "Europe"}
        assignment = ClusterAssignment.from_categories(cats, ["A", "B", "C"])
        assert assignment.names == ("Europe", "Asia")
        assert assignment.by_label == {"A": 1, "B": 2, "C": 1}
