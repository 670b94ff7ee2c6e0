"""Agglomerative clustering of panel columns with Ward's minimum-variance
linkage, and K-cuts of the resulting merge tree.

Columns of the standardised panel are treated as points in n-dimensional
space. Merge heights are the increase in total within-cluster sum of squares
caused by each merge, maintained via the Lance-Williams recurrence (O(d^3)
overall), which keeps them directly comparable to a brute-force Ward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import PanelError
from .panel import StandardizedPanel


@dataclass(frozen=True)
class Merge:
    """One agglomeration step. Node ids: leaves are 0..d-1, the i-th merge
    creates node d+i."""

    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    labels: tuple[str, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self):
        if len(self.merges) != len(self.labels) - 1:
            raise PanelError(f"{len(self.labels)} leaves need "
                             f"{len(self.labels) - 1} merges")

    @property
    def d(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ClusterAssignment:
    """Partition of column labels into clusters 1..K."""

    by_label: Mapping[str, int]
    names: tuple[str, ...]

    @property
    def n_clusters(self) -> int:
        return len(self.names)

    def members(self, cluster: int) -> tuple[str, ...]:
        return tuple(lab for lab, c in self.by_label.items() if c == cluster)

    @classmethod
    def from_categories(cls, categories: Mapping[str, str],
                        label_order: Sequence[str]) -> "ClusterAssignment":
        """One cluster per category, ids in order of first appearance."""
        names: list[str] = []
        by_label: dict[str, int] = {}
        for lab in label_order:
            cat = categories[lab]
            if cat not in names:
                names.append(cat)
            by_label[lab] = names.index(cat) + 1
        return cls(by_label, tuple(names))


def ward_cluster(panel: StandardizedPanel) -> Dendrogram:
    """Full Ward merge tree over the panel columns.

    Ties in merge cost break deterministically on the lexicographically
    smallest active node pair.
    """
    X = panel.values
    if not np.all(np.isfinite(X)):
        raise PanelError("panel contains non-finite values")
    d = panel.d
    if d < 2:
        raise PanelError("need at least 2 columns to cluster")
    pts = X.T  # columns as points

    total = 2 * d - 1
    dist = np.full((total, total), np.inf)
    sq = np.sum(pts ** 2, axis=1)
    gram = pts @ pts.T
    # merge cost of two singletons is half their squared distance
    init = 0.5 * np.maximum(sq[:, None] + sq[None, :] - 2 * gram, 0.0)
    dist[:d, :d] = init
    np.fill_diagonal(dist, np.inf)

    size = np.zeros(total, dtype=np.int64)
    size[:d] = 1
    active = list(range(d))
    merges: list[Merge] = []

    for step in range(d - 1):
        best = (np.inf, None)
        for ai in range(len(active)):
            i = active[ai]
            row = dist[i]
            for aj in range(ai + 1, len(active)):
                j = active[aj]
                h = row[j]
                if h < best[0]:
                    best = (h, (i, j))
        height, (i, j) = best
        new = d + step
        size[new] = size[i] + size[j]
        merges.append(Merge(i, j, float(height), int(size[new])))

        # Lance-Williams update of the merge cost against every other cluster
        for k in active:
            if k in (i, j):
                continue
            dist[new, k] = dist[k, new] = (
                (size[i] + size[k]) * dist[i, k]
                + (size[j] + size[k]) * dist[j, k]
                - size[k] * height
            ) / (size[new] + size[k])
        active.remove(i)
        active.remove(j)
        active.append(new)
    return Dendrogram(panel.labels, tuple(merges))


def cut(dendrogram: Dendrogram, k: int) -> ClusterAssignment:
    """Partition into k clusters by undoing the last k-1 merges.

    Cluster ids are assigned by ascending smallest-leaf index, so the
    labelling does not depend on merge order.
    """
    d = dendrogram.d
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    parent = list(range(2 * d - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, merge in enumerate(dendrogram.merges[:d - k]):
        new = d + step
        parent[find(merge.left)] = new
        parent[find(merge.right)] = new

    roots: dict[int, list[int]] = {}
    for leaf in range(d):
        roots.setdefault(find(leaf), []).append(leaf)
    ordered = sorted(roots.values(), key=lambda leaves: leaves[0])
    by_label: dict[str, int] = {}
    for cid, leaves in enumerate(ordered, start=1):
        for leaf in leaves:
            by_label[dendrogram.labels[leaf]] = cid
    by_label = {lab: by_label[lab] for lab in dendrogram.labels}
    return ClusterAssignment(by_label, tuple(f"C{c}" for c in range(1, k + 1)))
