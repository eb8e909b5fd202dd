"""Community detection by thresholding communicability distances.

The detection pipeline: symmetrise the network, strength-normalise, take the
matrix exponential, turn it into distances, then sweep a uniform grid of
distance thresholds. Each threshold induces a graph on the cells (edge when
xi <= threshold); its connected components are a candidate partition, scored
by total cohesion. The partition with the highest score wins, earliest
threshold on ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .communicability import DistanceField, communicability, distance_field, quality
from .metrics import gini_heterogeneity
from .network import MultilayerNetwork, aggregate_monolayer, subnetwork, symmetrize

__all__ = [
    "UnionFind",
    "Partition",
    "SweepTrace",
    "components_at_threshold",
    "detect_communities",
    "detect_monolayer",
    "CommunityRow",
    "CommunityReport",
    "community_report",
    "rank_members",
]


class UnionFind:
    """Disjoint sets over range(n) with union by size and path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.n_components = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_components -= 1
        return True


@dataclass(frozen=True, eq=False)
class Partition:
    """Canonical community assignment over the cells of a network.

    Community ids are consecutive from 0, ordered by decreasing size with
    ties broken by the smallest member supra index. ``isolated`` holds the
    supra indices of all singleton communities.
    """

    assignment: np.ndarray
    threshold: float
    quality: float
    isolated: frozenset[int]
    n_nodes: int
    n_layers: int

    def __post_init__(self):
        labels = np.asarray(self.assignment, dtype=int)
        if labels.shape != (self.n_nodes * self.n_layers,):
            raise ValueError(
                f"assignment length {labels.shape} does not match "
                f"{self.n_nodes} nodes x {self.n_layers} layers"
            )
        if labels.flags.writeable:
            labels = labels.copy()
            labels.flags.writeable = False
        object.__setattr__(self, "assignment", labels)

    @property
    def n_communities(self) -> int:
        return int(self.assignment.max()) + 1

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_communities)

    def members(self, community: int) -> np.ndarray:
        if not 0 <= community < self.n_communities:
            raise IndexError(f"community id {community} out of range")
        return np.flatnonzero(self.assignment == community)


@dataclass(frozen=True)
class SweepTrace:
    """Per-threshold record of a detection sweep.

    ``entries`` holds (threshold, n_components, quality) triples in sweep
    order. ``degenerate`` flags sweeps where all pair distances were equal
    (or there were no pairs), so only a single threshold was evaluated.
    """

    entries: tuple[tuple[float, int, float], ...]
    degenerate: bool = False


def _canonicalize(raw_labels: np.ndarray) -> tuple[np.ndarray, frozenset[int]]:
    """Relabel arbitrary component ids into canonical form. See Partition."""
    uniq, first, inverse, counts = np.unique(
        raw_labels, return_index=True, return_inverse=True, return_counts=True
    )
    order = sorted(range(uniq.size), key=lambda k: (-counts[k], first[k]))
    rank = np.empty(uniq.size, dtype=int)
    for new_id, old_pos in enumerate(order):
        rank[old_pos] = new_id
    assignment = rank[inverse]
    sizes = counts[order]  # indexed by new id
    isolated = frozenset(int(i) for i in np.flatnonzero(sizes[assignment] == 1))
    return assignment, isolated


def components_at_threshold(dist: DistanceField, threshold: float) -> Partition:
    """Partition of cells into connected components of the xi <= threshold graph."""
    if not math.isfinite(threshold):
        raise ValueError(f"threshold must be finite, got {threshold!r}")
    n = dist.size
    uf = UnionFind(n)
    rows, cols = np.nonzero(np.triu(dist.xi <= threshold, k=1))
    for a, b in zip(rows.tolist(), cols.tolist()):
        uf.union(a, b)
    raw = np.fromiter((uf.find(i) for i in range(n)), dtype=int, count=n)
    assignment, isolated = _canonicalize(raw)
    return Partition(
        assignment=assignment,
        threshold=float(threshold),
        quality=quality(dist, assignment),
        isolated=isolated,
        n_nodes=dist.n_nodes,
        n_layers=dist.n_layers,
    )


def _sweep(dist: DistanceField, r: int) -> tuple[Partition, SweepTrace]:
    """Threshold sweep over the distance field; shared by the detect entry points."""
    xi = dist.xi
    n = dist.size
    gm = dist.global_mean
    ii, jj = np.triu_indices(n, 1)
    values = xi[ii, jj]

    if values.size == 0 or values.min() == values.max():
        t0 = float(values.min()) if values.size else 0.0
        part = components_at_threshold(dist, t0)
        trace = SweepTrace(entries=((t0, part.n_communities, part.quality),), degenerate=True)
        return part, trace

    xi_min = float(values.min())
    xi_max = float(values.max())
    step = (xi_max - xi_min) / r
    thresholds = xi_min + np.arange(r + 1) * step
    thresholds[-1] = xi_max  # guard against rounding leaving the widest pair unmerged

    order = np.argsort(values, kind="stable")
    sv = values[order]
    si = ii[order].tolist()
    sj = jj[order].tolist()
    svl = sv.tolist()

    # Per-root component statistics, maintained incrementally: component size,
    # sum of member row-means, and the sum of xi over all ordered member
    # pairs. Row accumulator U keeps U[root] = sum of xi rows of the members,
    # so the cross term of a merge is a single indexed sum.
    parent = list(range(n))
    size = np.ones(n, dtype=np.int64)
    rsum = dist.row_means.copy()
    xsum = np.zeros(n)
    u = xi.copy()
    members: list[list[int]] = [[i] for i in range(n)]

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    entries = []
    snapshots = []
    ptr = 0
    n_pairs = len(svl)
    idx = np.arange(n)
    for t in thresholds.tolist():
        while ptr < n_pairs and svl[ptr] <= t:
            a, b = find(si[ptr]), find(sj[ptr])
            ptr += 1
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            cross = u[a, members[b]].sum()
            xsum[a] += xsum[b] + 2.0 * cross
            rsum[a] += rsum[b]
            size[a] += size[b]
            u[a] += u[b]
            members[a].extend(members[b])
            members[b] = []
            parent[b] = a
        roots = np.fromiter((find(i) for i in range(n)), dtype=int, count=n)
        live = idx[np.asarray(parent) == idx]
        q = float(
            (2.0 * size[live] * rsum[live] - xsum[live] - size[live].astype(float) ** 2 * gm).sum()
        )
        entries.append((float(t), int(live.size), q))
        snapshots.append(roots)

    best = 0
    for h in range(1, len(entries)):
        if entries[h][2] > entries[best][2]:
            best = h
    assignment, isolated = _canonicalize(snapshots[best])
    part = Partition(
        assignment=assignment,
        threshold=entries[best][0],
        quality=entries[best][2],
        isolated=isolated,
        n_nodes=dist.n_nodes,
        n_layers=dist.n_layers,
    )
    return part, SweepTrace(entries=tuple(entries), degenerate=False)


def detect_communities(net: MultilayerNetwork, r: int = 100) -> tuple[Partition, SweepTrace]:
    """Detect communities of a multilayer network.

    Symmetrises the weights, strength-normalises them, computes the matrix
    exponential and the induced distances, then sweeps r+1 uniform thresholds
    from the smallest to the largest pair distance inclusive. Returns the
    quality-maximising partition (smallest threshold on ties) and the full
    sweep trace.
    """
    if r < 1:
        raise ValueError(f"threshold resolution r must be >= 1, got {r}")
    field = communicability(symmetrize(net), mode="weighted")
    dist = distance_field(field)
    return _sweep(dist, r)


def detect_monolayer(net: MultilayerNetwork, r: int = 100) -> tuple[Partition, SweepTrace]:
    """Detect communities of the aggregated single-layer network."""
    if r < 1:
        raise ValueError(f"threshold resolution r must be >= 1, got {r}")
    return detect_communities(aggregate_monolayer(net), r=r)


@dataclass(frozen=True)
class CommunityRow:
    """Per-node (or per-layer) community membership summary.

    ``top_counts[k]`` counts cells falling in community k, provided that
    community has at least two members; singleton cells are tallied under
    ``isolated`` instead, and everything else under ``other``. The four
    categories always partition all cells of the row. ``dominant`` is the
    non-singleton community holding most of the row's cells (smallest id on
    ties), or None when every cell is isolated. ``gini`` is the Gini-Simpson
    heterogeneity of the row's community distribution.
    """

    label: str
    top_counts: tuple[int, ...]
    isolated: int
    other: int
    dominant: int | None
    gini: float


@dataclass(frozen=True, eq=False)
class CommunityReport:
    """Membership summaries per country and per sector, plus the id grid.

    ``membership_grid`` is nodes x layers; entries carry the community id or
    -1 where the community is smaller than ``min_size``.
    """

    per_node: tuple[CommunityRow, ...]
    per_layer: tuple[CommunityRow, ...]
    membership_grid: np.ndarray
    min_size: int
    top_k: int


def _summary_row(label: str, ids: np.ndarray, sizes: np.ndarray, top_k: int,
                 isolated_as_one_class: bool) -> CommunityRow:
    total = ids.size
    counts = np.bincount(ids, minlength=sizes.size)
    singleton = sizes == 1
    iso = int(counts[singleton].sum())
    top = tuple(
        int(counts[k]) if k < counts.size and not singleton[k] else 0
        for k in range(top_k)
    )
    other = total - sum(top) - iso

    present = np.flatnonzero(counts)
    candidates = [int(c) for c in present if not singleton[c]]
    dominant = None
    if candidates:
        dominant = max(candidates, key=lambda c: (counts[c], -c))

    if isolated_as_one_class:
        class_counts = [int(counts[c]) for c in present if not singleton[c]]
        if iso:
            class_counts.append(iso)
    else:
        class_counts = [int(counts[c]) for c in present]
    gini = gini_heterogeneity(np.asarray(class_counts, dtype=float) / total)
    return CommunityRow(
        label=label, top_counts=top, isolated=iso, other=int(other),
        dominant=dominant, gini=gini,
    )


def community_report(partition: Partition, net: MultilayerNetwork, min_size: int = 30,
                     top_k: int = 2, isolated_as_one_class: bool = False) -> CommunityReport:
    """Tabulate a partition per country and per sector."""
    if partition.assignment.size != net.n_cells:
        raise ValueError("partition does not cover this network's cells")
    if min_size < 1:
        raise ValueError(f"min_size must be >= 1, got {min_size}")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    sizes = partition.sizes
    grid = partition.assignment.reshape(net.n_layers, net.n_nodes)

    per_node = tuple(
        _summary_row(net.node_labels[i], grid[:, i], sizes, top_k, isolated_as_one_class)
        for i in range(net.n_nodes)
    )
    per_layer = tuple(
        _summary_row(net.layer_labels[a], grid[a, :], sizes, top_k, isolated_as_one_class)
        for a in range(net.n_layers)
    )
    membership = grid.T.copy()
    membership[sizes[membership] < min_size] = -1
    return CommunityReport(
        per_node=per_node,
        per_layer=per_layer,
        membership_grid=membership,
        min_size=min_size,
        top_k=top_k,
    )


def rank_members(net: MultilayerNetwork, members, direction: str = "sum"):
    """Rank member cells by their strength inside the member-induced subnetwork.

    ``members`` is an iterable of (node, layer) pairs; ``direction`` is
    ``"in"``, ``"out"`` or ``"sum"``. Returns (cell, strength) pairs sorted
    by decreasing strength, ties by supra index. Same-node weights never
    count toward strength, matching the network-wide convention.
    """
    if direction not in ("in", "out", "sum"):
        raise ValueError(f"direction must be 'in', 'out' or 'sum', got {direction!r}")
    sub = subnetwork(net, members)
    nodes = np.array([c[0] for c in sub.cells])
    cross_node = nodes[:, None] != nodes[None, :]
    w = np.where(cross_node, sub.matrix, 0.0)
    s_out = w.sum(axis=1)
    s_in = w.sum(axis=0)
    strength = {"in": s_in, "out": s_out, "sum": s_in + s_out}[direction]
    order = sorted(range(len(sub.cells)), key=lambda k: (-strength[k], sub.indices[k]))
    return [(sub.cells[k], float(strength[k])) for k in order]
