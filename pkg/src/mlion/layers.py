"""Layer-pair statistics, sector similarity, and layer clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .community import Partition
from .errors import UndefinedStatisticError
from .metrics import pearson
from .network import MultilayerNetwork, block

__all__ = [
    "avg_connectivity",
    "avg_intensity",
    "overlap",
    "weighted_overlap",
    "correlation",
    "LayerPairTable",
    "pair_table",
    "jaccard_sector_similarity",
    "Dendrogram",
    "hcluster_layers",
    "to_newick",
]


def avg_connectivity(net: MultilayerNetwork, layer_a: int, layer_b: int) -> float:
    """Edge density of the (layer_a -> layer_b) block: present links over N^2 slots."""
    b = block(net, layer_a, layer_b) > 0
    return float(b.mean())


def avg_intensity(net: MultilayerNetwork, layer_a: int, layer_b: int, normalized: bool = False) -> float:
    """Mean weight of the (layer_a -> layer_b) block over all N^2 slots.

    With ``normalized=True`` weights are first divided by the largest weight
    anywhere in the supra matrix, giving values comparable across networks.
    """
    b = block(net, layer_a, layer_b)
    value = float(b.mean())
    if not normalized:
        return value
    w_max = float(net.supra.max())
    if w_max == 0:
        raise UndefinedStatisticError("all weights are zero; normalized intensity undefined")
    return value / w_max


def overlap(net: MultilayerNetwork, layer_a: int, layer_b: int) -> float:
    """Binary overlap of two intralayer link sets: 2*|shared| / (|links a| + |links b|)."""
    a = (block(net, layer_a, layer_a) > 0).astype(float)
    b = (block(net, layer_b, layer_b) > 0).astype(float)
    denom = a.sum() + b.sum()
    if denom == 0:
        raise UndefinedStatisticError("both layers are empty; overlap undefined")
    return float(2.0 * np.minimum(a, b).sum() / denom)


def weighted_overlap(net: MultilayerNetwork, layer_a: int, layer_b: int) -> float:
    """Weighted overlap of two intralayer blocks: 2*sum(min) / sum(both)."""
    a = block(net, layer_a, layer_a)
    b = block(net, layer_b, layer_b)
    denom = a.sum() + b.sum()
    if denom == 0:
        raise UndefinedStatisticError("both layers carry zero weight; overlap undefined")
    return float(2.0 * np.minimum(a, b).sum() / denom)


def correlation(net: MultilayerNetwork, layer_a: int, layer_b: int, weighted: bool = True) -> float:
    """Pearson correlation of two intralayer blocks, flattened over all N^2 slots."""
    a = block(net, layer_a, layer_a).reshape(-1)
    b = block(net, layer_b, layer_b).reshape(-1)
    if not weighted:
        a = (a > 0).astype(float)
        b = (b > 0).astype(float)
    return pearson(a, b)


@dataclass(frozen=True, eq=False)
class LayerPairTable:
    """L x L table of one layer-pair statistic; NaN marks undefined entries."""

    kind: str
    values: np.ndarray
    layer_labels: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "values", values)


_TABLE_KINDS = (
    "connectivity",
    "intensity",
    "intensity_norm",
    "overlap_binary",
    "overlap_weighted",
    "correlation_binary",
    "correlation_weighted",
)


def pair_table(net: MultilayerNetwork, kind: str) -> LayerPairTable:
    """All-pairs table of one statistic; entries that are undefined become NaN."""
    if kind not in _TABLE_KINDS:
        raise ValueError(f"kind must be one of {_TABLE_KINDS}, got {kind!r}")
    length = net.n_layers
    scalar = {
        "connectivity": avg_connectivity,
        "intensity": avg_intensity,
        "intensity_norm": lambda m, a, b: avg_intensity(m, a, b, normalized=True),
        "overlap_binary": overlap,
        "overlap_weighted": weighted_overlap,
        "correlation_binary": lambda m, a, b: correlation(m, a, b, weighted=False),
        "correlation_weighted": correlation,
    }[kind]
    values = np.empty((length, length))
    for a in range(length):
        for b in range(length):
            try:
                values[a, b] = scalar(net, a, b)
            except UndefinedStatisticError:
                values[a, b] = np.nan
    return LayerPairTable(kind=kind, values=values, layer_labels=net.layer_labels)


def jaccard_sector_similarity(partition: Partition, layer_a: int, layer_b: int) -> float:
    """Jaccard similarity of two layers' community classifications.

    Each layer is read as the set of (node, community) pairs over its
    non-isolated cells; the similarity is |intersection| / |union|. Undefined
    when both layers are entirely isolated.
    """
    n = partition.n_nodes
    for layer in (layer_a, layer_b):
        if not 0 <= layer < partition.n_layers:
            raise IndexError(f"layer index {layer} out of range for {partition.n_layers} layers")

    def classified(layer: int) -> set[tuple[int, int]]:
        base = layer * n
        return {
            (i, int(partition.assignment[base + i]))
            for i in range(n)
            if base + i not in partition.isolated
        }

    a = classified(layer_a)
    b = classified(layer_b)
    union = a | b
    if not union:
        raise UndefinedStatisticError("both layers are fully isolated; similarity undefined")
    return len(a & b) / len(union)


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge history over a set of leaves.

    ``merges[k]`` is (cluster_a, cluster_b, height, size): the two cluster
    ids merged at step k, the distance at which they merged, and the size of
    the result. Leaves are clusters 0..L-1; the merge at step k creates
    cluster L+k. Heights never decrease.
    """

    merges: tuple[tuple[int, int, float, int], ...]
    leaf_labels: tuple[str, ...]


def hcluster_layers(features, labels=None) -> Dendrogram:
    """Average-linkage (UPGMA) clustering of feature rows under euclidean distance.

    Ties on the merge distance are broken deterministically: the candidate
    pair whose (smallest leaf label, largest leaf label) is lexicographically
    smallest wins, then smaller cluster ids.
    """
    f = np.asarray(features, dtype=float)
    if f.ndim != 2 or f.shape[0] < 2:
        raise ValueError("need a 2-d feature array with at least two rows")
    if not np.isfinite(f).all():
        raise ValueError("features must be finite")
    length = f.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(length))
    else:
        labels = tuple(str(x) for x in labels)
        if len(labels) != length:
            raise ValueError("label count does not match feature rows")
        if len(set(labels)) != length:
            raise ValueError("duplicate leaf labels")

    diff = f[:, None, :] - f[None, :, :]
    base = np.sqrt((diff ** 2).sum(axis=-1))

    # active cluster id -> (size, min leaf label, max leaf label)
    active = {i: (1, labels[i], labels[i]) for i in range(length)}
    dist = {(i, j): float(base[i, j]) for i in range(length) for j in range(i + 1, length)}
    merges = []
    next_id = length
    for _ in range(length - 1):
        d_min = min(dist.values())
        best_key = None
        best_pair = None
        for (i, j), d in sorted(dist.items()):
            if d != d_min:
                continue
            lo = min(active[i][1], active[j][1])
            hi = max(active[i][2], active[j][2])
            key = (lo, hi, i, j)
            if best_key is None or key < best_key:
                best_key = key
                best_pair = (i, j)
        i, j = best_pair
        size_i, lo_i, hi_i = active[i]
        size_j, lo_j, hi_j = active[j]
        size = size_i + size_j
        merges.append((i, j, d_min, size))

        del active[i], active[j]
        for k in list(active):
            d_ik = dist.pop((min(i, k), max(i, k)))
            d_jk = dist.pop((min(j, k), max(j, k)))
            dist[(k, next_id)] = (size_i * d_ik + size_j * d_jk) / size
        for pair in [p for p in dist if i in p or j in p]:
            del dist[pair]
        active[next_id] = (size, min(lo_i, lo_j), max(hi_i, hi_j))
        next_id += 1
    return Dendrogram(merges=tuple(merges), leaf_labels=labels)


def _newick_label(label: str) -> str:
    if any(ch in label for ch in "(),:;'\t\n ") or label == "":
        return "'" + label.replace("'", "''") + "'"
    return label


def to_newick(dendrogram: Dendrogram) -> str:
    """Newick string with ultrametric branch lengths (leaves at height 0)."""
    length = len(dendrogram.leaf_labels)
    heights = {i: 0.0 for i in range(length)}
    children = {}
    for k, (a, b, height, _size) in enumerate(dendrogram.merges):
        node = length + k
        heights[node] = height
        children[node] = (a, b)

    def render(node: int, parent_height: float) -> str:
        branch = parent_height - heights[node]
        if node < length:
            return f"{_newick_label(dendrogram.leaf_labels[node])}:{branch:.12g}"
        a, b = children[node]
        inner = f"({render(a, heights[node])},{render(b, heights[node])})"
        return f"{inner}:{branch:.12g}"

    root = length + len(dendrogram.merges) - 1
    a, b = children[root]
    return f"({render(a, heights[root])},{render(b, heights[root])});"
