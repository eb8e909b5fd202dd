"""Matrix-exponential communicability, distances between cells, and partition quality.

Communicability counts all walks between two cells, weighting a walk of
length k by 1/k!, which is the matrix exponential of the (possibly
strength-normalised) supra matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricInputError
from .network import MultilayerNetwork, _check_layer, binarize, normalize_strength

__all__ = [
    "expm",
    "CommunicabilityField",
    "communicability",
    "receive_centrality",
    "broadcast_centrality",
    "DistanceField",
    "distance_field",
    "cohesion",
    "quality",
]

# Degree-13 Pade numerator coefficients for exp(x) and the matching 1-norm
# bound below which no scaling is needed.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def _expm_pade(a: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring with a degree-13 Pade approximant."""
    norm = np.linalg.norm(a, 1)
    squarings = 0
    if norm > _THETA13:
        squarings = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / 2.0 ** squarings
    b = _PADE13
    ident = np.eye(a.shape[0])
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    )
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


def expm(m) -> np.ndarray:
    """Matrix exponential of a square real matrix.

    Symmetric input goes through an eigendecomposition and the result is
    re-symmetrised, so it is exactly symmetric. General input uses
    scaling-and-squaring with a degree-13 Pade approximant.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"need a non-empty square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix contains non-finite values")
    if np.array_equal(a, a.T):
        w, v = np.linalg.eigh(a)
        r = (v * np.exp(w)) @ v.T
        return (r + r.T) / 2.0
    return _expm_pade(a)


@dataclass(frozen=True, eq=False)
class CommunicabilityField:
    """Communicability values G = exp(base) between all cell pairs.

    ``mode`` records whether the base matrix was the binarized supra matrix
    or the strength-normalised weighted one; ``symmetric_source`` whether
    that base was symmetric (required for the distance construction).
    """

    g: np.ndarray
    mode: str
    source: MultilayerNetwork
    symmetric_source: bool

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if (np.diag(g) <= 0).any():
            raise ValueError("communicability self-terms must be positive")
        if g.flags.writeable:
            g = g.copy()
            g.flags.writeable = False
        object.__setattr__(self, "g", g)


def communicability(net: MultilayerNetwork, mode: str = "weighted") -> CommunicabilityField:
    """Communicability field of a network.

    ``"binary"`` exponentiates the binarized supra matrix. ``"weighted"``
    first normalises weights by endpoint strengths (symmetric normalisation
    when the supra matrix is symmetric, two-sided in/out otherwise) so the
    exponential stays well-scaled.
    """
    if mode == "binary":
        base = binarize(net).supra
    elif mode == "weighted":
        if np.array_equal(net.supra, net.supra.T):
            base = normalize_strength(net, "symmetric").supra
        else:
            base = normalize_strength(net, "directed").supra
    else:
        raise ValueError(f"unknown communicability mode {mode!r}")
    return CommunicabilityField(
        g=expm(base),
        mode=mode,
        source=net,
        symmetric_source=bool(np.array_equal(base, base.T)),
    )


def receive_centrality(field: CommunicabilityField, node: int, layer: int, from_layer: int | None = None) -> float:
    """Sum of communicability flowing into a cell, optionally from one layer only."""
    net = field.source
    p = net.index(node, layer)
    col = field.g[:, p]
    if from_layer is None:
        return float(col.sum())
    _check_layer(net, from_layer)
    n = net.n_nodes
    return float(col[from_layer * n:(from_layer + 1) * n].sum())


def broadcast_centrality(field: CommunicabilityField, node: int, layer: int, to_layer: int | None = None) -> float:
    """Sum of communicability flowing out of a cell, optionally to one layer only."""
    net = field.source
    p = net.index(node, layer)
    row = field.g[p, :]
    if to_layer is None:
        return float(row.sum())
    _check_layer(net, to_layer)
    n = net.n_nodes
    return float(row[to_layer * n:(to_layer + 1) * n].sum())


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Communicability distances xi between all cell pairs plus their means.

    ``row_means[p]`` averages row p of xi and ``global_mean`` averages the
    whole matrix; both including the zero self-distances unless the field was
    built with ``exclude_self=True``.
    """

    xi: np.ndarray
    row_means: np.ndarray
    global_mean: float
    n_nodes: int
    n_layers: int

    def __post_init__(self):
        for name in ("xi", "row_means"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.flags.writeable:
                arr = arr.copy()
                arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.xi.shape[0]


def distance_field(field: CommunicabilityField, exclude_self: bool = False) -> DistanceField:
    """Communicability distance xi_pq = G_pp - 2 G_pq + G_qq for all pairs.

    Requires a field built from a symmetric base matrix. With
    ``exclude_self=True`` the row and global means are taken over the
    off-diagonal entries only (denominators NL-1 and NL*(NL-1)).
    """
    if not field.symmetric_source:
        raise AsymmetricInputError("distances need communicability of a symmetric base matrix")
    g = field.g
    n = g.shape[0]
    d = g.diagonal()
    xi = np.add.outer(d, d) - 2.0 * g
    if exclude_self:
        if n < 2:
            raise ValueError("exclude_self needs at least two cells")
        row_means = xi.sum(axis=1) / (n - 1)
        global_mean = float(xi.sum() / (n * (n - 1)))
    else:
        row_means = xi.mean(axis=1)
        global_mean = float(xi.mean())
    return DistanceField(
        xi=xi,
        row_means=row_means,
        global_mean=global_mean,
        n_nodes=field.source.n_nodes,
        n_layers=field.source.n_layers,
    )


def cohesion(dist: DistanceField, a: int, b: int) -> float:
    """Excess closeness of two cells against the field average.

    Positive when a and b sit closer together than typical cells do:
    row_mean(a) + row_mean(b) - xi(a, b) - global_mean.
    """
    n = dist.size
    for idx in (a, b):
        if not 0 <= idx < n:
            raise IndexError(f"supra index {idx} out of range for {n} cells")
    return float(dist.row_means[a] + dist.row_means[b] - dist.xi[a, b] - dist.global_mean)


def quality(dist: DistanceField, partition) -> float:
    """Total cohesion over all ordered same-community cell pairs, self-pairs included.

    ``partition`` may be a Partition or any integer label array over the
    cells. Putting every cell in one community gives exactly zero; good
    partitions are positive.
    """
    labels = np.asarray(getattr(partition, "assignment", partition))
    n = dist.size
    if labels.shape != (n,):
        raise ValueError(f"partition labels cover {labels.shape}, expected ({n},)")
    rm = dist.row_means
    gm = dist.global_mean
    total = 0.0
    for cid in np.unique(labels):
        members = np.flatnonzero(labels == cid)
        k = members.size
        total += 2.0 * k * rm[members].sum() - dist.xi[np.ix_(members, members)].sum() - k * k * gm
    return float(total)
