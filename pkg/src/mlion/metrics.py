"""Cell-level strength/degree family plus concentration and heterogeneity measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedStatisticError
from .network import MultilayerNetwork, _check_layer, _check_node, _total_strengths, binarize

__all__ = [
    "StrengthProfile",
    "ConcentrationIndex",
    "strength_profile",
    "degree_profile",
    "strength_table",
    "degree_table",
    "hhi",
    "gini_heterogeneity",
    "pearson",
]

_DIRECTIONS = ("in", "out")
_KINDS = ("intralayer", "total", "total_interlayer")


@dataclass(frozen=True)
class StrengthProfile:
    """Strengths of one cell, broken down by counterpart layer.

    ``per_layer[b]`` sums the weights between this cell and the other nodes
    of layer ``b`` (same-node entries never count, in any block).
    """

    node: int
    layer: int
    direction: str
    per_layer: tuple[float, ...]
    intralayer: float
    total: float
    total_interlayer: float


@dataclass(frozen=True)
class ConcentrationIndex:
    """Herfindahl-Hirschman concentration of one cell's partner weights."""

    node: int
    layer: int
    direction: str
    value: float


def _check_direction(direction: str) -> None:
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")


def _partner_weights(net: MultilayerNetwork, node: int, layer: int, direction: str) -> np.ndarray:
    """Weights between cell (node, layer) and every other-node cell, zeroing same-node entries."""
    p = layer * net.n_nodes + node
    if direction == "out":
        w = net.supra[p, :].copy()
    else:
        w = net.supra[:, p].copy()
    w[node::net.n_nodes] = 0.0  # node's own replicas across all layers, incl. self
    return w


def strength_profile(net: MultilayerNetwork, node: int, layer: int, direction: str) -> StrengthProfile:
    """Layer-resolved strengths of one cell.

    Degrees are the same quantity on ``binarize(net)``; see
    :func:`degree_profile`.
    """
    _check_node(net, node)
    _check_layer(net, layer)
    _check_direction(direction)
    n = net.n_nodes
    w = _partner_weights(net, node, layer, direction)
    per_layer = tuple(float(w[b * n:(b + 1) * n].sum()) for b in range(net.n_layers))
    intralayer = per_layer[layer]
    total = float(w.sum())
    return StrengthProfile(
        node=node,
        layer=layer,
        direction=direction,
        per_layer=per_layer,
        intralayer=intralayer,
        total=total,
        total_interlayer=total - intralayer,
    )


def degree_profile(net: MultilayerNetwork, node: int, layer: int, direction: str) -> StrengthProfile:
    """Layer-resolved degrees (strengths of the binarized network)."""
    return strength_profile(binarize(net), node, layer, direction)


def strength_table(net: MultilayerNetwork, direction: str, kind: str = "total") -> np.ndarray:
    """One strength value per cell, in supra order.

    ``kind`` selects the intralayer sum, the total over all layers, or their
    difference (``total_interlayer``). Consistent with
    :func:`strength_profile` per cell.
    """
    _check_direction(direction)
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    n, length = net.n_nodes, net.n_layers
    s_in, s_out = _total_strengths(net.supra, n, length)
    total = s_out if direction == "out" else s_in
    if kind == "total":
        return total
    r = net.supra.reshape(length, n, length, n)
    self_loops = np.einsum("aiai->ai", r)
    if direction == "out":
        intra = np.einsum("aiaj->ai", r) - self_loops
    else:
        intra = np.einsum("ajai->ai", r) - self_loops
    intra = intra.reshape(-1)
    if kind == "intralayer":
        return intra
    return total - intra


def degree_table(net: MultilayerNetwork, direction: str, kind: str = "total") -> np.ndarray:
    """One degree value per cell (strength table of the binarized network)."""
    return strength_table(binarize(net), direction, kind)


def hhi(net: MultilayerNetwork, node: int, layer: int, direction: str) -> ConcentrationIndex:
    """Partner concentration of one cell: sum of squared weight shares.

    Shares are taken against the cell's total strength in the same direction,
    so they sum to one and the value lies in [1/(N*L), 1], hitting 1 for a
    single partner. Cells with zero strength have no shares to square.
    """
    _check_node(net, node)
    _check_layer(net, layer)
    _check_direction(direction)
    w = _partner_weights(net, node, layer, direction)
    total = w.sum()
    if total == 0:
        raise UndefinedStatisticError(
            f"cell (node {node}, layer {layer}) has zero {direction}-strength; HHI undefined"
        )
    shares = w / total
    return ConcentrationIndex(node=node, layer=layer, direction=direction, value=float(shares @ shares))


def gini_heterogeneity(proportions) -> float:
    """Gini-Simpson index 1 - sum(p^2) of a discrete distribution.

    ``proportions`` must be nonnegative and sum to 1 within 1e-9. Returns 0
    for a single class and approaches 1 as classes even out.
    """
    p = np.asarray(proportions, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("proportions must be a non-empty 1-d sequence")
    if (p < 0).any() or not np.isfinite(p).all():
        raise ValueError("proportions must be finite and nonnegative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"proportions sum to {total!r}, not 1")
    return float(1.0 - p @ p)


def pearson(x, y) -> float:
    """Pearson correlation of two equal-length samples.

    Raises UndefinedStatisticError when either sample has zero variance.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or ya.ndim != 1 or xa.shape != ya.shape:
        raise ValueError("samples must be 1-d and of equal length")
    if xa.size < 2:
        raise ValueError("need at least two observations")
    if not (np.isfinite(xa).all() and np.isfinite(ya).all()):
        raise ValueError("samples must be finite")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sx = xc @ xc
    sy = yc @ yc
    if sx == 0 or sy == 0:
        raise UndefinedStatisticError("constant sample: correlation undefined")
    return float((xc @ yc) / np.sqrt(sx * sy))
