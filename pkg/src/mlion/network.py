"""Multilayer network model: supra-matrix storage, indexing, structural transforms.

Cells are (node, layer) pairs. The supra matrix is laid out layer-major, so
the cell for node ``i`` in layer ``a`` sits at row/column ``a * n_nodes + i``
and each layer occupies a contiguous block of ``n_nodes`` rows and columns.
Diagonal blocks hold intralayer weights, off-diagonal blocks interlayer ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AsymmetricInputError

__all__ = [
    "NetworkMeta",
    "MultilayerNetwork",
    "Subnetwork",
    "supra_index",
    "cell_of",
    "block",
    "binarize",
    "split_intra_inter",
    "symmetrize",
    "normalize_strength",
    "aggregate_monolayer",
    "subnetwork",
]


@dataclass(frozen=True)
class NetworkMeta:
    """Provenance carried alongside the weights."""

    year: int = 0
    source: str = ""
    currency_unit: str = ""
    clamped: int = 0  # count of negative input values zeroed at ingest


@dataclass(frozen=True, eq=False)
class MultilayerNetwork:
    """Immutable weighted multilayer network over a dense supra matrix.

    Parameters
    ----------
    node_labels : sequence of str
        Unique node (country) labels; their order fixes node indices.
    layer_labels : sequence of str
        Unique layer (sector) labels; their order fixes layer indices.
    supra : (N*L, N*L) array_like
        Nonnegative finite weights in layer-major cell order.
    meta : NetworkMeta, optional
        Provenance record.
    """

    node_labels: tuple[str, ...]
    layer_labels: tuple[str, ...]
    supra: np.ndarray
    meta: NetworkMeta = field(default_factory=NetworkMeta)

    def __post_init__(self):
        nodes = tuple(str(x) for x in self.node_labels)
        layers = tuple(str(x) for x in self.layer_labels)
        if not nodes or not layers:
            raise ValueError("network needs at least one node and one layer")
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node labels")
        if len(set(layers)) != len(layers):
            raise ValueError("duplicate layer labels")
        supra = np.asarray(self.supra, dtype=float)
        n_cells = len(nodes) * len(layers)
        if supra.shape != (n_cells, n_cells):
            raise ValueError(
                f"supra matrix shape {supra.shape} does not match "
                f"{len(nodes)} nodes x {len(layers)} layers = {n_cells} cells"
            )
        if not np.isfinite(supra).all():
            raise ValueError("supra matrix contains non-finite values")
        if (supra < 0).any():
            raise ValueError("supra matrix contains negative weights")
        if supra.flags.writeable:
            supra = supra.copy(order="C")
            supra.flags.writeable = False
        object.__setattr__(self, "node_labels", nodes)
        object.__setattr__(self, "layer_labels", layers)
        object.__setattr__(self, "supra", supra)
        object.__setattr__(self, "_node_pos", {s: i for i, s in enumerate(nodes)})
        object.__setattr__(self, "_layer_pos", {s: i for i, s in enumerate(layers)})

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_layers(self) -> int:
        return len(self.layer_labels)

    @property
    def n_cells(self) -> int:
        return self.n_nodes * self.n_layers

    def node_index(self, label: str) -> int:
        try:
            return self._node_pos[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def layer_index(self, label: str) -> int:
        try:
            return self._layer_pos[label]
        except KeyError:
            raise KeyError(f"unknown layer label {label!r}") from None

    def index(self, node: int, layer: int) -> int:
        """Supra index of a cell, with both coordinates range-checked."""
        _check_node(self, node)
        _check_layer(self, layer)
        return layer * self.n_nodes + node

    def cell_labels(self, index: int) -> tuple[str, str]:
        """(node label, layer label) for a supra index."""
        if not 0 <= index < self.n_cells:
            raise IndexError(f"supra index {index} out of range for {self.n_cells} cells")
        node, layer = cell_of(index, self.n_nodes)
        return self.node_labels[node], self.layer_labels[layer]

    def replace(self, supra: np.ndarray, layer_labels=None) -> "MultilayerNetwork":
        """New network with the same labels/meta and different weights."""
        return MultilayerNetwork(
            self.node_labels,
            layer_labels if layer_labels is not None else self.layer_labels,
            supra,
            self.meta,
        )


def _check_node(net: MultilayerNetwork, node: int) -> None:
    if not 0 <= node < net.n_nodes:
        raise IndexError(f"node index {node} out of range for {net.n_nodes} nodes")


def _check_layer(net: MultilayerNetwork, layer: int) -> None:
    if not 0 <= layer < net.n_layers:
        raise IndexError(f"layer index {layer} out of range for {net.n_layers} layers")


def supra_index(node: int, layer: int, n_nodes: int) -> int:
    """Flat index of cell (node, layer) under layer-major ordering."""
    if n_nodes < 1:
        raise IndexError("n_nodes must be positive")
    if not 0 <= node < n_nodes:
        raise IndexError(f"node index {node} out of range for {n_nodes} nodes")
    if layer < 0:
        raise IndexError(f"layer index {layer} is negative")
    return layer * n_nodes + node


def cell_of(index: int, n_nodes: int) -> tuple[int, int]:
    """Inverse of :func:`supra_index`: (node, layer) of a flat index."""
    if n_nodes < 1:
        raise IndexError("n_nodes must be positive")
    if index < 0:
        raise IndexError(f"supra index {index} is negative")
    return index % n_nodes, index // n_nodes


def block(net: MultilayerNetwork, layer_a: int, layer_b: int) -> np.ndarray:
    """Read-only (N, N) view of the weights from layer_a rows to layer_b columns."""
    _check_layer(net, layer_a)
    _check_layer(net, layer_b)
    n = net.n_nodes
    return net.supra[layer_a * n:(layer_a + 1) * n, layer_b * n:(layer_b + 1) * n]


def binarize(net: MultilayerNetwork) -> MultilayerNetwork:
    """Network with every positive weight replaced by 1.0."""
    return net.replace((net.supra > 0).astype(float))


def _layer_block_mask(n_nodes: int, n_layers: int) -> np.ndarray:
    """Boolean (NL, NL) mask that is True on the diagonal (intralayer) blocks."""
    layer_of = np.repeat(np.arange(n_layers), n_nodes)
    return layer_of[:, None] == layer_of[None, :]


def split_intra_inter(net: MultilayerNetwork) -> tuple[MultilayerNetwork, MultilayerNetwork]:
    """(intralayer-only, interlayer-only) networks; their supra matrices sum to the original."""
    mask = _layer_block_mask(net.n_nodes, net.n_layers)
    intra = np.where(mask, net.supra, 0.0)
    inter = np.where(mask, 0.0, net.supra)
    return net.replace(intra), net.replace(inter)


def symmetrize(net: MultilayerNetwork) -> MultilayerNetwork:
    """Undirected version with weights (W + W^T) / 2."""
    return net.replace((net.supra + net.supra.T) / 2.0)


def _total_strengths(supra: np.ndarray, n_nodes: int, n_layers: int) -> tuple[np.ndarray, np.ndarray]:
    """(in, out) total strength per cell; same-node entries skipped in every block."""
    r = supra.reshape(n_layers, n_nodes, n_layers, n_nodes)
    out_replica = np.einsum("aibi->ai", r).reshape(-1)
    in_replica = np.einsum("biai->ai", r).reshape(-1)
    s_out = supra.sum(axis=1) - out_replica
    s_in = supra.sum(axis=0) - in_replica
    return s_in, s_out


def _inv_sqrt(values: np.ndarray) -> np.ndarray:
    """Elementwise s**-0.5 with zeros mapped to zero."""
    out = np.zeros_like(values)
    positive = values > 0
    out[positive] = 1.0 / np.sqrt(values[positive])
    return out


def normalize_strength(net: MultilayerNetwork, mode: str = "directed") -> MultilayerNetwork:
    """Strength-normalised weights.

    ``"directed"`` rescales entry (p, q) by the inverse square roots of the
    in-strength of p and the out-strength of q. ``"symmetric"`` requires a
    symmetric supra matrix and uses the single strength vector on both sides,
    which keeps the result exactly symmetric. Cells with zero strength get
    scale factor 0, so their rows/columns stay zero instead of dividing by
    zero.
    """
    s_in, s_out = _total_strengths(net.supra, net.n_nodes, net.n_layers)
    if mode == "directed":
        left = _inv_sqrt(s_in)
        right = _inv_sqrt(s_out)
    elif mode == "symmetric":
        if not np.array_equal(net.supra, net.supra.T):
            raise AsymmetricInputError("symmetric normalization needs a symmetric supra matrix")
        left = right = _inv_sqrt(s_in)
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    # scale matrix first: d_i * d_j is bitwise symmetric, so the elementwise
    # product with a bitwise-symmetric supra matrix stays bitwise symmetric
    return net.replace((left[:, None] * right[None, :]) * net.supra)


def aggregate_monolayer(net: MultilayerNetwork) -> MultilayerNetwork:
    """Sum all blocks into one N x N layer labelled ``ALL``."""
    if net.n_layers == 1:
        return net
    r = net.supra.reshape(net.n_layers, net.n_nodes, net.n_layers, net.n_nodes)
    return net.replace(r.sum(axis=(0, 2)), layer_labels=("ALL",))


@dataclass(frozen=True, eq=False)
class Subnetwork:
    """Weights restricted to a chosen set of cells of a parent network.

    ``cells`` are (node, layer) pairs in ascending supra-index order;
    ``matrix`` row/column k corresponds to ``cells[k]``.
    """

    parent: MultilayerNetwork
    cells: tuple[tuple[int, int], ...]
    indices: tuple[int, ...]
    matrix: np.ndarray

    def cell_labels(self) -> list[tuple[str, str]]:
        return [
            (self.parent.node_labels[node], self.parent.layer_labels[layer])
            for node, layer in self.cells
        ]


def subnetwork(net: MultilayerNetwork, members) -> Subnetwork:
    """Restriction of the network to ``members``, an iterable of (node, layer) pairs."""
    seen = set()
    cells = []
    for node, layer in members:
        _check_node(net, node)
        _check_layer(net, layer)
        if (node, layer) in seen:
            continue
        seen.add((node, layer))
        cells.append((node, layer))
    if not cells:
        raise ValueError("member set is empty")
    cells.sort(key=lambda c: c[1] * net.n_nodes + c[0])
    idx = np.array([layer * net.n_nodes + node for node, layer in cells])
    matrix = net.supra[np.ix_(idx, idx)].copy()
    matrix.flags.writeable = False
    return Subnetwork(
        parent=net,
        cells=tuple(cells),
        indices=tuple(int(i) for i in idx),
        matrix=matrix,
    )
