"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own code paths: explicit
python loops for strengths and quality, a scaled Taylor series for the
matrix exponential, boolean closure for connected components, and a
recompute-from-leaves average-linkage clustering. Tests compare the package
against these, never against itself.
"""

import itertools
import math

import numpy as np
import pytest

from mlion import MultilayerNetwork

# Status lines from the acceptance suite, echoed after the test run ends so
# they stay visible even while pytest captures per-test output.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# Small directed fixture: 2 countries (u, v) x 2 sectors (x, y).
# Supra rows/cols in layer-major order (x,u), (x,v), (y,u), (y,v).
T1_SUPRA = np.array([
    [0.0, 2.0, 1.0, 0.0],
    [1.0, 0.0, 0.0, 3.0],
    [0.0, 1.0, 0.0, 2.0],
    [4.0, 0.0, 1.0, 0.0],
])


@pytest.fixture
def t1() -> MultilayerNetwork:
    return MultilayerNetwork(("u", "v"), ("x", "y"), T1_SUPRA)


def random_network(seed: int, n_nodes: int = 4, n_layers: int = 3, density: float = 0.7,
                   symmetric: bool = False) -> MultilayerNetwork:
    rng = np.random.default_rng(seed)
    n = n_nodes * n_layers
    supra = rng.uniform(0.5, 5.0, size=(n, n)) * (rng.random((n, n)) < density)
    if symmetric:
        supra = (supra + supra.T) / 2.0
    nodes = tuple(f"n{i}" for i in range(n_nodes))
    layers = tuple(f"l{a}" for a in range(n_layers))
    return MultilayerNetwork(nodes, layers, supra)


def planted_network(seed: int, block_sizes=(10, 10, 10), n_layers: int = 2,
                    intra=(5.0, 10.0), cross=(0.0, 0.5)):
    """Random directed network whose countries split into weight blocks.

    Cells of countries in the same block are tied by heavy weights in every
    layer combination; everything else is light. Returns (network, ground
    truth labels per cell).
    """
    rng = np.random.default_rng(seed)
    n_nodes = int(sum(block_sizes))
    n_cells = n_nodes * n_layers
    node_block = np.repeat(np.arange(len(block_sizes)), block_sizes)
    cell_block = node_block[np.arange(n_cells) % n_nodes]
    heavy = rng.uniform(*intra, size=(n_cells, n_cells))
    light = rng.uniform(*cross, size=(n_cells, n_cells))
    supra = np.where(cell_block[:, None] == cell_block[None, :], heavy, light)
    np.fill_diagonal(supra, 0.0)
    nodes = tuple(f"c{i:02d}" for i in range(n_nodes))
    layers = tuple(f"s{a:02d}" for a in range(n_layers))
    return MultilayerNetwork(nodes, layers, supra), cell_block


# ---------------------------------------------------------------- oracles


def brute_strength(supra, n_nodes, n_layers, node, layer, direction, counter_layer):
    """Strength of cell (node, layer) toward one counterpart layer, by explicit loops."""
    p = layer * n_nodes + node
    total = 0.0
    for j in range(n_nodes):
        if j == node:
            continue
        q = counter_layer * n_nodes + j
        total += supra[p][q] if direction == "out" else supra[q][p]
    return total


def brute_total_strength(supra, n_nodes, n_layers, node, layer, direction):
    return sum(
        brute_strength(supra, n_nodes, n_layers, node, layer, direction, b)
        for b in range(n_layers)
    )


def taylor_expm(a, terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling, a truncated Taylor series, and squaring."""
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a, 1)
    squarings = 0
    while norm / 2 ** squarings > 0.5:
        squarings += 1
    b = a / 2 ** squarings
    result = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms + 1):
        term = term @ b / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def brute_means(xi, exclude_self: bool = False):
    """(row means, global mean) of a distance matrix, by explicit loops."""
    n = len(xi)
    if exclude_self:
        rows = [sum(xi[a][b] for b in range(n) if b != a) / (n - 1) for a in range(n)]
        total = sum(xi[a][b] for a in range(n) for b in range(n) if b != a)
        return rows, total / (n * (n - 1))
    rows = [sum(xi[a][b] for b in range(n)) / n for a in range(n)]
    total = sum(xi[a][b] for a in range(n) for b in range(n))
    return rows, total / (n * n)


def brute_quality(xi, labels, exclude_self: bool = False) -> float:
    """Total cohesion over ordered same-community pairs, by explicit loops."""
    n = len(labels)
    rows, gm = brute_means(xi, exclude_self)
    total = 0.0
    for a in range(n):
        for b in range(n):
            if labels[a] == labels[b]:
                total += rows[a] + rows[b] - xi[a][b] - gm
    return total


def brute_components(xi, threshold):
    """Connected components of the xi <= threshold graph via boolean closure."""
    n = len(xi)
    adj = (np.asarray(xi) <= threshold).astype(int)
    np.fill_diagonal(adj, 1)
    adj = ((adj + adj.T) > 0).astype(int)
    reach = adj
    while True:
        grown = ((reach @ reach) > 0).astype(int)
        if np.array_equal(grown, reach):
            break
        reach = grown
    return {frozenset(np.flatnonzero(row).tolist()) for row in reach}


def as_partition_sets(labels) -> set:
    groups = {}
    for i, c in enumerate(labels):
        groups.setdefault(int(c), set()).add(i)
    return {frozenset(g) for g in groups.values()}


def naive_upgma(features, labels):
    """Average-linkage merges recomputing every cluster distance from leaf pairs."""
    rows = [list(map(float, row)) for row in np.asarray(features, dtype=float)]

    def leaf_dist(i, j):
        return math.sqrt(sum((p - q) ** 2 for p, q in zip(rows[i], rows[j])))

    clusters = {i: [i] for i in range(len(rows))}
    merges = []
    next_id = len(rows)
    while len(clusters) > 1:
        best = None
        for i, j in itertools.combinations(sorted(clusters), 2):
            d = sum(
                leaf_dist(p, q) for p in clusters[i] for q in clusters[j]
            ) / (len(clusters[i]) * len(clusters[j]))
            members = clusters[i] + clusters[j]
            key = (d, min(labels[p] for p in members), max(labels[p] for p in members), i, j)
            if best is None or key < best:
                best = key
        _, _, _, i, j = best
        merges.append((i, j, best[0], len(clusters[i]) + len(clusters[j])))
        clusters[next_id] = clusters.pop(i) + clusters.pop(j)
        next_id += 1
    return merges
