"""File formats: long/wide CSV ingestion, binary snapshots, report writers.

Long CSV is an edge list with header
``source_country,source_sector,target_country,target_sector,value`` and an
optional ``# nodes:`` / ``# layers:`` / ``# year:`` comment preamble that
pins label order (and keeps zero-strength cells through round-trips).

Wide CSV is the world input-output table layout: two header rows (countries,
then sectors), two stub columns, and a square country-sector block in the
top-left; final-demand columns and value-added rows fall outside the block
and are ignored.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import struct
import tempfile

import numpy as np

from .community import CommunityReport, Partition, SweepTrace
from .errors import ParseError
from .layers import LayerPairTable
from .network import MultilayerNetwork, NetworkMeta

__all__ = [
    "parse_long",
    "write_long",
    "parse_wiot_wide",
    "write_wiot_wide",
    "read_snapshot",
    "write_snapshot",
    "file_digest",
    "fmt12",
    "write_cell_table_csv",
    "write_matrix_csv",
    "write_pair_table_csv",
    "write_partition_csv",
    "read_partition_csv",
    "write_trace_csv",
    "write_report_csv",
    "write_grid_csv",
    "write_rank_csv",
    "write_newick",
]

_LONG_HEADER = ["source_country", "source_sector", "target_country", "target_sector", "value"]

_SNAPSHOT_MAGIC = b"MLIO"
_SNAPSHOT_VERSION = 1


def fmt12(x) -> str:
    """12-significant-digit rendering used by all report writers."""
    return f"{float(x):.12g}"


def file_digest(path) -> str:
    """First 12 hex chars of the file's sha256, for output provenance lines."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:12]


def _split_preamble(path):
    """(comment preamble dict, csv body lines, body line offset)."""
    with open(path, encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    meta = {}
    body_start = 0
    for raw in lines:
        if not raw.startswith("#"):
            break
        body_start += 1
        text = raw.lstrip("#").strip()
        if ":" in text:
            key, _, value = text.partition(":")
            meta[key.strip().lower()] = value.strip()
    return meta, lines[body_start:], body_start


def _labels_from(value: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in value.split(",") if s.strip())


def parse_long(path, node_labels=None, layer_labels=None, clamp_negatives=True,
               year=None, source=None) -> MultilayerNetwork:
    """Read an edge-list CSV into a network.

    Label order comes from the ``node_labels``/``layer_labels`` arguments,
    else from the file's comment preamble, else from first appearance in the
    rows. Negative values are clamped to zero (counted in ``meta.clamped``)
    unless ``clamp_negatives`` is False, in which case they are an error.
    Repeated (source, target) cell pairs accumulate.
    """
    meta, body, offset = _split_preamble(path)
    if node_labels is None and "nodes" in meta:
        node_labels = _labels_from(meta["nodes"])
    if layer_labels is None and "layers" in meta:
        layer_labels = _labels_from(meta["layers"])
    if year is None:
        try:
            year = int(meta.get("year", "0"))
        except ValueError:
            raise ParseError(f"bad year in preamble: {meta['year']!r}", path=path)

    rows = list(csv.reader(body))
    if not rows:
        raise ParseError("missing header row", path=path)
    if rows[0] != _LONG_HEADER:
        raise ParseError(
            f"header {rows[0]!r} != {_LONG_HEADER!r}", path=path, line=offset + 1
        )

    fixed_nodes = node_labels is not None
    fixed_layers = layer_labels is not None
    nodes = list(node_labels) if fixed_nodes else []
    layers = list(layer_labels) if fixed_layers else []
    node_pos = {s: i for i, s in enumerate(nodes)}
    layer_pos = {s: i for i, s in enumerate(layers)}

    def node_id(label, line):
        if label not in node_pos:
            if fixed_nodes:
                raise ParseError(f"undeclared country {label!r}", path=path, line=line)
            node_pos[label] = len(nodes)
            nodes.append(label)
        return node_pos[label]

    def layer_id(label, line):
        if label not in layer_pos:
            if fixed_layers:
                raise ParseError(f"undeclared sector {label!r}", path=path, line=line)
            layer_pos[label] = len(layers)
            layers.append(label)
        return layer_pos[label]

    edges = []
    clamped = 0
    for k, row in enumerate(rows[1:]):
        line = offset + k + 2
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", path=path, line=line)
        sc, ss, tc, ts, raw = row
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(f"bad value {raw!r}", path=path, line=line) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {raw!r}", path=path, line=line)
        if value < 0:
            if not clamp_negatives:
                raise ParseError(f"negative value {raw!r}", path=path, line=line)
            clamped += 1
            value = 0.0
        edges.append((node_id(sc, line), layer_id(ss, line),
                      node_id(tc, line), layer_id(ts, line), value))

    if not nodes or not layers:
        raise ParseError("no data rows and no declared labels", path=path)

    n = len(nodes)
    supra = np.zeros((n * len(layers), n * len(layers)))
    for src_n, src_l, tgt_n, tgt_l, value in edges:
        supra[src_l * n + src_n, tgt_l * n + tgt_n] += value
    return MultilayerNetwork(
        tuple(nodes), tuple(layers), supra,
        NetworkMeta(
            year=int(year),
            source=source if source is not None else os.path.basename(str(path)),
            currency_unit=meta.get("currency", ""),
            clamped=clamped,
        ),
    )


def write_long(net: MultilayerNetwork, path) -> None:
    """Write a network as an edge-list CSV: nonzero weights only, full precision.

    The comment preamble pins label order, so ``parse_long`` reproduces the
    network exactly even when some cells have zero strength.
    """
    n = net.n_nodes
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# nodes: {','.join(net.node_labels)}\n")
        f.write(f"# layers: {','.join(net.layer_labels)}\n")
        f.write(f"# year: {net.meta.year}\n")
        if net.meta.currency_unit:
            f.write(f"# currency: {net.meta.currency_unit}\n")
        writer = csv.writer(f)
        writer.writerow(_LONG_HEADER)
        rows, cols = np.nonzero(net.supra)
        for p, q in zip(rows.tolist(), cols.tolist()):
            writer.writerow([
                net.node_labels[p % n], net.layer_labels[p // n],
                net.node_labels[q % n], net.layer_labels[q // n],
                repr(float(net.supra[p, q])),
            ])


def parse_wiot_wide(path, clamp_negatives=True, year=None, source=None) -> MultilayerNetwork:
    """Read a world input-output table in the wide layout.

    The two header rows give (country, sector) per column from the third
    column on; each data row repeats the pair in its first two stub columns.
    The intermediate block is the longest common prefix of the row-pair and
    column-pair sequences; it must form a complete country x sector grid.
    Rows flow from seller to buyer: block entry (p, q) is the sale from pair
    p to pair q.
    """
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if len(rows) < 3:
        raise ParseError("need two header rows and at least one data row", path=path)
    country_header, sector_header = rows[0], rows[1]
    if len(country_header) < 3 or len(sector_header) < 3:
        raise ParseError("header rows need two stub columns plus data columns", path=path, line=1)
    if len(country_header) != len(sector_header):
        raise ParseError(
            f"header rows disagree on width ({len(country_header)} vs {len(sector_header)})",
            path=path, line=2,
        )
    col_pairs = list(zip(country_header[2:], sector_header[2:]))
    data_rows = rows[2:]
    row_pairs = []
    for k, row in enumerate(data_rows):
        if len(row) < 2:
            raise ParseError("data row is missing its two stub columns", path=path, line=k + 3)
        row_pairs.append((row[0], row[1]))

    width = 0
    while width < len(col_pairs) and width < len(row_pairs) and col_pairs[width] == row_pairs[width]:
        width += 1
    if width == 0:
        raise ParseError(
            f"first data row stub {row_pairs[0]!r} does not match first column header "
            f"{col_pairs[0]!r}; no intermediate block found",
            path=path, line=3,
        )

    pairs = col_pairs[:width]
    if len(set(pairs)) != width:
        dup = next(p for p in pairs if pairs.count(p) > 1)
        raise ParseError(f"duplicate column header pair {dup!r}", path=path, line=2)
    nodes: list[str] = []
    layers: list[str] = []
    for country, sector in pairs:
        if country not in nodes:
            nodes.append(country)
        if sector not in layers:
            layers.append(sector)
    if len(nodes) * len(layers) != width:
        missing = next(
            (c, s) for c in nodes for s in layers if (c, s) not in set(pairs)
        )
        raise ParseError(
            f"intermediate block is not a complete grid: {len(nodes)} countries x "
            f"{len(layers)} sectors != {width} columns (missing pair {missing!r})",
            path=path, line=2,
        )

    n = len(nodes)
    node_pos = {s: i for i, s in enumerate(nodes)}
    layer_pos = {s: i for i, s in enumerate(layers)}
    supra_pos = [layer_pos[s] * n + node_pos[c] for c, s in pairs]

    supra = np.zeros((width, width))
    clamped = 0
    for p in range(width):
        row = data_rows[p]
        line = p + 3
        if len(row) < 2 + width:
            raise ParseError(
                f"data row for {row_pairs[p]!r} has {len(row) - 2} value columns, "
                f"block needs {width}",
                path=path, line=line,
            )
        values = row[2:2 + width]
        try:
            parsed = [float(v) for v in values]
        except ValueError:
            bad = next(v for v in values if not _is_float(v))
            raise ParseError(f"bad value {bad!r}", path=path, line=line) from None
        vec = np.asarray(parsed)
        if not np.isfinite(vec).all():
            raise ParseError("non-finite value in block", path=path, line=line)
        negative = vec < 0
        if negative.any():
            if not clamp_negatives:
                raise ParseError("negative value in block", path=path, line=line)
            clamped += int(negative.sum())
            vec = np.where(negative, 0.0, vec)
        supra[supra_pos[p], supra_pos] = vec

    return MultilayerNetwork(
        tuple(nodes), tuple(layers), supra,
        NetworkMeta(
            year=int(year) if year is not None else 0,
            source=source if source is not None else os.path.basename(str(path)),
            currency_unit="",
            clamped=clamped,
        ),
    )


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_wiot_wide(net: MultilayerNetwork, path, include_margins: bool = True) -> None:
    """Write a network in the wide table layout (country-major column order).

    With ``include_margins`` a final-demand column and a value-added row are
    appended outside the intermediate block, as in published tables; the
    parser ignores them.
    """
    pairs = [(c, s) for c in net.node_labels for s in net.layer_labels]
    n = net.n_nodes
    pos = [net.layer_index(s) * n + net.node_index(c) for c, s in pairs]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        margin_col = ["TOT"] if include_margins else []
        writer.writerow(["", ""] + [c for c, _ in pairs] + margin_col)
        writer.writerow(["", ""] + [s for _, s in pairs] + (["FD"] if include_margins else []))
        for p, (country, sector) in enumerate(pairs):
            values = [repr(float(net.supra[pos[p], q])) for q in pos]
            if include_margins:
                values.append(repr(float(net.supra[pos[p], :].sum())))
            writer.writerow([country, sector] + values)
        if include_margins:
            totals = [repr(float(net.supra[:, q].sum())) for q in pos]
            writer.writerow(["TOT", "VA"] + totals + [repr(0.0)])


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _read_exact(f, count: int, path) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise ParseError("truncated snapshot", path=path)
    return data


def _unpack_str(f, path) -> str:
    (length,) = struct.unpack("<I", _read_exact(f, 4, path))
    return _read_exact(f, length, path).decode("utf-8")


def write_snapshot(net: MultilayerNetwork, path) -> None:
    """Write the network as a little-endian binary snapshot, atomically."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(_SNAPSHOT_MAGIC)
            f.write(struct.pack("<IIIqQ", _SNAPSHOT_VERSION, net.n_nodes, net.n_layers,
                                net.meta.year, net.meta.clamped))
            f.write(_pack_str(net.meta.source))
            f.write(_pack_str(net.meta.currency_unit))
            for label in net.node_labels:
                f.write(_pack_str(label))
            for label in net.layer_labels:
                f.write(_pack_str(label))
            f.write(np.ascontiguousarray(net.supra, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_snapshot(path) -> MultilayerNetwork:
    """Read a binary snapshot written by :func:`write_snapshot`."""
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path)
        if magic != _SNAPSHOT_MAGIC:
            raise ParseError(f"not a snapshot file (magic {magic!r})", path=path)
        version, n_nodes, n_layers, year, clamped = struct.unpack(
            "<IIIqQ", _read_exact(f, 28, path)
        )
        if version != _SNAPSHOT_VERSION:
            raise ParseError(f"unsupported snapshot version {version}", path=path)
        source = _unpack_str(f, path)
        currency = _unpack_str(f, path)
        nodes = tuple(_unpack_str(f, path) for _ in range(n_nodes))
        layers = tuple(_unpack_str(f, path) for _ in range(n_layers))
        n_cells = n_nodes * n_layers
        raw = _read_exact(f, 8 * n_cells * n_cells, path)
        if f.read(1):
            raise ParseError("trailing bytes after snapshot payload", path=path)
    supra = np.frombuffer(raw, dtype="<f8").reshape(n_cells, n_cells)
    return MultilayerNetwork(
        nodes, layers, supra,
        NetworkMeta(year=year, source=source, currency_unit=currency, clamped=clamped),
    )


def _open_report(path, provenance):
    f = open(path, "w", encoding="utf-8", newline="")
    if provenance:
        f.write(f"# {provenance}\n")
    return f


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return fmt12(value)


def write_cell_table_csv(path, net: MultilayerNetwork, columns: dict, provenance=None) -> None:
    """Per-cell table: one row per (country, sector) in supra order."""
    n = net.n_nodes
    with _open_report(path, provenance) as f:
        writer = csv.writer(f)
        writer.writerow(["country", "sector"] + list(columns))
        for p in range(net.n_cells):
            row = [net.node_labels[p % n], net.layer_labels[p // n]]
            row += [_render(values[p]) for values in columns.values()]
            writer.writerow(row)


def write_matrix_csv(path, values, row_labels, col_labels, corner="", provenance=None) -> None:
    """Labelled matrix; NaN cells render empty."""
    values = np.asarray(values)
    with _open_report(path, provenance) as f:
        writer = csv.writer(f)
        writer.writerow([corner] + list(col_labels))
        for i, label in enumerate(row_labels):
            writer.writerow([label] + [_render(v) for v in values[i]])


def write_pair_table_csv(path, table: LayerPairTable, provenance=None) -> None:
    write_matrix_csv(path, table.values, table.layer_labels, table.layer_labels,
                     corner=table.kind, provenance=provenance)


def write_partition_csv(path, partition: Partition, net: MultilayerNetwork, provenance=None) -> None:
    """One row per cell: country, sector, community id, isolation flag."""
    if partition.assignment.size != net.n_cells:
        raise ValueError("partition does not cover this network's cells")
    n = net.n_nodes
    with _open_report(path, provenance) as f:
        writer = csv.writer(f)
        writer.writerow(["country", "sector", "community", "is_isolated"])
        for p in range(net.n_cells):
            writer.writerow([
                net.node_labels[p % n], net.layer_labels[p // n],
                int(partition.assignment[p]), int(p in partition.isolated),
            ])


def read_partition_csv(path) -> tuple[Partition, tuple[str, ...], tuple[str, ...]]:
    """Read a partition CSV back; returns (partition, node labels, layer labels).

    The cell set must form a complete country x sector grid. Isolation is
    recomputed from community sizes (a community is isolated iff singleton).
    """
    _, body, offset = _split_preamble(path)
    rows = list(csv.reader(body))
    if not rows or rows[0] != ["country", "sector", "community", "is_isolated"]:
        raise ParseError("bad partition header", path=path, line=offset + 1)
    nodes: list[str] = []
    layers: list[str] = []
    node_pos: dict[str, int] = {}
    layer_pos: dict[str, int] = {}
    entries = {}
    for k, row in enumerate(rows[1:]):
        line = offset + k + 2
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", path=path, line=line)
        country, sector, community, _flag = row
        try:
            cid = int(community)
        except ValueError:
            raise ParseError(f"bad community id {community!r}", path=path, line=line) from None
        if cid < 0:
            raise ParseError(f"negative community id {cid}", path=path, line=line)
        if country not in node_pos:
            node_pos[country] = len(nodes)
            nodes.append(country)
        if sector not in layer_pos:
            layer_pos[sector] = len(layers)
            layers.append(sector)
        key = (node_pos[country], layer_pos[sector])
        if key in entries:
            raise ParseError(f"duplicate cell ({country}, {sector})", path=path, line=line)
        entries[key] = cid
    if not entries:
        raise ParseError("no partition rows", path=path)
    n, length = len(nodes), len(layers)
    if len(entries) != n * length:
        raise ParseError(
            f"cells do not form a complete grid: {len(entries)} rows for "
            f"{n} countries x {length} sectors",
            path=path,
        )
    assignment = np.empty(n * length, dtype=int)
    for (node, layer), cid in entries.items():
        assignment[layer * n + node] = cid
    sizes = np.bincount(assignment)
    isolated = frozenset(int(i) for i in np.flatnonzero(sizes[assignment] == 1))
    partition = Partition(
        assignment=assignment, threshold=float("nan"), quality=float("nan"),
        isolated=isolated, n_nodes=n, n_layers=length,
    )
    return partition, tuple(nodes), tuple(layers)


def write_trace_csv(path, trace: SweepTrace, provenance=None) -> None:
    with _open_report(path, provenance) as f:
        if trace.degenerate:
            f.write("# degenerate sweep: all pair distances equal\n")
        writer = csv.writer(f)
        writer.writerow(["threshold", "n_components", "quality"])
        for threshold, n_components, quality in trace.entries:
            writer.writerow([fmt12(threshold), n_components, fmt12(quality)])


def write_report_csv(path, rows, top_k: int, label_name: str, provenance=None) -> None:
    """Per-country or per-sector community summary rows."""
    with _open_report(path, provenance) as f:
        writer = csv.writer(f)
        header = [label_name]
        header += [f"in_community_{k}" for k in range(top_k)]
        header += ["isolated", "other", "dominant", "gini"]
        writer.writerow(header)
        for row in rows:
            record = [row.label]
            record += [str(c) for c in row.top_counts]
            record += [str(row.isolated), str(row.other), _render(row.dominant), fmt12(row.gini)]
            writer.writerow(record)


def write_grid_csv(path, report: CommunityReport, net: MultilayerNetwork, provenance=None) -> None:
    """Country x sector membership grid; -1 marks communities below min_size."""
    write_matrix_csv(
        path, report.membership_grid, net.node_labels, net.layer_labels,
        corner="country\\sector", provenance=provenance,
    )


def write_rank_csv(path, ranked, net: MultilayerNetwork, provenance=None) -> None:
    """Ranked member cells as (country, sector, strength) rows."""
    with _open_report(path, provenance) as f:
        writer = csv.writer(f)
        writer.writerow(["country", "sector", "strength"])
        for (node, layer), strength in ranked:
            writer.writerow([net.node_labels[node], net.layer_labels[layer], fmt12(strength)])


def write_newick(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text + "\n")
