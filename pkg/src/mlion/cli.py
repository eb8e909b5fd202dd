"""Command-line interface.

Every subcommand reads one input network (edge-list CSV, wide table, or
binary snapshot), writes deterministically named files into the output
directory, and prints a one-line summary per output. Exit codes: 0 success,
2 usage/configuration/unreadable-input errors, 1 computation or content
errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .communicability import communicability, distance_field
from .community import community_report, detect_communities, rank_members
from .errors import MlionError, UndefinedStatisticError
from .io import (
    file_digest,
    parse_long,
    parse_wiot_wide,
    read_partition_csv,
    read_snapshot,
    write_cell_table_csv,
    write_grid_csv,
    write_long,
    write_matrix_csv,
    write_newick,
    write_pair_table_csv,
    write_partition_csv,
    write_rank_csv,
    write_report_csv,
    write_snapshot,
    write_trace_csv,
)
from .layers import (
    _TABLE_KINDS,
    hcluster_layers,
    jaccard_sector_similarity,
    pair_table,
    to_newick,
)
from .metrics import degree_table, hhi, strength_table
from .network import aggregate_monolayer, symmetrize

_DENDRO_TABLES = ("overlap_binary", "overlap_weighted", "correlation_binary", "correlation_weighted")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _add_input_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="input network file")
    p.add_argument(
        "--format", choices=("auto", "long", "wiot-wide", "snapshot"), default="auto",
        help="input format; auto picks snapshot for .mlio and long CSV otherwise",
    )
    p.add_argument("--year", type=int, default=None, help="override the data year")
    p.add_argument(
        "--no-clamp-negatives", action="store_true",
        help="reject negative input values instead of zeroing them",
    )


def _add_output_options(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--output-dir", default=".",
        help="directory for output files (MLION_OUTPUT_DIR environment variable overrides)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlion",
        description="Multilayer network analysis of world input-output trade tables.",
    )
    parser.add_argument("--version", action="version", version=f"mlion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an input table and write a binary snapshot")
    _add_input_options(p)
    _add_output_options(p)

    p = sub.add_parser("metrics", help="per-cell strength/degree/concentration table")
    _add_input_options(p)
    _add_output_options(p)
    p.add_argument(
        "--centralities", choices=("binary", "weighted"), default=None,
        help="also compute communicability centralities in this mode",
    )

    p = sub.add_parser("layers", help="all layer-pair statistic tables")
    _add_input_options(p)
    _add_output_options(p)

    p = sub.add_parser("dendrogram", help="cluster layers and write a Newick tree")
    _add_input_options(p)
    _add_output_options(p)
    p.add_argument(
        "--table", choices=_DENDRO_TABLES, default="overlap_weighted",
        help="layer-pair table whose rows are the clustering features",
    )

    p = sub.add_parser("communities", help="detect communities and write reports")
    _add_input_options(p)
    _add_output_options(p)
    p.add_argument("--r", type=_positive_int, default=100, help="threshold resolution")
    p.add_argument("--min-size", type=_positive_int, default=30,
                   help="smallest community shown in the membership grid")
    p.add_argument("--top-k", type=_positive_int, default=2,
                   help="number of leading communities broken out per row")
    p.add_argument("--isolated-one-class", action="store_true",
                   help="count all isolated cells as one class in the gini index")
    p.add_argument("--emit-fields", action="store_true",
                   help="also write the communicability and distance matrices")

    p = sub.add_parser("aggregate", help="detect communities of the aggregated single layer")
    _add_input_options(p)
    _add_output_options(p)
    p.add_argument("--r", type=_positive_int, default=100, help="threshold resolution")

    p = sub.add_parser("rank", help="rank one community's members by internal strength")
    _add_input_options(p)
    _add_output_options(p)
    p.add_argument("--partition", required=True, help="partition CSV from the communities command")
    p.add_argument("--community", type=_nonnegative_int, required=True, help="community id")
    p.add_argument("--direction", choices=("in", "out", "sum"), default="sum")

    p = sub.add_parser("similarity", help="Jaccard similarity of sector classifications")
    p.add_argument("--partition", required=True, help="partition CSV from the communities command")
    _add_output_options(p)

    return parser


def _output_dir(args) -> str:
    out = os.environ.get("MLION_OUTPUT_DIR") or args.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _load_network(args):
    path = args.input
    fmt = args.format
    if fmt == "auto":
        fmt = "snapshot" if path.endswith(".mlio") else "long"
    digest = file_digest(path)
    clamp = not args.no_clamp_negatives
    if fmt == "snapshot":
        net = read_snapshot(path)
    elif fmt == "long":
        net = parse_long(path, clamp_negatives=clamp, year=args.year)
    else:
        net = parse_wiot_wide(path, clamp_negatives=clamp, year=args.year)
    return net, digest


def _provenance(command: str, digest: str, **config) -> str:
    bits = [f"mlion {__version__}", f"input sha256:{digest}", f"command {command}"]
    bits += [f"{key}={value}" for key, value in config.items()]
    return " | ".join(bits)


def _cell_labels(net) -> list[str]:
    n = net.n_nodes
    return [f"{net.node_labels[p % n]}:{net.layer_labels[p // n]}" for p in range(net.n_cells)]


def _cmd_ingest(args) -> int:
    net, digest = _load_network(args)
    out = os.path.join(_output_dir(args), "snapshot.mlio")
    write_snapshot(net, out)
    edges = int((net.supra > 0).sum())
    print(
        f"ingested {net.n_nodes} countries x {net.n_layers} sectors "
        f"({net.n_cells} cells), {edges} edges, {net.meta.clamped} negatives clamped"
    )
    print(f"wrote {out}")
    return 0


def _cmd_metrics(args) -> int:
    net, digest = _load_network(args)
    columns = {}
    for direction in ("in", "out"):
        for kind in ("total", "intralayer", "total_interlayer"):
            columns[f"strength_{direction}_{kind}"] = strength_table(net, direction, kind)
            columns[f"degree_{direction}_{kind}"] = degree_table(net, direction, kind)
    for direction in ("in", "out"):
        values = np.empty(net.n_cells)
        for p in range(net.n_cells):
            try:
                values[p] = hhi(net, p % net.n_nodes, p // net.n_nodes, direction).value
            except UndefinedStatisticError:
                values[p] = np.nan
        columns[f"hhi_{direction}"] = values
    config = {}
    if args.centralities:
        field = communicability(net, mode=args.centralities)
        columns["receive_centrality"] = field.g.sum(axis=0)
        columns["broadcast_centrality"] = field.g.sum(axis=1)
        config["centralities"] = args.centralities
    out = os.path.join(_output_dir(args), "metrics_cells.csv")
    write_cell_table_csv(out, net, columns, provenance=_provenance("metrics", digest, **config))
    print(f"wrote {out}")
    return 0


def _cmd_layers(args) -> int:
    net, digest = _load_network(args)
    out_dir = _output_dir(args)
    for kind in _TABLE_KINDS:
        table = pair_table(net, kind)
        out = os.path.join(out_dir, f"layers_{kind}.csv")
        write_pair_table_csv(out, table, provenance=_provenance("layers", digest, table=kind))
        print(f"wrote {out}")
    return 0


def _cmd_dendrogram(args) -> int:
    net, digest = _load_network(args)
    table = pair_table(net, args.table)
    dendrogram = hcluster_layers(table.values, net.layer_labels)
    out = os.path.join(_output_dir(args), f"dendrogram_{args.table}.nwk")
    write_newick(out, to_newick(dendrogram))
    print(f"wrote {out}")
    return 0


def _cmd_communities(args) -> int:
    net, digest = _load_network(args)
    out_dir = _output_dir(args)
    partition, trace = detect_communities(net, r=args.r)
    report = community_report(
        partition, net, min_size=args.min_size, top_k=args.top_k,
        isolated_as_one_class=args.isolated_one_class,
    )
    config = dict(r=args.r, min_size=args.min_size, top_k=args.top_k)
    prov = _provenance("communities", digest, **config)

    outputs = []
    path = os.path.join(out_dir, "partition.csv")
    write_partition_csv(path, partition, net, provenance=prov)
    outputs.append(path)
    path = os.path.join(out_dir, "trace.csv")
    write_trace_csv(path, trace, provenance=prov)
    outputs.append(path)
    path = os.path.join(out_dir, "report_countries.csv")
    write_report_csv(path, report.per_node, report.top_k, "country", provenance=prov)
    outputs.append(path)
    path = os.path.join(out_dir, "report_sectors.csv")
    write_report_csv(path, report.per_layer, report.top_k, "sector", provenance=prov)
    outputs.append(path)
    path = os.path.join(out_dir, "membership_grid.csv")
    write_grid_csv(path, report, net, provenance=prov)
    outputs.append(path)

    if args.emit_fields:
        field = communicability(symmetrize(net), mode="weighted")
        dist = distance_field(field)
        labels = _cell_labels(net)
        path = os.path.join(out_dir, "communicability.csv")
        write_matrix_csv(path, field.g, labels, labels, corner="cell", provenance=prov)
        outputs.append(path)
        path = os.path.join(out_dir, "distance.csv")
        write_matrix_csv(path, dist.xi, labels, labels, corner="cell", provenance=prov)
        outputs.append(path)

    n_isolated = len(partition.isolated)
    n_real = partition.n_communities - n_isolated
    print(
        f"best threshold {partition.threshold:.12g}, quality {partition.quality:.12g}, "
        f"{n_real} communities of size >= 2, {n_isolated} isolated cells"
        + (" (degenerate sweep)" if trace.degenerate else "")
    )
    for path in outputs:
        print(f"wrote {path}")
    return 0


def _cmd_aggregate(args) -> int:
    net, digest = _load_network(args)
    out_dir = _output_dir(args)
    aggregated = aggregate_monolayer(net)
    partition, trace = detect_communities(aggregated, r=args.r)
    prov = _provenance("aggregate", digest, r=args.r)

    path = os.path.join(out_dir, "aggregate_network.csv")
    write_long(aggregated, path)
    outputs = [path]
    path = os.path.join(out_dir, "aggregate_partition.csv")
    write_partition_csv(path, partition, aggregated, provenance=prov)
    outputs.append(path)
    path = os.path.join(out_dir, "aggregate_trace.csv")
    write_trace_csv(path, trace, provenance=prov)
    outputs.append(path)

    groups = {}
    for i, label in enumerate(aggregated.node_labels):
        groups.setdefault(int(partition.assignment[i]), []).append(label)
    summary = "; ".join(
        ",".join(members) for _, members in sorted(groups.items()) if len(members) > 1
    )
    n_isolated = len(partition.isolated)
    print(
        f"aggregate: {partition.n_communities - n_isolated} communities of size >= 2, "
        f"{n_isolated} isolated countries"
        + (f" | grouped: {summary}" if summary else "")
    )
    for path in outputs:
        print(f"wrote {path}")
    return 0


def _cmd_rank(args) -> int:
    net, digest = _load_network(args)
    partition, p_nodes, p_layers = read_partition_csv(args.partition)
    if args.community >= partition.n_communities:
        raise ValueError(
            f"community {args.community} not in partition "
            f"(ids 0..{partition.n_communities - 1})"
        )
    members = []
    pn = len(p_nodes)
    for idx in partition.members(args.community):
        country = p_nodes[idx % pn]
        sector = p_layers[idx // pn]
        members.append((net.node_index(country), net.layer_index(sector)))
    ranked = rank_members(net, members, direction=args.direction)
    out = os.path.join(_output_dir(args), f"rank_community_{args.community}.csv")
    write_rank_csv(
        out, ranked, net,
        provenance=_provenance("rank", digest, community=args.community,
                               direction=args.direction),
    )
    print(f"wrote {out}")
    return 0


def _cmd_similarity(args) -> int:
    digest = file_digest(args.partition)
    partition, _nodes, layer_labels = read_partition_csv(args.partition)
    length = partition.n_layers
    values = np.empty((length, length))
    for a in range(length):
        for b in range(length):
            try:
                values[a, b] = jaccard_sector_similarity(partition, a, b)
            except UndefinedStatisticError:
                values[a, b] = np.nan
    out = os.path.join(_output_dir(args), "similarity_sectors.csv")
    write_matrix_csv(
        out, values, layer_labels, layer_labels, corner="jaccard",
        provenance=_provenance("similarity", digest),
    )
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "metrics": _cmd_metrics,
    "layers": _cmd_layers,
    "dendrogram": _cmd_dendrogram,
    "communities": _cmd_communities,
    "aggregate": _cmd_aggregate,
    "rank": _cmd_rank,
    "similarity": _cmd_similarity,
}


def run_cli(argv=None) -> int:
    """Parse arguments and run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except OSError as exc:
        print(f"mlion: {exc}", file=sys.stderr)
        return 2
    except (MlionError, ValueError, KeyError, IndexError) as exc:
        print(f"mlion: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
