"""CSV/JSON input and output.

Formats:
  nodes:  group_id,node_id,W,Y,X1,...,Xd  (header required; node ids dense
          0..N-1 within each group; W strictly 0/1)
  edges:  group_id,i,j  (header required; one row per undirected edge;
          duplicate or reversed rows rejected; every group must appear in
          both files)

All numeric output uses 17 significant digits so float64 values round-trip
exactly, and every writer goes through write-to-temp/rename-on-success so
no partial file survives an error.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .balance import GroupData, GroupedPopulation
from .errors import DataError
from .graphs import Graph

FLOAT_DIGITS = ".17g"


def fmt(value) -> str:
    return format(float(value), FLOAT_DIGITS)


def atomic_write_text(path, text: str) -> None:
    """Write text to ``path`` via a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _open_csv(path):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _parse_int(text, what, row):
    try:
        return int(text)
    except ValueError:
        raise DataError(f"row {row}: {what} {text!r} is not an integer") from None


def _parse_float(text, what, row):
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}: {what} {text!r} is not a number") from None


def read_nodes(path) -> dict:
    """Parse the node file into {group_id: {"W", "Y", "X"}} preserving the
    order of first appearance."""
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty node file") from None
        expected_prefix = ["group_id", "node_id", "W", "Y"]
        if header[:4] != expected_prefix or len(header) < 5:
            raise DataError(
                f"{path}: node header must be group_id,node_id,W,Y,X1,...  got {header}"
            )
        d = len(header) - 4
        for j in range(d):
            if header[4 + j] != f"X{j + 1}":
                raise DataError(
                    f"{path}: covariate columns must be X1..X{d}, got {header[4 + j]!r}"
                )
        rows = {}
        for row_number, row in enumerate(reader, start=2):
            if len(row) != 4 + d:
                raise DataError(
                    f"row {row_number}: expected {4 + d} fields, got {len(row)}"
                )
            gid = row[0]
            node = _parse_int(row[1], "node_id", row_number)
            w = _parse_int(row[2], "W", row_number)
            if w not in (0, 1):
                raise DataError(f"row {row_number}: W must be 0 or 1, got {w}")
            y = _parse_float(row[3], "Y", row_number)
            x = [_parse_float(v, "X", row_number) for v in row[4:]]
            group = rows.setdefault(gid, {})
            if node in group:
                raise DataError(f"row {row_number}: duplicate node {node} in group {gid!r}")
            group[node] = (w, y, x)
    if not rows:
        raise DataError(f"{path}: node file has no data rows")

    parsed = {}
    for gid, nodes in rows.items():
        n = len(nodes)
        if sorted(nodes) != list(range(n)):
            raise DataError(
                f"group {gid!r}: node ids must be dense integers 0..{n - 1}"
            )
        W = np.array([nodes[i][0] for i in range(n)], dtype=np.int64)
        Y = np.array([nodes[i][1] for i in range(n)])
        X = np.array([nodes[i][2] for i in range(n)])
        parsed[gid] = {"W": W, "Y": Y, "X": X}
    return parsed


def read_edges(path, group_sizes: dict) -> dict:
    """Parse the edge file into {group_id: set of (i, j)} with strict
    duplicate/reversed-row and range checks against ``group_sizes``."""
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty edge file") from None
        if header != ["group_id", "i", "j"]:
            raise DataError(f"{path}: edge header must be group_id,i,j, got {header}")
        edges = {gid: set() for gid in group_sizes}
        for row_number, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise DataError(f"row {row_number}: expected 3 fields, got {len(row)}")
            gid = row[0]
            if gid not in group_sizes:
                raise DataError(f"row {row_number}: unknown group {gid!r} in edge file")
            i = _parse_int(row[1], "i", row_number)
            j = _parse_int(row[2], "j", row_number)
            if i == j:
                raise DataError(f"row {row_number}: self-loop ({i},{j}) not allowed")
            n = group_sizes[gid]
            if not (0 <= i < n and 0 <= j < n):
                raise DataError(
                    f"row {row_number}: edge ({i},{j}) out of range for group {gid!r} (n={n})"
                )
            key = (i, j) if i < j else (j, i)
            if key in edges[gid]:
                raise DataError(
                    f"row {row_number}: duplicate or reversed edge ({i},{j}) in group {gid!r}"
                )
            edges[gid].add(key)
    missing = [gid for gid, es in edges.items() if not es]
    if missing:
        raise DataError(f"group(s) {missing} appear in the node file but have no edges")
    return edges


def load_population(nodes_path, edges_path) -> GroupedPopulation:
    """Read both files and assemble the population (fail fast on schema)."""
    node_data = read_nodes(nodes_path)
    sizes = {gid: len(data["W"]) for gid, data in node_data.items()}
    edge_data = read_edges(edges_path, sizes)
    groups = []
    for gid, data in node_data.items():
        graph = Graph(sizes[gid], edge_data[gid])
        groups.append(
            GroupData(group_id=gid, graph=graph, W=data["W"], X=data["X"], Y=data["Y"])
        )
    return GroupedPopulation(groups)


def edges_csv_text(items) -> str:
    """Serialize (group_id, Graph) pairs as an edge-list CSV string."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group_id", "i", "j"])
    for gid, graph in items:
        for i, j in sorted(graph.edges):
            writer.writerow([gid, i, j])
    return buf.getvalue()


def nodes_csv_text(pop: GroupedPopulation) -> str:
    """Serialize a population's node data as a CSV string."""
    d = pop.n_covariates
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group_id", "node_id", "W", "Y"] + [f"X{j + 1}" for j in range(d)])
    for group in pop.groups:
        for i in range(group.n_units):
            writer.writerow(
                [group.group_id, i, int(group.W[i]), fmt(group.Y[i])]
                + [fmt(v) for v in group.X[i]]
            )
    return buf.getvalue()


def write_population(pop: GroupedPopulation, nodes_path, edges_path) -> None:
    atomic_write_text(nodes_path, nodes_csv_text(pop))
    atomic_write_text(
        edges_path, edges_csv_text((g.group_id, g.graph) for g in pop.groups)
    )


def write_effect_json(path, estimate, extra: dict | None = None) -> None:
    """EffectEstimate (plus anything extra) as deterministic JSON."""
    payload = estimate.to_dict()
    if extra:
        payload.update(extra)
    atomic_write_text(path, json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def summary_csv_text(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "mae", "mse", "rmse", "n_used", "n_failed"])
    for name, s in result.summaries.items():
        writer.writerow([name, fmt(s.mae), fmt(s.mse), fmt(s.rmse), s.n_used, s.n_failed])
    return buf.getvalue()


def raw_csv_text(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rep_index", "method", "tau_hat", "tau_star", "se", "b_bar"])
    for r in result.records:
        writer.writerow(
            [
                r["rep_index"],
                r["method"],
                fmt(r["tau_hat"]),
                fmt(r["tau_star"]),
                fmt(r["std_error"]),
                fmt(r["b_bar"]),
            ]
        )
    return buf.getvalue()


def write_simulation_outputs(result, out_dir) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "summary.csv")
    raw_path = os.path.join(out_dir, "raw.csv")
    atomic_write_text(summary_path, summary_csv_text(result))
    atomic_write_text(raw_path, raw_csv_text(result))
    return summary_path, raw_path
