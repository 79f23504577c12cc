"""Readers for feature CSVs, rating pairs and graph edge lists."""
from __future__ import annotations

import csv
import re
import warnings
from pathlib import Path

import numpy as np

from .graphs import Bipartite, DiGraph


class DataFormatError(ValueError):
    pass


def _rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    return rows


def ingest_features(path) -> np.ndarray:
    """Read ``item_id,f1,...,fd``; rows are returned in item-id order.

    Item ids must be exactly ``0..m-1``.  Rows with norm above 1 are rescaled
    to unit norm with a warning.
    """
    rows = _rows(path)
    header, body = rows[0], rows[1:]
    if header[0].strip() != "item_id" or len(header) < 2:
        raise DataFormatError(f"{path}: header must be item_id,f1,...,fd")
    d = len(header) - 1
    if not body:
        raise DataFormatError(f"{path}: no feature rows")
    ids, feats = [], []
    for n, row in enumerate(body, start=2):
        if len(row) != d + 1:
            raise DataFormatError(f"{path}:{n}: expected {d + 1} fields, got {len(row)}")
        try:
            ids.append(int(row[0]))
            feats.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{n}: {exc}") from None
    if sorted(ids) != list(range(len(ids))):
        raise DataFormatError(f"{path}: item ids must be 0..{len(ids) - 1} without gaps")
    out = np.empty((len(ids), d))
    out[ids] = feats
    if not np.all(np.isfinite(out)):
        raise DataFormatError(f"{path}: non-finite feature values")
    norms = np.linalg.norm(out, axis=1)
    big = norms > 1.0
    if big.any():
        warnings.warn(f"{path}: {int(big.sum())} feature rows had norm > 1 and were rescaled",
                      stacklevel=2)
        out[big] /= norms[big, None]
    return out


def ingest_ratings(path, n_items: int | None = None, n_users: int | None = None) -> np.ndarray:
    """Read ``item_id,user_id`` pairs (presence = positive) into a boolean matrix."""
    rows = _rows(path)
    if rows[0][0].strip() == "item_id":
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: no rating rows")
    pairs = []
    for n, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise DataFormatError(f"{path}:{n}: expected item_id,user_id")
        try:
            i, u = int(row[0]), int(row[1])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{n}: {exc}") from None
        if i < 0 or u < 0:
            raise DataFormatError(f"{path}:{n}: negative id")
        pairs.append((i, u))
    arr = np.asarray(pairs)
    m = int(arr[:, 0].max()) + 1 if n_items is None else n_items
    n = int(arr[:, 1].max()) + 1 if n_users is None else n_users
    if arr[:, 0].max() >= m or arr[:, 1].max() >= n:
        raise DataFormatError(f"{path}: ids exceed declared dimensions {m} x {n}")
    out = np.zeros((m, n), dtype=bool)
    out[arr[:, 0], arr[:, 1]] = True
    return out


def _edge_lines(path):
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise DataFormatError(f"{path}: empty graph file")
    return lines


def _parse_edges(path, lines):
    edges = []
    for line in lines:
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(f"{path}: bad edge line {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise DataFormatError(f"{path}: bad edge line {line!r}") from None
    return edges


def read_digraph(path) -> DiGraph:
    """One ``src dst`` pair per line; nodes are ``0..max id``."""
    edges = _parse_edges(path, _edge_lines(path))
    if not edges:
        raise DataFormatError(f"{path}: no edges")
    n = max(max(u, v) for u, v in edges) + 1
    return DiGraph(n, edges)


_HEADER = re.compile(r"^L\s*=\s*(\d+)\s+V\s*=\s*(\d+)$")


def read_bipartite(path) -> Bipartite:
    """Header ``L=<n> V=<n>`` then ``source target`` pairs in separate id spaces."""
    lines = _edge_lines(path)
    head = _HEADER.match(lines[0])
    if head is None:
        raise DataFormatError(f"{path}: first line must be 'L=<n> V=<n>'")
    edges = _parse_edges(path, lines[1:])
    try:
        return Bipartite(int(head.group(1)), int(head.group(2)), edges)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_digraph(path, graph: DiGraph) -> None:
    Path(path).write_text("".join(f"{u} {v}\n" for u, v in graph.edges))


def write_bipartite(path, graph: Bipartite) -> None:
    body = "".join(f"{u} {v}\n" for u, v in graph.edges)
    Path(path).write_text(f"L={graph.n_sources} V={graph.n_targets}\n" + body)
