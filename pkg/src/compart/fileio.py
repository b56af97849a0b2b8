"""Readers and writers for edge lists, membership tables and period files.

All tables are UTF-8 CSV (tab-separated files are detected from the first
data line), may carry a header row and may contain ``#`` comment lines.
Node ids are arbitrary strings, indexed in order of first appearance.
"""

from __future__ import annotations

import csv
import os
import tempfile
from collections import OrderedDict
from pathlib import Path
from typing import Iterator, Optional

from .errors import GraphValidationError, ParseError
from .graph import Graph, Membership

EDGE_HEADERS = {"source", "src", "from", "u", "source_id", "node1"}
MEMBER_HEADERS = {"node", "node_id", "id", "actor", "actor_id", "name"}
PERIOD_HEADERS = {"period", "session", "term", "congress"}


def _rows(path) -> Iterator[tuple[int, list[str]]]:
    """(line number, fields) for each data line, comments and blanks skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc.reason})", path) from None
    delimiter = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if delimiter is None:
            delimiter = "\t" if "\t" in stripped else ","
        fields = next(csv.reader([stripped], delimiter=delimiter))
        yield lineno, [f.strip() for f in fields]


def _data_rows(path, header_names: set) -> Iterator[tuple[int, list[str]]]:
    first = True
    for lineno, fields in _rows(path):
        if first:
            first = False
            if fields and fields[0].lower() in header_names:
                continue
        yield lineno, fields


def read_edge_list(path, directed: bool = False, weighted: bool = False):
    """Parse an edge list into ``(pairs, weights, node_ids, line_numbers)``.

    Raises ParseError on malformed rows, self-loops and repeated dyads
    (for undirected files a reversed pair counts as a repeat).
    """
    ids: dict[str, int] = {}
    pairs, weights, lines = [], [], []
    seen: dict = {}
    for lineno, fields in _data_rows(path, EDGE_HEADERS):
        if len(fields) < 2 or len(fields) > 3 or not fields[0] or not fields[1]:
            raise ParseError(f"expected 'source,target[,weight]', got {len(fields)} field(s)", path, lineno)
        if weighted and len(fields) != 3:
            raise ParseError("weighted edge list needs a weight column", path, lineno)
        a, b = fields[0], fields[1]
        if a == b:
            raise ParseError(f"self-loop on node {a!r}", path, lineno)
        u = ids.setdefault(a, len(ids))
        v = ids.setdefault(b, len(ids))
        key = (u, v) if directed else (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"duplicate edge {a!r}-{b!r} (first on line {seen[key]})", path, lineno)
        seen[key] = lineno
        if weighted:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"weight {fields[2]!r} is not a number", path, lineno) from None
            if not w > 0 or w == float("inf"):
                raise ParseError(f"weight must be a positive finite number, got {fields[2]!r}", path, lineno)
            weights.append(w)
        pairs.append((u, v))
        lines.append(lineno)
    return pairs, (weights if weighted else None), list(ids), lines


def read_membership(path) -> "OrderedDict[str, str]":
    members: OrderedDict = OrderedDict()
    for lineno, fields in _data_rows(path, MEMBER_HEADERS):
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise ParseError("expected 'node_id,community_label'", path, lineno)
        if fields[0] in members:
            raise ParseError(f"node {fields[0]!r} listed twice", path, lineno)
        members[fields[0]] = fields[1]
    return members


def load_graph(edge_path, membership_path, directed: bool = False, weighted: bool = False):
    """Graph, membership and node-id list from an edge list plus membership table.

    Nodes named only in the membership table become isolated nodes, indexed
    after the edge-list nodes in table order.
    """
    pairs, weights, ids, _ = read_edge_list(edge_path, directed, weighted)
    members = read_membership(membership_path)
    missing = [i for i in ids if i not in members]
    if missing:
        shown = ", ".join(repr(x) for x in missing[:5])
        raise ParseError(f"{len(missing)} node(s) have no community label: {shown}", membership_path)
    known = set(ids)
    ids.extend(node for node in members if node not in known)
    if len(ids) < 2:
        raise ParseError("graph needs at least two nodes", edge_path)
    graph = Graph.from_edges(len(ids), pairs, directed, weights)
    membership = Membership.from_labels(members[i] for i in ids)
    return graph, membership, ids


def write_edge_list(graph: Graph, node_ids=None) -> str:
    names = node_ids if node_ids is not None else [str(i) for i in range(graph.n)]
    out = ["source,target,weight" if graph.is_weighted else "source,target"]
    for i, (u, v) in enumerate(graph.edges()):
        row = f"{names[u]},{names[v]}"
        if graph.is_weighted:
            row += f",{graph.weight[i]!r}"
        out.append(row)
    return "\n".join(out) + "\n"


def write_membership(membership: Membership, node_ids=None) -> str:
    names = node_ids if node_ids is not None else [str(i) for i in range(membership.n)]
    out = ["node_id,community"]
    out.extend(f"{names[i]},{lab}" for i, lab in enumerate(membership.labels.tolist()))
    return "\n".join(out) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _period_table(path, width: int) -> "OrderedDict[str, list]":
    table: OrderedDict = OrderedDict()
    for lineno, fields in _data_rows(path, PERIOD_HEADERS):
        if len(fields) != width or not all(fields):
            raise ParseError(f"expected {width} non-empty fields", path, lineno)
        table.setdefault(fields[0], []).append((lineno, fields[1:]))
    return table


def read_actor_items(path) -> "OrderedDict[str, list[tuple[str, str]]]":
    """period -> [(actor_id, item_id), ...]; repeated ties are rejected."""
    out: OrderedDict = OrderedDict()
    for period, rows in _period_table(path, 3).items():
        seen = set()
        ties = []
        for lineno, (actor, item) in rows:
            if (actor, item) in seen:
                raise ParseError(f"duplicate tie {actor!r}-{item!r} in period {period!r}", path, lineno)
            seen.add((actor, item))
            ties.append((actor, item))
        out[period] = ties
    return out


def read_period_membership(path) -> "OrderedDict[str, OrderedDict[str, str]]":
    out: OrderedDict = OrderedDict()
    for period, rows in _period_table(path, 3).items():
        members: OrderedDict = OrderedDict()
        for lineno, (actor, group) in rows:
            if actor in members:
                raise ParseError(f"actor {actor!r} listed twice in period {period!r}", path, lineno)
            members[actor] = group
        out[period] = members
    return out


def read_ground_truth(path) -> "OrderedDict[str, float]":
    out: OrderedDict = OrderedDict()
    for period, rows in _period_table(path, 2).items():
        if len(rows) > 1:
            raise ParseError(f"period {period!r} listed twice", path, rows[1][0])
        lineno, (value,) = rows[0]
        try:
            out[period] = float(value)
        except ValueError:
            raise ParseError(f"value {value!r} is not a number", path, lineno) from None
    return out


def ensure_covered(graph_ids, membership_ids, where: Optional[str] = None) -> None:
    missing = [i for i in graph_ids if i not in membership_ids]
    if missing:
        suffix = f" in {where}" if where else ""
        raise GraphValidationError(
            f"{len(missing)} actor(s) without a group{suffix}: "
            + ", ".join(repr(x) for x in missing[:5])
        )
