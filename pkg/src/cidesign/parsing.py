"""Line-based UTF-8 graph file format.

::

    # comment
    nodes: a b c w y
    cost a 5
    cost b inf
    a -> b
    a <-> c
    X: a b
    Y: y

Costs default to 1.  Duplicate edges, self-loops, cycles and unknown labels
are rejected with line-numbered errors.  ``scale`` multiplies decimal cost
literals into integers for callers that need sub-unit costs.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ParseError
from .graphs import INFINITY, Admg, CostMap, Query


def parse_graph(text, scale=1):
    """Parse graph text into (Admg, CostMap, Query or None)."""
    labels = []
    label_set = {}
    costs = {}
    directed = []
    bidirected = []
    edge_seen = {}
    x_labels = None
    y_labels = None

    def known(name, line_no):
        if name not in label_set:
            raise ParseError(f"unknown vertex label {name!r}", line_no)
        return name

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("nodes:"):
            for name in line[len("nodes:"):].split():
                if name in label_set:
                    raise ParseError(f"duplicate vertex label {name!r}", line_no)
                label_set[name] = len(labels)
                labels.append(name)
            continue
        if line.startswith("cost "):
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'cost <vertex> <value>'", line_no)
            _, name, value = parts
            known(name, line_no)
            if name in costs:
                raise ParseError(f"duplicate cost for {name!r}", line_no)
            if value == "inf":
                costs[name] = INFINITY
            else:
                try:
                    c = Fraction(value) * scale
                except ValueError:
                    raise ParseError(f"bad cost value {value!r}", line_no) from None
                if c.denominator != 1 or c < 0:
                    raise ParseError(
                        f"cost {value!r} is not a non-negative integer at scale {scale}",
                        line_no,
                    )
                costs[name] = int(c)
            continue
        if line.startswith("X:"):
            if x_labels is not None:
                raise ParseError("duplicate X: line", line_no)
            x_labels = [known(t, line_no) for t in line[2:].split()]
            continue
        if line.startswith("Y:"):
            if y_labels is not None:
                raise ParseError("duplicate Y: line", line_no)
            y_labels = [known(t, line_no) for t in line[2:].split()]
            continue
        if "<->" in line:
            lhs, _, rhs = line.partition("<->")
            u, v = known(lhs.strip(), line_no), known(rhs.strip(), line_no)
            if u == v:
                raise ParseError(f"self-loop on {u!r}", line_no)
            key = ("bi", *sorted((u, v)))
            if key in edge_seen:
                raise ParseError(f"duplicate edge {u} <-> {v}", line_no)
            edge_seen[key] = line_no
            bidirected.append((u, v))
            continue
        if "->" in line:
            lhs, _, rhs = line.partition("->")
            u, v = known(lhs.strip(), line_no), known(rhs.strip(), line_no)
            if u == v:
                raise ParseError(f"self-loop on {u!r}", line_no)
            key = ("dir", u, v)
            if key in edge_seen:
                raise ParseError(f"duplicate edge {u} -> {v}", line_no)
            edge_seen[key] = line_no
            directed.append((u, v))
            continue
        raise ParseError(f"unrecognized line {line!r}", line_no)

    if not labels:
        raise ParseError("no 'nodes:' line found")

    _check_acyclic(labels, label_set, directed, edge_seen)
    g = Admg(tuple(labels), frozenset(directed), frozenset(bidirected))
    cost_map = CostMap(tuple(costs.get(lbl, 1) for lbl in labels))
    query = None
    if x_labels is not None or y_labels is not None:
        if x_labels is None or y_labels is None:
            raise ParseError("X: and Y: lines must appear together")
        query = Query(g.indices(x_labels), g.indices(y_labels))
    return g, cost_map, query


def _check_acyclic(labels, label_set, directed, edge_seen):
    """Kahn's algorithm; on failure blame the line of an edge on a cycle."""
    n = len(labels)
    indeg = [0] * n
    children = [[] for _ in range(n)]
    for u, v in directed:
        indeg[label_set[v]] += 1
        children[label_set[u]].append(label_set[v])
    queue = [v for v in range(n) if indeg[v] == 0]
    removed = set()
    while queue:
        v = queue.pop()
        removed.add(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if len(removed) == n:
        return
    cyclic = set(range(n)) - removed
    for u, v in directed:
        iu, iv = label_set[u], label_set[v]
        if iu in cyclic and iv in cyclic:
            raise ParseError(
                f"directed edges form a cycle through {u} -> {v}",
                edge_seen[("dir", u, v)],
            )
    raise ParseError("directed edges form a cycle")


def parse_graph_file(path, scale=1):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read(), scale=scale)


def serialize_graph(g, costs=None, query=None):
    """Inverse of parse_graph; round-trips modulo comments."""
    lines = ["nodes: " + " ".join(g.labels)]
    if costs is not None:
        for v, lbl in enumerate(g.labels):
            c = costs.of(v)
            if c != 1:
                lines.append(f"cost {lbl} {'inf' if c == INFINITY else c}")
    for u, v in sorted(g.directed):
        lines.append(f"{g.labels[u]} -> {g.labels[v]}")
    for u, v in sorted(g.bidirected):
        lines.append(f"{g.labels[u]} <-> {g.labels[v]}")
    if query is not None:
        lines.append("X: " + " ".join(g.labels[v] for v in sorted(query.x)))
        lines.append("Y: " + " ".join(g.labels[v] for v in sorted(query.y)))
    return "\n".join(lines) + "\n"
