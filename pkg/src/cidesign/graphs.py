"""Immutable acyclic directed mixed graphs and the transforms built on them.

An ADMG holds directed edges (ordered index pairs) and bidirected edges
(canonical low-high index pairs) over densely indexed, uniquely labelled
vertices.  All transforms return new graph values; vertex identity across
transforms is carried by label.  Latent vertices introduced by
``latent_project`` get the reserved label prefix ``u:`` and are never
eligible for intervention, adjustment or separator sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels as K
from .errors import InputError

INFINITY = float("inf")
LATENT_PREFIX = "u:"


def _canon_bi(u, v):
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Admg:
    labels: tuple
    directed: frozenset
    bidirected: frozenset

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            raise InputError("duplicate vertex labels")
        n = len(labels)
        index = {lbl: i for i, lbl in enumerate(labels)}

        def to_index(x):
            if isinstance(x, str):
                if x not in index:
                    raise InputError(f"unknown vertex label {x!r}")
                return index[x]
            v = int(x)
            if v < 0 or v >= n:
                raise InputError(f"vertex index {v} out of range")
            return v

        directed = frozenset((to_index(u), to_index(v)) for u, v in self.directed)
        bidirected = frozenset(
            _canon_bi(to_index(u), to_index(v)) for u, v in self.bidirected
        )
        for u, v in directed | bidirected:
            if u == v:
                raise InputError(f"self-loop on vertex {labels[u]!r}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "bidirected", bidirected)
        self._check_acyclic()

    def _check_acyclic(self):
        n = self.n
        indeg = [0] * n
        children = [[] for _ in range(n)]
        for u, v in self.directed:
            indeg[v] += 1
            children[u].append(v)
        queue = [v for v in range(n) if indeg[v] == 0]
        seen = 0
        while queue:
            v = queue.pop()
            seen += 1
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if seen != n:
            raise InputError("directed edges form a cycle")

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self):
        return len(self.labels)

    @cached_property
    def vertices(self):
        return frozenset(range(self.n))

    @cached_property
    def _index(self):
        return {lbl: i for i, lbl in enumerate(self.labels)}

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise InputError(f"unknown vertex label {label!r}") from None

    def indices(self, labels):
        return frozenset(self.index(x) for x in labels)

    def labels_of(self, indices):
        return tuple(self.labels[v] for v in sorted(indices))

    def is_latent(self, v):
        return self.labels[v].startswith(LATENT_PREFIX)

    @cached_property
    def latent_vertices(self):
        return frozenset(v for v in range(self.n) if self.is_latent(v))

    # -- packed adjacency (lazy, immutable once built) -----------------------

    @cached_property
    def _parent_rows(self):
        # row v = parents of v; drives ancestor closures
        return K.make_rows(self.n, ((v, u) for u, v in self.directed))

    @cached_property
    def _bi_rows(self):
        entries = []
        for u, v in self.bidirected:
            entries.append((u, v))
            entries.append((v, u))
        return K.make_rows(self.n, entries)

    @cached_property
    def _full_mask(self):
        return K.full_mask(self.n)

    @cached_property
    def parent_lists(self):
        out = [[] for _ in range(self.n)]
        for u, v in self.directed:
            out[v].append(u)
        return tuple(tuple(sorted(p)) for p in out)

    @cached_property
    def child_lists(self):
        out = [[] for _ in range(self.n)]
        for u, v in self.directed:
            out[u].append(v)
        return tuple(tuple(sorted(c)) for c in out)

    @cached_property
    def bi_lists(self):
        out = [[] for _ in range(self.n)]
        for u, v in self.bidirected:
            out[u].append(v)
            out[v].append(u)
        return tuple(tuple(sorted(b)) for b in out)

    def mask(self, vertices):
        return K.pack(self.n, vertices)

    def unmask(self, mask):
        return frozenset(int(v) for v in K.unpack(mask))

    def _validate_subset(self, vs, name):
        vs = frozenset(int(v) for v in vs)
        for v in vs:
            if v < 0 or v >= self.n:
                raise InputError(f"{name}: vertex {v} out of range")
        return vs

    def __repr__(self):
        return (
            f"Admg(n={self.n}, directed={len(self.directed)}, "
            f"bidirected={len(self.bidirected)})"
        )


def build(labels, directed=(), bidirected=()):
    """Convenience constructor accepting label or index pairs."""
    return Admg(tuple(labels), frozenset(directed), frozenset(bidirected))


# ---------------------------------------------------------------------------
# cost maps


@dataclass(frozen=True)
class CostMap:
    values: tuple

    def __post_init__(self):
        vals = []
        for c in self.values:
            if c == INFINITY:
                vals.append(INFINITY)
                continue
            ic = int(c)
            if ic != c or ic < 0:
                raise InputError(f"cost {c!r} is not a non-negative integer")
            vals.append(ic)
        object.__setattr__(self, "values", tuple(vals))

    @classmethod
    def unit(cls, n):
        return cls(tuple([1] * n))

    def of(self, v):
        return self.values[v]

    def is_inf(self, v):
        return self.values[v] == INFINITY

    def total(self, vertices):
        t = 0
        for v in vertices:
            c = self.values[v]
            if c == INFINITY:
                return INFINITY
            t += c
        return t

    @property
    def finite_sum(self):
        return sum(c for c in self.values if c != INFINITY)

    def __len__(self):
        return len(self.values)


def project_costs(costs, src, dst):
    """Re-index a cost map from graph ``src`` onto graph ``dst`` by label."""
    return CostMap(tuple(costs.of(src.index(lbl)) for lbl in dst.labels))


@dataclass(frozen=True)
class Query:
    x: frozenset
    y: frozenset

    def __post_init__(self):
        x = frozenset(int(v) for v in self.x)
        y = frozenset(int(v) for v in self.y)
        if not x or not y:
            raise InputError("query sets X and Y must both be non-empty")
        if x & y:
            raise InputError("query sets X and Y must be disjoint")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


# ---------------------------------------------------------------------------
# core operations


def parents(g, w):
    """Parents of the set w, excluding w itself."""
    w = g._validate_subset(w, "parents")
    out = set()
    for v in w:
        out.update(g.parent_lists[v])
    return frozenset(out) - w


def ancestors_within(g, w, s):
    """Vertices of w with a directed path to s inside w (s included)."""
    w = g._validate_subset(w, "ancestors_within")
    s = g._validate_subset(s, "ancestors_within")
    if not s <= w:
        raise InputError("ancestors_within: s must be a subset of w")
    reach = K.closure(g._parent_rows, g.mask(w), g.mask(s))
    return g.unmask(reach)


def districts_of(g, s):
    """Partition of s into maximal bidirected-connected components of g[s]."""
    s = g._validate_subset(s, "districts_of")
    allowed = g.mask(s)
    seen = set()
    out = []
    for v in sorted(s):
        if v in seen:
            continue
        comp = g.unmask(K.closure(g._bi_rows, allowed, g.mask([v])))
        seen.update(comp)
        out.append(comp)
    return out


def induced(g, w):
    """Induced subgraph over w, vertex identity preserved via labels."""
    w = sorted(g._validate_subset(w, "induced"))
    pos = {v: i for i, v in enumerate(w)}
    directed = [(pos[u], pos[v]) for u, v in g.directed if u in pos and v in pos]
    bidirected = [(pos[u], pos[v]) for u, v in g.bidirected if u in pos and v in pos]
    return Admg(tuple(g.labels[v] for v in w), frozenset(directed), frozenset(bidirected))


def remove_incoming(g, i):
    """Drop every directed edge into i and every bidirected edge touching i."""
    i = g._validate_subset(i, "remove_incoming")
    directed = frozenset((u, v) for u, v in g.directed if v not in i)
    bidirected = frozenset(
        (u, v) for u, v in g.bidirected if u not in i and v not in i
    )
    return Admg(g.labels, directed, bidirected)


def remove_outgoing(g, a):
    """Drop every directed edge out of a; bidirected edges are untouched."""
    a = g._validate_subset(a, "remove_outgoing")
    directed = frozenset((u, v) for u, v in g.directed if u not in a)
    return Admg(g.labels, directed, g.bidirected)


def latent_project(g):
    """Replace each bidirected edge {x,y} by a fresh latent vertex with
    edges into x and y.  Original vertices keep their indices."""
    labels = list(g.labels)
    directed = set(g.directed)
    nxt = g.n
    for u, v in sorted(g.bidirected):
        labels.append(f"{LATENT_PREFIX}{g.labels[u]}|{g.labels[v]}")
        directed.add((nxt, u))
        directed.add((nxt, v))
        nxt += 1
    return Admg(tuple(labels), frozenset(directed), frozenset())


@dataclass(frozen=True)
class UGraph:
    """Undirected graph produced by moralization."""

    labels: tuple
    edges: frozenset

    def __post_init__(self):
        edges = frozenset(_canon_bi(int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise InputError("self-loop in undirected graph")
        object.__setattr__(self, "edges", edges)

    @property
    def n(self):
        return len(self.labels)

    @cached_property
    def neighbor_lists(self):
        out = [[] for _ in range(self.n)]
        for u, v in self.edges:
            out[u].append(v)
            out[v].append(u)
        return tuple(tuple(sorted(x)) for x in out)

    def has_edge(self, u, v):
        return _canon_bi(u, v) in self.edges

    def is_latent(self, v):
        return self.labels[v].startswith(LATENT_PREFIX)


def _moral_edges(gd, within):
    """Moralization rules applied to a directed-only graph restricted to
    ``within``: keep directed adjacencies plus marriages of co-parents."""
    edges = set()
    for u, v in gd.directed:
        if u in within and v in within:
            edges.add(_canon_bi(u, v))
    for v in within:
        ps = [p for p in gd.parent_lists[v] if p in within]
        for a, b in itertools.combinations(ps, 2):
            edges.add(_canon_bi(a, b))
    return edges


def moralize(g):
    """Moral graph of the latent projection of g."""
    gd = latent_project(g)
    return UGraph(gd.labels, frozenset(_moral_edges(gd, gd.vertices)))


def _ugraph_separated(neighbor_lists, a, b, z):
    """True iff every path from a to b passes through z."""
    blocked = set(z)
    seen = set(v for v in a if v not in blocked)
    stack = list(seen)
    targets = set(b)
    while stack:
        v = stack.pop()
        if v in targets:
            return False
        for w in neighbor_lists[v]:
            if w not in seen and w not in blocked:
                seen.add(w)
                stack.append(w)
    return not (seen & targets)


def d_separated(g, a, b, z):
    """d-separation of a from b given z, decided as a vertex cut in the
    moralized ancestral graph of the latent projection."""
    a = g._validate_subset(a, "d_separated")
    b = g._validate_subset(b, "d_separated")
    z = g._validate_subset(z, "d_separated")
    if (a & b) or (a & z) or (b & z):
        raise InputError("d_separated: a, b, z must be pairwise disjoint")
    for v in a | b | z:
        if g.is_latent(v):
            raise InputError("d_separated: latent vertices are not allowed")
    if not a or not b:
        return True
    gd = latent_project(g)
    anc = ancestors_within(gd, gd.vertices, a | b | z)
    edges = _moral_edges(gd, anc)
    moral = UGraph(gd.labels, frozenset(edges))
    return _ugraph_separated(moral.neighbor_lists, a, b, z)
