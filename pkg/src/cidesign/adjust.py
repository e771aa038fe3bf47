"""Min-cost intervention design through generalized covariate adjustment.

The core construction turns "find the cheapest intervention under which an
adjustment set exists" into one weighted minimum vertex cut: every vertex of
the latent projection is split into an adjustment side (cost 0 for
observables) and an intervention side (cost = vertex cost), wired so that a
cut on the adjustment side blocks a backdoor path by conditioning while a
cut on the intervention side severs the vertex from its parents.  Sources
are the parents of the target set S, sinks are S itself, and the network is
restricted to the ancestral closure of S u Pa(S) in the modified graph, so
cut membership on the adjustment side always yields ancestors of S
(separation in that moral ancestral graph is exactly d-separation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .errors import InfeasibleError, InputError
from .graphs import (
    INFINITY,
    ancestors_within,
    d_separated,
    induced,
    latent_project,
    parents,
    project_costs,
    remove_incoming,
    remove_outgoing,
)
from .hedges import InterventionFamily, hedge_hull, hits_all_hedges, is_identifiable
from .solvers import SolveReport


@dataclass(frozen=True)
class VcNetwork:
    """Undirected weighted vertex-cut instance.

    meta[node] = (graph_vertex, side); side 1 = adjustment (conditioning),
    side 2 = intervention.  Sinks are never cut candidates; sources only in
    the bidirected-cut variant."""

    n_nodes: int
    costs: tuple
    edges: tuple
    sources: tuple
    sinks: tuple
    meta: tuple
    labels: tuple
    sources_cuttable: bool = False


@dataclass(frozen=True)
class AdjustmentResult:
    intervention: frozenset
    adjustment: frozenset
    cost: object
    x_minimal: frozenset
    s: frozenset

    def to_json(self, g):
        return {
            "status": "ok",
            "cost": None if self.cost == INFINITY else self.cost,
            "intervention": sorted(g.labels[v] for v in self.intervention),
            "adjustment": sorted(g.labels[v] for v in self.adjustment),
            "x_minimal": sorted(g.labels[v] for v in self.x_minimal),
            "s": sorted(g.labels[v] for v in self.s),
        }


def make_x_minimal(g, x, y):
    """Drop every x' that rule 3 makes redundant: x' leaves X when it is
    d-separated from Y given X \\ {x'} after cutting all edges into X.
    Ascending-index rescan until fixpoint."""
    x = frozenset(g._validate_subset(x, "make_x_minimal"))
    y = frozenset(g._validate_subset(y, "make_x_minimal"))
    if x & y:
        raise InputError("make_x_minimal: X and Y overlap")
    while True:
        cut = remove_incoming(g, x)
        removed = None
        for v in sorted(x):
            if d_separated(cut, {v}, y, x - {v}):
                removed = v
                break
        if removed is None:
            return x
        x = x - {removed}


def build_vc_network(g, x, y, costs, forbid=frozenset()):
    """Split-vertex cut network for the query (X assumed minimal).

    ``forbid`` lists vertices whose intervention side must stay uncut (the
    hedge-hull heuristic forbids the target set).  Returns None when Pa(S)
    is empty, i.e. nothing needs cutting."""
    x = frozenset(x)
    y = frozenset(y)
    s = ancestors_within(g, g.vertices - x, y)
    pa = parents(g, s)
    if not pa:
        return None
    forbid = frozenset(forbid)
    gmod = remove_outgoing(g, pa)
    gd = latent_project(gmod)
    keep = sorted(ancestors_within(gd, gd.vertices, s) | pa)
    keep_set = set(keep)
    node_of = {}
    meta = []
    node_costs = []
    for v in keep:
        for side in (1, 2):
            node_of[(v, side)] = len(meta)
            meta.append((v, side))
            if gd.is_latent(v):
                node_costs.append(INFINITY)
            elif side == 1:
                node_costs.append(0)
            else:
                node_costs.append(INFINITY if v in forbid else costs.of(v))
    edges = [(node_of[(v, 1)], node_of[(v, 2)]) for v in keep]
    for u, v in sorted(gd.directed):
        if u in keep_set and v in keep_set:
            edges.append((node_of[(u, 1)], node_of[(v, 2)]))
    return VcNetwork(
        n_nodes=len(meta),
        costs=tuple(node_costs),
        edges=tuple(edges),
        sources=tuple(node_of[(v, 1)] for v in sorted(pa)),
        sinks=tuple(node_of[(v, 1)] for v in sorted(s)),
        meta=tuple(meta),
        labels=gd.labels,
    )


def _neighbours(net):
    out = [[] for _ in range(net.n_nodes)]
    for u, v in net.edges:
        out[u].append(v)
        out[v].append(u)
    return out


def is_vertex_cut(net, cut):
    """True iff removing ``cut`` disconnects every source from every sink."""
    cut = set(cut)
    nbrs = _neighbours(net)
    seen = set(v for v in net.sources if v not in cut)
    stack = list(seen)
    sinks = set(net.sinks)
    while stack:
        v = stack.pop()
        if v in sinks:
            return False
        for w in nbrs[v]:
            if w not in seen and w not in cut:
                seen.add(w)
                stack.append(w)
    return not (seen & sinks)


def min_vertex_cut(net):
    """Exact weighted minimum vertex cut by vertex splitting and max flow.

    Infinite costs become a sentinel above the sum of finite costs; a flow
    reaching the sentinel means no finite cut exists.  The cut is read off
    residual reachability and pruned (deterministically) to a minimal one;
    only zero-cost members can ever be redundant in a minimum cut.
    """
    sentinel = sum(c for c in net.costs if c != INFINITY) + 1
    n = net.n_nodes
    sinks = set(net.sinks)
    uncuttable = sinks | (set() if net.sources_cuttable else set(net.sources))
    size = 2 * n + 2
    src, dst = 2 * n, 2 * n + 1
    rows, cols, caps = [], [], []

    def arc(a, b, c):
        rows.append(a)
        cols.append(b)
        caps.append(c)

    for u in range(n):
        c = net.costs[u]
        cap = sentinel if (c == INFINITY or u in uncuttable) else int(c)
        arc(2 * u, 2 * u + 1, cap)
    for u, v in net.edges:
        arc(2 * u + 1, 2 * v, sentinel)
        arc(2 * v + 1, 2 * u, sentinel)
    for u in net.sources:
        # cuttable sources are entered before their split, uncuttable after
        arc(src, 2 * u if net.sources_cuttable else 2 * u + 1, sentinel)
    for u in net.sinks:
        arc(2 * u, dst, sentinel)
    graph = csr_matrix(
        (np.asarray(caps, dtype=np.int64), (rows, cols)), shape=(size, size)
    )
    result = maximum_flow(graph, src, dst)
    if result.flow_value >= sentinel:
        raise InfeasibleError("no finite-cost vertex cut exists")
    residual = graph - result.flow
    residual.eliminate_zeros()
    reach_rows = residual.tolil().rows
    seen = {src}
    stack = [src]
    while stack:
        a = stack.pop()
        for b in reach_rows[a]:
            if b not in seen:
                seen.add(b)
                stack.append(b)
    cut = [
        u
        for u in range(n)
        if 2 * u in seen and (2 * u + 1) not in seen and u not in uncuttable
    ]
    for u in sorted(cut):
        trial = [v for v in cut if v != u]
        if is_vertex_cut(net, trial):
            cut = trial
    total = sum(net.costs[u] for u in cut)
    assert total == result.flow_value, "pruned cut no longer matches the flow value"
    return frozenset(cut), int(total)


def gen_adjustment(g, x, y, costs, forbid=frozenset()):
    """Minimum-cost intervention admitting a generalized adjustment set,
    plus the adjustment set, via one vertex-cut solve."""
    x = frozenset(g._validate_subset(x, "gen_adjustment"))
    y = frozenset(g._validate_subset(y, "gen_adjustment"))
    xm = make_x_minimal(g, x, y)
    s = ancestors_within(g, g.vertices - xm, y)
    net = build_vc_network(g, xm, y, costs, forbid=forbid)
    if net is None:
        return AdjustmentResult(frozenset(), frozenset(), 0, xm, frozenset(s))
    cut, total = min_vertex_cut(net)
    intervention = frozenset(net.meta[u][0] for u in cut if net.meta[u][1] == 2)
    adjustment = frozenset(net.meta[u][0] for u in cut if net.meta[u][1] == 1)
    return AdjustmentResult(intervention, adjustment, total, xm, frozenset(s))


def verify_adjustment(g, x, y, i, z):
    """Graphical criterion: z consists of observable ancestors of S outside
    S and Pa(S), and d-separates S from Pa(S) once edges into the
    intervention set and out of Pa(S) are removed."""
    i = frozenset(g._validate_subset(i, "verify_adjustment"))
    z = frozenset(g._validate_subset(z, "verify_adjustment"))
    x = frozenset(x)
    y = frozenset(y)
    s = ancestors_within(g, g.vertices - x, y)
    pa = parents(g, s)
    if z & (s | pa):
        return False
    for v in i | z:
        if g.is_latent(v):
            return False
    if not z <= ancestors_within(g, g.vertices, s):
        return False
    if not pa:
        return True
    modified = remove_outgoing(remove_incoming(g, i), pa)
    return d_separated(modified, s, pa, z)


def h1_baseline(g, s, costs):
    """Cheapest intervention after which no bidirected path connects the
    target set's parents to the target set, as a weighted vertex cut over
    the bidirected edges of the hedge hull (sources themselves cuttable)."""
    s = frozenset(g._validate_subset(s, "h1_baseline"))
    hull = hedge_hull(g, s)
    if hull == s:
        return SolveReport(InterventionFamily.of([frozenset()], costs), 0, "h1")
    keep = sorted(hull)
    pa = parents(g, s) & hull
    assert pa, "non-trivial hull always contains parents of S"
    node_of = {v: idx for idx, v in enumerate(keep)}
    net = VcNetwork(
        n_nodes=len(keep),
        costs=tuple(INFINITY if v in s else costs.of(v) for v in keep),
        edges=tuple(
            (node_of[u], node_of[v])
            for u, v in sorted(g.bidirected)
            if u in node_of and v in node_of
        ),
        sources=tuple(node_of[v] for v in sorted(pa)),
        sinks=tuple(node_of[v] for v in sorted(s)),
        meta=tuple((v, 2) for v in keep),
        labels=g.labels,
        sources_cuttable=True,
    )
    try:
        cut, total = min_vertex_cut(net)
    except InfeasibleError:
        raise InfeasibleError(
            "bidirected connectivity between Pa(S) and S cannot be cut at finite cost"
        ) from None
    i_set = frozenset(keep[u] for u in cut)
    if not hits_all_hedges(g, s, i_set):
        raise RuntimeError("h1 cut failed the hedge-hitting check")
    return SolveReport(InterventionFamily.of([i_set], costs), total, "h1")


def min_cost_via_adjustment(pq, costs):
    """Heuristic for the hedge-hitting problem: per district, run the
    adjustment algorithm on the hedge hull with target-side interventions
    forbidden; the per-district answers form the intervention family."""
    sets = []
    for l, district in enumerate(pq.districts):
        hull = pq.hulls[l]
        if hull == district:
            sets.append(frozenset())
            continue
        sub = induced(pq.g, hull)
        sub_costs = project_costs(costs, pq.g, sub)
        s_sub = frozenset(sub.index(pq.g.labels[v]) for v in district)
        x_sub = parents(sub, s_sub)
        assert x_sub, "non-trivial hull always contains parents of S"
        res = gen_adjustment(sub, x_sub, s_sub, sub_costs, forbid=s_sub)
        sets.append(frozenset(pq.g.index(sub.labels[v]) for v in res.intervention))
    fam = InterventionFamily.of(sets, costs)
    report = SolveReport(fam, fam.total_cost, "adjust_heuristic")
    if not is_identifiable(pq, fam):
        raise RuntimeError("adjustment heuristic produced an infeasible family")
    return report
