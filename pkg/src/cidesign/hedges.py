"""Hedges, hedge hulls and the identifiability decision procedure.

A hedge for a district S is a strict superset W of S that is
bidirected-connected in g[W] and whose every vertex is an ancestor of S
inside W.  Hedges are what block identification of the interventional
distribution targeting S; an intervention set makes S identifiable exactly
when it intersects every hedge.  The hull (union of all hedges) is computed
by alternating ancestor- and bidirected-component pruning to a fixpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels as K
from .errors import InputError, ResourceLimitError
from .graphs import Admg, ancestors_within, districts_of, induced

HULL_SCAN_GUARD = 25


# ---------------------------------------------------------------------------
# mask-level fast paths (shared by the solvers)


def _district_check(g, s_mask):
    """s must be non-empty and bidirected-connected within g[s]."""
    members = K.unpack(s_mask)
    if members.size == 0:
        raise InputError("district set must be non-empty")
    seed = K.pack(g.n, [int(members[0])])
    comp = K.closure(g._bi_rows, s_mask, seed)
    if not K.masks_equal(comp, s_mask):
        raise InputError("set is not a district (not bidirected-connected)")


def _hull_mask(g, s_mask, within_mask):
    return K.hull(g._parent_rows, g._bi_rows, within_mask, s_mask)


def hedge_hull(g, s, within=None):
    """Union of all hedges formed for the district s (within an optional
    vertex restriction); equals s exactly when no hedge exists."""
    s = g._validate_subset(s, "hedge_hull")
    if within is None:
        within_mask = g._full_mask
    else:
        within = g._validate_subset(within, "hedge_hull")
        if not s <= within:
            raise InputError("hedge_hull: s must lie inside the restriction")
        within_mask = g.mask(within)
    s_mask = g.mask(s)
    _district_check(g, s_mask)
    return g.unmask(_hull_mask(g, s_mask, within_mask))


def is_hedge(g, s, w):
    """Definition check: g[w] bidirected-connected and w ancestral for s."""
    s = g._validate_subset(s, "is_hedge")
    w = g._validate_subset(w, "is_hedge")
    if w == s:
        raise InputError("is_hedge: w must be a proper superset of s")
    if not s < w:
        raise InputError("is_hedge: requires s ⊊ w")
    s_mask = g.mask(s)
    _district_check(g, s_mask)
    w_mask = g.mask(w)
    comp = K.closure(g._bi_rows, w_mask, s_mask)
    if not K.masks_equal(comp, w_mask):
        return False
    anc = K.closure(g._parent_rows, w_mask, s_mask)
    return K.masks_equal(anc, w_mask)


def hits_all_hedges(g, s, i):
    """True iff removing i leaves no hedge for s, i.e. i intersects every
    hedge.  Requires i disjoint from s."""
    s = g._validate_subset(s, "hits_all_hedges")
    i = g._validate_subset(i, "hits_all_hedges")
    if i & s:
        raise InputError("hits_all_hedges: intervention overlaps the target set")
    s_mask = g.mask(s)
    _district_check(g, s_mask)
    within = K.mask_diff(g._full_mask, g.mask(i))
    return K.masks_equal(_hull_mask(g, s_mask, within), s_mask)


def enumerate_hedges(g, s, limit=None, sink=None):
    """All hedges for s inside its hull, ordered by candidate submask.

    Guarded by hull size (25 non-target vertices) unless ``limit`` caps the
    result count; exceeding either bound raises ResourceLimitError.  When
    ``sink`` is given, each hedge is also written as one space-separated
    line of sorted labels.
    """
    hull = hedge_hull(g, s)
    s = frozenset(s)
    cand = sorted(hull - s)
    m = len(cand)
    if limit is None and m > HULL_SCAN_GUARD:
        raise ResourceLimitError(
            f"hull has {m} non-target vertices (> {HULL_SCAN_GUARD}); pass a limit"
        )
    if m == 0:
        return []
    s_mask = g.mask(s)
    cand_arr = np.asarray(cand, dtype=np.int64)
    cap = min(1 << m, limit if limit is not None else 1 << m, 1 << 20)
    out = np.empty(max(cap, 1), dtype=np.int64)
    count = K.hedge_scan(g._parent_rows, g._bi_rows, s_mask, cand_arr, out.size, out)
    if limit is not None and count > limit:
        raise ResourceLimitError(f"found more than limit={limit} hedges")
    if count > out.size:
        out = np.empty(count, dtype=np.int64)
        count = K.hedge_scan(g._parent_rows, g._bi_rows, s_mask, cand_arr, count, out)
    hedges = []
    for code in out[:count]:
        code = int(code)
        w = frozenset(cand[b] for b in range(m) if (code >> b) & 1) | s
        hedges.append(w)
        if sink is not None:
            sink.write(" ".join(g.labels[v] for v in sorted(w)) + "\n")
    return hedges


def count_hedges(g, s, within=None):
    """Number of hedges for s (optionally inside a vertex restriction)."""
    hull = hedge_hull(g, s, within=within)
    s = frozenset(s)
    cand = sorted(hull - s)
    if len(cand) > HULL_SCAN_GUARD:
        raise ResourceLimitError(f"hull too large to enumerate ({len(cand)} candidates)")
    if not cand:
        return 0
    dummy = np.empty(1, dtype=np.int64)
    return int(
        K.hedge_scan(
            g._parent_rows,
            g._bi_rows,
            g.mask(s),
            np.asarray(cand, dtype=np.int64),
            0,
            dummy,
        )
    )


def find_minimal_hedge(g, s, forbidden=frozenset(), costs=None):
    """One inclusion-minimal hedge for s avoiding ``forbidden``, or None.

    Candidates are deleted in descending cost order (ties by ascending
    index) so that cheap vertices remain in the returned hedge.
    """
    s = g._validate_subset(s, "find_minimal_hedge")
    forbidden = g._validate_subset(forbidden, "find_minimal_hedge")
    if forbidden & s:
        raise InputError("find_minimal_hedge: forbidden overlaps the target set")
    s_mask = g.mask(s)
    _district_check(g, s_mask)
    within = K.mask_diff(g._full_mask, g.mask(forbidden))
    hull = _hull_mask(g, s_mask, within)
    if K.masks_equal(hull, s_mask):
        return None

    def order_key(v):
        if costs is None:
            return (0, v)
        c = costs.of(v)
        return (0, v) if c == float("inf") else (1, -c, v)

    w = hull
    while True:
        members = [int(v) for v in K.unpack(K.mask_diff(w, s_mask))]
        members.sort(key=order_key)
        shrunk = False
        for v in members:
            trial = _hull_mask(g, s_mask, K.mask_diff(w, g.mask([v])))
            if not K.masks_equal(trial, s_mask):
                w = trial
                shrunk = True
                break
        if not shrunk:
            return g.unmask(w)


# ---------------------------------------------------------------------------
# queries and intervention families


@dataclass(frozen=True)
class PreparedQuery:
    """Query (X, Y) with the graph pruned to Anc(X u Y), the target set
    S = Anc_{V\\X}(Y) and its maximal districts in ascending order."""

    g: Admg
    x: frozenset
    y: frozenset
    s: frozenset
    districts: tuple

    @cached_property
    def hulls(self):
        return tuple(frozenset(hedge_hull(self.g, d)) for d in self.districts)


def prepare_query(g, x, y):
    x = g._validate_subset(x, "prepare_query")
    y = g._validate_subset(y, "prepare_query")
    if not x or not y:
        raise InputError("X and Y must be non-empty")
    if x & y:
        raise InputError("X and Y must be disjoint")
    for v in x | y:
        if g.is_latent(v):
            raise InputError("X and Y may not contain latent vertices")
    keep = ancestors_within(g, g.vertices, x | y)
    sub = induced(g, keep)
    x2 = frozenset(sub.index(g.labels[v]) for v in x)
    y2 = frozenset(sub.index(g.labels[v]) for v in y)
    s = ancestors_within(sub, sub.vertices - x2, y2)
    districts = tuple(frozenset(d) for d in districts_of(sub, s))
    return PreparedQuery(sub, x2, y2, frozenset(s), districts)


@dataclass(frozen=True)
class InterventionFamily:
    """A family of intervention sets with its total cost (sum of member
    costs over the distinct sets kept)."""

    sets: tuple
    total_cost: object  # int, or INFINITY when any member is infeasible

    @classmethod
    def of(cls, sets, costs=None, g=None):
        seen = []
        for raw in sets:
            fs = frozenset(int(v) for v in raw)
            if g is not None:
                for v in fs:
                    if g.is_latent(v):
                        raise InputError("intervention sets may not contain latents")
            if fs not in seen:
                seen.append(fs)
        total = 0
        if costs is not None:
            for fs in seen:
                total = (
                    float("inf")
                    if total == float("inf")
                    else (
                        float("inf")
                        if costs.total(fs) == float("inf")
                        else total + costs.total(fs)
                    )
                )
        return cls(tuple(seen), total)

    def labelled(self, g):
        return [sorted(g.labels[v] for v in fs) for fs in self.sets]


def is_identifiable(pq, family):
    """Identifiability criterion: every district is served by some member
    set that avoids it and hits all of its hedges."""
    sets = family.sets if isinstance(family, InterventionFamily) else tuple(family)
    for district in pq.districts:
        served = False
        for i in sets:
            i = frozenset(i)
            if i & district:
                continue
            if hits_all_hedges(pq.g, district, i):
                served = True
                break
        if not served:
            return False
    return True
