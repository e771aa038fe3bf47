"""Exact optimisation backends and the method dispatch.

``brute_force_single`` is the reference oracle: it scans subsets of the
hedge hull in ascending cost order and returns the first hedge-hitting set.
``mhs_solve`` reconstructs the lazy baseline: alternately solve a min-cost
hitting set over the hedges discovered so far and, while the answer misses
some hedge, discover one more inclusion-minimal hedge disjoint from it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import ConfigError, InfeasibleError, InputError, ResourceLimitError
from .graphs import INFINITY
from .hedges import (
    InterventionFamily,
    find_minimal_hedge,
    hedge_hull,
    hits_all_hedges,
    is_identifiable,
)
from .util import ascending_cost_subsets, check_deadline

BRUTE_GUARD = 20
FAMILY_N_GUARD = 10
FAMILY_R_GUARD = 3

METHODS = ("brute", "mhs", "sat", "ilp", "adjust_heuristic", "h1")


@dataclass
class SolveReport:
    family: InterventionFamily
    cost: object
    method: str
    status: str = "ok"
    backend: str = ""
    nodes_explored: int = 0
    hedges_discovered: int = 0
    wall_time: float = 0.0
    normalized_cost: object = None

    def to_json(self, g):
        out = {
            "method": self.method,
            "status": self.status,
            "cost": None if self.cost == INFINITY else self.cost,
            "family": self.family.labelled(g) if self.family else [],
        }
        if self.backend:
            out["backend"] = self.backend
        if self.nodes_explored:
            out["nodes_explored"] = self.nodes_explored
        if self.hedges_discovered:
            out["hedges_discovered"] = self.hedges_discovered
        return out


# ---------------------------------------------------------------------------
# brute force


def brute_force_single(g, s, costs, deadline=None):
    """Exhaustive ascending-cost scan over subsets of hull(s) \\ s."""
    s = frozenset(s)
    hull = hedge_hull(g, s)
    cand = sorted(hull - s)
    if len(cand) > BRUTE_GUARD:
        raise ResourceLimitError(
            f"hull has {len(cand)} candidates (> {BRUTE_GUARD}) for brute force"
        )
    items = [(costs.of(v), v) for v in cand if costs.of(v) != INFINITY]
    tried = 0
    for total, keys in ascending_cost_subsets(items):
        check_deadline(deadline, "brute force")
        tried += 1
        i_set = frozenset(keys)
        if hits_all_hedges(g, s, i_set):
            fam = InterventionFamily.of([i_set], costs)
            return SolveReport(fam, total, "brute", nodes_explored=tried)
    raise InfeasibleError(
        "every hedge-hitting set requires an infinite-cost vertex"
    )


def brute_force_family(pq, costs, deadline=None):
    """Exhaustive search over families assigning one intervention set per
    district (shared sets allowed), costs summed over distinct sets."""
    r = len(pq.districts)
    if r > FAMILY_R_GUARD:
        raise ResourceLimitError(f"{r} districts (> {FAMILY_R_GUARD}) for family brute force")
    if pq.g.n > FAMILY_N_GUARD:
        raise ResourceLimitError(f"n={pq.g.n} (> {FAMILY_N_GUARD}) for family brute force")
    union = sorted(set().union(*pq.hulls))
    cand = [v for v in union if costs.of(v) != INFINITY]
    subsets = []
    for bits in range(1 << len(cand)):
        subsets.append(frozenset(cand[b] for b in range(len(cand)) if (bits >> b) & 1))
    serves = []
    tried = 0
    for l in range(r):
        district = pq.districts[l]
        ok = []
        for i_set in subsets:
            tried += 1
            if i_set & district:
                continue
            if hits_all_hedges(pq.g, district, i_set):
                ok.append(i_set)
        if not ok:
            raise InfeasibleError(f"district {sorted(district)} cannot be served")
        serves.append(ok)
    best = None
    stack = [(0, ())]
    while stack:
        check_deadline(deadline, "family brute force")
        l, chosen = stack.pop()
        if l == r:
            distinct = []
            for i_set in chosen:
                if i_set not in distinct:
                    distinct.append(i_set)
            total = sum(costs.total(i_set) for i_set in distinct)
            key = (total, tuple(sorted(tuple(sorted(x)) for x in distinct)))
            if best is None or key < best[0]:
                best = (key, distinct)
            continue
        for i_set in serves[l]:
            stack.append((l + 1, chosen + (i_set,)))
    (total, _), distinct = best
    fam = InterventionFamily.of(distinct, costs)
    return SolveReport(fam, total, "brute", nodes_explored=tried)


# ---------------------------------------------------------------------------
# min-cost hitting set branch and bound


@dataclass(frozen=True)
class HittingSetInstance:
    universe: frozenset
    sets: tuple
    costs: object

    def __post_init__(self):
        for s in self.sets:
            if not s:
                raise InfeasibleError("empty set cannot be hit")
            if not frozenset(s) <= self.universe:
                raise InputError("hitting-set member outside the universe")


def hitting_set_bnb(inst, deadline=None):
    """Exact min-cost hitting set; branch on the smallest uncovered set,
    elements in ascending cost order, bound by disjoint uncovered sets."""
    costs = inst.costs
    sets = [frozenset(v for v in s if costs.of(v) != INFINITY) for s in inst.sets]
    for orig, filt in zip(inst.sets, sets):
        if not filt:
            raise InfeasibleError(f"set {sorted(orig)} has only infinite-cost vertices")
    sets = sorted(set(sets), key=lambda s: (len(s), sorted(s)))
    best_cost = None
    best_set = None
    nodes = 0

    def lower_bound(uncovered):
        used = set()
        bound = 0
        for s in uncovered:
            if s & used:
                continue
            bound += min(costs.of(v) for v in s)
            used |= s
        return bound

    def recurse(chosen, cost):
        nonlocal best_cost, best_set, nodes
        check_deadline(deadline, "hitting set")
        nodes += 1
        uncovered = [s for s in sets if not (s & chosen)]
        if not uncovered:
            key = sorted(chosen)
            if best_cost is None or (cost, key) < (best_cost, sorted(best_set)):
                best_cost, best_set = cost, frozenset(chosen)
            return
        if best_cost is not None and cost + lower_bound(uncovered) >= best_cost:
            return
        pick = min(uncovered, key=lambda s: (len(s), sorted(s)))
        for v in sorted(pick, key=lambda v: (costs.of(v), v)):
            recurse(chosen | {v}, cost + costs.of(v))

    recurse(frozenset(), 0)
    if best_set is None:
        raise InfeasibleError("no finite-cost hitting set")
    return best_set, best_cost, nodes


def mhs_solve(g, s, costs, deadline=None):
    """Lazy loop: hit the hedges found so far, then discover one more
    inclusion-minimal unhit hedge until the answer hits everything."""
    s = frozenset(s)
    hull = hedge_hull(g, s)
    universe = frozenset(hull - s)
    discovered = []
    nodes = 0
    while True:
        check_deadline(deadline, "mhs")
        if discovered:
            inst = HittingSetInstance(
                universe, tuple(frozenset(h - s) for h in discovered), costs
            )
            i_set, cost, n = hitting_set_bnb(inst, deadline)
            nodes += n
        else:
            i_set, cost = frozenset(), 0
        if hits_all_hedges(g, s, i_set):
            fam = InterventionFamily.of([i_set], costs)
            return SolveReport(
                fam,
                cost,
                "mhs",
                nodes_explored=nodes,
                hedges_discovered=len(discovered),
            )
        hedge = find_minimal_hedge(g, s, forbidden=i_set, costs=costs)
        assert hedge is not None  # hits_all_hedges said no
        discovered.append(hedge)


# ---------------------------------------------------------------------------
# dispatch


def solve(
    pq,
    costs,
    method,
    solver_cmd=None,
    solver_timeout=600.0,
    convention="per_district",
    deadline=None,
):
    """Run one backend on a prepared query and report the solution.

    sat/ilp go through the encodings: to an external solver when
    ``solver_cmd`` is configured, otherwise solved internally at small
    scale.  mhs on multi-district queries runs per district when the
    district hulls are disjoint, else it delegates to the sat route.
    """
    from . import adjust as _adjust
    from . import encode as _encode

    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    start = time.monotonic()
    if deadline is None and solver_timeout is not None:
        deadline = start + solver_timeout
    r = len(pq.districts)
    backend = ""

    if method == "brute":
        if r == 1:
            report = brute_force_single(pq.g, pq.districts[0], costs, deadline)
        else:
            report = brute_force_family(pq, costs, deadline)
    elif method == "mhs":
        if r == 1:
            report = mhs_solve(pq.g, pq.districts[0], costs, deadline)
        else:
            hulls = pq.hulls
            disjoint = all(
                not (hulls[a] & hulls[b])
                for a in range(r)
                for b in range(a + 1, r)
            )
            if disjoint:
                sets = []
                nodes = hedges = 0
                total = 0
                for l in range(r):
                    rep = mhs_solve(pq.g, pq.districts[l], costs, deadline)
                    sets.extend(rep.family.sets)
                    nodes += rep.nodes_explored
                    hedges += rep.hedges_discovered
                fam = InterventionFamily.of(sets, costs)
                report = SolveReport(
                    fam,
                    fam.total_cost,
                    "mhs",
                    nodes_explored=nodes,
                    hedges_discovered=hedges,
                )
            else:
                report = _solve_encoded(
                    pq, costs, "sat", solver_cmd, convention, deadline
                )
                backend = "sat (district hulls overlap)"
    elif method in ("sat", "ilp"):
        report = _solve_encoded(pq, costs, method, solver_cmd, convention, deadline)
    elif method == "adjust_heuristic":
        report = _adjust.min_cost_via_adjustment(pq, costs)
    else:  # h1
        sets = []
        for l in range(r):
            rep = _adjust.h1_baseline(pq.g, pq.districts[l], costs)
            sets.extend(rep.family.sets)
        fam = InterventionFamily.of(sets, costs)
        report = SolveReport(fam, fam.total_cost, "h1")

    report.method = method
    if backend:
        report.backend = backend
    report.wall_time = time.monotonic() - start
    return report


def _solve_encoded(pq, costs, method, solver_cmd, convention, deadline):
    from . import encode as _encode
    from .bridge import SolverBridge

    r = len(pq.districts)
    if r == 1:
        cnf, varmap = _encode.build_cnf_single(pq.g, pq.districts[0])
        wcnf = _encode.attach_soft(cnf, varmap, costs)
        if solver_cmd:
            bridge = SolverBridge(solver_cmd, timeout=_deadline_budget(deadline))
            if method == "sat":
                model = bridge.solve_wcnf(wcnf, varmap)
                decoded = _encode.decode_model(wcnf, varmap, model, costs)
            else:
                ilp = _encode.build_ilp(wcnf, varmap)
                vector = bridge.solve_lp(ilp)
                decoded = _encode.decode_model(
                    wcnf, varmap, _vector_to_model(vector, wcnf.nvars), costs
                )
            fam = decoded.family
            return SolveReport(fam, fam.total_cost, method, backend="external")
        m = len(varmap.hulls[0] - varmap.districts[0])
        if m > BRUTE_GUARD:
            raise ConfigError(
                f"instance too large for the internal {method} search "
                f"(m={m}); configure --solver-cmd"
            )
        if method == "sat":
            cost, chosen, _ = _encode.wcnf_minimum_single(
                pq.g, wcnf, varmap, costs, deadline
            )
        else:
            ilp = _encode.build_ilp(wcnf, varmap)
            cost, chosen, _ = _encode.ilp_minimum_single(
                pq.g, ilp, varmap, costs, deadline
            )
        fam = InterventionFamily.of([chosen], costs)
        return SolveReport(fam, cost, method, backend="internal")

    if solver_cmd:
        cnf, varmap = _encode.build_cnf_multi(pq)
        wcnf = _encode.attach_soft(cnf, varmap, costs, convention)
        from .bridge import SolverBridge

        bridge = SolverBridge(solver_cmd, timeout=_deadline_budget(deadline))
        if method == "sat":
            model = bridge.solve_wcnf(wcnf, varmap)
        else:
            ilp = _encode.build_ilp(wcnf, varmap)
            model = _vector_to_model(bridge.solve_lp(ilp), wcnf.nvars)
        decoded = _encode.decode_model(wcnf, varmap, model, costs)
        fam = decoded.family
        return SolveReport(fam, fam.total_cost, method, backend="external")
    objective, family, _ = _encode.minimum_family(
        pq, costs, convention=convention, mode=method, deadline=deadline
    )
    return SolveReport(family, objective, method, backend="internal")


def _vector_to_model(vector, nvars):
    return {v: bool(vector.get(f"x{v}", 0)) for v in range(1, nvars + 1)}


def _deadline_budget(deadline):
    if deadline is None:
        return 600.0
    return max(1.0, deadline - time.monotonic())
