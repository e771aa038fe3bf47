"""Boolean and integer-linear encodings of the min-cost intervention problem.

The CNF construction introduces, for every non-target vertex of the hedge
hull, one variable per pruning iteration: odd iterations propagate
reachability along directed edges, even iterations along bidirected edges,
and final unit clauses demand that nothing outside the target set survives
all iterations.  A satisfying assignment with x(v,0)=0 exactly on an
intervention set exists iff that set hits every hedge, so minimising the
weight of violated soft clauses x(v,0) (weight = vertex cost) solves the
problem.  Multi-district instances get one formula copy per candidate
intervention set, relaxed by per-copy selector variables.

Target-set variables are folded to constants in the single-district build;
in the multi-district build only the j>=1 layers are folded (the shared
x(v,0,k) layer stays real because membership in a target set is
district-relative).

Everything here works on clauses and linear inequalities only; the small
DPLL search and the 0/1 enumeration used at test scale never consult the
graph algorithms they are meant to validate (the ILP route uses the
canonical reachability completion as a feasibility certificate, then checks
the inequalities by plain arithmetic).
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (
    ConfigError,
    InfeasibleError,
    InputError,
    ModelError,
    ResourceLimitError,
)
from .graphs import INFINITY
from .hedges import InterventionFamily, hedge_hull, _district_check
from .util import ascending_cost_subsets, check_deadline, set_partitions

ENUM_LAYER_GUARD = 20
GROUP_SCAN_GUARD = 16

CONVENTIONS = ("per_district", "per_member")


# ---------------------------------------------------------------------------
# formula containers


@dataclass(frozen=True)
class Cnf:
    nvars: int
    clauses: tuple

    def __post_init__(self):
        for cl in self.clauses:
            if len(set(abs(l) for l in cl)) != len(cl):
                raise InputError(f"duplicate variable in clause {cl}")
            for lit in cl:
                if lit == 0 or abs(lit) > self.nvars:
                    raise InputError(f"literal {lit} out of range")


@dataclass(frozen=True)
class Wcnf:
    nvars: int
    hard: tuple
    soft: tuple  # ((clause, weight), ...)
    top: int


@dataclass(frozen=True)
class VarMap:
    kind: str  # "single" | "multi"
    nvars: int
    var_of: dict
    tag_of: dict
    labels: tuple
    districts: tuple
    hulls: tuple
    layer: tuple  # decision-layer variable ids, in allocation order

    def x0(self, vertex, copy=None):
        if self.kind == "single":
            return self.var_of[("x", vertex, 0)]
        return self.var_of[("x0", vertex, copy)]

    def z(self, copy, district):
        return self.var_of[("z", copy, district)]

    @property
    def union_hull(self):
        out = set()
        for h in self.hulls:
            out |= h
        return frozenset(out)

    def render_tag(self, var):
        tag = self.tag_of[var]
        if tag[0] == "x" and len(tag) == 3:
            _, i, j = tag
            return f"x({self.labels[i]},{j})"
        if tag[0] == "x0":
            _, i, k = tag
            return f"x({self.labels[i]},0,copy{k})"
        if tag[0] == "x":
            _, i, j, k, l = tag
            return f"x({self.labels[i]},{j},copy{k},district{l})"
        _, k, l = tag
        return f"z(copy{k},district{l})"


# ---------------------------------------------------------------------------
# construction


def _reach_clause(var_at, s_set, head, other, j, extra=None):
    """Clause (not x[head,j-1] or x[head,j] or not x[other,j]) with
    target-set constants folded away; None when trivially true."""
    if head in s_set:
        return None
    lits = [-var_at(head, j - 1), var_at(head, j)]
    if other not in s_set:
        lits.append(-var_at(other, j))
    if extra is not None:
        lits.append(extra)
    return tuple(lits)


def build_cnf_single(g, s):
    """CNF over the hedge hull of district s; satisfying assignments with
    x(v,0)=0 on a set I exist iff I hits every hedge for s."""
    s = g._validate_subset(s, "build_cnf_single")
    _district_check(g, g.mask(s))
    hull = hedge_hull(g, s)
    order = sorted(hull - s)
    m = len(order)
    var_of = {}
    tag_of = {}
    nxt = 1
    for i in order:
        for j in range(m + 2):
            var_of[("x", i, j)] = nxt
            tag_of[nxt] = ("x", i, j)
            nxt += 1

    def var_at(i, j):
        return var_of[("x", i, j)]

    dir_in = sorted((u, v) for (u, v) in g.directed if u in hull and v in hull)
    bi_in = sorted((u, v) for (u, v) in g.bidirected if u in hull and v in hull)
    clauses = []
    for j in range(1, m + 2):
        if j % 2 == 1:
            for u, w in dir_in:
                cl = _reach_clause(var_at, s, u, w, j)
                if cl:
                    clauses.append(cl)
        else:
            for u, w in bi_in:
                for head, other in ((u, w), (w, u)):
                    cl = _reach_clause(var_at, s, head, other, j)
                    if cl:
                        clauses.append(cl)
    for i in order:
        clauses.append((-var_at(i, m + 1),))
    cnf = Cnf(nvars=m * (m + 2), clauses=tuple(clauses))
    varmap = VarMap(
        kind="single",
        nvars=cnf.nvars,
        var_of=var_of,
        tag_of=tag_of,
        labels=g.labels,
        districts=(frozenset(s),),
        hulls=(frozenset(hull),),
        layer=tuple(var_of[("x", i, 0)] for i in order),
    )
    return cnf, varmap


def expected_hard_clause_count(g, s):
    """Closed-form clause count of build_cnf_single after constant folding."""
    s = frozenset(s)
    hull = hedge_hull(g, s)
    m = len(hull - s)
    d = sum(1 for (u, v) in g.directed if u in hull and v in hull and u not in s)
    b = sum(
        (u not in s) + (v not in s)
        for (u, v) in g.bidirected
        if u in hull and v in hull
    )
    n_odd = (m + 2) // 2
    n_even = (m + 1) // 2
    return n_odd * d + n_even * b + m


def build_cnf_multi(pq):
    """Alg.-style multi-district CNF: one relaxed copy of each district's
    formula per candidate intervention set, a shared x(v,0,copy) layer and
    per-district coverage clauses over the selector variables."""
    g = pq.g
    r = len(pq.districts)
    if r < 1:
        raise InputError("query has no districts")
    hulls = pq.hulls
    union = sorted(set().union(*hulls))
    var_of = {}
    tag_of = {}
    nxt = 1
    for i in union:
        for k in range(r):
            var_of[("x0", i, k)] = nxt
            tag_of[nxt] = ("x0", i, k)
            nxt += 1
    for k in range(r):
        for l in range(r):
            var_of[("z", k, l)] = nxt
            tag_of[nxt] = ("z", k, l)
            nxt += 1
    for l in range(r):
        order_l = sorted(hulls[l] - pq.districts[l])
        for k in range(r):
            for i in order_l:
                for j in range(1, len(order_l) + 2):
                    var_of[("x", i, j, k, l)] = nxt
                    tag_of[nxt] = ("x", i, j, k, l)
                    nxt += 1

    clauses = []
    for l in range(r):
        s_l = pq.districts[l]
        hull_l = hulls[l]
        order_l = sorted(hull_l - s_l)
        m_l = len(order_l)
        dir_in = sorted((u, v) for (u, v) in g.directed if u in hull_l and v in hull_l)
        bi_in = sorted((u, v) for (u, v) in g.bidirected if u in hull_l and v in hull_l)
        for k in range(r):
            nz = -var_of[("z", k, l)]

            def var_at(i, j, k=k, l=l):
                if j == 0:
                    return var_of[("x0", i, k)]
                return var_of[("x", i, j, k, l)]

            for i in sorted(s_l):
                clauses.append((var_of[("x0", i, k)], nz))
            for j in range(1, m_l + 2):
                if j % 2 == 1:
                    for u, w in dir_in:
                        cl = _reach_clause(var_at, s_l, u, w, j, extra=nz)
                        if cl:
                            clauses.append(cl)
                else:
                    for u, w in bi_in:
                        for head, other in ((u, w), (w, u)):
                            cl = _reach_clause(var_at, s_l, head, other, j, extra=nz)
                            if cl:
                                clauses.append(cl)
            for i in order_l:
                clauses.append((-var_at(i, m_l + 1), nz))
    for l in range(r):
        clauses.append(tuple(var_of[("z", k, l)] for k in range(r)))

    layer = [var_of[("x0", i, k)] for i in union for k in range(r)]
    layer += [var_of[("z", k, l)] for k in range(r) for l in range(r)]
    cnf = Cnf(nvars=nxt - 1, clauses=tuple(clauses))
    varmap = VarMap(
        kind="multi",
        nvars=cnf.nvars,
        var_of=var_of,
        tag_of=tag_of,
        labels=g.labels,
        districts=tuple(pq.districts),
        hulls=tuple(hulls),
        layer=tuple(layer),
    )
    return cnf, varmap


def expected_hard_clause_count_multi(pq):
    g = pq.g
    r = len(pq.districts)
    total = r  # coverage clauses
    for l in range(r):
        s_l = pq.districts[l]
        hull_l = pq.hulls[l]
        m_l = len(hull_l - s_l)
        d = sum(1 for (u, v) in g.directed if u in hull_l and v in hull_l and u not in s_l)
        b = sum(
            (u not in s_l) + (v not in s_l)
            for (u, v) in g.bidirected
            if u in hull_l and v in hull_l
        )
        n_odd = (m_l + 2) // 2
        n_even = (m_l + 1) // 2
        total += r * (len(s_l) + n_odd * d + n_even * b + m_l)
    return total


def attach_soft(cnf, varmap, costs, convention="per_district"):
    """Weighted-partial instance: hard = the CNF (plus units pinning
    infinite-cost vertices to non-intervened), soft = cost-weighted clauses
    rewarding x(v,0)=1.  Zero-cost vertices get no soft clause."""
    if convention not in CONVENTIONS:
        raise InputError(f"unknown soft convention {convention!r}")
    hard = list(cnf.clauses)
    soft = []
    if varmap.kind == "single":
        s = varmap.districts[0]
        for i in sorted(varmap.hulls[0] - s):
            c = costs.of(i)
            if c == INFINITY:
                hard.append((varmap.x0(i),))
            elif c > 0:
                soft.append(((varmap.x0(i),), c))
    else:
        r = len(varmap.districts)
        union = sorted(varmap.union_hull)
        for i in union:
            if costs.of(i) == INFINITY:
                for k in range(r):
                    hard.append((varmap.x0(i, k),))
        if convention == "per_district":
            for l in range(r):
                for k in range(r):
                    for i in sorted(varmap.hulls[l] - varmap.districts[l]):
                        c = costs.of(i)
                        if c != INFINITY and c > 0:
                            soft.append(((varmap.x0(i, k), -varmap.z(k, l)), c))
        else:
            for i in union:
                c = costs.of(i)
                if c != INFINITY and c > 0:
                    for k in range(r):
                        soft.append(((varmap.x0(i, k),), c))
    top = sum(w for _, w in soft) + 1
    return Wcnf(nvars=cnf.nvars, hard=tuple(hard), soft=tuple(soft), top=top)


# ---------------------------------------------------------------------------
# DIMACS WCNF export / import


def export_wcnf(wcnf, sink, varmap=None):
    """Classic DIMACS WCNF ('p wcnf nvars nclauses top'); hard clauses carry
    the top weight.  Byte-stable for a fixed instance."""
    if varmap is not None:
        for var in range(1, wcnf.nvars + 1):
            if var in varmap.tag_of:
                sink.write(f"c v {var} {varmap.render_tag(var)}\n")
    ncl = len(wcnf.hard) + len(wcnf.soft)
    sink.write(f"p wcnf {wcnf.nvars} {ncl} {wcnf.top}\n")
    for cl in wcnf.hard:
        sink.write(" ".join([str(wcnf.top)] + [str(l) for l in cl] + ["0"]) + "\n")
    for cl, w in wcnf.soft:
        sink.write(" ".join([str(w)] + [str(l) for l in cl] + ["0"]) + "\n")


def wcnf_to_text(wcnf, varmap=None):
    buf = io.StringIO()
    export_wcnf(wcnf, buf, varmap)
    return buf.getvalue()


def parse_wcnf(text):
    nvars = top = None
    hard = []
    soft = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 5 or parts[1] != "wcnf":
                raise InputError(f"bad wcnf header: {line!r}")
            nvars, _, top = int(parts[2]), int(parts[3]), int(parts[4])
            continue
        if nvars is None:
            raise InputError("clause before wcnf header")
        nums = [int(t) for t in line.split()]
        if nums[-1] != 0:
            raise InputError(f"clause not 0-terminated: {line!r}")
        w, lits = nums[0], tuple(nums[1:-1])
        if w == top:
            hard.append(lits)
        else:
            soft.append((lits, w))
    if nvars is None:
        raise InputError("missing wcnf header")
    return Wcnf(nvars=nvars, hard=tuple(hard), soft=tuple(soft), top=top)


# ---------------------------------------------------------------------------
# ILP translation and CPLEX-LP text format


@dataclass(frozen=True)
class Ilp:
    binaries: tuple  # variable names
    constraints: tuple  # (name, ((var, coef), ...), rhs) meaning sum >= rhs
    objective: tuple  # ((var, weight), ...) to minimise
    varmap: object = None

    def evaluate(self, assignment):
        """True iff every constraint holds for the 0/1 assignment dict."""
        for _, terms, rhs in self.constraints:
            total = 0
            for var, coef in terms:
                total += coef * assignment[var]
            if total < rhs:
                return False
        return True

    def objective_value(self, assignment):
        return sum(w * assignment[var] for var, w in self.objective)


def _clause_terms(clause):
    terms = []
    rhs = 1
    for lit in clause:
        if lit > 0:
            terms.append((f"x{lit}", 1))
        else:
            terms.append((f"x{-lit}", -1))
            rhs -= 1
    return tuple(terms), rhs


def build_ilp(wcnf, varmap=None):
    """Each hard clause becomes one >=1 inequality over literal values
    (x for positive literals, 1-x for negated); each soft clause gets a
    binary violation indicator entering the minimised objective."""
    constraints = []
    for idx, cl in enumerate(wcnf.hard):
        terms, rhs = _clause_terms(cl)
        constraints.append((f"h{idx}", terms, rhs))
    objective = []
    names = [f"x{v}" for v in range(1, wcnf.nvars + 1)]
    for jdx, (cl, w) in enumerate(wcnf.soft):
        yname = f"y{jdx}"
        names.append(yname)
        terms, rhs = _clause_terms(cl)
        constraints.append((f"s{jdx}", ((yname, 1),) + terms, rhs))
        objective.append((yname, w))
    return Ilp(
        binaries=tuple(names),
        constraints=tuple(constraints),
        objective=tuple(objective),
        varmap=varmap,
    )


def _render_linear(terms):
    parts = []
    for idx, (var, coef) in enumerate(terms):
        mag = abs(coef)
        body = var if mag == 1 else f"{mag} {var}"
        if idx == 0:
            parts.append(body if coef >= 0 else f"- {body}")
        else:
            parts.append(("+ " if coef >= 0 else "- ") + body)
    return " ".join(parts)


def export_lp(ilp, sink):
    """CPLEX LP text with a Binary section; byte-stable for a fixed instance."""
    sink.write("\\ cidesign ilp\n")
    sink.write("Minimize\n")
    sink.write(" obj: " + (_render_linear(ilp.objective) if ilp.objective else "0 " + ilp.binaries[0] if ilp.binaries else "") + "\n")
    sink.write("Subject To\n")
    for name, terms, rhs in ilp.constraints:
        sink.write(f" {name}: {_render_linear(terms)} >= {rhs}\n")
    sink.write("Binary\n")
    for name in ilp.binaries:
        sink.write(f" {name}\n")
    sink.write("End\n")


def lp_to_text(ilp):
    buf = io.StringIO()
    export_lp(ilp, buf)
    return buf.getvalue()


_TERM_RE = re.compile(r"([+-])?\s*(\d+)?\s*([A-Za-z]\w*)")


def _parse_linear(text):
    terms = []
    for sign, mag, var in _TERM_RE.findall(text):
        coef = int(mag) if mag else 1
        if sign == "-":
            coef = -coef
        terms.append((var, coef))
    return tuple(terms)


def parse_lp(text):
    section = None
    objective = ()
    constraints = []
    binaries = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "obj"
            continue
        if low == "subject to":
            section = "st"
            continue
        if low == "binary":
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            objective = _parse_linear(body)
            objective = tuple((v, c) for v, c in objective if c != 0)
            continue
        if section == "st":
            name, body = line.split(":", 1)
            expr, rhs = body.rsplit(">=", 1)
            constraints.append((name.strip(), _parse_linear(expr), int(rhs)))
            continue
        if section == "bin":
            binaries.extend(line.split())
    return Ilp(
        binaries=tuple(binaries),
        constraints=tuple(constraints),
        objective=tuple(objective),
    )


# ---------------------------------------------------------------------------
# a small self-contained DPLL


def sat_assign(clauses, nvars, fixed=None):
    """A satisfying assignment (list indexed 1..nvars of bools) respecting
    ``fixed`` (var -> bool), or None.  Unit propagation + chronologically
    backtracking search; free variables default to True."""
    occ = [[] for _ in range(nvars + 1)]
    for ci, cl in enumerate(clauses):
        for lit in cl:
            occ[abs(lit)].append(ci)
    assign = [None] * (nvars + 1)
    pending = list(range(len(clauses)))
    if fixed:
        for var, val in fixed.items():
            assign[var] = bool(val)
    result = _dpll(clauses, occ, assign, pending)
    if result is None:
        return None
    for v in range(1, nvars + 1):
        if result[v] is None:
            result[v] = True
    return result


def _dpll(clauses, occ, assign, pending):
    # propagate
    while pending:
        ci = pending.pop()
        cl = clauses[ci]
        unassigned = 0
        last = 0
        sat = False
        for lit in cl:
            val = assign[abs(lit)]
            if val is None:
                unassigned += 1
                last = lit
            elif val == (lit > 0):
                sat = True
                break
        if sat:
            continue
        if unassigned == 0:
            return None
        if unassigned == 1:
            var = abs(last)
            assign[var] = last > 0
            pending.extend(occ[var])
    # find a branching variable among unsatisfied clauses
    branch = 0
    for cl in clauses:
        sat = False
        first_free = 0
        for lit in cl:
            val = assign[abs(lit)]
            if val is None:
                if first_free == 0:
                    first_free = abs(lit)
            elif val == (lit > 0):
                sat = True
                break
        if not sat:
            if first_free == 0:
                return None  # all assigned, clause false (missed conflict)
            branch = first_free
            break
    if branch == 0:
        return assign
    for value in (True, False):
        trial = assign.copy()
        trial[branch] = value
        res = _dpll(clauses, occ, trial, list(occ[branch]))
        if res is not None:
            return res
    return None


# ---------------------------------------------------------------------------
# canonical completion (reachability certificate for the ILP route)


def canonical_completion_single(g, varmap, intervened):
    """Full 0/1 assignment extending the decision layer where x(v,0)=0
    exactly on ``intervened``: layer j holds the vertices still reachable
    after j alternating pruning passes."""
    s = varmap.districts[0]
    hull = varmap.hulls[0]
    order = sorted(hull - s)
    m = len(order)
    assign = {}
    cur = set(i for i in order if i not in intervened) | set(s)
    for i in order:
        assign[varmap.var_of[("x", i, 0)]] = i not in intervened
    s_mask = g.mask(s)
    for j in range(1, m + 2):
        allowed = g.mask(cur)
        rows = g._parent_rows if j % 2 == 1 else g._bi_rows
        cur = set(g.unmask(K.closure(rows, allowed, s_mask)))
        for i in order:
            assign[varmap.var_of[("x", i, j)]] = i in cur
    return assign


def _completion_layers(g, s_set, order, members):
    """Reachable-set sequence for one district: list over j=1..m+1."""
    m = len(order)
    cur = set(members) | set(s_set)
    s_mask = g.mask(s_set)
    layers = []
    for j in range(1, m + 2):
        rows = g._parent_rows if j % 2 == 1 else g._bi_rows
        cur = set(g.unmask(K.closure(rows, g.mask(cur), s_mask)))
        layers.append(frozenset(cur))
    return layers


def canonical_completion_multi(pq, varmap, x0_layer, z_layer):
    """Assemble a full assignment for the multi-district CNF given the
    shared x0 layer ((vertex, copy) -> bool) and selector layer
    ((copy, district) -> bool); idle copies get all-true j-layers."""
    g = pq.g
    r = len(varmap.districts)
    assign = {}
    for (i, k), val in x0_layer.items():
        assign[varmap.var_of[("x0", i, k)]] = bool(val)
    for (k, l), val in z_layer.items():
        assign[varmap.var_of[("z", k, l)]] = bool(val)
    for l in range(r):
        s_l = varmap.districts[l]
        order_l = sorted(varmap.hulls[l] - s_l)
        for k in range(r):
            if z_layer.get((k, l), False):
                members = [i for i in order_l if x0_layer.get((i, k), True)]
                layers = _completion_layers(g, s_l, order_l, members)
                for j, layer in enumerate(layers, start=1):
                    for i in order_l:
                        assign[varmap.var_of[("x", i, j, k, l)]] = i in layer
            else:
                for i in order_l:
                    for j in range(1, len(order_l) + 2):
                        assign[varmap.var_of[("x", i, j, k, l)]] = True
    return assign


# ---------------------------------------------------------------------------
# model enumeration, decoding, optimisation at test scale


def enumerate_models(cnf, varmap, cap=1 << 20):
    """All satisfying assignments projected to the decision layer
    (x(.,0) variables, plus selectors for multi-district), deduplicated by
    construction.  DPLL decides each candidate layer; no graph reasoning."""
    layer = varmap.layer
    if len(layer) > ENUM_LAYER_GUARD:
        raise ResourceLimitError(
            f"{len(layer)} decision-layer variables (> {ENUM_LAYER_GUARD})"
        )
    out = []
    for bits in range(1 << len(layer)):
        fixed = {var: bool((bits >> pos) & 1) for pos, var in enumerate(layer)}
        if sat_assign(cnf.clauses, cnf.nvars, fixed) is not None:
            out.append(fixed)
            if len(out) > cap:
                raise ResourceLimitError(f"more than cap={cap} models")
    return out


@dataclass(frozen=True)
class DecodedModel:
    family: InterventionFamily
    by_copy: tuple
    district_copy: tuple


def decode_model(wcnf, varmap, model, costs=None):
    """Intervention family read off a model; the model must satisfy every
    hard clause (verified), else ModelError."""
    assign = _as_assignment(model, wcnf.nvars)
    for cl in wcnf.hard:
        if not any(assign[abs(l)] == (l > 0) for l in cl):
            raise ModelError(f"model violates hard clause {cl}")
    if varmap.kind == "single":
        s = varmap.districts[0]
        i_set = frozenset(
            i for i in sorted(varmap.hulls[0] - s) if not assign[varmap.x0(i)]
        )
        fam = InterventionFamily.of([i_set], costs)
        return DecodedModel(fam, (i_set,), (0,))
    r = len(varmap.districts)
    union = sorted(varmap.union_hull)
    by_copy = []
    for k in range(r):
        serves = any(assign[varmap.z(k, l)] for l in range(r))
        if serves:
            by_copy.append(
                frozenset(i for i in union if not assign[varmap.x0(i, k)])
            )
        else:
            by_copy.append(None)
    district_copy = []
    for l in range(r):
        chosen = None
        for k in range(r):
            if assign[varmap.z(k, l)]:
                chosen = k
                break
        if chosen is None:
            raise ModelError(f"no copy serves district {l}")
        district_copy.append(chosen)
    fam = InterventionFamily.of([s for s in by_copy if s is not None], costs)
    return DecodedModel(fam, tuple(by_copy), tuple(district_copy))


def _as_assignment(model, nvars):
    if isinstance(model, dict):
        out = [None] * (nvars + 1)
        for v, b in model.items():
            out[v] = bool(b)
        for v in range(1, nvars + 1):
            if out[v] is None:
                out[v] = True
        return out
    out = list(model)
    if len(out) == nvars:  # 0-based list
        out = [None] + out
    return [None] + [bool(b) for b in out[1:]]


def wcnf_minimum_single(g, wcnf, varmap, costs, deadline=None):
    """Exact optimum of a single-district weighted instance by ascending-cost
    layer enumeration; each candidate layer is decided by DPLL."""
    s = varmap.districts[0]
    order = sorted(varmap.hulls[0] - s)
    candidates = [(costs.of(i), i) for i in order if costs.of(i) != INFINITY]
    base = {varmap.x0(i): True for i in order if costs.of(i) == INFINITY}
    for total, keys in ascending_cost_subsets(candidates):
        check_deadline(deadline, "wcnf optimum")
        chosen = frozenset(keys)
        fixed = dict(base)
        for _, i in candidates:
            fixed[varmap.x0(i)] = i not in chosen
        model = sat_assign(wcnf.hard, wcnf.nvars, fixed)
        if model is not None:
            return total, chosen, model
    raise InfeasibleError("no hedge-hitting set avoids the infinite-cost vertices")


def ilp_minimum_single(g, ilp, varmap, costs, deadline=None):
    """Same enumeration, but feasibility is decided by evaluating the linear
    constraints on the canonical completion of each candidate layer."""
    s = varmap.districts[0]
    order = sorted(varmap.hulls[0] - s)
    candidates = [(costs.of(i), i) for i in order if costs.of(i) != INFINITY]
    infeasibles = frozenset(i for i in order if costs.of(i) == INFINITY)
    for total, keys in ascending_cost_subsets(candidates):
        check_deadline(deadline, "ilp optimum")
        chosen = frozenset(keys)
        completion = canonical_completion_single(g, varmap, chosen)
        vector = {f"x{v}": int(b) for v, b in completion.items()}
        _fill_indicators(ilp, vector)
        if any(v in infeasibles for v in chosen):
            continue
        if ilp.evaluate(vector):
            value = ilp.objective_value(vector)
            return value, chosen, vector
    raise InfeasibleError("no hedge-hitting set avoids the infinite-cost vertices")


def _fill_indicators(ilp, vector):
    """Set each soft indicator to 1 exactly when its clause is violated."""
    for name, terms, rhs in ilp.constraints:
        if not name.startswith("s"):
            continue
        yname = terms[0][0]
        rest = sum(coef * vector[var] for var, coef in terms[1:])
        vector[yname] = 1 if rest < rhs else 0


# -- multi-district optimisation --------------------------------------------


def _group_cnf(pq, group):
    """One-copy CNF for the districts in ``group`` sharing a single x0 layer
    (the selector variables fixed to true are folded away)."""
    g = pq.g
    union = sorted(set().union(*(pq.hulls[l] for l in group)))
    var_of = {}
    nxt = 1
    for i in union:
        var_of[("x0", i)] = nxt
        nxt += 1
    clauses = []
    for l in group:
        s_l = pq.districts[l]
        hull_l = pq.hulls[l]
        order_l = sorted(hull_l - s_l)
        m_l = len(order_l)
        for i in order_l:
            for j in range(1, m_l + 2):
                var_of[("x", i, j, l)] = nxt
                nxt += 1

        def var_at(i, j, l=l):
            if j == 0:
                return var_of[("x0", i)]
            return var_of[("x", i, j, l)]

        for i in sorted(s_l):
            clauses.append((var_of[("x0", i)],))
        dir_in = sorted((u, v) for (u, v) in g.directed if u in hull_l and v in hull_l)
        bi_in = sorted((u, v) for (u, v) in g.bidirected if u in hull_l and v in hull_l)
        for j in range(1, m_l + 2):
            if j % 2 == 1:
                for u, w in dir_in:
                    cl = _reach_clause(var_at, s_l, u, w, j)
                    if cl:
                        clauses.append(cl)
            else:
                for u, w in bi_in:
                    for head, other in ((u, w), (w, u)):
                        cl = _reach_clause(var_at, s_l, head, other, j)
                        if cl:
                            clauses.append(cl)
        for i in order_l:
            clauses.append((-var_at(i, m_l + 1),))
    return tuple(clauses), nxt - 1, var_of, union


def _group_charge(pq, costs, group, members, convention):
    if convention == "per_member":
        return costs.total(members)
    total = 0
    for l in group:
        part = members & (pq.hulls[l] - pq.districts[l])
        c = costs.total(part)
        if c == INFINITY:
            return INFINITY
        total += c
    return total


def _group_minimum(pq, costs, group, convention, mode, deadline):
    """Cheapest single intervention set serving every district in ``group``,
    with its convention-dependent charge; None when no finite set serves."""
    clauses, nvars, var_of, union = _group_cnf(pq, group)
    targets = set()
    for l in group:
        targets |= pq.districts[l]
    cand = [
        i
        for i in union
        if i not in targets and costs.of(i) != INFINITY
    ]
    if len(cand) > GROUP_SCAN_GUARD:
        raise ResourceLimitError(
            f"{len(cand)} intervention candidates in district group (> {GROUP_SCAN_GUARD})"
        )
    base = {
        var_of[("x0", i)]: True
        for i in union
        if i not in cand and i not in targets  # infinite-cost vertices
    }
    best = None
    for bits in range(1 << len(cand)):
        check_deadline(deadline, "group optimum")
        members = frozenset(cand[b] for b in range(len(cand)) if (bits >> b) & 1)
        charge = _group_charge(pq, costs, group, members, convention)
        if best is not None and (charge, sorted(members)) >= (best[0], sorted(best[1])):
            continue
        fixed = dict(base)
        for i in cand:
            fixed[var_of[("x0", i)]] = i not in members
        if mode == "sat":
            ok = sat_assign(clauses, nvars, fixed) is not None
        else:
            ok = _group_ilp_feasible(pq, clauses, var_of, group, fixed, members)
        if ok:
            best = (charge, members)
    return best


def _group_ilp_feasible(pq, clauses, var_of, group, fixed, members):
    """Arithmetic feasibility: canonical completion per district, then every
    clause checked as its linear inequality."""
    g = pq.g
    assign = dict(fixed)
    for l in group:
        s_l = pq.districts[l]
        order_l = sorted(pq.hulls[l] - s_l)
        kept = [i for i in order_l if i not in members and assign.get(var_of[("x0", i)], True)]
        layers = _completion_layers(g, s_l, order_l, kept)
        for j, layer in enumerate(layers, start=1):
            for i in order_l:
                assign[var_of[("x", i, j, l)]] = i in layer
    for cl in clauses:
        total = 0
        rhs = 1
        for lit in cl:
            val = 1 if assign.get(abs(lit), True) else 0
            if lit > 0:
                total += val
            else:
                total += 1 - val
        if total < rhs:
            return False
    return True


def minimum_family(pq, costs, convention="per_district", mode="sat", deadline=None):
    """Exact multi-district optimum: cheapest assignment of districts to
    shared intervention sets (Lemma-style: at most one set per district).

    Returns (objective, family, district_assignment) where the objective is
    the weighted-instance optimum under ``convention`` and the family is the
    decoded intervention sets.
    """
    r = len(pq.districts)
    best_by_group = {}
    for partition in set_partitions(range(r)):
        for grp in partition:
            key = frozenset(grp)
            if key not in best_by_group:
                best_by_group[key] = _group_minimum(
                    pq, costs, sorted(key), convention, mode, deadline
                )
    best = None
    for partition in set_partitions(range(r)):
        total = 0
        feasible = True
        for grp in partition:
            found = best_by_group[frozenset(grp)]
            if found is None:
                feasible = False
                break
            total += found[0]
        if not feasible:
            continue
        canon = tuple(sorted(tuple(sorted(grp)) for grp in partition))
        if best is None or (total, canon) < (best[0], best[3]):
            sets = [best_by_group[frozenset(grp)][1] for grp in partition]
            assignment = {}
            for gi, grp in enumerate(partition):
                for l in grp:
                    assignment[l] = gi
            best = (total, sets, assignment, canon)
    if best is None:
        raise InfeasibleError("every district grouping requires an infinite-cost vertex")
    total, sets, assignment, _ = best
    family = InterventionFamily.of(sets, costs)
    return total, family, assignment
