"""Hedge-count objective and the vertex-removal decision process.

``neg_hedge_count`` is the (submodular) set function mapping an
intervention to minus the number of hedges that survive it; adding the
scaled cost penalty makes its unconstrained maximisers exactly the optimal
hedge-hitting sets, which is what ``HedgeObjective`` evaluates with exact
rational arithmetic.  ``InterventionEnv`` is the episodic counterpart: each
step removes one vertex, the state is the re-pruned hull, rewards are
negated costs and termination means the target became identifiable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import ActionError, InfeasibleError, InputError
from .graphs import INFINITY
from .hedges import InterventionFamily, count_hedges, hedge_hull
from .solvers import SolveReport


def neg_hedge_count(g, s, i):
    """Minus the number of hedges for s that survive removing i."""
    s = frozenset(s)
    i = frozenset(i)
    if i & s:
        raise InputError("intervention overlaps the target set")
    return -count_hedges(g, s, within=g.vertices - i)


@dataclass(frozen=True)
class HedgeObjective:
    """Penalized objective whose maximisers are the min-cost hitting sets:
    hedge deficit minus cost(I) / (1 + total cost outside the target)."""

    g: object
    s: frozenset
    costs: object

    def __post_init__(self):
        object.__setattr__(self, "s", frozenset(self.s))
        for v in self.g.vertices - self.s:
            if self.costs.is_inf(v):
                raise InputError(
                    "penalized objective needs finite costs outside the target set"
                )

    @property
    def denom(self):
        return 1 + sum(self.costs.of(v) for v in self.g.vertices - self.s)

    def value(self, i):
        i = frozenset(i)
        if not i <= self.g.vertices - self.s:
            raise InputError("argument must avoid the target set")
        deficit = neg_hedge_count(self.g, self.s, i)
        return Fraction(deficit) - Fraction(self.costs.total(i), self.denom)


def check_diminishing_returns(g, s, trials, seed=0):
    """Sampled submodularity check of the hedge-deficit function: for
    A <= B and v outside B, the gain of adding v to A is at least the gain
    of adding it to B.  Exact counts, memoised per vertex mask."""
    s = frozenset(s)
    universe = sorted(g.vertices - s)
    if not universe:
        return True
    rng = random.Random(seed)
    cache = {}

    def f(i_set):
        key = frozenset(i_set)
        if key not in cache:
            cache[key] = -count_hedges(g, s, within=g.vertices - key)
        return cache[key]

    for _ in range(trials):
        v = rng.choice(universe)
        rest = [u for u in universe if u != v]
        b = frozenset(u for u in rest if rng.random() < 0.5)
        a = frozenset(u for u in b if rng.random() < 0.5)
        if not f(a | {v}) - f(a) >= f(b | {v}) - f(b):
            return False
    return True


# ---------------------------------------------------------------------------
# vertex-removal environment


@dataclass(frozen=True)
class MdpState:
    hull: frozenset
    removed: frozenset
    total_reward: int


class InterventionEnv:
    """Episodic hull-shrinking process for a single district.

    Actions are finite-cost hull vertices outside the target set; the
    successor state is the hull recomputed without the chosen vertex, the
    reward is its negated cost.  Terminal states have an empty hull
    remainder, at which point the removed set hits every hedge.  The
    environment object itself is stateless; states are passed explicitly.
    """

    def __init__(self, g, s, costs):
        self.g = g
        self.s = frozenset(g._validate_subset(s, "InterventionEnv"))
        self.costs = costs

    def reset(self):
        return MdpState(frozenset(hedge_hull(self.g, self.s)), frozenset(), 0)

    def is_terminal(self, state):
        return state.hull == self.s

    def actions(self, state):
        return tuple(
            v for v in sorted(state.hull - self.s) if not self.costs.is_inf(v)
        )

    def step(self, state, action):
        action = int(action)
        if action not in state.hull or action in self.s:
            raise ActionError(f"vertex {action} is not a legal action")
        if self.costs.is_inf(action):
            raise ActionError(f"vertex {action} has infinite cost")
        hull = hedge_hull(self.g, self.s, within=state.hull - {action})
        reward = -self.costs.of(action)
        new_state = MdpState(
            frozenset(hull), state.removed | {action}, state.total_reward + reward
        )
        return new_state, reward


POLICIES = ("greedy_cost", "greedy_ratio", "random")


def rollout(g, s, costs, policy="greedy_cost", seed=0, log_sink=None):
    """Run the environment to termination under a baseline policy and
    return the removed set as an intervention (always feasible)."""
    if policy not in POLICIES:
        raise InputError(f"unknown policy {policy!r}")
    env = InterventionEnv(g, s, costs)
    rng = random.Random(seed)
    state = env.reset()
    steps = 0
    while not env.is_terminal(state):
        legal = env.actions(state)
        if not legal:
            raise InfeasibleError("only infinite-cost actions remain")
        if policy == "greedy_cost":
            action = min(legal, key=lambda v: (costs.of(v), v))
        elif policy == "greedy_ratio":

            def ratio(v):
                nxt = hedge_hull(g, env.s, within=state.hull - {v})
                shrink = len(state.hull) - len(nxt)
                return (Fraction(costs.of(v), shrink), v)

            action = min(legal, key=ratio)
        else:
            action = legal[rng.randrange(len(legal))]
        state, reward = env.step(state, action)
        steps += 1
        if log_sink is not None:
            log_sink.write(f"{len(state.hull)} {g.labels[action]} {reward}\n")
    fam = InterventionFamily.of([state.removed], costs)
    report = SolveReport(fam, -state.total_reward, f"rollout:{policy}")
    report.nodes_explored = steps
    return report
