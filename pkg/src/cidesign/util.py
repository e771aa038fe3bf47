"""Small shared helpers."""

from __future__ import annotations

import heapq
import time

from .errors import SolveTimeout


def ascending_cost_subsets(items):
    """Yield (total_cost, keys_tuple) for every subset of ``items`` in
    nondecreasing total cost.

    ``items`` is an iterable of (cost, key) with integer costs.  The empty
    subset comes first.  Lazy heap enumeration; callers are responsible for
    bounding len(items).
    """
    items = sorted(items, key=lambda t: (t[0], t[1]))
    yield 0, ()
    n = len(items)
    if n == 0:
        return
    counter = 0
    heap = [(items[0][0], counter, (0,))]
    while heap:
        total, _, pos = heapq.heappop(heap)
        yield total, tuple(items[p][1] for p in pos)
        last = pos[-1]
        nxt = last + 1
        if nxt < n:
            counter += 1
            heapq.heappush(heap, (total + items[nxt][0], counter, pos + (nxt,)))
            counter += 1
            heapq.heappush(
                heap,
                (total - items[last][0] + items[nxt][0], counter, pos[:-1] + (nxt,)),
            )


def check_deadline(deadline, what="solve"):
    if deadline is not None and time.monotonic() > deadline:
        raise SolveTimeout(f"{what}: time budget exhausted")


def set_partitions(items):
    """All partitions of ``items`` (a sequence) into non-empty groups."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part
