"""Packed-bitset reachability kernels behind the graph algorithms.

A vertex set over n vertices is a numpy array of ceil(n/64) uint64 words,
bit ``v & 63`` of word ``v >> 6`` marking vertex v.  Adjacency is an
(n, words) matrix whose row v lists the vertices to pull in once v has been
reached: parent rows drive ancestor closures, bidirected-neighbour rows
drive district closures.

Every kernel exists twice: a numba-compiled version (used by default when
numba imports) and a vectorised pure-numpy version.  Set the environment
variable ``CIDESIGN_PURE_NUMPY=1`` before import to force the numpy path;
``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import os

import numpy as np

WORD = 64

_FORCE_NUMPY = os.environ.get("CIDESIGN_PURE_NUMPY", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and not _FORCE_NUMPY


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# mask helpers


def n_words(n):
    return max(1, (int(n) + 63) >> 6)


def empty_mask(n):
    return np.zeros(n_words(n), dtype=np.uint64)


def full_mask(n):
    mask = empty_mask(n)
    for v in range(n):
        mask[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
    return mask


def pack(n, indices):
    mask = empty_mask(n)
    for v in indices:
        v = int(v)
        if v < 0 or v >= n:
            raise IndexError(f"vertex {v} out of range 0..{n - 1}")
        mask[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
    return mask


def unpack(mask):
    """Indices of set bits, ascending."""
    bits = np.unpackbits(mask.view(np.uint8), bitorder="little")
    return np.flatnonzero(bits)


def popcount(mask):
    return int(np.unpackbits(mask.view(np.uint8), bitorder="little").sum())


def mask_contains(mask, v):
    return bool((mask[v >> 6] >> np.uint64(v & 63)) & np.uint64(1))


def masks_equal(a, b):
    return bool(np.array_equal(a, b))


def mask_diff(a, b):
    return a & ~b


def make_rows(n, entries):
    """Adjacency matrix from (row_vertex, bit_vertex) pairs."""
    rows = np.zeros((n, n_words(n)), dtype=np.uint64)
    for row, bit in entries:
        rows[row, bit >> 6] |= np.uint64(1) << np.uint64(bit & 63)
    return rows


# ---------------------------------------------------------------------------
# numpy backend


def _member_indices(mask):
    bits = np.unpackbits(mask.view(np.uint8), bitorder="little")
    return np.flatnonzero(bits)


def _closure_np(rows, allowed, seeds):
    reach = seeds & allowed
    frontier = reach
    while True:
        members = _member_indices(frontier)
        if members.size == 0:
            return reach
        grown = np.bitwise_or.reduce(rows[members], axis=0) & allowed & ~reach
        if not grown.any():
            return reach
        reach = reach | grown
        frontier = grown


def _hull_np(par_rows, bi_rows, allowed, s_mask):
    h = _closure_np(par_rows, allowed, s_mask)
    while True:
        h2 = _closure_np(bi_rows, h, s_mask)
        if np.array_equal(h2, h):
            return h
        h = _closure_np(par_rows, h2, s_mask)
        if np.array_equal(h, h2):
            return h


def _hedge_scan_np(par_rows, bi_rows, s_mask, cand, cap, out):
    m = cand.shape[0]
    count = 0
    for sub in range(1, 1 << m):
        wmask = s_mask.copy()
        for b in range(m):
            if (sub >> b) & 1:
                v = int(cand[b])
                wmask[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
        cc = _closure_np(bi_rows, wmask, s_mask)
        if not np.array_equal(cc, wmask):
            continue
        anc = _closure_np(par_rows, wmask, s_mask)
        if not np.array_equal(anc, wmask):
            continue
        if count < cap:
            out[count] = sub
        count += 1
    return count


# ---------------------------------------------------------------------------
# numba backend

if _HAVE_NUMBA:

    @njit(cache=True)
    def _closure_nb(rows, allowed, seeds):
        nv, nw = rows.shape
        one = np.uint64(1)
        reach = np.empty(nw, np.uint64)
        stack = np.empty(nv, np.int64)
        top = 0
        for w in range(nw):
            mword = seeds[w] & allowed[w]
            reach[w] = mword
            if mword:
                base = w << 6
                for b in range(64):
                    if (mword >> np.uint64(b)) & one:
                        stack[top] = base + b
                        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for w in range(nw):
                new = rows[v, w] & allowed[w] & ~reach[w]
                if new:
                    reach[w] |= new
                    base = w << 6
                    for b in range(64):
                        if (new >> np.uint64(b)) & one:
                            stack[top] = base + b
                            top += 1
        return reach

    @njit(cache=True)
    def _hull_nb(par_rows, bi_rows, allowed, s_mask):
        nw = allowed.shape[0]
        h = _closure_nb(par_rows, allowed, s_mask)
        while True:
            h2 = _closure_nb(bi_rows, h, s_mask)
            same = True
            for w in range(nw):
                if h2[w] != h[w]:
                    same = False
                    break
            if same:
                return h
            h = _closure_nb(par_rows, h2, s_mask)
            same = True
            for w in range(nw):
                if h[w] != h2[w]:
                    same = False
                    break
            if same:
                return h

    @njit(cache=True)
    def _hedge_scan_nb(par_rows, bi_rows, s_mask, cand, cap, out):
        m = cand.shape[0]
        nw = s_mask.shape[0]
        one = np.uint64(1)
        wmask = np.empty(nw, np.uint64)
        count = 0
        for sub in range(1, 1 << m):
            for w in range(nw):
                wmask[w] = s_mask[w]
            for b in range(m):
                if (sub >> b) & 1:
                    v = cand[b]
                    wmask[v >> 6] |= one << np.uint64(v & 63)
            cc = _closure_nb(bi_rows, wmask, s_mask)
            ok = True
            for w in range(nw):
                if cc[w] != wmask[w]:
                    ok = False
                    break
            if ok:
                anc = _closure_nb(par_rows, wmask, s_mask)
                for w in range(nw):
                    if anc[w] != wmask[w]:
                        ok = False
                        break
            if ok:
                if count < cap:
                    out[count] = sub
                count += 1
        return count


# ---------------------------------------------------------------------------
# dispatch

if USE_NUMBA:
    closure = _closure_nb
    hull = _hull_nb
    hedge_scan = _hedge_scan_nb
else:
    closure = _closure_np
    hull = _hull_np
    hedge_scan = _hedge_scan_np


def implementations():
    """Backend name -> kernel dict; used by the benchmark script."""
    impls = {
        "numpy": {
            "closure": _closure_np,
            "hull": _hull_np,
            "hedge_scan": _hedge_scan_np,
        }
    }
    if _HAVE_NUMBA:
        impls["numba"] = {
            "closure": _closure_nb,
            "hull": _hull_nb,
            "hedge_scan": _hedge_scan_nb,
        }
    return impls
