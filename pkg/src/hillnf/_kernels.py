"""Dense monomial indexing and compiled kernels for the float backend.

Every monomial of total degree <= MAX_DEGREE in six variables gets a dense
index.  The exponent vector is split into a low triple (m1, m2, m3) and a
high triple (m4, m5, m6), each packed base ``RADIX``.  Packed keys add under
monomial multiplication, and the dense index is ``BASE[hi] + RANK3[lo]``,
so the inner loops of products and brackets need only integer additions and
two table lookups.
"""

from __future__ import annotations

from math import comb

import numba
import numpy as np

MAX_DEGREE = 24
RADIX = MAX_DEGREE + 1


def _triples(degree: int):
    for a in range(degree, -1, -1):
        for b in range(degree - a, -1, -1):
            yield a, b, degree - a - b


def _build_tables():
    lo_list = []
    rank3 = np.full(RADIX**3, -1, dtype=np.int64)
    for d in range(MAX_DEGREE + 1):
        for a, b, c in _triples(d):
            rank3[a + RADIX * b + RADIX * RADIX * c] = len(lo_list)
            lo_list.append((a, b, c))
    lo_exps = np.array(lo_list, dtype=np.int64)

    base = np.full(RADIX**3, -1, dtype=np.int64)
    blocks = []
    offset = 0
    for d in range(MAX_DEGREE + 1):
        count = comb(MAX_DEGREE - d + 3, 3)
        for a, b, c in _triples(d):
            base[a + RADIX * b + RADIX * RADIX * c] = offset
            blocks.append((offset, count, (a, b, c)))
            offset += count
    size = offset
    exps = np.empty((size, 6), dtype=np.int64)
    for start, count, hi in blocks:
        exps[start:start + count, :3] = lo_exps[:count]
        exps[start:start + count, 3:] = hi
    weights = np.array([1, RADIX, RADIX * RADIX], dtype=np.int64)
    lo_keys = exps[:, :3] @ weights
    hi_keys = exps[:, 3:] @ weights
    degree = exps.sum(axis=1)
    return rank3, base, exps, lo_keys, hi_keys, degree


RANK3, BASE, EXPS, LO_KEYS, HI_KEYS, DEGREE = _build_tables()
SIZE = EXPS.shape[0]

# Key decrements for d/dq_k d/dp_k on the three canonical pairs.
PAIR_LO = np.array([1 + RADIX, RADIX * RADIX, 0], dtype=np.int64)
PAIR_HI = np.array([0, 1, RADIX + RADIX * RADIX], dtype=np.int64)


def index_of(exps) -> np.ndarray:
    """Dense indices of an ``(n, 6)`` array of exponent vectors."""
    exps = np.asarray(exps, dtype=np.int64).reshape(-1, 6)
    if exps.size and (exps.min() < 0 or exps.sum(axis=1).max() > MAX_DEGREE):
        raise ValueError(f"exponents outside the supported degree range 0..{MAX_DEGREE}")
    w = np.array([1, RADIX, RADIX * RADIX], dtype=np.int64)
    return BASE[exps[:, 3:] @ w] + RANK3[exps[:, :3] @ w]


class _Scratch:
    """Reusable dense accumulator shared by all kernels (single-threaded)."""

    def __init__(self):
        self.acc = np.zeros(SIZE, dtype=np.complex128)
        self.seen = np.zeros(SIZE, dtype=np.bool_)
        self.touched = np.empty(SIZE, dtype=np.int64)


_SCRATCH = _Scratch()


@numba.njit(cache=True)
def _collect(acc, seen, touched, ntouched):
    idx = np.sort(touched[:ntouched])
    out_idx = np.empty(ntouched, dtype=np.int64)
    out_c = np.empty(ntouched, dtype=np.complex128)
    n = 0
    for r in idx:
        c = acc[r]
        acc[r] = 0.0
        seen[r] = False
        if c != 0.0:
            out_idx[n] = r
            out_c[n] = c
            n += 1
    return out_idx[:n], out_c[:n]


@numba.njit(cache=True)
def _mul_kernel(ia, ca, ib, cb, lo_keys, hi_keys, degree, rank3, base, max_degree,
                acc, seen, touched):
    nt = 0
    for x in range(ia.shape[0]):
        a = ia[x]
        lo_a = lo_keys[a]
        hi_a = hi_keys[a]
        da = degree[a]
        c_a = ca[x]
        for y in range(ib.shape[0]):
            b = ib[y]
            if da + degree[b] > max_degree:
                continue
            r = base[hi_a + hi_keys[b]] + rank3[lo_a + lo_keys[b]]
            if not seen[r]:
                seen[r] = True
                touched[nt] = r
                nt += 1
            acc[r] += c_a * cb[y]
    return nt


@numba.njit(cache=True)
def _bracket_kernel(ia, ca, ib, cb, exps, lo_keys, hi_keys, degree, rank3, base,
                    pair_lo, pair_hi, max_degree, acc, seen, touched):
    nt = 0
    for x in range(ia.shape[0]):
        a = ia[x]
        lo_a = lo_keys[a]
        hi_a = hi_keys[a]
        da = degree[a]
        c_a = ca[x]
        ea = exps[a]
        for y in range(ib.shape[0]):
            b = ib[y]
            if da + degree[b] - 2 > max_degree:
                continue
            eb = exps[b]
            prod = c_a * cb[y]
            lo = lo_a + lo_keys[b]
            hi = hi_a + hi_keys[b]
            for k in range(3):
                q = 2 * k
                wgt = ea[q] * eb[q + 1] - ea[q + 1] * eb[q]
                if wgt != 0:
                    r = base[hi - pair_hi[k]] + rank3[lo - pair_lo[k]]
                    if not seen[r]:
                        seen[r] = True
                        touched[nt] = r
                        nt += 1
                    acc[r] += wgt * prod
    return nt


def multiply(ia, ca, ib, cb, max_degree=MAX_DEGREE):
    s = _SCRATCH
    nt = _mul_kernel(ia, ca, ib, cb, LO_KEYS, HI_KEYS, DEGREE, RANK3, BASE,
                     max_degree, s.acc, s.seen, s.touched)
    return _collect(s.acc, s.seen, s.touched, nt)


def bracket(ia, ca, ib, cb, max_degree=MAX_DEGREE):
    s = _SCRATCH
    nt = _bracket_kernel(ia, ca, ib, cb, EXPS, LO_KEYS, HI_KEYS, DEGREE, RANK3, BASE,
                         PAIR_LO, PAIR_HI, max_degree, s.acc, s.seen, s.touched)
    return _collect(s.acc, s.seen, s.touched, nt)


@numba.njit(cache=True)
def _combine_kernel(idx, coeffs, acc, seen, touched):
    nt = 0
    for x in range(idx.shape[0]):
        r = idx[x]
        if not seen[r]:
            seen[r] = True
            touched[nt] = r
            nt += 1
        acc[r] += coeffs[x]
    return nt


def combine(idx, coeffs):
    """Merge duplicate indices by summation; drops exact zeros, sorts."""
    s = _SCRATCH
    nt = _combine_kernel(idx, coeffs, s.acc, s.seen, s.touched)
    return _collect(s.acc, s.seen, s.touched, nt)
