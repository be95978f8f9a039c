# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled GF(2) kernels.

Every function here has a twin in :mod:`necorpia._fallback` with the same
signature and bit-identical results.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9ULL
    z ^= z >> 27
    z *= 0x94D049BB133111EBULL
    z ^= z >> 31
    return z


cdef inline uint64_t _get_bits(const uint64_t* words, Py_ssize_t nwords,
                               Py_ssize_t start, Py_ssize_t n) nogil:
    # n <= 64 bits starting at bit `start`
    cdef Py_ssize_t w = start >> 6
    cdef int off = start & 63
    cdef uint64_t lo = 0, hi = 0
    if w < nwords:
        lo = words[w] >> off
    if off and w + 1 < nwords:
        hi = words[w + 1] << (64 - off)
    lo |= hi
    if n < 64:
        lo &= (1ULL << n) - 1
    return lo


cdef inline uint64_t _hash_state(const uint64_t* words, Py_ssize_t nbits,
                                 uint64_t key) nogil:
    cdef Py_ssize_t nfull = nbits >> 6
    cdef int tail = nbits & 63
    cdef Py_ssize_t i
    cdef uint64_t state = key
    for i in range(nfull):
        state = _mix(state ^ words[i])
    if tail:
        state = _mix(state ^ (words[nfull] & ((1ULL << tail) - 1)))
    return _mix(state ^ <uint64_t>nbits)


cdef inline bint _hash_matches(const uint64_t* vec, Py_ssize_t nwords,
                               Py_ssize_t pi_bits, Py_ssize_t h_bits,
                               uint64_t key) nogil:
    cdef uint64_t state = _hash_state(vec, pi_bits, key)
    cdef Py_ssize_t b = 0, n
    cdef uint64_t block
    while b * 64 < h_bits:
        n = h_bits - b * 64
        if n > 64:
            n = 64
        block = _mix(state + <uint64_t>(b + 1) * GOLDEN)
        if n < 64:
            block &= (1ULL << n) - 1
        if block != _get_bits(vec, nwords, pi_bits + b * 64, n):
            return False
        b += 1
    return True


def hash_words(const uint64_t[::1] words, Py_ssize_t nbits, Py_ssize_t out_bits,
               uint64_t key):
    """Hash the first ``nbits`` bits of ``words`` into ``out_bits`` bits."""
    cdef Py_ssize_t nout = (out_bits + 63) >> 6
    out = np.zeros(nout, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t state
    cdef Py_ssize_t b
    if nbits > 0:
        state = _hash_state(&words[0], nbits, key)
    else:
        state = _mix(key)
    for b in range(nout):
        o[b] = _mix(state + <uint64_t>(b + 1) * GOLDEN)
    if out_bits & 63:
        o[nout - 1] &= (1ULL << (out_bits & 63)) - 1
    return out


def rref(uint64_t[:, ::1] m, Py_ssize_t ncols, Py_ssize_t piv_lo, Py_ssize_t piv_hi):
    """In-place reduced row echelon form with pivots restricted to ``[piv_lo, piv_hi)``.

    Returns ``(pivot_columns, bit_ops)``; pivot rows end up first, in pivot order.
    """
    cdef Py_ssize_t nrows = m.shape[0], nw = m.shape[1]
    cdef Py_ssize_t row = 0, col, r, k, found
    cdef uint64_t bit, tmp
    cdef long long ops = 0
    pivots = []
    for col in range(piv_lo, piv_hi):
        if row >= nrows:
            break
        k = col >> 6
        bit = 1ULL << (col & 63)
        found = -1
        for r in range(row, nrows):
            if m[r, k] & bit:
                found = r
                break
        if found < 0:
            continue
        if found != row:
            for k in range(nw):
                tmp = m[row, k]
                m[row, k] = m[found, k]
                m[found, k] = tmp
            k = col >> 6
        for r in range(nrows):
            if r != row and (m[r, k] & bit):
                for found in range(nw):
                    m[r, found] ^= m[row, found]
                ops += ncols
        pivots.append(col)
        row += 1
    return pivots, ops


def matmul(const uint64_t[:, ::1] a, Py_ssize_t a_cols, const uint64_t[:, ::1] b):
    """GF(2) product of packed matrices; ``a`` is ``m x a_cols``, ``b`` has ``a_cols`` rows."""
    cdef Py_ssize_t m = a.shape[0], nwb = b.shape[1]
    out = np.zeros((m, nwb), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    for i in range(m):
        for j in range(a_cols):
            if (a[i, j >> 6] >> (j & 63)) & 1:
                for t in range(nwb):
                    o[i, t] ^= b[j, t]
    return out


def terminal_scan(const uint64_t[::1] base, const uint64_t[:, ::1] crows,
                  Py_ssize_t pi_bits, Py_ssize_t h_bits, uint64_t key):
    """Enumerate ``base + sum(mask_i * crows[i])`` in Gray-code order.

    Returns the masks (bit i set = row i used) whose payload/hash split is
    hash-consistent.
    """
    cdef Py_ssize_t rho = crows.shape[0], nw = base.shape[0]
    cdef Py_ssize_t t, flip, k
    cdef unsigned long long total = 1ULL << rho, mask = 0, gray
    cur_arr = np.array(base, dtype=np.uint64, copy=True)
    cdef uint64_t[::1] cur = cur_arr
    hits = []
    if nw == 0:
        # empty payload and hash: every candidate is consistent
        return list(range(total))
    if _hash_matches(&cur[0], nw, pi_bits, h_bits, key):
        hits.append(0)
    for t in range(1, total):
        flip = 0
        gray = t
        while not (gray & 1):
            gray >>= 1
            flip += 1
        mask ^= 1ULL << flip
        for k in range(nw):
            cur[k] ^= crows[flip, k]
        if _hash_matches(&cur[0], nw, pi_bits, h_bits, key):
            hits.append(mask)
    return hits
