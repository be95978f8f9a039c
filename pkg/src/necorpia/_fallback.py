"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built or when ``NECORPIA_PURE_PYTHON=1``.
Results are bit-identical to the compiled versions.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def hash_state_int(value: int, nbits: int, key: int) -> int:
    """Absorb the low ``nbits`` bits of ``value`` (little-endian words)."""
    state = key
    nfull, tail = divmod(nbits, 64)
    for i in range(nfull):
        state = _mix(state ^ ((value >> (64 * i)) & MASK64))
    if tail:
        state = _mix(state ^ ((value >> (64 * nfull)) & ((1 << tail) - 1)))
    return _mix(state ^ nbits)


def squeeze_int(state: int, out_bits: int) -> int:
    out = 0
    for b in range((out_bits + 63) // 64):
        out |= _mix((state + (b + 1) * GOLDEN) & MASK64) << (64 * b)
    return out & ((1 << out_bits) - 1)


def hash_int(value: int, nbits: int, out_bits: int, key: int) -> int:
    return squeeze_int(hash_state_int(value, nbits, key), out_bits)


def words_to_int(words: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(words, dtype="<u8").tobytes(), "little")


def int_to_words(value: int, nwords: int) -> np.ndarray:
    return np.frombuffer(value.to_bytes(8 * nwords, "little"), dtype="<u8").astype(np.uint64)


def hash_words(words, nbits: int, out_bits: int, key: int) -> np.ndarray:
    value = words_to_int(np.asarray(words)) if nbits else 0
    return int_to_words(hash_int(value, nbits, out_bits, key), (out_bits + 63) // 64)


def rref(m: np.ndarray, ncols: int, piv_lo: int, piv_hi: int):
    nrows = m.shape[0]
    row = 0
    ops = 0
    pivots = []
    for col in range(piv_lo, piv_hi):
        if row >= nrows:
            break
        k, bit = col >> 6, np.uint64(1 << (col & 63))
        hits = np.nonzero(m[row:, k] & bit)[0]
        if hits.size == 0:
            continue
        found = row + int(hits[0])
        if found != row:
            m[[row, found]] = m[[found, row]]
        others = np.nonzero(m[:, k] & bit)[0]
        others = others[others != row]
        if others.size:
            m[others] ^= m[row]
            ops += int(others.size) * ncols
        pivots.append(col)
        row += 1
    return pivots, ops


def matmul(a: np.ndarray, a_cols: int, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint64)
    for j in range(a_cols):
        sel = np.nonzero((a[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))[0]
        if sel.size:
            out[sel] ^= b[j]
    return out


def terminal_scan(base, crows, pi_bits: int, h_bits: int, key: int) -> list[int]:
    rho = crows.shape[0]
    if base.shape[0] == 0:
        return list(range(1 << rho))
    cur = words_to_int(base)
    rows = [words_to_int(r) for r in crows]
    pi_mask = (1 << pi_bits) - 1
    hits = []

    def ok(v: int) -> bool:
        return hash_int(v & pi_mask, pi_bits, h_bits, key) == (v >> pi_bits) & ((1 << h_bits) - 1)

    if ok(cur):
        hits.append(0)
    mask = 0
    for t in range(1, 1 << rho):
        flip = (t & -t).bit_length() - 1
        mask ^= 1 << flip
        cur ^= rows[flip]
        if ok(cur):
            hits.append(mask)
    return hits
