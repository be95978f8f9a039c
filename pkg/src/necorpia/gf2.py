"""Bit-packed matrices over GF(2) and the block-structured echelon form.

Storage is row-major ``uint64`` words; column ``j`` of a row lives in word
``j // 64`` at bit ``j % 64``. Matrices are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from ._fallback import int_to_words, words_to_int
from .errors import InsufficientRankError, ShapeError


def _nwords(cols: int) -> int:
    return (cols + 63) // 64


class BinaryMatrix:
    """Immutable ``rows x cols`` matrix over GF(2), packed 64 bits per word."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, words: np.ndarray, cols: int):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != _nwords(cols):
            raise ShapeError(f"word array {words.shape} does not hold {cols} columns")
        tail = cols & 63
        if tail and words.shape[0] and np.any(words[:, -1] >> np.uint64(tail)):
            raise ValueError("bits beyond the last column must be zero")
        words.setflags(write=False)
        self.rows = words.shape[0]
        self.cols = cols
        self.words = words

    # -- construction -------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> BinaryMatrix:
        return cls(np.zeros((rows, _nwords(cols)), dtype=np.uint64), cols)

    @classmethod
    def identity(cls, n: int) -> BinaryMatrix:
        return cls.from_row_ints([1 << i for i in range(n)], n)

    @classmethod
    def from_bits(cls, bits) -> BinaryMatrix:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError("expected a 2-D array of bits")
        rows, cols = arr.shape
        nw = _nwords(cols)
        padded = np.zeros((rows, nw * 64), dtype=np.uint8)
        padded[:, :cols] = arr & 1
        packed = np.packbits(padded.reshape(rows, nw * 8, 8), axis=2, bitorder="little")
        return cls(packed.reshape(rows, nw * 8).view("<u8").astype(np.uint64), cols)

    @classmethod
    def from_row_ints(cls, row_ints: Iterable[int], cols: int) -> BinaryMatrix:
        nw = _nwords(cols)
        rows = list(row_ints)
        words = np.zeros((len(rows), nw), dtype=np.uint64)
        limit = 1 << cols
        for i, r in enumerate(rows):
            if r < 0 or r >= limit:
                raise ShapeError(f"row {i} has bits beyond column {cols}")
            if nw:
                words[i] = int_to_words(r, nw)
        return cls(words, cols)

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> BinaryMatrix:
        return cls.from_bits(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    # -- views --------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_bits(self) -> np.ndarray:
        if self.rows == 0 or self.cols == 0:
            return np.zeros((self.rows, self.cols), dtype=np.uint8)
        raw = self.words.astype("<u8").view(np.uint8).reshape(self.rows, -1)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, : self.cols]

    def row_int(self, i: int) -> int:
        return words_to_int(self.words[i])

    def row_ints(self) -> list[int]:
        return [words_to_int(w) for w in self.words]

    def column_slice(self, lo: int, hi: int) -> BinaryMatrix:
        mask = (1 << (hi - lo)) - 1
        return BinaryMatrix.from_row_ints(((r >> lo) & mask for r in self.row_ints()), hi - lo)

    def row_slice(self, lo: int, hi: int) -> BinaryMatrix:
        return BinaryMatrix(self.words[lo:hi].copy(), self.cols)

    def take_rows(self, indices: Sequence[int]) -> BinaryMatrix:
        return BinaryMatrix(self.words[list(indices)].copy(), self.cols)

    def transpose(self) -> BinaryMatrix:
        return BinaryMatrix.from_bits(self.to_bits().T)

    def dump(self) -> str:
        """ASCII 0/1 grid, one row per line."""
        return "\n".join("".join("1" if b else "0" for b in row) for row in self.to_bits())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.rows}x{self.cols})"


def vstack(mats: Sequence[BinaryMatrix]) -> BinaryMatrix:
    cols = {m.cols for m in mats}
    if len(cols) != 1:
        raise ShapeError("vstack needs equal column counts")
    return BinaryMatrix(np.vstack([m.words for m in mats]), cols.pop())


def hstack(mats: Sequence[BinaryMatrix]) -> BinaryMatrix:
    rows = {m.rows for m in mats}
    if len(rows) != 1:
        raise ShapeError("hstack needs equal row counts")
    n = rows.pop()
    out = [0] * n
    shift = 0
    for m in mats:
        for i, r in enumerate(m.row_ints()):
            out[i] |= r << shift
        shift += m.cols
    return BinaryMatrix.from_row_ints(out, shift)


def mat_mul(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if a.rows == 0 or b.cols == 0:
        return BinaryMatrix.zeros(a.rows, b.cols)
    return BinaryMatrix(_backend.matmul(a.words, a.cols, b.words), b.cols)


def rref(m: BinaryMatrix, piv_lo: int = 0, piv_hi: int | None = None):
    """Reduced row echelon form; returns ``(matrix, pivot_columns, bit_ops)``.

    Pivots are chosen left to right, first candidate row from the top. Only
    columns in ``[piv_lo, piv_hi)`` may hold pivots; row operations still act
    on the full width. Pivot rows come first, in pivot order.
    """
    hi = m.cols if piv_hi is None else piv_hi
    work = np.array(m.words, dtype=np.uint64, copy=True)
    if m.rows == 0 or m.cols == 0:
        return BinaryMatrix(work, m.cols), [], 0
    pivots, ops = _backend.rref(work, m.cols, piv_lo, hi)
    return BinaryMatrix(work, m.cols), list(pivots), int(ops)


def rank(m: BinaryMatrix) -> int:
    return len(rref(m)[1])


def select_full_rank_rows(yprime: BinaryMatrix, g: int) -> BinaryMatrix:
    """First ``g`` rows (scanning from the top) that are linearly independent."""
    basis: dict[int, int] = {}  # lowest set bit -> reduced row
    chosen: list[int] = []
    for i, row in enumerate(yprime.row_ints()):
        if len(chosen) == g:
            break
        r = row
        while r:
            low = r & -r
            if low not in basis:
                basis[low] = r
                chosen.append(i)
                break
            r ^= basis[low]
    if len(chosen) < g:
        raise InsufficientRankError(f"rank {len(chosen)} < {g}")
    return yprime.take_rows(chosen)


@dataclass(frozen=True)
class EchelonDecomposition:
    """Block view of the reduced echelon form ``T . Y``.

    Column groups are the header blocks ``0..n_v-1`` followed by the payload
    group. Row block ``i`` holds the rows whose pivot falls in group ``i``.
    Indices are zero-based: ``ranks[i]`` is the rank of diagonal block ``i``
    and ``ranks[-1]`` the rank of the trailing payload block.
    """

    widths: tuple[int, ...]
    reduced: BinaryMatrix
    ranks: tuple[int, ...]
    pivot_cols: tuple[tuple[int, ...], ...]
    transform: BinaryMatrix | None = None
    rref_ops: int = 0
    _offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        offs = [0]
        for w in self.widths:
            offs.append(offs[-1] + w)
        object.__setattr__(self, "_offsets", tuple(offs))

    @property
    def n_v(self) -> int:
        return len(self.widths) - 1

    @property
    def rank(self) -> int:
        return sum(self.ranks)

    def col_range(self, group: int) -> tuple[int, int]:
        return self._offsets[group], self._offsets[group + 1]

    def row_range(self, block: int) -> tuple[int, int]:
        lo = sum(self.ranks[:block])
        return lo, lo + self.ranks[block]

    def block(self, i: int, j: int) -> BinaryMatrix:
        r0, r1 = self.row_range(i)
        c0, c1 = self.col_range(j)
        return self.reduced.row_slice(r0, r1).column_slice(c0, c1)

    def B(self, i: int, j: int) -> BinaryMatrix:
        """Header block in row block ``i`` and column group ``j`` (``i <= j < n_v``)."""
        return self.block(i, j)

    def C(self, i: int) -> BinaryMatrix:
        """Payload part of row block ``i`` (``0 <= i <= n_v``)."""
        return self.block(i, self.n_v)

    @property
    def blocks_B(self) -> dict[tuple[int, int], BinaryMatrix]:
        return {(i, j): self.B(i, j) for j in range(self.n_v) for i in range(j + 1)}

    @property
    def blocks_C(self) -> list[BinaryMatrix]:
        return [self.C(i) for i in range(self.n_v + 1)]


def block_rref(y: BinaryMatrix, widths: Sequence[int], payload_width: int | None = None,
               with_transform: bool = False) -> EchelonDecomposition:
    """Block-structured RREF of ``y`` with header widths and a trailing payload group.

    ``widths`` lists the header block widths; ``payload_width`` defaults to
    the remaining columns. Zero rows are dropped, so the result has
    ``rank(y)`` rows.
    """
    widths = list(widths)
    if payload_width is None:
        payload_width = y.cols - sum(widths)
    groups = tuple(widths + [payload_width])
    if payload_width < 0 or sum(groups) != y.cols:
        raise ShapeError(f"widths {groups} do not sum to {y.cols} columns")

    if with_transform:
        aug = hstack([y, BinaryMatrix.identity(y.rows)])
        red, pivots, ops = rref(aug, 0, y.cols)
        transform = red.column_slice(y.cols, y.cols + y.rows)
        red = red.column_slice(0, y.cols)
    else:
        red, pivots, ops = rref(y)
        transform = None
    red = red.row_slice(0, len(pivots))

    bounds = np.cumsum([0] + list(groups))
    ranks, piv = [], []
    for g in range(len(groups)):
        inside = [p - int(bounds[g]) for p in pivots if bounds[g] <= p < bounds[g + 1]]
        ranks.append(len(inside))
        piv.append(tuple(inside))
    return EchelonDecomposition(groups, red, tuple(ranks), tuple(piv), transform, ops)
