"""Recover source packets from ``Y = A X`` without knowing ``A``.

Three routes:

* ``try_gaussian`` -- some header block of ``Y`` has full rank ``g``; plain
  elimination on that block yields the packets.
* ``derpia`` -- depth-first branch-and-prune search over unmixing vectors
  ``w = (w_1, ..., w_nv, w_nv+1)`` applied to the block echelon form. Per
  level, candidates for ``w_l`` are found either by scanning the rows of the
  diagonal block (``"sle"``) or through precomputed look-up tables
  (``"lut"``). Both variants visit the same tree.
* ``brute_force_decode`` -- enumerate every nonzero combination of the rows
  of ``Y``; exponential, used as an independent oracle.

Operation counts follow the symbol-operation model of the cost formulas:
an XOR or comparison of two length-``n`` vectors counts ``n``, and hashing
``n`` payload symbols counts ``K_c * n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .errors import EnumerationLimitError, InsufficientRankError, NotASourcePacketError
from .gf2 import BinaryMatrix, EchelonDecomposition, block_rref, hstack, rref
from .packet import HASH_KEY, HeaderConfig, SourcePacket, Sts, parse_int, tail_is_consistent

HASH_COST = 3  # K_c: symbol operations per hashed payload symbol
BRUTE_FORCE_LIMIT = 16

SLE = "sle"
LUT = "lut"


@dataclass(frozen=True)
class UnmixingVector:
    """``w = (w_1, ..., w_nv+1)``; each part is a 0/1 tuple of length ``rho_l``."""

    parts: tuple[tuple[int, ...], ...]

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(b for part in self.parts for b in part)

    def __len__(self) -> int:
        return sum(len(p) for p in self.parts)


@dataclass
class DecodeStats:
    branches_per_level: tuple[int, ...] = ()
    terminal_candidates: int = 0
    gf2_ops: int = 0
    rref_ops: int = 0
    used_fast_path: bool = False
    ranks: tuple[int, ...] = ()


@dataclass
class DecodeResult:
    recovered: list[SourcePacket]
    unmixing_vectors: list[UnmixingVector]
    stats: DecodeStats = field(default_factory=DecodeStats)

    def recovered_set(self) -> frozenset[SourcePacket]:
        return frozenset(self.recovered)


def _unit(k: int, n: int) -> tuple[int, ...]:
    return tuple(1 if i == k else 0 for i in range(n))


def _int_to_tuple(v: int, n: int) -> tuple[int, ...]:
    return tuple((v >> i) & 1 for i in range(n))


def _tuple_to_int(bits: Sequence[int]) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b)


def _pick_of(part: Sequence[int]) -> int:
    ones = [i for i, b in enumerate(part) if b]
    if len(ones) > 1:
        raise ValueError("header-level unmixing parts have at most one nonzero entry")
    return ones[0] if ones else -1


class _Level:
    """Blocks of one header level, as Python ints (bit ``j`` = column ``j`` of the block)."""

    def __init__(self, decomp: EchelonDecomposition, level: int):
        self.level = level
        self.width = decomp.widths[level]
        self.rank = decomp.ranks[level]
        self.rows = decomp.B(level, level).row_ints()
        self.pivots = list(decomp.pivot_cols[level])
        # upper[i][k]: row k of B_{i,level}
        self.upper = [decomp.B(i, level).row_ints() for i in range(level)]

    def target(self, picks: Sequence[int], ops: list[int]) -> int:
        """``v = -(w_1 B_1l + ... + w_{l-1} B_{l-1,l})``; the sign is void over GF(2)."""
        v = 0
        for i, k in enumerate(picks):
            if k >= 0:
                v ^= self.upper[i][k]
                ops[0] += self.width
        return v

    def solve_sle(self, v: int, ops: list[int]) -> list[tuple[int, int]]:
        """All ``(k, j)``: ``w_l = e_k`` (or 0 when ``k == -1``) and ``e_j`` solving the level."""
        width, rows = self.width, self.rows
        out = []
        first = self.level == 0
        if not first:
            ops[0] += width  # is w_l = 0 admissible?
            if v and not v & (v - 1):
                out.append((-1, v.bit_length() - 1))
        for j in range(width):
            t = v ^ (1 << j)
            if not first:
                ops[0] += 1
            if t == 0:
                continue
            for k, row in enumerate(rows):
                ops[0] += width
                if row == t:
                    out.append((k, j))
                    break
        out.sort(key=lambda kj: kj[0])
        return out


@dataclass(frozen=True)
class LevelTable:
    pivots: tuple[int, ...]
    # de-pivoted row -> row indices k whose candidate is e_k, in row order
    candidates: dict[int, tuple[int, ...]]
    width: int
    rank: int

    @property
    def projections(self) -> set[tuple[int, ...]]:
        return {_int_to_tuple(v, self.width) for v in self.candidates}

    def candidate_set(self, projection: Sequence[int]) -> set[tuple[int, ...]]:
        ks = self.candidates.get(_tuple_to_int(projection), ())
        return {_unit(k, self.rank) for k in ks}


@dataclass(frozen=True)
class LookupTables:
    levels: tuple[LevelTable, ...]
    build_ops: int = 0


def _build_level_table(lv: _Level, ops: list[int]) -> LevelTable:
    width = lv.width
    projections: list[int] = []
    gammas = []
    for u in lv.rows:
        gamma = (u & -u).bit_length() - 1
        ops[0] += width + 1  # locate pivot, clear it
        gammas.append(gamma)
        ubar = u ^ (1 << gamma)
        for seen in projections:
            ops[0] += width
            if seen == ubar:
                break
        else:
            projections.append(ubar)
    groups: dict[int, list[int]] = {p: [] for p in projections}
    for k, u in enumerate(lv.rows):
        ubar = u ^ (1 << gammas[k])
        ops[0] += width + 1
        for p in projections:
            ops[0] += width
            if p == ubar:
                groups[p].append(k)
                break
    return LevelTable(tuple(gammas), {p: tuple(ks) for p, ks in groups.items()}, width, lv.rank)


def _solve_lut(lv: _Level, table: LevelTable, v: int, ops: list[int]) -> list[tuple[int, int]]:
    out = []
    if lv.level > 0:
        ops[0] += lv.width
        if v and not v & (v - 1):
            out.append((-1, v.bit_length() - 1))
    ops[0] += 2 * lv.width  # hash + compare for the table probe
    for k in table.candidates.get(v, ()):
        out.append((k, table.pivots[k]))
    return out


class _Context:
    def __init__(self, decomp: EchelonDecomposition, cfg: HeaderConfig):
        self.decomp = decomp
        self.cfg = cfg
        self.n_v = decomp.n_v
        self.levels = [_Level(decomp, lvl) for lvl in range(self.n_v)]
        self.full_rows = decomp.reduced.row_ints()
        self.c_rows = [decomp.C(i).row_ints() for i in range(self.n_v + 1)]
        self.offsets = [decomp.row_range(i)[0] for i in range(self.n_v + 1)]
        self.tail_len = decomp.widths[-1]
        self.c_last = decomp.C(self.n_v)

    def unmixing(self, picks: Sequence[int], mask: int) -> UnmixingVector:
        parts = [tuple(_unit(k, self.decomp.ranks[i])) for i, k in enumerate(picks)]
        parts.append(_int_to_tuple(mask, self.decomp.ranks[-1]))
        return UnmixingVector(tuple(parts))

    def value(self, picks: Sequence[int], mask: int) -> int:
        v = 0
        for i, k in enumerate(picks):
            if k >= 0:
                v ^= self.full_rows[self.offsets[i] + k]
        base = self.offsets[self.n_v]
        while mask:
            low = mask & -mask
            v ^= self.full_rows[base + low.bit_length() - 1]
            mask ^= low
        return v

    def terminal(self, picks: Sequence[int], ops: list[int]) -> tuple[list[int], int]:
        """Hash-consistent masks for ``w_nv+1``, and the number of candidates examined."""
        lp = self.tail_len
        base = 0
        for i, k in enumerate(picks):
            if k >= 0:
                base ^= self.c_rows[i][k]
                ops[0] += lp
        rho = self.decomp.ranks[-1]
        n_cand = 1 << rho
        per_candidate = HASH_COST * self.cfg.payload_len + self.cfg.hash_len
        ops[0] += n_cand * per_candidate + (n_cand - 1) * lp
        if lp == 0:
            return list(range(n_cand)), n_cand
        nw = (lp + 63) // 64
        base_words = np.frombuffer(base.to_bytes(8 * nw, "little"), dtype="<u8").astype(np.uint64)
        crows = self.c_last.column_slice(0, lp).words if rho else np.zeros((0, nw), np.uint64)
        hits = _backend.terminal_scan(base_words, np.ascontiguousarray(crows), self.cfg.payload_len,
                                      self.cfg.hash_len, HASH_KEY)
        return list(hits), n_cand


def _check_decomp(decomp: EchelonDecomposition, cfg: HeaderConfig) -> None:
    if tuple(decomp.widths[:-1]) != cfg.lengths or decomp.widths[-1] != cfg.tail_len:
        raise ValueError("decomposition widths do not match the header config")


def try_gaussian(decomp: EchelonDecomposition, cfg: HeaderConfig, sts: Sts = Sts()) -> DecodeResult | None:
    """Decode by elimination when some header block alone has rank ``g``."""
    _check_decomp(decomp, cfg)
    g = decomp.reduced.rows
    for level in range(cfg.n_v):
        lo, hi = decomp.col_range(level)
        aug = hstack([decomp.reduced, BinaryMatrix.identity(g)])
        red, pivots, ops = rref(aug, lo, hi)
        if len(pivots) < g:
            continue
        total = decomp.reduced.cols
        rows = red.column_slice(0, total).row_ints()
        transform = red.column_slice(total, total + g).row_ints()
        packets, vectors = [], []
        for value, w in zip(rows, transform):
            try:
                pkt = parse_int(value, cfg, sts)
            except NotASourcePacketError:
                break
            if not tail_is_consistent(value >> cfg.header_len, cfg):
                break
            packets.append(pkt)
            vectors.append(UnmixingVector((_int_to_tuple(w, g),)))
        else:
            stats = DecodeStats((0,) * (cfg.n_v + 1), g, ops, decomp.rref_ops, True, decomp.ranks)
            return DecodeResult(packets, vectors, stats)
    return None


def _prefix_picks(prefix: Sequence[Sequence[int]]) -> list[int]:
    return [_pick_of(p) for p in prefix]


def solve_level_sle(prefix: Sequence[Sequence[int]], decomp: EchelonDecomposition,
                    level: int) -> set[tuple[tuple[int, ...], int]]:
    """Candidates ``(w_l, j_l)`` at zero-based ``level`` given ``w_1..w_{l}`` in ``prefix``.

    ``j_l`` is 1-based. An empty set means the branch is pruned.
    """
    lv = _Level(decomp, level)
    ops = [0]
    v = lv.target(_prefix_picks(prefix), ops)
    return {(_unit(k, lv.rank), j + 1) for k, j in lv.solve_sle(v, ops)}


def build_tables(decomp: EchelonDecomposition) -> LookupTables:
    ops = [0]
    levels = tuple(_build_level_table(_Level(decomp, lvl), ops) for lvl in range(decomp.n_v))
    return LookupTables(levels, ops[0])


def solve_level_lut(prefix: Sequence[Sequence[int]], decomp: EchelonDecomposition,
                    tables: LookupTables, level: int) -> set[tuple[tuple[int, ...], int]]:
    lv = _Level(decomp, level)
    ops = [0]
    v = lv.target(_prefix_picks(prefix), ops)
    return {(_unit(k, lv.rank), j + 1) for k, j in _solve_lut(lv, tables.levels[level], v, ops)}


def expand_terminal(prefix: Sequence[Sequence[int]], decomp: EchelonDecomposition,
                    cfg: HeaderConfig) -> set[UnmixingVector]:
    """Complete a header-consistent prefix with every hash-consistent ``w_nv+1``."""
    ctx = _Context(decomp, cfg)
    picks = _prefix_picks(prefix)
    hits, _ = ctx.terminal(picks, [0])
    return {ctx.unmixing(picks, m) for m in hits}


def derpia(y: BinaryMatrix, cfg: HeaderConfig, variant: str = LUT, sts: Sts = Sts(),
           allow_fast_path: bool = True) -> DecodeResult:
    """Decode a full-rank ``Y``; returns every hash-consistent unmixing result.

    The true packets are always among ``recovered``; any extra entries are
    phantoms that passed the hash check.
    """
    if variant not in (SLE, LUT):
        raise ValueError(f"unknown variant {variant!r}")
    if y.cols != cfg.total_len:
        raise ValueError(f"Y has {y.cols} columns, config expects {cfg.total_len}")
    decomp = block_rref(y, cfg.lengths)
    if decomp.rank != y.rows:
        raise InsufficientRankError(f"rank {decomp.rank} < {y.rows} rows")
    return decode_decomposition(decomp, cfg, variant, sts, allow_fast_path)


def decode_decomposition(decomp: EchelonDecomposition, cfg: HeaderConfig, variant: str = LUT,
                         sts: Sts = Sts(), allow_fast_path: bool = True) -> DecodeResult:
    _check_decomp(decomp, cfg)
    if allow_fast_path:
        fast = try_gaussian(decomp, cfg, sts)
        if fast is not None:
            return fast

    ctx = _Context(decomp, cfg)
    n_v = ctx.n_v
    ops = [0]
    tables = None
    if variant == LUT:
        tables = tuple(_build_level_table(lv, ops) for lv in ctx.levels)
    branches = [0] * (n_v + 1)
    recovered: list[SourcePacket] = []
    vectors: list[UnmixingVector] = []

    def visit(picks: list[int]) -> None:
        level = len(picks)
        if level == n_v:
            hits, examined = ctx.terminal(picks, ops)
            branches[n_v] += examined
            for mask in hits:
                recovered.append(parse_int(ctx.value(picks, mask), cfg, sts))
                vectors.append(ctx.unmixing(picks, mask))
            return
        lv = ctx.levels[level]
        v = lv.target(picks, ops)
        if tables is None:
            options = lv.solve_sle(v, ops)
        else:
            options = _solve_lut(lv, tables[level], v, ops)
        branches[level] += len(options)
        for k, _ in options:
            picks.append(k)
            visit(picks)
            picks.pop()

    visit([])
    stats = DecodeStats(tuple(branches), len(recovered), ops[0], decomp.rref_ops, False, decomp.ranks)
    return DecodeResult(recovered, vectors, stats)


def brute_force_decode(y: BinaryMatrix, cfg: HeaderConfig, sts: Sts = Sts()) -> DecodeResult:
    """Every nonzero combination of the rows of ``Y`` whose image is a valid source packet."""
    g = y.rows
    if g > BRUTE_FORCE_LIMIT:
        raise EnumerationLimitError(f"g = {g} exceeds the enumeration bound {BRUTE_FORCE_LIMIT}")
    rows = y.row_ints()
    offs = cfg.offsets
    blocks = [((1 << length) - 1, off) for length, off in zip(cfg.lengths, offs)]
    recovered, vectors = [], []
    value = 0
    mask = 0
    for t in range(1, 1 << g):
        flip = (t & -t).bit_length() - 1
        mask ^= 1 << flip
        value ^= rows[flip]
        for bmask, off in blocks:
            b = (value >> off) & bmask
            if b == 0 or b & (b - 1):
                break
        else:
            if tail_is_consistent(value >> cfg.header_len, cfg):
                recovered.append(parse_int(value, cfg, sts))
                vectors.append(UnmixingVector((_int_to_tuple(mask, g),)))
    return DecodeResult(recovered, vectors, DecodeStats(terminal_candidates=len(recovered)))
