"""Seeded Monte Carlo experiments feeding the empirical side of the analytics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytics import RankProfile, branch_bound
from .decoder import derpia
from .encoder import as_rng, make_generation, receive
from .gf2 import BinaryMatrix, block_rref
from .packet import HeaderConfig, _hash_of_int


def header_profile(indices: np.ndarray, lengths: Sequence[int]) -> RankProfile:
    """Rank profile of ``g`` sources with 1-based header ``indices`` (shape ``g x n_v``).

    The block echelon ranks depend only on the row space, so they equal those
    of ``X`` itself; when ``X`` has full rank the payload rank is ``g`` minus
    the header rank.
    """
    g = indices.shape[0]
    offs = np.cumsum([0, *lengths[:-1]])
    rows = [sum(1 << int(off + j - 1) for off, j in zip(offs, row)) for row in indices]
    decomp = block_rref(BinaryMatrix.from_row_ints(rows, sum(lengths)), lengths, 0)
    header = decomp.ranks[:-1]
    return RankProfile((*header, g - sum(header)), g)


def sample_rank_profiles(g: int, lengths: Sequence[int], trials: int, seed) -> list[RankProfile]:
    rng = as_rng(seed)
    out = []
    for _ in range(trials):
        idx = np.column_stack([rng.integers(1, L + 1, g) for L in lengths])
        out.append(header_profile(idx, lengths))
    return out


def sample_rho1(g: int, L: int, trials: int, seed) -> np.ndarray:
    """Occupied-box counts; ``rho_1`` equals the number of distinct first-block indices."""
    rng = as_rng(seed)
    draws = rng.integers(0, L, size=(trials, g))
    draws.sort(axis=1)
    return 1 + np.count_nonzero(np.diff(draws, axis=1), axis=1)


@dataclass(frozen=True)
class DecodeTrial:
    profile: RankProfile
    branches_per_level: tuple[int, ...]
    n_w: int
    gf2_ops: int
    true_recovered: bool
    bound_levels: tuple[int, ...]
    bound_terminal: int


def decode_trials(cfg: HeaderConfig, g: int, trials: int, seed, variant: str = "lut",
                  allow_fast_path: bool = False) -> list[DecodeTrial]:
    """Encode, mix and decode ``trials`` generations; one child seed per trial."""
    seeds = np.random.SeedSequence(seed).spawn(trials)
    out = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        gen = make_generation(cfg, g, rng)
        y = receive(gen, rng)
        res = derpia(y, cfg, variant, allow_fast_path=allow_fast_path)
        prof = RankProfile(res.stats.ranks, g)
        levels, terminal, _ = branch_bound(prof)
        out.append(DecodeTrial(prof, res.stats.branches_per_level, res.stats.terminal_candidates,
                               res.stats.gf2_ops, set(gen.sources) <= res.recovered_set(),
                               levels, terminal))
    return out


def phantom_acceptance(n: int, payload_len: int, hash_len: int, seed) -> int:
    """How many of ``n`` uniformly random (payload, hash) tails pass the hash check."""
    rng = as_rng(seed)
    tail_len = payload_len + hash_len
    nbytes = (tail_len + 7) // 8
    mask = (1 << tail_len) - 1
    pmask = (1 << payload_len) - 1
    hits = 0
    raw = rng.integers(0, 256, size=(n, nbytes), dtype=np.uint8)
    for row in raw:
        t = int.from_bytes(row.tobytes(), "little") & mask
        if _hash_of_int(t & pmask, payload_len, hash_len) == t >> payload_len:
            hits += 1
    return hits
