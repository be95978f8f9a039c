"""Source-side index assignment and relay-side mixing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError
from .gf2 import BinaryMatrix, mat_mul, rank
from .packet import HeaderConfig, SourcePacket, Sts, flatten_int


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_source(cfg: HeaderConfig, sts: Sts, payload, rng_seed) -> SourcePacket:
    """Source packet with each header index drawn uniformly from ``1..L_l``."""
    rng = as_rng(rng_seed)
    indices = tuple(int(rng.integers(1, length + 1)) for length in cfg.lengths)
    return SourcePacket.build(cfg, indices, payload, sts)


def mix(packets: Sequence, coeffs) -> np.ndarray:
    """GF(2) linear combination ``sum_i coeffs[i] * packets[i]``."""
    coeffs = np.asarray(coeffs, dtype=np.uint8).reshape(-1)
    if len(packets) != coeffs.size:
        raise ShapeError(f"{coeffs.size} coefficients for {len(packets)} packets")
    if not len(packets):
        raise ShapeError("nothing to mix")
    stack = np.asarray(packets, dtype=np.uint8)
    if stack.ndim != 2:
        raise ShapeError("packets must all have the same length")
    return np.bitwise_xor.reduce(stack[coeffs.astype(bool)], axis=0) if coeffs.any() \
        else np.zeros(stack.shape[1], dtype=np.uint8)


def sample_full_rank_matrix(g: int, rng_seed) -> tuple[BinaryMatrix, int]:
    """Uniform invertible ``g x g`` matrix by rejection; also returns the attempt count."""
    if g < 1:
        raise ValueError("g must be >= 1")
    rng = as_rng(rng_seed)
    attempts = 0
    while True:
        attempts += 1
        m = BinaryMatrix.random(g, g, rng)
        if rank(m) == g:
            return m, attempts


def random_full_rank_matrix(g: int, rng_seed) -> BinaryMatrix:
    return sample_full_rank_matrix(g, rng_seed)[0]


@dataclass(frozen=True)
class Generation:
    cfg: HeaderConfig
    sts: Sts
    sources: tuple[SourcePacket, ...]

    @property
    def g(self) -> int:
        return len(self.sources)

    def matrix(self) -> BinaryMatrix:
        """``X``: one flattened source packet per row."""
        return BinaryMatrix.from_row_ints((flatten_int(p, self.cfg) for p in self.sources),
                                          self.cfg.total_len)


def make_generation(cfg: HeaderConfig, g: int, rng_seed, sts: Sts = Sts()) -> Generation:
    """``g`` sources with random payloads; payloads are redrawn until ``X`` has rank ``g``."""
    rng = as_rng(rng_seed)
    while True:
        sources = tuple(
            random_source(cfg, sts, rng.integers(0, 2, cfg.payload_len, dtype=np.uint8), rng)
            for _ in range(g)
        )
        gen = Generation(cfg, sts, sources)
        if rank(gen.matrix()) == g:
            return gen


def receive(gen: Generation, rng_seed) -> BinaryMatrix:
    """``Y = A X`` for a uniformly drawn invertible coding matrix ``A``."""
    a = random_full_rank_matrix(gen.g, as_rng(rng_seed))
    return mat_mul(a, gen.matrix())
