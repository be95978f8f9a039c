"""Slotted dissemination toward a sink and header-length accounting.

Nodes sit uniformly in the unit square; the radio range ``r`` is tuned so
the unit-disk graph has diameter 10 and minimum degree at least 3. Sources
inject one packet each; a node that receives an innovative packet schedules
``floor(d)`` coded broadcasts for the next slot, plus one more with
probability ``d - floor(d)``. Broadcasts reach every neighbour (ideal MAC).
The sink only listens.

Coding vectors are Python ints over the ``g`` sources (bit ``i`` = source
``i``). Header sizes are computed after the fact from those vectors with a
separate random stream, so the dynamics never depend on the header scheme.
"""

from __future__ import annotations

import configparser
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analytics import expected_branches, expected_error_bound
from .errors import NonTerminationError, TopologyError

log = logging.getLogger(__name__)

TARGET_DIAMETER = 10
MIN_DEGREE = 3
SLOT_LIMIT_FACTOR = 50


@dataclass(frozen=True)
class Topology:
    positions: np.ndarray  # (N+1, 2); the last row is the sink
    radius: float
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.adjacency)

    @property
    def sink(self) -> int:
        return self.n_nodes - 1

    def diameter(self) -> int:
        return _diameter(self.adjacency)

    def min_degree(self) -> int:
        return min(len(a) for a in self.adjacency)


def _eccentricity(adj: Sequence[Sequence[int]], src: int) -> int:
    dist = [-1] * len(adj)
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return math.inf if min(dist) < 0 else max(dist)


def _diameter(adj) -> float:
    return max(_eccentricity(adj, s) for s in range(len(adj)))


def _adjacency(d2: np.ndarray, r2: float) -> tuple[tuple[int, ...], ...]:
    close = d2 <= r2
    np.fill_diagonal(close, False)
    return tuple(tuple(np.flatnonzero(row).tolist()) for row in close)


def generate_topology(N: int, seed, diameter: int = TARGET_DIAMETER, min_degree: int = MIN_DEGREE,
                      max_retries: int = 500) -> Topology:
    """Random geometric graph on ``N`` nodes plus a sink with the given diameter.

    The diameter is non-increasing in ``r``, so a bisection over the sorted
    pairwise distances finds the largest ``r`` whose diameter is still at
    least ``diameter``; that ``r`` also maximises degrees. Placements where
    it misses either constraint are redrawn.
    """
    if N < 20:
        raise ValueError("need N >= 20")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        pos = rng.random((N + 1, 2))
        d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1)
        radii = np.unique(d2[np.triu_indices(N + 1, 1)])
        lo, hi = 0, len(radii) - 1  # invariant: diam(radii[lo]) >= target > diam(radii[hi]) once found
        if _diameter(_adjacency(d2, radii[hi])) >= diameter:
            continue
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _diameter(_adjacency(d2, radii[mid])) >= diameter:
                lo = mid
            else:
                hi = mid
        adj = _adjacency(d2, radii[lo])
        if _diameter(adj) == diameter and min(len(a) for a in adj) >= min_degree:
            pos.setflags(write=False)
            return Topology(pos, float(np.sqrt(radii[lo])), adj)
    raise TopologyError(f"no placement met diameter {diameter} and min degree {min_degree} "
                        f"after {max_retries} draws")


# -- header schemes -------------------------------------------------------

@dataclass(frozen=True)
class PlainNC:
    name: str = "plain_nc"


@dataclass(frozen=True)
class Cope:
    name: str = "cope"


@dataclass(frozen=True)
class NecorpiaFixed:
    n_v: int
    lengths: tuple[int, ...]
    hash_len: int = 16
    name: str = "necorpia_fixed"


@dataclass(frozen=True)
class NecorpiaAdaptive:
    n_v: int = 2
    N_b_max: float = 1000.0
    name: str = "necorpia_adaptive"


def parse_scheme(text: str):
    """``plain``, ``cope``, ``necorpia:<n_v>`` (adaptive) or ``necorpia:50,50[:Lh]`` (fixed)."""
    text = text.strip().lower()
    if text in ("plain", "plain_nc", "nc"):
        return PlainNC()
    if text == "cope":
        return Cope()
    if text.startswith("necorpia"):
        parts = text.split(":")
        if len(parts) == 1:
            return NecorpiaAdaptive()
        if "," in parts[1] or len(parts) == 3:
            lengths = tuple(int(x) for x in parts[1].split(","))
            lh = int(parts[2]) if len(parts) == 3 else 16
            return NecorpiaFixed(len(lengths), lengths, lh)
        return NecorpiaAdaptive(int(parts[1]))
    raise ValueError(f"unknown header scheme {text!r}")


def scheme_label(s) -> str:
    if isinstance(s, NecorpiaAdaptive):
        return f"necorpia_nv{s.n_v}"
    if isinstance(s, NecorpiaFixed):
        return "necorpia_" + "x".join(map(str, s.lengths))
    return s.name


@dataclass(frozen=True)
class SimConfig:
    N: int = 100
    g: int = 10
    forwarding_factor: float = 1.5
    p_c: float = 1e-6
    header_scheme: object = field(default_factory=PlainNC)
    buffer_size: int | None = None  # None = keep every innovative vector
    seed: int = 0
    cope_g_max: int | None = None  # a-priori bound on active sources; None = N

    @property
    def cope_bound(self) -> int:
        return self.N if self.cope_g_max is None else self.cope_g_max

    def __post_init__(self):
        if not 1 <= self.g <= self.N:
            raise ValueError("need 1 <= g <= N")
        if self.forwarding_factor < 0:
            raise ValueError("forwarding factor must be >= 0")
        if self.buffer_size is not None and self.buffer_size < 1:
            raise ValueError("buffer size must be >= 1")
        if self.cope_g_max is not None and self.cope_g_max < self.g:
            raise ValueError("cope_g_max must be >= g")

    @classmethod
    def from_text(cls, text: str) -> SimConfig:
        """``key = value`` lines; keys are the field names, ``#`` starts a comment."""
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.read_string("[sim]\n" + text)
        kv = dict(cp["sim"])
        conv = {"N": int, "g": int, "forwarding_factor": float, "d": float, "p_c": float,
                "seed": int, "header_scheme": parse_scheme, "cope_g_max": int,
                "buffer_size": lambda v: None if v.lower() in ("", "none", "inf", "unlimited") else int(v)}
        out = {}
        for k, v in kv.items():
            key = {"n": "N", "d": "forwarding_factor"}.get(k, k)
            if key not in conv:
                raise ValueError(f"unknown config key {k!r}")
            out[key] = conv[key](v)
        return cls(**out)

    @classmethod
    def from_file(cls, path) -> SimConfig:
        with open(path) as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class SimResult:
    slots_elapsed: int
    total_transmissions: int
    nonzero_counts: tuple[int, ...]
    decoded: bool
    header_bits_per_scheme: dict
    sink_rows: tuple[int, ...] = ()
    coding_vectors: tuple[int, ...] = ()
    sources: tuple[int, ...] = ()


def _insert(basis: dict[int, int], v: int) -> bool:
    """Reduce ``v`` against ``basis`` (keyed by top bit); add it if innovative."""
    while v:
        top = v.bit_length() - 1
        b = basis.get(top)
        if b is None:
            basis[top] = v
            return True
        v ^= b
    return False


def _simulate(topo: Topology, cfg: SimConfig):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[0])
    N = topo.n_nodes - 1
    sink = topo.sink
    sources = sorted(rng.choice(N, cfg.g, replace=False).tolist())
    bases = [dict() for _ in range(topo.n_nodes)]
    buffers = [deque(maxlen=cfg.buffer_size) for _ in range(topo.n_nodes)]
    whole, frac = int(math.floor(cfg.forwarding_factor)), cfg.forwarding_factor - math.floor(cfg.forwarding_factor)

    pending: dict[int, int] = {}
    sent: list[int] = []
    sink_rows: list[int] = []
    outgoing: list[tuple[int, int]] = []
    for i, node in enumerate(sources):
        v = 1 << i
        _insert(bases[node], v)
        buffers[node].append(v)
        outgoing.append((node, v))

    limit = SLOT_LIMIT_FACTOR * topo.diameter()
    slot = 0
    while True:
        for node, v in outgoing:
            sent.append(v)
            for nb in topo.adjacency[node]:
                if nb == sink:
                    if _insert(bases[sink], v):
                        sink_rows.append(v)
                elif _insert(bases[nb], v):
                    buffers[nb].append(v)
                    pending[nb] = pending.get(nb, 0) + whole + int(rng.random() < frac)
        slot += 1
        if len(bases[sink]) == cfg.g:
            return slot, sent, sink_rows, True, sources
        if slot >= limit or not pending:
            return slot, sent, sink_rows, False, sources
        outgoing = []
        for node in sorted(pending):
            buf = buffers[node]
            for _ in range(pending[node]):
                while True:
                    coeffs = rng.integers(0, 2, len(buf))
                    if coeffs.any():
                        break
                v = 0
                for c, b in zip(coeffs, buf):
                    if c:
                        v ^= b
                outgoing.append((node, v))
        pending = {}


def run_sts(topology: Topology, cfg: SimConfig, strict: bool = True) -> SimResult:
    """Disseminate one generation until the sink reaches rank ``g``.

    Raises ``NonTerminationError`` (carrying the partial result as
    ``.result``) when the slot limit passes or traffic dies out first,
    unless ``strict`` is false.
    """
    slots, sent, sink_rows, decoded, sources = _simulate(topology, cfg)
    counts = tuple(v.bit_count() for v in sent)
    header = header_bits_for(cfg.header_scheme, cfg, sent)
    res = SimResult(slots, len(sent), counts, decoded, {scheme_label(cfg.header_scheme): header},
                    tuple(sink_rows), tuple(sent), tuple(sources))
    if not decoded:
        log.warning("STS seed=%s g=%s stopped undecoded after %s slots", cfg.seed, cfg.g, slots)
        if strict:
            err = NonTerminationError(f"sink rank {len(sink_rows)} < g={cfg.g} after {slots} slots")
            err.result = res
            raise err
    return res


# -- header sizes ----------------------------------------------------------

def nonzero_coefficient_distribution(results: Iterable[SimResult]) -> dict[int, float]:
    """Pooled share of broadcasts mixing ``k`` sources, over all runs."""
    counts: dict[int, int] = {}
    n = 0
    for r in results:
        for k in r.nonzero_counts:
            counts[k] = counts.get(k, 0) + 1
            n += 1
    if not n:
        raise ValueError("no transmissions")
    return {k: counts[k] / n for k in sorted(counts)}


def mean_of(dist: dict[int, float]) -> float:
    return math.fsum(k * p for k, p in dist.items())


def cope_id_bits(g_max: int, p_c: float) -> int:
    """Smallest ``b`` with ``C(g_max, 2) 2^-b <= p_c``."""
    pairs = math.comb(g_max, 2)
    if pairs == 0:
        return 0
    return max(0, math.ceil(math.log2(pairs / p_c) - 1e-12))


def cope_header_bits(g_max: int, p_c: float, nonzero_dist: dict[int, float]) -> float:
    """One random identifier per mixed packet; GF(2) coefficients are implicit."""
    return mean_of(nonzero_dist) * cope_id_bits(g_max, p_c)


def plain_nc_header_bits(N: int) -> int:
    return N


def _smallest(pred, lo: int = 1, cap: int = 1 << 24) -> int:
    """Smallest integer ``>= lo`` satisfying a monotone predicate."""
    hi = lo
    while not pred(hi):
        lo = hi + 1
        hi *= 2
        if hi > cap:
            raise ValueError("no admissible value below the search cap")
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def necorpia_header_bits(g_max: int, n_v: int = 2, p_c: float = 1e-6, N_b_max: float = 1000.0,
                         lengths: Sequence[int] | None = None, hash_len: int | None = None,
                         pmf_source: str = "analytic", trials: int = 1000, seed: int = 0):
    """``(lengths, L_h, total bits)``; block lengths and hash length sized when not given.

    Equal block lengths: the smallest ``L`` keeping ``E[N_b(n_v+1)] <= N_b_max``,
    then the smallest ``L_h`` keeping the expected error bound below ``p_c``.
    """
    kw = dict(pmf_source=pmf_source, trials=trials, seed=seed)
    if lengths is None:
        lengths = (_smallest(lambda L: expected_branches(g_max, (L,) * n_v, part="terminal", **kw)
                             <= N_b_max),) * n_v
    lengths = tuple(lengths)
    if hash_len is None:
        hash_len = _smallest(lambda h: expected_error_bound(g_max, lengths, L_h=h, **kw) <= p_c)
    return lengths, hash_len, sum(lengths) + hash_len


def enumerative_bits(L: int, k: int) -> float:
    """Code length of a length-``L`` binary vector with ``k`` ones: support rank plus weight."""
    return math.log2(math.comb(L, k)) + math.log2(L + 1)


def entropy_coded_bits(header_vectors) -> float:
    """Average enumerative code length of a sample of 0/1 header vectors (rows)."""
    arr = np.asarray(header_vectors, dtype=np.uint8)
    if arr.ndim != 2 or not arr.shape[0]:
        raise ValueError("need a non-empty 2-D sample")
    L = arr.shape[1]
    return float(np.mean([enumerative_bits(L, int(k)) for k in arr.sum(axis=1)]))


def _source_indices(cfg: SimConfig, lengths: Sequence[int]) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    return np.column_stack([rng.integers(0, L, cfg.g) for L in lengths])


def _necorpia_entropy_bits(cfg: SimConfig, sent: Sequence[int], lengths, hash_len) -> float:
    """Coded-header blocks are XORs of the mixed sources' canonical blocks."""
    idx = _source_indices(cfg, lengths)
    total = 0.0
    for v in sent:
        members = [i for i in range(cfg.g) if v >> i & 1]
        bits = hash_len
        for b, L in enumerate(lengths):
            block = 0
            for i in members:
                block ^= 1 << int(idx[i, b])
            bits += enumerative_bits(L, block.bit_count())
        total += bits
    return total / len(sent)


def header_bits_for(scheme, cfg: SimConfig, sent: Sequence[int], nb_cache: dict | None = None) -> tuple[float, float]:
    """``(raw, entropy-coded)`` average header bits of the broadcasts in ``sent``."""
    if not sent:
        return (0.0, 0.0)
    counts = [v.bit_count() for v in sent]
    if isinstance(scheme, PlainNC):
        # the global coefficient vector has one slot per potential source
        coded = float(np.mean([enumerative_bits(cfg.N, k) for k in counts]))
        return float(cfg.N), coded
    if isinstance(scheme, Cope):
        raw = float(np.mean(counts)) * cope_id_bits(cfg.cope_bound, cfg.p_c)
        return raw, raw
    if isinstance(scheme, NecorpiaFixed):
        lengths, lh = scheme.lengths, scheme.hash_len
    elif isinstance(scheme, NecorpiaAdaptive):
        key = (cfg.g, scheme.n_v, cfg.p_c, scheme.N_b_max)
        if nb_cache is not None and key in nb_cache:
            lengths, lh = nb_cache[key]
        else:
            lengths, lh, _ = necorpia_header_bits(cfg.g, scheme.n_v, cfg.p_c, scheme.N_b_max)
            if nb_cache is not None:
                nb_cache[key] = (lengths, lh)
    else:
        raise TypeError(f"unknown scheme {scheme!r}")
    return float(sum(lengths) + lh), _necorpia_entropy_bits(cfg, sent, lengths, lh)


# -- sweeps ---------------------------------------------------------------

SWEEP_COLUMNS = ("g", "scheme", "avg_header_bits", "avg_header_bits_entropy_coded")
NONZERO_COLUMNS = ("g", "avg_nonzero_coeffs")


def _sweep_point(args):
    N, g, seed, d, p_c, buffer_size, schemes, cope_g_max = args
    topo = generate_topology(N, seed)
    cfg = SimConfig(N, g, d, p_c, schemes[0], buffer_size, seed, cope_g_max)
    try:
        res = run_sts(topo, cfg)
    except NonTerminationError as e:
        res = e.result
    cache: dict = {}
    headers = {scheme_label(s): header_bits_for(s, cfg, res.coding_vectors, cache) for s in schemes}
    return g, seed, res.decoded, float(np.mean(res.nonzero_counts)), headers


def header_comparison_sweep(g_values: Sequence[int], schemes: Sequence, seeds: Sequence[int],
                            N: int = 100, forwarding_factor: float = 1.5, p_c: float = 1e-6,
                            buffer_size: int | None = None, cope_g_max: int | None = None,
                            workers: int = 1):
    """Average header sizes per ``(g, scheme)`` over one topology and run per seed.

    Returns ``(header_rows, nonzero_rows, undecoded)`` where rows follow
    ``SWEEP_COLUMNS`` and ``NONZERO_COLUMNS`` in grid order and ``undecoded``
    counts runs that hit the slot limit (their transmissions still count).
    """
    jobs = [(N, g, s, forwarding_factor, p_c, buffer_size, tuple(schemes), cope_g_max)
            for g in g_values for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            out = list(ex.map(_sweep_point, jobs))
    else:
        out = [_sweep_point(j) for j in jobs]
    header_rows, nonzero_rows, undecoded = [], [], 0
    for g in g_values:
        pts = [o for o in out if o[0] == g]
        undecoded += sum(not o[2] for o in pts)
        nonzero_rows.append((g, float(np.mean([o[3] for o in pts]))))
        for s in schemes:
            lab = scheme_label(s)
            raw = float(np.mean([o[4][lab][0] for o in pts]))
            coded = float(np.mean([o[4][lab][1] for o in pts]))
            header_rows.append((g, lab, raw, coded))
    return header_rows, nonzero_rows, undecoded
