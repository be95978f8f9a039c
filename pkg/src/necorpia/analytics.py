"""Rank-profile laws, branch counts, error probability and operation-count models.

Occupancy probabilities ``f(g, L, k)`` (``g`` balls thrown uniformly into
``L`` boxes, ``k`` boxes occupied) come from the forward recurrence
``p(n+1, k) = p(n, k) k/L + p(n, k-1) (L-k+1)/L`` in double precision.

For ``n_v <= 2`` expectations use the closed-form laws; the ``n_v = 2`` joint
law is an approximation that degrades once ``g`` is large enough for index
cycles across blocks to matter (around ``g >= 60`` for ``L_1 = L_2 = 50``).
For ``n_v > 2`` only empirical profiles are available.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

ANALYTIC = "analytic"
EMPIRICAL = "empirical"


@dataclass(frozen=True)
class RankProfile:
    """``rhos = (rho_1, ..., rho_nv+1)``; the last entry is the payload-block rank."""

    rhos: tuple[int, ...]
    g: int

    def __post_init__(self):
        object.__setattr__(self, "rhos", tuple(int(r) for r in self.rhos))
        if any(r < 0 for r in self.rhos) or sum(self.rhos) != self.g:
            raise ValueError(f"ranks {self.rhos} must be non-negative and sum to g={self.g}")
        if len(self.rhos) < 2:
            raise ValueError("need at least one header rank and the payload rank")

    @classmethod
    def of(cls, *rhos: int) -> RankProfile:
        return cls(tuple(rhos), sum(rhos))

    @property
    def n_v(self) -> int:
        return len(self.rhos) - 1

    def check_lengths(self, lengths: Sequence[int]) -> None:
        if len(lengths) != self.n_v:
            raise ValueError("lengths and profile disagree on n_v")
        for r, length in zip(self.rhos, lengths):
            if r > min(self.g, length):
                raise ValueError(f"rank {r} exceeds min(g, L) = {min(self.g, length)}")


@dataclass(frozen=True)
class CostConstants:
    K_m: float = 2
    K_R: float = 3
    K_c: float = 3


DEFAULT_CONSTS = CostConstants()


# -- occupancy laws ------------------------------------------------------

@lru_cache(maxsize=256)
def _occupancy(g: int, L: int) -> tuple[float, ...]:
    top = min(g, L)
    p = np.zeros(top + 1)
    p[0] = 1.0
    ks = np.arange(top + 1, dtype=float)
    for _ in range(g):
        nxt = p * ks / L
        nxt[1:] += p[:-1] * (L - ks[1:] + 1) / L
        p = nxt
    return tuple(p)


def occupancy_pmf(g: int, L: int) -> np.ndarray:
    """``f(g, L, k)`` for ``k = 0..min(g, L)``."""
    if g < 0 or L < 1:
        raise ValueError("need g >= 0 and L >= 1")
    return np.array(_occupancy(int(g), int(L)))


def f_occ(g: int, L: int, k: int) -> float:
    if k < 0 or k > min(g, L):
        return 0.0
    return _occupancy(int(g), int(L))[k]


def rho2_pmf_nv1(g: int, L1: int) -> np.ndarray:
    """pmf of ``rho_2 = g - rho_1`` for ``rho_2 = 0..g`` when ``n_v = 1``."""
    occ = occupancy_pmf(g, L1)
    out = np.zeros(g + 1)
    for k, p in enumerate(occ):
        out[g - k] = p
    return out


def rho2_ccdf_nv1(g: int, L1: int) -> np.ndarray:
    """``P(rho_2 > k)`` for ``k = 0..g``."""
    return np.clip(1.0 - np.cumsum(rho2_pmf_nv1(g, L1)), 0.0, 1.0)


def joint_rank_pmf_nv2(g: int, L1: int, L2: int) -> dict[tuple[int, int, int], float]:
    """Approximate law of ``(rho_1, rho_2, rho_3)`` for ``n_v = 2``.

    ``rho_1`` follows ``f(g, L1, .)`` and ``rho_1 + rho_2`` follows the number
    of distinct index pairs ``f(g, L1 L2, .)``, treated as independent.
    Pair counts outside the feasible range ``[k1, k1 + L2]`` are clamped to
    its ends, so the law sums to one and its ``rho_1`` marginal is exactly
    ``occupancy_pmf(g, L1)``. Cycles among the pairs are ignored, so the law
    overstates ``P(rho_3 = 0)`` as ``g`` grows.
    """
    if g < 1:
        raise ValueError("g must be >= 1")
    pairs = occupancy_pmf(g, L1 * L2)
    out: dict[tuple[int, int, int], float] = {}
    for k1, p1 in enumerate(occupancy_pmf(g, L1)):
        if p1 == 0.0:
            continue
        hi = min(k1 + L2, g)
        w = np.zeros(hi - k1 + 1)
        for k, pk in enumerate(pairs):
            w[min(max(k, k1), hi) - k1] += pk
        for k2, pk in enumerate(w):
            if pk > 0.0:
                out[(k1, k2, g - k1 - k2)] = p1 * pk
    return out


def full_rank_upper_bound(g: int, lengths: Sequence[int]) -> float:
    """Upper bound on ``P(rho_nv+1 = 0)``: all ``g`` index tuples distinct."""
    return f_occ(g, math.prod(lengths), g)


def profile_pmf(g: int, lengths: Sequence[int], pmf_source: str = ANALYTIC,
                profiles: Iterable[RankProfile] | None = None, trials: int = 1000,
                seed: int = 0) -> dict[RankProfile, float]:
    """Distribution of the rank profile, analytic (``n_v <= 2``) or from samples."""
    n_v = len(lengths)
    if pmf_source == EMPIRICAL:
        if profiles is None:
            from .montecarlo import sample_rank_profiles
            profiles = sample_rank_profiles(g, lengths, trials, seed)
        return empirical_pmf(profiles)
    if pmf_source != ANALYTIC:
        raise ValueError(f"unknown pmf source {pmf_source!r}")
    if n_v == 1:
        return {RankProfile((k, g - k), g): p for k, p in enumerate(occupancy_pmf(g, lengths[0])) if p > 0}
    if n_v == 2:
        return {RankProfile(r, g): p for r, p in joint_rank_pmf_nv2(g, lengths[0], lengths[1]).items()}
    raise ValueError("no analytic rank law for n_v > 2; pass pmf_source='empirical'")


def empirical_pmf(profiles: Iterable[RankProfile]) -> dict[RankProfile, float]:
    counts: dict[RankProfile, int] = {}
    n = 0
    for p in profiles:
        counts[p] = counts.get(p, 0) + 1
        n += 1
    if not n:
        raise ValueError("no profiles")
    return {p: c / n for p, c in sorted(counts.items(), key=lambda kv: kv[0].rhos)}


# -- branches and errors -------------------------------------------------

def branch_bound(profile: RankProfile, q: int = 2) -> tuple[tuple[int, ...], int, int]:
    """Per-level ``N_b(l)`` for ``l = 1..n_v``, terminal ``N_b(n_v+1)``, and their sum."""
    rhos = profile.rhos
    levels = []
    nb = rhos[0]
    levels.append(nb)
    for r in rhos[1:-1]:
        nb *= r + 1
        levels.append(nb)
    terminal = nb * q ** rhos[-1]
    return tuple(levels), terminal, sum(levels) + terminal


def expected_branches(g: int, lengths: Sequence[int], q: int = 2, part: str = "total",
                      pmf_source: str = ANALYTIC, profiles=None, trials: int = 1000,
                      seed: int = 0) -> float:
    """``E[N_b]`` (``part="total"``) or ``E[N_b(n_v+1)]`` (``part="terminal"``)."""
    idx = {"total": 2, "terminal": 1}[part]
    pmf = profile_pmf(g, lengths, pmf_source, profiles, trials, seed)
    return math.fsum(p * branch_bound(r, q)[idx] for r, p in pmf.items())


def decoding_error_prob(n_w: float, g: int, q: int = 2, L_h: int = 16) -> float:
    """``1 - (1 - q^-L_h)^(n_w - g)``; phantoms treated as independent hash trials."""
    n = max(n_w - g, 0)
    if n == 0:
        return 0.0
    return -math.expm1(n * math.log1p(-float(q) ** -L_h))


def expected_error_bound(g: int, lengths: Sequence[int], q: int = 2, L_h: int = 16,
                         pmf_source: str = ANALYTIC, profiles=None, trials: int = 1000,
                         seed: int = 0) -> float:
    """``P_e`` averaged over rank profiles with ``n_w`` replaced by ``N_b(n_v+1)``."""
    pmf = profile_pmf(g, lengths, pmf_source, profiles, trials, seed)
    return math.fsum(p * decoding_error_prob(branch_bound(r, q)[1], g, q, L_h) for r, p in pmf.items())


# -- operation counts ----------------------------------------------------

def _level_costs_sle(profile: RankProfile, lengths, L_p, g, q, c: CostConstants):
    rhos, n_v = profile.rhos, profile.n_v
    out = [lengths[0] * rhos[0] * lengths[0]]
    for lvl in range(2, n_v + 1):
        L = lengths[lvl - 1]
        out.append(c.K_m * L * sum(rhos[: lvl - 1]) + L * (lvl + (rhos[lvl - 1] + 1) * L))
    r = rhos[-1]
    out.append(c.K_m * g * L_p + (n_v - 1) * L_p + q ** r * (c.K_m * r * L_p + L_p + c.K_c * L_p))
    return out


def _nb_prefix(profile: RankProfile, q: int) -> list[int]:
    """``N_b(0..n_v)`` with ``N_b(0) = 1``."""
    levels, _, _ = branch_bound(profile, q)
    return [1, *levels]


def cost_sle(profile: RankProfile, lengths: Sequence[int], L_p: int, g: int | None = None,
             q: int = 2, consts: CostConstants = DEFAULT_CONSTS):
    """Upper bound on the tree-search operations of the row-scan variant."""
    g = profile.g if g is None else g
    nb = _nb_prefix(profile, q)
    return sum(n * k for n, k in zip(nb, _level_costs_sle(profile, lengths, L_p, g, q, consts)))


def cost_sle_nv1_closed(rho1: int, rho2: int, L1: int, L_p: int, g: int, q: int = 2,
                        consts: CostConstants = DEFAULT_CONSTS):
    c = consts
    return rho1 * L1 ** 2 + rho1 * L_p * (c.K_m * g + q ** rho2 * (c.K_m * rho2 + 1 + c.K_c))


def cost_lut(profile: RankProfile, lengths: Sequence[int], L_p: int, g: int | None = None,
             q: int = 2, consts: CostConstants = DEFAULT_CONSTS):
    """Upper bound on table construction plus tree search for the look-up variant."""
    g = profile.g if g is None else g
    rhos, n_v = profile.rhos, profile.n_v
    nb = _nb_prefix(profile, q)
    total = 0
    for lvl in range(1, n_v + 1):
        L, r = lengths[lvl - 1], rhos[lvl - 1]
        total += r + L * r * (r + 1) // 2 + r * (L + 1 + r * L)
        total += nb[lvl - 1] * (consts.K_m * L * sum(rhos[: lvl - 1]) + L * (lvl + r))
    total += nb[n_v] * _level_costs_sle(profile, lengths, L_p, g, q, consts)[-1]
    return total


def cost_plain_nc(g: int, L_x: int, consts: CostConstants = DEFAULT_CONSTS):
    return consts.K_R * g * g * L_x


def expected_cost_ratio(g: int, lengths: Sequence[int], L_h: int = 16, variant: str = "sle",
                        L_x: int = 2048, q: int = 2, consts: CostConstants = DEFAULT_CONSTS,
                        pmf_source: str = ANALYTIC, profiles=None, trials: int = 1000,
                        seed: int = 0) -> float:
    """``(A_NC + E[K]) / A_NC`` for the chosen DeRPIA variant."""
    fn = {"sle": cost_sle, "lut": cost_lut}[variant]
    L_p = L_x - sum(lengths)
    pmf = profile_pmf(g, lengths, pmf_source, profiles, trials, seed)
    a_nc = cost_plain_nc(g, L_x, consts)
    extra = math.fsum(p * float(fn(r, lengths, L_p, g, q, consts)) for r, p in pmf.items())
    return (a_nc + extra) / a_nc


def exact_int(x) -> int:
    """Integer value of an exact cost (rejects non-integral results)."""
    f = Fraction(x)
    if f.denominator != 1:
        raise ValueError(f"{x} is not integral")
    return int(f)


# -- CSV -------------------------------------------------------------------

PMF_COLUMNS = ("g", "k", "probability")
EXPECTATION_COLUMNS = ("g", "value")


def fmt(x) -> str:
    """Stable text form for CSV cells (shortest repr that round-trips)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("refusing to emit a non-finite value")
    return repr(x)


def write_rows(out: TextIO, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def write_pmf_csv(out: TextIO, pmfs: Mapping[int, Sequence[float]]) -> None:
    """Columns ``g,k,probability``; one row per support point, ``g`` ascending."""
    write_rows(out, PMF_COLUMNS, ((g, k, p) for g in sorted(pmfs) for k, p in enumerate(pmfs[g])))


def write_expectation_csv(out: TextIO, values: Mapping[int, float]) -> None:
    """Columns ``g,value``; ``g`` ascending."""
    write_rows(out, EXPECTATION_COLUMNS, ((g, values[g]) for g in sorted(values)))
