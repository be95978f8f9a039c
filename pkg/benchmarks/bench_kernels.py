"""Compiled kernels vs the pure-Python fallback on decoder-sized inputs.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Prints one
line per kernel with the best-of-N time for each backend and the speed-up.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from necorpia import _fallback
from necorpia.packet import HASH_KEY

try:
    from necorpia import _kernels
except ImportError:  # extension not built
    _kernels = None


def _cases(rng):
    g, cols = 70, 2048
    nw = cols // 64
    m = rng.integers(0, 2**63, size=(g, nw), dtype=np.uint64)
    a = rng.integers(0, 2**63, size=(g, (g + 63) // 64), dtype=np.uint64)
    a[:, -1] &= np.uint64((1 << (g % 64)) - 1)
    payload = rng.integers(0, 2**63, size=nw, dtype=np.uint64)
    rho = 12
    base = rng.integers(0, 2**63, size=nw, dtype=np.uint64)
    crows = rng.integers(0, 2**63, size=(rho, nw), dtype=np.uint64)
    return {
        "rref 70x2048": lambda k: k.rref(m.copy(), cols, 0, cols),
        "matmul 70x70 . 70x2048": lambda k: k.matmul(a, g, m),
        "hash 2016 bits": lambda k: k.hash_words(payload, 2016, 16, HASH_KEY),
        "terminal_scan 2^12": lambda k: k.terminal_scan(base, crows, 2032, 16, HASH_KEY),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(args.seed))
    print(f"{'kernel':<26}{'python [ms]':>14}{'compiled [ms]':>16}{'speed-up':>10}")
    for name, fn in cases.items():
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:<26}{t_py:>14.3f}{'n/a':>16}{'':>10}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<26}{t_py:>14.3f}{t_c:>16.3f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
