"""``necorpia`` command line: demo, analyze, simulate, bench, verify.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 internal error.
CSV-producing commands always run from an explicit seed (default 0, echoed
on stderr) and write byte-identical files for identical flags.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analytics as an, netsim
from ._backend import BACKEND
from .decoder import brute_force_decode, derpia
from .encoder import make_generation, receive
from .errors import NecorpiaError
from .montecarlo import decode_trials, sample_rank_profiles, sample_rho1
from .packet import HeaderConfig, Sts

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _g_range(text: str) -> list[int]:
    """``5,10,20`` or ``5:50:5`` (inclusive)."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) not in (2, 3):
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        lo, hi = parts[:2]
        step = parts[2] if len(parts) == 3 else 1
        return list(range(lo, hi + 1, step))
    return _ints(text)


def _lengths(args) -> tuple[int, ...]:
    lengths = tuple(args.L) if args.L else (100,) if args.nv == 1 else (50,) * args.nv
    if len(lengths) == 1 and args.nv > 1:
        lengths = lengths * args.nv
    if len(lengths) != args.nv:
        raise UsageError(f"--L lists {len(lengths)} block lengths but --nv is {args.nv}")
    if any(x < 1 for x in lengths):
        raise UsageError("block lengths must be >= 1")
    return lengths


def _echo_seed(args) -> None:
    print(f"seed={args.seed}", file=sys.stderr)


def _out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _write(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    an.write_rows(buf, columns, rows)
    path.write_text(buf.getvalue())
    print(f"wrote {path}", file=sys.stderr)


# -- demo -----------------------------------------------------------------

def cmd_demo(args) -> int:
    if args.g < 1:
        raise UsageError("--g must be >= 1 (empty generation)")
    lengths = _lengths(args)
    cfg = HeaderConfig.for_packet_length(lengths, args.Lx, args.Lh)
    if cfg.payload_len < 0:
        raise UsageError("--Lx too small for the header and hash")
    _echo_seed(args)
    ss = np.random.SeedSequence(args.seed).spawn(2)
    gen = make_generation(cfg, args.g, np.random.default_rng(ss[0]), Sts(0, args.seed))
    y = receive(gen, np.random.default_rng(ss[1]))
    res = derpia(y, cfg, args.variant, gen.sts, allow_fast_path=not args.no_fast_path)
    truth = set(gen.sources)
    got = res.recovered_set()
    st = res.stats
    print(f"backend: {BACKEND}", file=sys.stderr)
    print(f"config: n_v={cfg.n_v} L={','.join(map(str, lengths))} L_h={cfg.hash_len} L_x={cfg.total_len} g={args.g}")
    print(f"rank profile: {','.join(map(str, st.ranks))}")
    print(f"fast path: {'yes' if st.used_fast_path else 'no'}")
    print(f"branches per level: {','.join(map(str, st.branches_per_level))}")
    print(f"terminal candidates n_w: {st.terminal_candidates}")
    print(f"gf2 ops: {st.gf2_ops}  rref ops: {st.rref_ops}")
    print(f"recovered: {len(truth & got)}/{args.g} true packets, {len(got - truth)} phantoms")
    if args.verbose:
        for p in sorted(got, key=lambda p: p.indices):
            tag = "" if p in truth else "  (phantom)"
            print(f"  indices={p.indices}{tag}")
    return EXIT_OK if truth <= got else EXIT_VERIFY


# -- analyze --------------------------------------------------------------

def cmd_analyze(args) -> int:
    lengths = _lengths(args)
    out = _out_dir(args)
    _echo_seed(args)
    gs = args.g
    kw = dict(pmf_source=args.pmf_source, trials=args.trials, seed=args.seed)
    if args.nv > 2 and args.pmf_source != an.EMPIRICAL:
        raise UsageError("n_v > 2 has no analytic rank law; pass --pmf-source empirical")

    _write(out / "occupancy.csv", an.PMF_COLUMNS,
           ((g, k, p) for g in gs for k, p in enumerate(an.occupancy_pmf(g, lengths[0]))))
    if args.mc_trials:
        rows = []
        for g in gs:
            counts = np.bincount(sample_rho1(g, lengths[0], args.mc_trials, [args.seed, g]),
                                 minlength=min(g, lengths[0]) + 1)
            rows.extend((g, k, c / args.mc_trials) for k, c in enumerate(counts))
        _write(out / "occupancy_mc.csv", an.PMF_COLUMNS, rows)
    if args.nv == 1:
        _write(out / "rho2_ccdf.csv", ("g", "k", "ccdf"),
               ((g, k, p) for g in gs for k, p in enumerate(an.rho2_ccdf_nv1(g, lengths[0]))))
    if args.nv == 2:
        _write(out / "joint_rank_pmf.csv", ("g", "rho1", "rho2", "rho3", "probability"),
               ((g, *r, p) for g in gs for r, p in sorted(an.joint_rank_pmf_nv2(g, *lengths).items())))
    if args.pmf_source == an.EMPIRICAL:
        profiles = {g: sample_rank_profiles(g, lengths, args.trials, [args.seed, g]) for g in gs}
        kw = dict(pmf_source=an.EMPIRICAL)
    else:
        profiles = {g: None for g in gs}
    _write(out / "branches_total.csv", an.EXPECTATION_COLUMNS,
           ((g, an.expected_branches(g, lengths, profiles=profiles[g], **kw)) for g in gs))
    _write(out / "branches_terminal.csv", an.EXPECTATION_COLUMNS,
           ((g, an.expected_branches(g, lengths, part="terminal", profiles=profiles[g], **kw)) for g in gs))
    for lh in args.Lh:
        _write(out / f"error_Lh{lh}.csv", an.EXPECTATION_COLUMNS,
               ((g, an.expected_error_bound(g, lengths, L_h=lh, profiles=profiles[g], **kw)) for g in gs))
    for variant in ("sle", "lut"):
        _write(out / f"cost_ratio_{variant}.csv", an.EXPECTATION_COLUMNS,
               ((g, an.expected_cost_ratio(g, lengths, args.Lh[0], variant, args.Lx,
                                           profiles=profiles[g], **kw)) for g in gs))
    return EXIT_OK


# -- simulate -------------------------------------------------------------

def cmd_simulate(args) -> int:
    out = _out_dir(args)
    base = netsim.SimConfig.from_file(args.config) if args.config else None
    N = args.N if args.N is not None else (base.N if base else 100)
    d = args.d if args.d is not None else (base.forwarding_factor if base else 1.5)
    p_c = args.pc if args.pc is not None else (base.p_c if base else 1e-6)
    seed = args.seed if args.seed is not None else (base.seed if base else 0)
    args.seed = seed
    _echo_seed(args)
    sep = ";" if ";" in args.schemes else ","
    schemes = [netsim.parse_scheme(s) for s in args.schemes.split(sep)]
    if any(g > N for g in args.g):
        raise UsageError("every g must be <= N")
    seeds = [seed + i for i in range(args.topologies)]
    header_rows, nz_rows, undecoded = netsim.header_comparison_sweep(
        args.g, schemes, seeds, N, d, p_c, args.buffer, args.cope_g_max, args.workers)
    _write(out / "header_lengths.csv", netsim.SWEEP_COLUMNS, header_rows)
    _write(out / "nonzero_coeffs.csv", netsim.NONZERO_COLUMNS, nz_rows)
    if undecoded:
        print(f"warning: {undecoded} run(s) stopped before the sink could decode", file=sys.stderr)
    return EXIT_OK


# -- bench ----------------------------------------------------------------

BENCH_COLUMNS = ("g", "variant", "trials", "mean_ops", "mean_formula_ops", "ratio_measured",
                 "ratio_formula", "mean_branches", "bound_violations")


def cmd_bench(args) -> int:
    lengths = _lengths(args)
    cfg = HeaderConfig.for_packet_length(lengths, args.Lx, args.Lh[0])
    out = _out_dir(args)
    _echo_seed(args)
    rows = []
    violations = 0
    for g in args.g:
        for variant in ("sle", "lut"):
            t0 = time.perf_counter()
            trials = decode_trials(cfg, g, args.trials, [args.seed, g], variant)
            dt = time.perf_counter() - t0
            fn = an.cost_sle if variant == "sle" else an.cost_lut
            a_nc = an.cost_plain_nc(g, cfg.total_len)
            ops = np.array([t.gf2_ops for t in trials], dtype=float)
            formula = np.array([float(fn(t.profile, lengths, cfg.tail_len, g)) for t in trials])
            bad = int(np.sum(ops > formula))
            bad += sum(any(b > nb for b, nb in zip(t.branches_per_level, (*t.bound_levels, t.bound_terminal)))
                       for t in trials)
            violations += bad
            rows.append((g, variant, args.trials, float(ops.mean()), float(formula.mean()),
                         float((a_nc + ops.mean()) / a_nc), float((a_nc + formula.mean()) / a_nc),
                         float(np.mean([sum(t.branches_per_level) for t in trials])), bad))
            print(f"g={g} {variant}: {dt / args.trials * 1e3:.2f} ms/decode ({BACKEND})", file=sys.stderr)
    _write(out / "bench.csv", BENCH_COLUMNS, rows)
    return EXIT_OK if violations == 0 else EXIT_VERIFY


# -- verify ---------------------------------------------------------------

def _verify_oracle(n: int, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(n):
        n_v = int(rng.integers(1, 4))
        lengths = tuple(int(x) for x in rng.integers(2, 9, n_v))
        cfg = HeaderConfig(lengths, int(rng.integers(8, 48)), int(rng.integers(4, 17)))
        g = int(rng.integers(1, 13))
        gen = make_generation(cfg, g, rng)
        y = receive(gen, rng)
        sets = [derpia(y, cfg, v, allow_fast_path=False).recovered_set() for v in ("sle", "lut")]
        oracle = brute_force_decode(y, cfg).recovered_set()
        if not (sets[0] == sets[1] == oracle and set(gen.sources) <= oracle):
            failures.append(f"instance {i}: lengths={lengths} g={g}")
    return failures


def _verify_pmf(trials: int, seed: int) -> list[str]:
    failures = []
    for g in (5, 10, 20, 30):
        pmf = an.occupancy_pmf(g, 100)
        counts = np.bincount(sample_rho1(g, 100, trials, [seed, g]), minlength=pmf.size)
        for k, p in enumerate(pmf):
            sigma = np.sqrt(trials * p * (1 - p))
            if abs(counts[k] - trials * p) > 3 * sigma + 1:
                failures.append(f"occupancy g={g} k={k}: {counts[k]} vs {trials * p:.2f}")
    return failures


def cmd_verify(args) -> int:
    _echo_seed(args)
    failures = _verify_oracle(args.instances, args.seed)
    print(f"oracle equivalence: {args.instances - len(failures)}/{args.instances} instances agree")
    pmf_fail = _verify_pmf(args.trials, args.seed)
    print(f"occupancy law: {'ok' if not pmf_fail else f'{len(pmf_fail)} bins outside 3 sigma'}")
    for f in failures + pmf_fail:
        print(f"  FAIL {f}")
    return EXIT_OK if not failures and not pmf_fail else EXIT_VERIFY


# -- wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="necorpia", description="Random packet index assignment for network coding.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, g_default="5:50:5", multi_lh=False):
        sp.add_argument("--nv", type=int, default=2, choices=range(1, 9), metavar="NV")
        sp.add_argument("--L", type=_ints, default=None, help="block lengths, e.g. 50,50")
        sp.add_argument("--Lx", type=int, default=2048, help="coded body length in bits")
        if multi_lh:
            sp.add_argument("--Lh", type=_ints, default=[16], help="hash length(s) in bits")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="out")
        if g_default is not None:
            sp.add_argument("--g", type=_g_range, default=_g_range(g_default))

    d = sub.add_parser("demo", help="encode, mix and decode one generation")
    d.add_argument("--nv", type=int, default=2, choices=range(1, 9), metavar="NV")
    d.add_argument("--L", type=_ints, default=None)
    d.add_argument("--g", type=int, default=10)
    d.add_argument("--Lh", type=int, default=16)
    d.add_argument("--Lx", type=int, default=2048)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--variant", choices=("sle", "lut"), default="lut")
    d.add_argument("--no-fast-path", action="store_true")
    d.add_argument("-v", "--verbose", action="store_true")
    d.set_defaults(func=cmd_demo)

    a = sub.add_parser("analyze", help="analytic pmfs, expectations and cost ratios as CSV")
    common(a, multi_lh=True)
    a.add_argument("--pmf-source", choices=(an.ANALYTIC, an.EMPIRICAL), default=an.ANALYTIC)
    a.add_argument("--trials", type=int, default=1000, help="Monte Carlo profiles per g (empirical)")
    a.add_argument("--mc-trials", type=int, default=0, help="also write a Monte Carlo rho_1 histogram")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="network dissemination and header-length sweep")
    s.add_argument("--g", type=_g_range, default=_g_range("5:60:5"))
    s.add_argument("--N", type=int, default=None)
    s.add_argument("--d", type=float, default=None, help="forwarding factor")
    s.add_argument("--pc", type=float, default=None)
    s.add_argument("--schemes", default="plain,cope,necorpia:1,necorpia:2",
                   help="comma list; use ';' when a fixed scheme has block lengths (necorpia:60,60)")
    s.add_argument("--topologies", type=int, default=10)
    s.add_argument("--buffer", type=int, default=None)
    s.add_argument("--cope-g-max", type=int, default=None)
    s.add_argument("--config", default=None, help="key = value file with SimConfig fields")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="instrumented decoder operations vs the cost formulas")
    common(b, g_default="5:25:5", multi_lh=True)
    b.add_argument("--trials", type=int, default=1000)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="oracle-equivalence and occupancy-law checks")
    v.add_argument("--instances", type=int, default=200)
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"necorpia {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:  # bad parameter combinations surface as ValueError subclasses
        print(f"necorpia {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NecorpiaError as e:
        print(f"necorpia {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001
        print(f"necorpia {args.command}: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
