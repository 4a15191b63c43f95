"""Command-line front end.

Verbs: dist, blocks, verify, simulate, clt, phi. Exit codes: 0 success,
1 invariant or bound violation, 2 usage/validation error. All output is
deterministic given the flags (and the seed where sampling is involved).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from fractions import Fraction

import numpy as np

from . import cltdiag, exactdist, mixing, odometer, oracle
from .digits import decompose_blocks, expand, reverse_expansion
from .errors import DigitDriftError

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def cache_dir_default() -> str:
    return os.environ.get("DIGITDRIFT_CACHE", os.path.join(".", "cache"))


def jobs_default() -> int:
    try:
        return max(1, int(os.environ.get("DIGITDRIFT_JOBS", "1")))
    except ValueError:
        return 1


def parse_r(text: str, base: int, radix_input: bool) -> int:
    if radix_input:
        # digit string, most-significant first; dot-separated for bases > 10
        parts = text.split(".") if "." in text else list(text)
        try:
            digits = [int(p) for p in parts]
        except ValueError:
            digits = [-1]
        if not digits or any(not 0 <= d < base for d in digits):
            raise UsageError(f"invalid base-{base} digit string {text!r}")
        v = 0
        for d in digits:
            v = v * base + d
        return v
    try:
        v = int(text)
    except ValueError as exc:
        raise UsageError(f"cannot parse r {text!r}") from exc
    if v < 0:
        raise UsageError("r must be nonnegative")
    return v


def fmt_rational(q: Fraction) -> str:
    return f"{exactdist.rational_str(q)} ({float(q):.15g})"


def fmt_float(x: float) -> str:
    return f"{x:.12g}"


# --- dist --------------------------------------------------------------------


def cmd_dist(args) -> int:
    r = parse_r(args.r, args.base, args.radix_input)
    tail_eps = Fraction(1, 10**args.tail_eps_exp)
    if args.atoms is not None and args.atoms < 1:
        raise UsageError("--atoms must be >= 1")
    cutoff = None if args.atoms is None else args.atoms - 1
    dist = exactdist.distribution(
        r, args.base, atoms=cutoff, tail_eps=tail_eps, cache_dir=args.cache
    )
    var = exactdist.variance_exact(r, args.base)
    sigma = exactdist.std_dev(r, args.base)
    try:
        lo, hi = exactdist.mean_interval(dist)
        mean_txt = (exactdist.rational_str(lo), exactdist.rational_str(hi))
    except DigitDriftError:
        mean_txt = None
    header = {
        "r": str(r),
        "base": args.base,
        "s_r": dist.s_r,
        "variance": exactdist.rational_str(var),
        "sigma": float(sigma),
        "tail": exactdist.rational_str(dist.tail_mass),
        "atom_count": len(dist.atoms),
        "mean_interval": mean_txt,
    }
    if r >= 1:
        dec = decompose_blocks(expand(r, args.base))
        header["rho"] = dec.rho
        header["lambda"] = dec.lam
    if args.format == "json":
        doc = dict(header)
        doc["atoms"] = [
            {
                "k": k,
                "d": dist.position(k),
                "mass": exactdist.rational_str(m),
                "decimal": float(m),
            }
            for k, m in enumerate(dist.atoms)
        ]
        print(json.dumps(doc, indent=2))
    elif args.format == "csv":
        print("k,d,mass,decimal")
        for k, m in enumerate(dist.atoms):
            print(f"{k},{dist.position(k)},{exactdist.rational_str(m)},{float(m):.15g}")
    else:
        print(f"r = {r}  base = {args.base}  digits = {expand(r, args.base)}")
        extra = f"  rho = {header.get('rho')}  lambda = {header.get('lambda')}" if r >= 1 else ""
        print(f"s(r) = {dist.s_r}{extra}")
        print(f"variance = {fmt_rational(var)}")
        print(f"sigma ~= {float(sigma):.15g}")
        print(f"atoms (K = {len(dist.atoms) - 1}):")
        print("  k    d     mass")
        for k, m in enumerate(dist.atoms):
            print(f"  {k:<4d} {dist.position(k):<5d} {fmt_rational(m)}")
        print(f"tail = {fmt_rational(dist.tail_mass)}")
        if mean_txt is not None:
            print(f"mean interval = [{mean_txt[0]}, {mean_txt[1]}] (contains 0)")
    return EXIT_OK


# --- blocks ------------------------------------------------------------------


def cmd_blocks(args) -> int:
    r = parse_r(args.r, args.base, args.radix_input)
    if r < 1:
        raise UsageError("r = 0 has no blocks")
    e = expand(r, args.base)
    dec = decompose_blocks(e)
    print(f"r = {r}  base = {args.base}  digits = {e}")
    print(f"rho = {dec.rho}  lambda = {dec.lam}")
    for blk in dec.blocks:
        print(
            f"  {blk.kind.value:<7s} digit={blk.digit} length={blk.length} "
            f"lsb_position={blk.position}"
        )
    from .digits import block_prefix_integers

    prefixes = block_prefix_integers(e)
    print("prefix integers:", ", ".join(str(t) for t in prefixes))
    print(f"reverse(r) = {reverse_expansion(e).value()}")
    return EXIT_OK


# --- verify ------------------------------------------------------------------


def _verify_r_values(args) -> list[int]:
    if args.random is not None:
        if args.digits is None:
            raise UsageError("--random needs --digits")
        rnd = random.Random(args.seed)
        vals = []
        for _ in range(args.random):
            digits = [rnd.randrange(1, args.base)] + [
                rnd.randrange(args.base) for _ in range(args.digits - 1)
            ]
            v = 0
            for d in digits:
                v = v * args.base + d
            vals.append(v)
        return vals
    if args.range is None:
        raise UsageError("give a range A..B or --random COUNT --digits D")
    try:
        a, b = args.range.split("..")
        lo, hi = int(a), int(b)
    except ValueError as exc:
        raise UsageError(f"bad range {args.range!r}") from exc
    if lo > hi:
        raise UsageError("empty range")
    if lo < 1:
        raise UsageError("r = 0 has no blocks; ranges start at 1")
    return list(range(lo, hi + 1))


def _check_recursion(r: int, base: int, seed: int) -> list[str]:
    """One-digit recursion identity at random on-lattice points."""
    failures = []
    rnd = random.Random(seed * 0x9E3779B97F4A7C15 + r)  # keyed per r
    rt, r0 = divmod(r, base)
    s_r = exactdist.int_digit_sum(r, base)
    for _ in range(3):
        d = s_r - rnd.randrange(0, 2 * len(expand(r, base).digits) + 2) * (base - 1)
        lhs = exactdist.atom_mass(r, base, d)
        rhs = Fraction(base - r0, base) * exactdist.atom_mass(
            rt, base, d - r0
        ) + Fraction(r0, base) * exactdist.atom_mass(rt + 1, base, d + base - r0)
        if lhs != rhs:
            failures.append(f"recursion r={r} d={d}: {lhs} != {rhs}")
    return failures


def _check_reverse(r: int, base: int) -> list[str]:
    rev = reverse_expansion(expand(r, base)).value()
    k_max = min(40, exactdist.default_atom_cutoff(r, base, exactdist.DEFAULT_TAIL_EPS))
    a = exactdist.distribution(r, base, atoms=k_max)
    bdist = exactdist.distribution(rev, base, atoms=k_max)
    if a.atoms != bdist.atoms:
        bad = next(k for k in range(k_max + 1) if a.atoms[k] != bdist.atoms[k])
        return [
            f"reverse r={r} rev={rev} atom k={bad}: {a.atoms[bad]} != {bdist.atoms[bad]}"
        ]
    return []


def _check_bounds(r: int, base: int) -> list[str]:
    rep = exactdist.check_variance_bounds(r, base)
    if not rep.all_bounds_hold:
        return [
            f"bounds r={r}: var={rep.variance} rho={rep.rho} lambda={rep.lam} "
            f"[{rep.lower_bound}, {rep.upper_bound}] / [{rep.lambda_lower}, {rep.lambda_upper}]"
        ]
    return []


def _check_enclosure(r: int, base: int, level: int | None) -> list[str]:
    if level is None:
        level = 0
        while base ** (level + 1) < max(4096 * r, 2**16):
            level += 1
    dist = exactdist.distribution(r, base)
    return [
        f"enclosure r={v.r} k={v.k} d={v.d}: mass={v.mass} not in [{v.lo}, {v.hi}]"
        for v in oracle.check_enclosures(dist, level)
    ]


def cmd_verify(args) -> int:
    r_values = _verify_r_values(args)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    known = {"recursion", "reverse", "bounds", "enclosure"}
    unknown = set(checks) - known
    if unknown:
        raise UsageError(f"unknown checks: {sorted(unknown)}")

    def run_one(r):
        out = []
        if "recursion" in checks:
            out += _check_recursion(r, args.base, args.seed)
        if "reverse" in checks:
            out += _check_reverse(r, args.base)
        if "bounds" in checks:
            out += _check_bounds(r, args.base)
        if "enclosure" in checks:
            out += _check_enclosure(r, args.base, args.level)
        return out

    failures = []
    if args.jobs > 1:
        # the counting kernel releases the GIL, so threads overlap the sweep
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for chunk in pool.map(run_one, r_values):
                failures += chunk
    else:
        for r in r_values:
            failures += run_one(r)
    for line in failures:
        print("FAIL", line)
    print(
        f"verify: {len(r_values)} values, checks={','.join(checks)}, "
        f"failures={len(failures)}"
    )
    return EXIT_OK if not failures else EXIT_VIOLATION


# --- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    r = parse_r(args.r, args.base, args.radix_input)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    n = args.samples
    dist = exactdist.distribution(r, args.base, cache_dir=args.cache)
    delta, carries = odometer.drift_samples(r, args.base, n, args.seed, cap=args.cap)
    s_r = dist.s_r
    ident_ok = bool(np.all(delta == s_r - carries * (args.base - 1)))
    print(f"r = {r}  base = {args.base}  samples = {n}  seed = {args.seed}")
    print(f"carry identity holds for all samples: {ident_ok}")
    kmax = int(carries.max()) if n else 0
    counts = np.bincount(carries, minlength=kmax + 1)
    print("  k    d     count     empirical      exact          z")
    worst = 0.0
    for k in range(len(counts)):
        m = dist.atoms[k] if k < len(dist.atoms) else Fraction(0)
        mf = float(m)
        se = math.sqrt(mf * (1 - mf) / n) if 0 < mf < 1 else float("nan")
        z = (counts[k] / n - mf) / se if se and not math.isnan(se) else 0.0
        worst = max(worst, abs(z))
        print(
            f"  {k:<4d} {dist.position(k):<5d} {int(counts[k]):<9d} "
            f"{counts[k] / n:<13.6g} {mf:<14.6g} {z:+.2f}"
        )
    print(f"max |z| = {worst:.2f}")
    code = EXIT_OK if ident_ok else EXIT_VIOLATION
    if args.process:
        if r < 1:
            raise UsageError("--process needs r >= 1")
        X = mixing.process_matrix(r, args.base, n, args.seed, cap=args.cap)
        totals = X.sum(axis=1)
        same = bool(np.array_equal(np.sort(totals), np.sort(delta)))
        exact_match = bool(np.all(totals == delta))
        print(f"process: lambda = {X.shape[1]}, sum(X_i) == delta for all samples: {exact_match}")
        print(f"process totals histogram identical to drift histogram: {same}")
        means = X.mean(axis=0)
        print("per-block means:", " ".join(f"{v:+.4f}" for v in means))
        if not exact_match:
            code = EXIT_VIOLATION
    return code


# --- clt ---------------------------------------------------------------------


def pattern_family(pattern: str, reps: list[int], base: int) -> list[int]:
    digits = [int(ch) for ch in pattern]
    if not digits or any(d >= base for d in digits):
        raise UsageError(f"bad pattern {pattern!r} for base {base}")
    out = []
    for m in reps:
        v = 0
        for d in digits * m:
            v = v * base + d
        out.append(v)
    return out


def _rate_row_cells(row) -> list[str]:
    return [
        str(row.r),
        str(row.base),
        str(row.rho),
        str(row.lam),
        exactdist.rational_str(row.variance),
        fmt_float(row.ks_lo),
        fmt_float(row.ks_hi),
        fmt_float(row.ks_times_rho_eighth),
        fmt_float(row.smooth_gap),
        fmt_float(row.smooth_gap_times_sqrt_rho),
    ]


RATE_COLUMNS = [
    "r",
    "base",
    "rho",
    "lambda",
    "variance",
    "ks_lo",
    "ks_hi",
    "ks_times_rho_eighth",
    "smooth_gap",
    "smooth_gap_times_sqrt_rho",
]


def cmd_clt(args) -> int:
    if args.family:
        try:
            pattern, reps_txt = args.family.split("@")
            reps = [int(x) for x in reps_txt.split(",") if x]
        except ValueError as exc:
            raise UsageError("family syntax: PATTERN@m1,m2,...") from exc
        if not reps:
            raise UsageError("empty family")
        members = pattern_family(pattern, reps, args.base)
    elif args.list:
        with open(args.list, "r", encoding="utf-8") as fh:
            members = [int(line) for line in fh if line.strip()]
        if not members:
            raise UsageError("empty family list")
    else:
        raise UsageError("need --family or --list")
    report = cltdiag.rate_report(members, args.base, cache_dir=args.cache)
    lines = [",".join(RATE_COLUMNS)]
    lines += [",".join(_rate_row_cells(row)) for row in report.rows]
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        json_path = os.path.splitext(args.out)[0] + ".json"
        rows_json = [
            dict(zip(RATE_COLUMNS, _rate_row_cells(row))) for row in report.rows
        ]
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(rows_json, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out} and {json_path}")
    else:
        sys.stdout.write(csv_text)
    ks_ratio = report.column_ratio("ks_times_rho_eighth", args.min_rho)
    gap_ratio = report.column_ratio("smooth_gap_times_sqrt_rho", args.min_rho)
    print(f"ks_times_rho_eighth max/min (rho >= {args.min_rho}): {fmt_float(ks_ratio)}")
    print(
        f"smooth_gap_times_sqrt_rho max/min (rho >= {args.min_rho}): {fmt_float(gap_ratio)}"
    )
    blow_up = False
    for name, ratio in (("ks", ks_ratio), ("gap", gap_ratio)):
        if not math.isnan(ratio) and ratio > args.ratio_cap:
            print(f"column {name} exceeded the ratio cap {args.ratio_cap}")
            blow_up = True
    return EXIT_VIOLATION if blow_up else EXIT_OK


# --- phi ---------------------------------------------------------------------


def cmd_phi(args) -> int:
    r = parse_r(args.r, args.base, args.radix_input)
    if r < 1:
        raise UsageError("phi needs r >= 1")
    ks = [int(x) for x in args.k.split(",") if x]
    ps = [int(x) for x in args.p.split(",") if x]
    if not ks or not ps:
        raise UsageError("empty --k or --p")
    dec = decompose_blocks(expand(r, args.base))
    if dec.lam <= max(ks) + 1:
        raise UsageError(
            f"lambda(r) = {dec.lam} too small for max gap {max(ks)} (need > max k + 1)"
        )
    print("r,base,k,p,family_id,estimate,ci,bound,violated")
    violated = False
    for k in ks:
        for p in ps:
            est = mixing.estimate_phi(
                r, args.base, k, p, args.samples, seed=args.seed
            )
            violated = violated or est.violated
            print(
                f"{r},{args.base},{k},{p},{est.event_family},"
                f"{fmt_float(est.estimate)},{fmt_float(est.ci)},"
                f"{fmt_float(est.bound)},{est.violated}"
            )
    return EXIT_VIOLATION if violated else EXIT_OK


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="digitdrift",
        description="Exact digit-sum drift distributions, simulation and "
        "normal-approximation diagnostics.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, r_arg=True):
        if r_arg:
            p.add_argument("r", help="nonnegative integer (decimal)")
            p.add_argument(
                "--radix-input",
                action="store_true",
                help="read r as a base-b digit string, most-significant first",
            )
        p.add_argument("--base", type=int, default=10)

    p = sub.add_parser("dist", help="exact atoms, variance and moments")
    add_common(p)
    p.add_argument("--atoms", type=int, default=None, help="number of atoms (cutoff K = N-1)")
    p.add_argument(
        "--tail-eps",
        dest="tail_eps_exp",
        type=int,
        default=30,
        help="tail target 10^-EXP when --atoms is not given",
    )
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--cache", default=cache_dir_default())
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("blocks", help="block decomposition of r")
    add_common(p)
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("verify", help="invariant sweeps over a range of r")
    p.add_argument("range", nargs="?", default=None, help="inclusive range A..B")
    add_common(p, r_arg=False)
    p.add_argument("--random", type=int, default=None, help="count of random r")
    p.add_argument("--digits", type=int, default=None, help="digit count for --random")
    p.add_argument("--checks", default="recursion,reverse,bounds")
    p.add_argument("--level", type=int, default=None, help="tower level for enclosure")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--jobs",
        type=int,
        default=jobs_default(),
        help="worker threads for the sweep (env DIGITDRIFT_JOBS)",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="sampled drift histogram vs exact atoms")
    add_common(p)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--process", action="store_true", help="also sample per-block values")
    p.add_argument(
        "--cap",
        type=int,
        default=odometer.DEFAULT_PROPAGATION_CAP,
        help="carry propagation depth cap past the digits of r",
    )
    p.add_argument("--cache", default=cache_dir_default())
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("clt", help="rate table over a family of r")
    add_common(p, r_arg=False)
    p.add_argument("--family", default=None, help="PATTERN@m1,m2,... repeated pattern")
    p.add_argument("--list", default=None, help="file with one r per line")
    p.add_argument("--out", default=None, help="CSV output path (JSON twin alongside)")
    p.add_argument("--min-rho", type=int, default=16)
    p.add_argument("--ratio-cap", type=float, default=10.0)
    p.add_argument("--cache", default=cache_dir_default())
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("phi", help="empirical mixing estimates vs the bound")
    add_common(p)
    p.add_argument("--k", default="3,4,5,6", help="comma list of gaps")
    p.add_argument("--p", default="1", help="comma list of past lengths")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_phi)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DigitDriftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
