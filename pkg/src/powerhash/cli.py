"""Command-line front end.

Exit codes: 0 on success, 1 when a verification fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import Iterable, Optional, Sequence

import numpy as np

from . import verify
from .bench import BENCH_FUNCTIONS, DEFAULT_GRID, run_bench
from .core import MAX_BUCKETS, power_hash
from .baselines import jump_hash, mod_hash
from .mixers import MASK64, fnv1a64, mix64, premixed_keys
from .rehash import MAX_PROBES, AvailabilityView, lookup_available_array, random_outage

SUITES = ("uniformity", "weighted", "monotonicity", "remap", "iterations")
LOOKUP_FUNCTIONS = {"power": power_hash, "jump": jump_hash, "mod": mod_hash}
G_MEAN_BOUND = 1.7
G_VARIANCE_BOUND = 0.70
MIN_BENCH_KEYS = 100_000
MIN_BENCH_REPS = 5


class UsageError(Exception):
    pass


# -- output -------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def render_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow(_fmt(v) for v in row.values())
    return buf.getvalue()


def render_table(rows: Sequence[dict], header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    if rows:
        cols = list(rows[0].keys())
        cells = [[_fmt(r[c]) for c in cols] for r in rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        lines.append("  ".join(c.rjust(w) for c, w in zip(cols, widths)))
        lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells)
    return "\n".join(lines) + "\n"


def emit(rows: Sequence[dict], args, header: Sequence[str] = (), out_path: Optional[str] = None) -> None:
    out_path = out_path or getattr(args, "out", None)
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(render_csv(rows))
    if args.format == "csv":
        sys.stdout.write(render_csv(rows))
    else:
        sys.stdout.write(render_table(rows, header))


# -- argument helpers -----------------------------------------------------------


def u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError(f"{text} is outside the unsigned 64-bit range")
    return value


def bucket_count(text: str) -> int:
    value = u64(text)
    if not 1 <= value <= MAX_BUCKETS:
        raise argparse.ArgumentTypeError(f"bucket count must be in [1, 2**32], got {text}")
    return value


def bucket_list(text: str) -> list[int]:
    return [bucket_count(part) for part in text.split(",") if part.strip()]


def name_list(choices):
    def parse(text: str) -> list[str]:
        names = [part.strip() for part in text.split(",") if part.strip()]
        bad = [n for n in names if n not in choices]
        if bad or not names:
            raise argparse.ArgumentTypeError(f"choose from {','.join(choices)}")
        return names

    return parse


def key_from_args(args) -> int:
    if args.key_string is not None:
        key = fnv1a64(args.key_string.encode("utf-8"))
    else:
        key = args.key
    return mix64(key) if args.premix else key


# -- commands -------------------------------------------------------------------


def cmd_lookup(args) -> int:
    key = key_from_args(args)
    print(LOOKUP_FUNCTIONS[args.algorithm](key, args.buckets))
    return 0


def _suite_uniformity(args):
    reports = [verify.check_uniformity(args.algorithm, n, args.samples, args.seed, args.alpha) for n in args.buckets]
    header = [f"uniformity: Pearson chi-square vs 1/n, alpha={args.alpha} (Wilson-Hilferty critical value), seed={args.seed}"]
    return [r.summary() for r in reports], all(r.passed for r in reports), header


def _suite_weighted(args):
    reports = []
    for n in args.buckets:
        s = args.s if args.s is not None else (1 << (n - 1).bit_length()) // 2 - 1
        reports.append(verify.check_weighted_g(n, s, args.samples, args.seed, args.alpha))
    header = [f"weighted: chi-square vs P(s)=(s+1)/n, P(x>s)=1/n, alpha={args.alpha}, seed={args.seed}"]
    return [r.summary() for r in reports], all(r.passed for r in reports), header


def _suite_monotonicity(args):
    if args.algorithm == "g":
        report = verify.check_g_monotonicity(args.max_buckets, args.keys, args.seed, pairs=args.pairs)
    else:
        report = verify.check_monotonicity(
            args.algorithm,
            args.max_buckets,
            args.keys,
            args.seed,
            pairs=args.pairs,
            powers_of_two=args.algorithm == "f",
        )
    header = [f"monotonicity: exact, zero violations required, seed={args.seed}"]
    if report.first_violation is not None:
        header.append(f"first violation: {report.first_violation}")
    return [report.summary()], report.passed, header


def _suite_remap(args):
    report = verify.measure_remap(args.algorithm, args.n_from, args.n_to, args.keys, args.seed)
    header = [f"remap: illegal_moves must be 0, seed={args.seed}"]
    return [report.summary()], report.illegal_moves == 0, header


def _suite_iterations(args):
    for n in args.buckets:
        if n & (n - 1) == 0:
            raise UsageError(f"--buckets {n} is a power of two; g is never called")
    reports = verify.measure_g_iterations(args.buckets, args.keys, args.seed, min_invocations=args.min_invocations)
    rows = []
    ok = True
    for r in reports:
        row = r.summary()
        good = r.mean < G_MEAN_BOUND and r.variance < G_VARIANCE_BOUND
        row["pass"] = int(good)
        ok &= good
        rows.append(row)
    header = [f"iterations: mean < {G_MEAN_BOUND}, variance < {G_VARIANCE_BOUND}, seed={args.seed}"]
    return rows, ok, header


SUITE_RUNNERS = {
    "uniformity": _suite_uniformity,
    "weighted": _suite_weighted,
    "monotonicity": _suite_monotonicity,
    "remap": _suite_remap,
    "iterations": _suite_iterations,
}

# defaults for `verify all`, keyed by suite
ALL_DEFAULTS = {
    "uniformity": {"buckets": [2, 3, 11, 16, 100, 257, 1000], "algorithm": "power"},
    "weighted": {"buckets": [11, 15, 100], "algorithm": "power"},
    "monotonicity": {"algorithm": "power"},
    "remap": {"algorithm": "power"},
    "iterations": {"buckets": [11, 1001, (1 << 20) + 1]},
}


def cmd_verify(args) -> int:
    if args.suite == "all":
        if args.out and not os.path.isdir(args.out):
            os.makedirs(args.out, exist_ok=True)
        ok = True
        for suite in SUITES:
            sub = argparse.Namespace(**vars(args))
            for key, value in ALL_DEFAULTS[suite].items():
                if getattr(args, f"_explicit_{key}", False) is False:
                    setattr(sub, key, value)
            if suite == "weighted":
                sub.s = None
            rows, passed, header = SUITE_RUNNERS[suite](sub)
            out = os.path.join(args.out, f"{suite}.csv") if args.out else None
            sys.stdout.write(f"== {suite}: {'PASS' if passed else 'FAIL'}\n")
            emit(rows, sub, header, out_path=out)
            ok &= passed
        return 0 if ok else 1

    rows, passed, header = SUITE_RUNNERS[args.suite](args)
    emit(rows, args, header)
    return 0 if passed else 1


def cmd_bench(args) -> int:
    if args.keys < MIN_BENCH_KEYS:
        raise UsageError(f"--keys must be at least {MIN_BENCH_KEYS}")
    if args.reps < MIN_BENCH_REPS:
        raise UsageError(f"--reps must be at least {MIN_BENCH_REPS}")
    report = run_bench(args.algorithms, args.buckets, args.keys, args.warmup, args.reps, args.seed)
    header = [
        f"bench: keys/rep={report.keys} warmup={report.warmup} reps={report.reps} grid={','.join(map(str, args.buckets))}",
        f"checksum={report.checksum:#x}",
    ]
    emit(report.rows(), args, header)
    return 0


def _read_bitmap(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def cmd_rehash_sim(args) -> int:
    if args.bitmap:
        view = AvailabilityView.from_bitmap(_read_bitmap(args.bitmap))
        n = view.n
        up = np.flatnonzero(view.available)
        if len(up) < args.fallback_size:
            raise UsageError("bitmap leaves fewer available buckets than --fallback-size")
        view = AvailabilityView(n, view.available, tuple(int(b) for b in up[: args.fallback_size]))
    else:
        if args.buckets is None:
            raise UsageError("give --buckets or --bitmap")
        view = random_outage(args.buckets, args.unavailable_fraction, args.seed, args.fallback_size)
    if args.down:
        mask = view.available.copy()
        for b in args.down:
            if not 0 <= b < view.n:
                raise UsageError(f"--down bucket {b} outside [0, {view.n})")
            mask[b] = False
        view = AvailabilityView(view.n, mask, tuple(b for b in view.fallback if mask[b]))

    keys = premixed_keys(args.seed, args.keys)
    batch = lookup_available_array(keys, view, args.max_probes)
    landed_ok = view.available[batch.buckets] | np.isin(batch.buckets, np.asarray(view.fallback, dtype=np.uint64))
    home_up = view.available[batch.home]
    probe_hist = np.bincount(batch.probes, minlength=args.max_probes + 1)
    rows = [
        {
            "n": view.n,
            "unavailable": int(np.count_nonzero(~view.available)),
            "keys": args.keys,
            "max_probes": args.max_probes,
            "fallback_size": len(view.fallback),
            "moved_fraction": float(np.count_nonzero(batch.buckets != batch.home)) / args.keys,
            "fallback_fraction": float(np.count_nonzero(batch.fell_back)) / args.keys,
            "mean_probes": float(batch.probes.mean()),
            "stable_home_violations": int(np.count_nonzero(home_up & (batch.buckets != batch.home))),
            "landed_ok": int(np.count_nonzero(landed_ok)),
        }
    ]
    header = [
        f"rehash-sim: seed={args.seed}",
        "probe histogram: " + " ".join(f"{t}:{c}" for t, c in enumerate(probe_hist)),
    ]
    emit(rows, args, header)
    ok = bool(landed_ok.all()) and rows[0]["stable_home_violations"] == 0
    return 0 if ok else 1


# -- parser ---------------------------------------------------------------------


class _Track(argparse.Action):
    """Store the value and remember that the user set it explicitly."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        setattr(namespace, f"_explicit_{self.dest}", True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powerhash", description="Power consistent hash lookups, verification and benchmarks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=u64, default=1)
    common.add_argument("--out", help="also write CSV to this path")
    common.add_argument("--format", choices=("table", "csv"), default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lookup", help="map one key to a bucket")
    key = p.add_mutually_exclusive_group(required=True)
    key.add_argument("--key", type=u64)
    key.add_argument("--key-string", help="UTF-8 text, folded with 64-bit FNV-1a")
    p.add_argument("--buckets", type=bucket_count, required=True)
    p.add_argument("--premix", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--algorithm", choices=sorted(LOOKUP_FUNCTIONS), default="power")
    p.set_defaults(func=cmd_lookup)

    p = sub.add_parser("verify", parents=[common], help="run a property-verification suite")
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--algorithm", choices=("power", "jump", "mod", "f", "g"), default="power", action=_Track)
    p.add_argument("--buckets", type=bucket_list, default=[11], action=_Track)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=verify.DEFAULT_ALPHA)
    p.add_argument("--s", type=int, help="lowest value for the weighted suite (default m/2-1)")
    p.add_argument("--max-buckets", type=int, default=256, dest="max_buckets")
    p.add_argument("--keys", type=int, default=100_000)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--from", type=bucket_count, default=100, dest="n_from")
    p.add_argument("--to", type=bucket_count, default=101, dest="n_to")
    p.add_argument("--min-invocations", type=int, default=100_000, dest="min_invocations")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="lookup latency per bucket count")
    p.add_argument("--algorithms", type=name_list(tuple(BENCH_FUNCTIONS)), default=list(BENCH_FUNCTIONS))
    p.add_argument("--buckets", type=bucket_list, default=list(DEFAULT_GRID))
    p.add_argument("--keys", type=int, default=MIN_BENCH_KEYS)
    p.add_argument("--warmup", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=MIN_BENCH_REPS)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rehash-sim", parents=[common], help="failure-injection experiment")
    p.add_argument("--buckets", type=bucket_count)
    p.add_argument("--bitmap", help="file of 0/1 characters, one per bucket (1 = available)")
    p.add_argument("--unavailable-fraction", type=float, default=0.0, dest="unavailable_fraction")
    p.add_argument("--down", type=lambda t: [int(x) for x in t.split(",") if x.strip()], default=[],
                   help="comma-separated buckets to mark unavailable")
    p.add_argument("--max-probes", type=int, default=MAX_PROBES, dest="max_probes")
    p.add_argument("--fallback-size", type=int, default=1, dest="fallback_size")
    p.add_argument("--keys", type=int, default=1_000_000)
    p.set_defaults(func=cmd_rehash_sim)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"powerhash: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
