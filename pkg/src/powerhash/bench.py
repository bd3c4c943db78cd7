"""Lookup-latency benchmark of power, jump and modular hashing."""
from __future__ import annotations

import gc
import statistics
import time
from dataclasses import dataclass, field

from .baselines import jump_hash, mod_hash
from .core import power_hash
from .mixers import MASK64, mix64

BENCH_FUNCTIONS = {"power": power_hash, "jump": jump_hash, "mod": mod_hash}
DEFAULT_GRID = (1 << 4, 1 << 8, 1 << 12, 1 << 16, 1 << 20, 1 << 24)


@dataclass
class BenchPoint:
    algorithm: str
    n: int
    mean_ns: float
    stddev_ns: float
    reps: int


@dataclass
class BenchReport:
    keys: int
    warmup: int
    reps: int
    points: list[BenchPoint] = field(default_factory=list)
    checksum: int = 0

    def mean_ns(self, algorithm: str, n: int) -> float:
        for p in self.points:
            if p.algorithm == algorithm and p.n == n:
                return p.mean_ns
        raise KeyError((algorithm, n))

    def rows(self) -> list[dict]:
        return [
            {"algorithm": p.algorithm, "n": p.n, "mean_ns": p.mean_ns, "stddev_ns": p.stddev_ns, "reps": p.reps}
            for p in self.points
        ]


def _batch_ns(fn, keys: list[int], n: int) -> tuple[int, int]:
    sink = 0
    start = time.perf_counter_ns()
    for k in keys:
        sink ^= fn(k, n)
    return time.perf_counter_ns() - start, sink


def run_bench(
    algorithms=("power", "jump", "mod"),
    buckets=DEFAULT_GRID,
    keys: int = 100_000,
    warmup: int = 10_000,
    reps: int = 5,
    seed: int = 0,
) -> BenchReport:
    """Mean per-lookup latency, measured as batch time divided by batch size.

    Each repetition hashes a fresh block of keys ``mix64(counter)`` so no two
    repetitions see the same keys. Points are interleaved across algorithms
    within every repetition so slow drift in machine speed hits all of them
    alike. Results are folded into a checksum to keep every lookup live.
    """
    report = BenchReport(keys=keys, warmup=warmup, reps=reps)
    samples: dict[tuple[str, int], list[float]] = {(a, n): [] for a in algorithms for n in buckets}
    warm = [mix64((seed + i) & MASK64) for i in range(warmup)]
    counter = seed + warmup
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for a in algorithms:
            fn = BENCH_FUNCTIONS[a]
            for n in buckets:
                for k in warm:
                    report.checksum ^= fn(k, n)
        for _ in range(reps):
            block = [mix64((counter + i) & MASK64) for i in range(keys)]
            counter += keys
            for a in algorithms:
                fn = BENCH_FUNCTIONS[a]
                for n in buckets:
                    elapsed, sink = _batch_ns(fn, block, n)
                    report.checksum ^= sink
                    samples[(a, n)].append(elapsed / keys)
    finally:
        if was_enabled:
            gc.enable()
    for (a, n), values in samples.items():
        report.points.append(BenchPoint(a, n, statistics.fmean(values), statistics.stdev(values) if len(values) > 1 else 0.0, len(values)))
    return report
