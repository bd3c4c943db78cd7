"""Statistical and exact checks of distribution and consistency properties.

All checks draw keys as ``mix64(seed + i)`` so a report is a pure function of
its parameters. Sampling runs in chunks whose partial results are summed,
which gives the same answer for any chunk size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Optional, Union

import numpy as np

from .baselines import jump_hash_array, mod_hash_array
from .core import f_array, g_array, power_hash_array, smallest_pow2_geq
from .mixers import U64Array, premixed_keys

BatchHash = Callable[[U64Array, object], U64Array]
Algorithm = Union[str, BatchHash]

ALGORITHMS: dict[str, BatchHash] = {
    "power": power_hash_array,
    "jump": jump_hash_array,
    "mod": mod_hash_array,
    "f": f_array,
}

DEFAULT_ALPHA = 0.001
CHUNK = 1 << 18


def resolve(algorithm: Algorithm) -> tuple[str, BatchHash]:
    """Return ``(name, vectorized function)`` for a registry name or callable.

    Callables must accept a ``uint64`` key array and a bucket count (scalar
    or array) and return an array of buckets.
    """
    if isinstance(algorithm, str):
        try:
            return algorithm, ALGORITHMS[algorithm]
        except KeyError:
            raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    return getattr(algorithm, "__name__", "custom"), algorithm


def _chunks(samples: int, chunk: int):
    for start in range(0, samples, chunk):
        yield start, min(chunk, samples - start)


# -- chi-square ---------------------------------------------------------------


def chi_square(observed, expected) -> float:
    """Pearson statistic sum((O - E)^2 / E) over cells with E > 0."""
    o = np.asarray(observed, dtype=np.float64)
    e = np.asarray(expected, dtype=np.float64)
    keep = e > 0
    return float(np.sum((o[keep] - e[keep]) ** 2 / e[keep]))


def chi_square_critical(dof: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Upper ``alpha`` quantile of chi-square via the Wilson-Hilferty cube approximation."""
    if dof < 1:
        return 0.0
    z = NormalDist().inv_cdf(1.0 - alpha)
    c = 2.0 / (9.0 * dof)
    return dof * (1.0 - c + z * math.sqrt(c)) ** 3


@dataclass
class DistributionReport:
    """Histogram over ``[lowest, n)`` with a chi-square test against ``expected``.

    ``lowest`` is 0 for plain uniformity checks and ``s`` for the weighted
    check of :func:`powerhash.core.g`.
    """

    algorithm: str
    n: int
    samples: int
    histogram: np.ndarray
    expected: np.ndarray
    chi_square: float
    degrees_of_freedom: int
    critical_value: float
    alpha: float
    lowest: int = 0

    @property
    def passed(self) -> bool:
        return self.chi_square <= self.critical_value

    @property
    def frequencies(self) -> np.ndarray:
        return self.histogram / self.samples

    def max_abs_deviation(self) -> float:
        return float(np.max(np.abs(self.frequencies - self.expected)))

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "lowest": self.lowest,
            "samples": self.samples,
            "chi_square": self.chi_square,
            "dof": self.degrees_of_freedom,
            "critical": self.critical_value,
            "alpha": self.alpha,
            "max_abs_dev": self.max_abs_deviation(),
            "pass": int(self.passed),
        }


def _distribution(name, n, lowest, histogram, expected, alpha) -> DistributionReport:
    samples = int(histogram.sum())
    dof = len(histogram) - 1
    stat = chi_square(histogram, expected * samples)
    return DistributionReport(
        algorithm=name,
        n=n,
        samples=samples,
        histogram=histogram,
        expected=expected,
        chi_square=stat,
        degrees_of_freedom=dof,
        critical_value=chi_square_critical(dof, alpha),
        alpha=alpha,
        lowest=lowest,
    )


def check_uniformity(
    algorithm: Algorithm,
    n: int,
    samples: int,
    seed: int,
    alpha: float = DEFAULT_ALPHA,
    chunk: int = CHUNK,
) -> DistributionReport:
    if samples < 100 * n:
        raise ValueError(f"need at least 100*n = {100 * n} samples, got {samples}")
    name, fn = resolve(algorithm)
    hist = np.zeros(n, dtype=np.int64)
    for start, count in _chunks(samples, chunk):
        buckets = np.asarray(fn(premixed_keys(seed, count, start), n)).astype(np.int64)
        if buckets.size and (buckets.min() < 0 or buckets.max() >= n):
            raise AssertionError(f"{name} produced a bucket outside [0, {n})")
        hist += np.bincount(buckets, minlength=n)
    return _distribution(name, n, 0, hist, np.full(n, 1.0 / n), alpha)


def weighted_g_target(n: int, s: int) -> np.ndarray:
    """Target probabilities of g over ``[s, n)``: ``(s+1)/n`` at ``s``, ``1/n`` elsewhere."""
    target = np.full(n - s, 1.0 / n)
    target[0] = (s + 1) / n
    return target


def check_weighted_g(
    n: int,
    s: int,
    samples: int,
    seed: int,
    alpha: float = DEFAULT_ALPHA,
    chunk: int = CHUNK,
) -> DistributionReport:
    if not 0 <= s < n:
        raise ValueError(f"need 0 <= s < n, got s={s}, n={n}")
    if samples < 100 * (n - s):
        raise ValueError(f"need at least 100*(n-s) = {100 * (n - s)} samples, got {samples}")
    hist = np.zeros(n - s, dtype=np.int64)
    for start, count in _chunks(samples, chunk):
        result, _ = g_array(premixed_keys(seed, count, start), n, s)
        hist += np.bincount(result.astype(np.int64) - s, minlength=n - s)
    return _distribution("g", n, s, hist, weighted_g_target(n, s), alpha)


# -- exact consistency --------------------------------------------------------


@dataclass
class ConsistencyReport:
    algorithm: str
    keys_tested: int
    pairs_tested: int
    checks: int
    violations: int = 0
    first_violation: Optional[tuple] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, bad: np.ndarray, describe: Callable[[int], tuple]) -> None:
        count = int(np.count_nonzero(bad))
        if count and self.first_violation is None:
            self.first_violation = describe(int(np.flatnonzero(bad)[0]))
        self.violations += count

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "keys": self.keys_tested,
            "pairs": self.pairs_tested,
            "checks": self.checks,
            "violations": self.violations,
            "pass": int(self.passed),
        }


def _pair_draws(rng: np.random.Generator, pairs: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    n1 = rng.integers(lo + 1, hi + 1, size=pairs)
    n2 = rng.integers(lo, n1)
    return n1, n2


def check_monotonicity(
    algorithm: Algorithm,
    n_max: int,
    keys: int,
    seed: int,
    pairs: int = 10_000,
    pair_n_max: int = 1_000_000,
    keys_per_pair: int = 10,
    powers_of_two: bool = False,
) -> ConsistencyReport:
    """Exact check that shrinking the bucket count only moves keys off removed buckets.

    Every key is evaluated at each transition ``n -> n+1`` for ``n < n_max``:
    a changed bucket must be the new bucket ``n``. Then ``pairs`` random pairs
    ``n2 < n1 <= pair_n_max`` are each checked on ``keys_per_pair`` keys: if
    ``hash(key, n1) < n2`` then ``hash(key, n2)`` must agree.

    With ``powers_of_two=True`` the bucket counts are restricted to powers of
    two up to ``n_max`` and every pair of them is checked on every key, which
    is the form of the property that :func:`powerhash.core.f` satisfies.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    name, fn = resolve(algorithm)
    key_arr = premixed_keys(seed, keys)
    if powers_of_two:
        return _check_pow2(name, fn, n_max, key_arr)

    report = ConsistencyReport(name, keys, pairs, 0)
    prev = np.asarray(fn(key_arr, 1))
    for n in range(1, n_max):
        cur = np.asarray(fn(key_arr, n + 1))
        bad = (prev != cur) & (cur != n)
        report.record(bad, lambda i, n=n, p=prev, c=cur: (int(key_arr[i]), n + 1, n, int(c[i]), int(p[i])))
        report.checks += keys
        prev = cur

    if pairs:
        rng = np.random.default_rng(seed)
        n1, n2 = _pair_draws(rng, pairs, 1, pair_n_max)
        n1 = np.repeat(n1, keys_per_pair)
        n2 = np.repeat(n2, keys_per_pair)
        pk = premixed_keys(seed ^ 0x5555_5555_5555_5555, n1.size)
        a1 = np.asarray(fn(pk, n1))
        a2 = np.asarray(fn(pk, n2))
        bad = (a1 < n2.astype(np.uint64)) & (a1 != a2)
        report.record(bad, lambda i: (int(pk[i]), int(n1[i]), int(n2[i]), int(a1[i]), int(a2[i])))
        report.checks += n1.size
    return report


def _check_pow2(name: str, fn: BatchHash, n_max: int, key_arr: U64Array) -> ConsistencyReport:
    top = n_max.bit_length() - 1
    values = [np.asarray(fn(key_arr, 1 << e)) for e in range(top + 1)]
    pairs = top * (top + 1) // 2
    report = ConsistencyReport(name, key_arr.size, pairs, 0)
    for e1 in range(1, top + 1):
        a1 = values[e1]
        for e2 in range(e1):
            a2 = values[e2]
            bad = (a1 < np.uint64(1 << e2)) & (a1 != a2)
            report.record(bad, lambda i, e1=e1, e2=e2, a1=a1, a2=a2: (int(key_arr[i]), 1 << e1, 1 << e2, int(a1[i]), int(a2[i])))
            report.checks += key_arr.size
    return report


def check_g_monotonicity(
    n_max: int,
    keys: int,
    seed: int,
    s_values: tuple[int, ...] = (0, 1, 7, 31),
    pairs: int = 10_000,
    pair_n_max: int = 1_000_000,
    keys_per_pair: int = 10,
) -> ConsistencyReport:
    """Consistency of g: ``g(key, n1, s) < n2`` implies ``g(key, n2, s) = g(key, n1, s)``.

    Exhaustive transitions ``n -> n+1`` for each ``s`` in ``s_values`` and
    ``n < n_max``, plus random triples ``s < n2 < n1 <= pair_n_max``.
    """
    key_arr = premixed_keys(seed, keys)
    report = ConsistencyReport("g", keys, pairs, 0)
    for s in s_values:
        if s + 1 >= n_max:
            continue
        prev, _ = g_array(key_arr, s + 1, s)
        for n in range(s + 1, n_max):
            cur, _ = g_array(key_arr, n + 1, s)
            bad = (prev != cur) & (cur != np.uint64(n))
            report.record(bad, lambda i, n=n, s=s, p=prev, c=cur: (int(key_arr[i]), n + 1, n, s, int(c[i]), int(p[i])))
            report.checks += keys
            prev = cur

    if pairs:
        rng = np.random.default_rng(seed)
        s = rng.integers(0, pair_n_max - 1, size=pairs)
        n1 = rng.integers(s + 2, pair_n_max + 1)
        n2 = rng.integers(s + 1, n1)
        s, n1, n2 = (np.repeat(a, keys_per_pair) for a in (s, n1, n2))
        pk = premixed_keys(seed ^ 0x3333_3333_3333_3333, s.size)
        a1, _ = g_array(pk, n1, s)
        a2, _ = g_array(pk, n2, s)
        bad = (a1 < n2.astype(np.uint64)) & (a1 != a2)
        report.record(bad, lambda i: (int(pk[i]), int(n1[i]), int(n2[i]), int(s[i]), int(a1[i]), int(a2[i])))
        report.checks += s.size
    return report


# -- remapping ------------------------------------------------------------------


@dataclass
class RemapReport:
    algorithm: str
    n_from: int
    n_to: int
    keys: int
    moved: int
    illegal_moves: int

    @property
    def moved_fraction(self) -> float:
        return self.moved / self.keys if self.keys else 0.0

    @property
    def minimal_fraction(self) -> float:
        """Fraction a consistent algorithm is expected to move."""
        lo, hi = sorted((self.n_from, self.n_to))
        return (hi - lo) / hi

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n_from": self.n_from,
            "n_to": self.n_to,
            "keys": self.keys,
            "moved": self.moved,
            "moved_fraction": self.moved_fraction,
            "minimal_fraction": self.minimal_fraction,
            "illegal_moves": self.illegal_moves,
        }


def measure_remap(
    algorithm: Algorithm,
    n_from: int,
    n_to: int,
    keys: int,
    seed: int,
    chunk: int = CHUNK,
) -> RemapReport:
    """Count keys that change bucket when resizing from ``n_from`` to ``n_to``.

    A move is illegal when shrinking and the old bucket still exists, or when
    growing and the key lands on a bucket that already existed.
    """
    name, fn = resolve(algorithm)
    moved = illegal = 0
    for start, count in _chunks(keys, chunk):
        k = premixed_keys(seed, count, start)
        old = np.asarray(fn(k, n_from))
        new = np.asarray(fn(k, n_to))
        changed = old != new
        moved += int(np.count_nonzero(changed))
        if n_to < n_from:
            illegal += int(np.count_nonzero(changed & (old < np.uint64(n_to))))
        elif n_to > n_from:
            illegal += int(np.count_nonzero(changed & (new < np.uint64(n_from))))
    return RemapReport(name, n_from, n_to, keys, moved, illegal)


# -- g iteration telemetry ----------------------------------------------------


def expected_g_iterations(n: int) -> float:
    """Mean loop passes of g when called from power_hash: ``1 + sum 1/(r+1)`` for ``s < r < n``."""
    s = smallest_pow2_geq(n).m // 2 - 1
    lo, hi = s + 2, n
    if hi < lo:
        return 1.0
    if hi - lo < 1_000_000:
        return 1.0 + float(np.sum(1.0 / np.arange(lo, hi + 1, dtype=np.float64)))
    return 1.0 + _harmonic(hi) - _harmonic(lo - 1)


def _harmonic(k: int) -> float:
    return math.log(k) + 0.5772156649015329 + 1.0 / (2 * k) - 1.0 / (12 * k * k)


@dataclass
class IterationReport:
    n: int
    keys: int
    invocations: int
    mean: float
    variance: float
    max: int
    histogram: np.ndarray = field(repr=False)
    step1_fraction: float
    expected_mean: float

    @property
    def expected_step1_fraction(self) -> float:
        return self.n / smallest_pow2_geq(self.n).m

    def summary(self) -> dict:
        return {
            "n": self.n,
            "keys": self.keys,
            "invocations": self.invocations,
            "mean": self.mean,
            "variance": self.variance,
            "max": self.max,
            "expected_mean": self.expected_mean,
            "step1_fraction": self.step1_fraction,
            "expected_step1_fraction": self.expected_step1_fraction,
        }


def measure_g_iterations(
    n_list,
    keys: int,
    seed: int,
    min_invocations: int = 0,
    max_keys: int = 50_000_000,
    chunk: int = CHUNK,
) -> list[IterationReport]:
    """Run power_hash over keys and record g's loop count for every call of g.

    Sampling continues past ``keys`` (in chunks) until ``min_invocations``
    calls of g are observed or ``max_keys`` keys were used.
    """
    reports = []
    for n in n_list:
        pow2 = smallest_pow2_geq(n)
        if pow2.m == n:
            raise ValueError(f"n={n} is a power of two, so g is never called")
        hist = np.zeros(0, dtype=np.int64)
        used = step1 = 0
        while used < keys or (hist.sum() < min_invocations and used < max_keys):
            count = min(chunk, keys - used) if used < keys else chunk
            t = power_hash_array(premixed_keys(seed, count, used), n, trace=True)
            used += count
            step1 += int(np.count_nonzero(t.step == 1))
            it = t.g_iterations[t.step != 1]
            counts = np.bincount(it, minlength=hist.size)
            if counts.size > hist.size:
                hist = np.pad(hist, (0, counts.size - hist.size))
            hist += counts
        total = int(hist.sum())
        values = np.arange(hist.size, dtype=np.float64)
        mean = float(np.dot(values, hist) / total) if total else 0.0
        var = float(np.dot((values - mean) ** 2, hist) / (total - 1)) if total > 1 else 0.0
        reports.append(
            IterationReport(
                n=n,
                keys=used,
                invocations=total,
                mean=mean,
                variance=var,
                max=int(np.flatnonzero(hist)[-1]) if total else 0,
                histogram=hist,
                step1_fraction=step1 / used,
                expected_mean=expected_g_iterations(n),
            )
        )
    return reports
