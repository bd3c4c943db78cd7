"""Power consistent hash: O(1) expected-time consistent key-to-bucket mapping.

``power_hash(key, n)`` first hashes uniformly into the smallest power-of-two
range ``m >= n`` with :func:`f`. Keys landing in ``[n, m)`` are remapped by
the weighted hash :func:`g` onto ``[m/2 - 1, n)``, and keys that :func:`g`
leaves at ``m/2 - 1`` are spread back over ``[0, m/2)`` by ``f(key, m/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from .mixers import (
    GOLDEN,
    MASK64,
    STREAM_SALT,
    U64Array,
    as_keys,
    mix64,
    rand_kj_array,
    stream_draw_array,
    stream_states,
)

MAX_BUCKETS = 1 << 32
ITER_CAP = 64

_INV_2_53 = 2.0**-53
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


@dataclass(frozen=True)
class PowerOfTwo:
    m: int
    log2m: int


class GTrace(NamedTuple):
    result: int
    iterations: int


def _check_buckets(n: int) -> None:
    if not 1 <= n <= MAX_BUCKETS:
        raise ValueError(f"bucket count must be in [1, 2**32], got {n}")


def smallest_pow2_geq(n: int) -> PowerOfTwo:
    """Smallest power of two ``m`` with ``m >= n``, so ``m/2 < n <= m``."""
    _check_buckets(n)
    log2m = (n - 1).bit_length()
    return PowerOfTwo(1 << log2m, log2m)


def find_last_one_bit(k_bits: int) -> int:
    """Index of the most significant set bit of a nonzero integer."""
    if k_bits <= 0:
        raise ValueError("find_last_one_bit needs a positive integer")
    return k_bits.bit_length() - 1


def _f(key: int, m: int) -> int:
    k_bits = key & (m - 1)
    if k_bits == 0:
        return 0
    j = k_bits.bit_length() - 1
    h = 1 << j
    # rand_kj and mix64 inlined: this is the lookup hot path
    x = key ^ (((j + 1) * GOLDEN) & MASK64)
    x ^= x >> 30
    x = (x * _M1) & MASK64
    x ^= x >> 27
    x = (x * _M2) & MASK64
    x ^= x >> 31
    return h + (x & (h - 1))


def f(key: int, m: int) -> int:
    """Uniform consistent hash of ``key`` onto ``[0, m)`` for a power of two ``m``.

    The result is 0 when the low ``log2(m)`` key bits are all zero; otherwise
    with ``h`` the highest set bit among them, it is uniform on ``[h, 2h)``.
    """
    if m < 1 or m & (m - 1):
        raise ValueError(f"m must be a positive power of two, got {m}")
    return _f(key & MASK64, m)


def _g(key: int, n: int, s: int) -> GTrace:
    state = mix64(key ^ STREAM_SALT)
    x = s
    iterations = 0
    while True:
        state = (state + GOLDEN) & MASK64
        iterations += 1
        u = ((mix64(state) >> 11) + 1) * _INV_2_53
        r = math.floor((x + 1) / u)
        if r < n and iterations < ITER_CAP:
            x = r
        else:
            return GTrace(x, iterations)


def g(key: int, n: int, s: int) -> GTrace:
    """Weighted consistent hash onto ``[s, n)``.

    ``s`` receives probability ``(s+1)/n`` and every larger value ``1/n``.
    Walks an increasing random sequence starting at ``s`` and returns its last
    element below ``n``. The random draws are seeded by the key alone, so
    shrinking ``n`` never changes a result that is still in range.
    """
    _check_buckets(n)
    if not 0 <= s < n:
        raise ValueError(f"need 0 <= s < n, got s={s}, n={n}")
    return _g(key & MASK64, n, s)


def power_hash(key: int, n: int) -> int:
    """Map a 64-bit ``key`` to a bucket in ``[0, n)``."""
    if not 1 <= n <= MAX_BUCKETS:
        raise ValueError(f"bucket count must be in [1, 2**32], got {n}")
    key &= MASK64
    m = 1 << (n - 1).bit_length()
    r1 = _f(key, m)
    if r1 < n:
        return r1
    half = m >> 1
    r2 = _g(key, n, half - 1).result
    if r2 > half - 1:
        return r2
    return _f(key, half)


def power_hash_traced(key: int, n: int) -> tuple[int, int, int]:
    """Like :func:`power_hash` but also report which step resolved the key.

    Returns ``(bucket, step, g_iterations)`` where ``step`` is 1, 2 or 3 and
    ``g_iterations`` is 0 when :func:`g` was not called.
    """
    _check_buckets(n)
    key &= MASK64
    m = 1 << (n - 1).bit_length()
    r1 = _f(key, m)
    if r1 < n:
        return r1, 1, 0
    half = m >> 1
    trace = _g(key, n, half - 1)
    if trace.result > half - 1:
        return trace.result, 2, trace.iterations
    return _f(key, half), 3, trace.iterations


def premix(key: int) -> int:
    """Optional key pre-mix; a fixed bijection, so consistency is preserved."""
    return mix64(key)


# -- vectorized counterparts -------------------------------------------------

IntArray = npt.NDArray[np.int64]


class PowerTrace(NamedTuple):
    buckets: U64Array
    step: npt.NDArray[np.int8]
    g_iterations: npt.NDArray[np.int32]


def _as_counts(n, size: int) -> U64Array:
    arr = np.asarray(n, dtype=np.int64)
    if arr.size and (arr.min() < 1 or arr.max() > MAX_BUCKETS):
        raise ValueError("bucket counts must be in [1, 2**32]")
    return np.broadcast_to(arr.astype(np.uint64), (size,))


def _msb_index(x: U64Array) -> npt.NDArray[np.int64]:
    # exact for x < 2**53; callers only pass values below 2**32
    _, exp = np.frexp(x.astype(np.float64))
    return exp.astype(np.int64) - 1


def log2_ceil_array(n: U64Array) -> npt.NDArray[np.int64]:
    n = np.asarray(n, dtype=np.uint64)
    out = np.zeros(n.shape, dtype=np.int64)
    big = n > 1
    out[big] = _msb_index(n[big] - np.uint64(1)) + 1
    return out


def f_array(keys, m) -> U64Array:
    """Vectorized :func:`f`; ``m`` may be a scalar or per-key array of powers of two."""
    keys = as_keys(keys)
    m = np.broadcast_to(np.asarray(m, dtype=np.uint64), keys.shape)
    if np.any((m == 0) | ((m & (m - np.uint64(1))) != 0)):
        raise ValueError("m must be a positive power of two")
    k_bits = keys & (m - np.uint64(1))
    out = np.zeros(keys.shape, dtype=np.uint64)
    live = k_bits != 0
    if not live.any():
        return out
    j = _msb_index(k_bits[live]).astype(np.uint64)
    h = np.uint64(1) << j
    rnd = rand_kj_array(keys[live], j)
    out[live] = h + (rnd & (h - np.uint64(1)))
    return out


def g_array(keys, n, s) -> tuple[U64Array, npt.NDArray[np.int32]]:
    """Vectorized :func:`g`; returns ``(results, iterations)``."""
    keys = as_keys(keys)
    size = keys.shape[0]
    n_u = _as_counts(n, size)
    s_u = np.broadcast_to(np.asarray(s, dtype=np.uint64), (size,))
    if np.any(s_u >= n_u):
        raise ValueError("need 0 <= s < n")
    x = s_u.copy()
    iterations = np.zeros(size, dtype=np.int32)
    states = stream_states(keys)
    n_f = n_u.astype(np.float64)
    active = np.arange(size)
    while active.size:
        states[active], u = stream_draw_array(states[active])
        iterations[active] += 1
        r = np.floor((x[active].astype(np.float64) + 1.0) / u)
        go = (r < n_f[active]) & (iterations[active] < ITER_CAP)
        x[active[go]] = r[go].astype(np.uint64)
        active = active[go]
    return x, iterations


def power_hash_array(keys, n, trace: bool = False):
    """Vectorized :func:`power_hash`.

    ``n`` may be a scalar or an array broadcast against ``keys``. With
    ``trace=True`` a :class:`PowerTrace` is returned instead of the buckets.
    """
    keys = as_keys(keys)
    size = keys.shape[0]
    n_u = _as_counts(n, size)
    m = np.uint64(1) << log2_ceil_array(n_u).astype(np.uint64)
    out = f_array(keys, m)
    step = np.ones(size, dtype=np.int8)
    iters = np.zeros(size, dtype=np.int32)
    rest = np.flatnonzero(out >= n_u)
    if rest.size:
        half = m[rest] >> np.uint64(1)
        r2, it = g_array(keys[rest], n_u[rest], half - np.uint64(1))
        iters[rest] = it
        in_g = r2 > half - np.uint64(1)
        out[rest] = np.where(in_g, r2, f_array(keys[rest], half))
        step[rest] = np.where(in_g, 2, 3)
    if trace:
        return PowerTrace(out, step, iters)
    return out
