"""Reference algorithms: jump consistent hash and plain modular hashing."""
from __future__ import annotations

import numpy as np

from .core import MAX_BUCKETS, U64Array, _as_counts
from .mixers import MASK64, as_keys

_JUMP_MULT = 2862933555777941757
_TWO_31 = float(1 << 31)


def jump_hash(key: int, n: int) -> int:
    """Jump consistent hash (Lamping & Veach), O(ln n) expected time."""
    if not 1 <= n <= MAX_BUCKETS:
        raise ValueError(f"bucket count must be in [1, 2**32], got {n}")
    key &= MASK64
    b, j = -1, 0
    while j < n:
        b = j
        key = (key * _JUMP_MULT + 1) & MASK64
        j = int((b + 1) * (_TWO_31 / ((key >> 33) + 1)))
    return b


def mod_hash(key: int, n: int) -> int:
    if n < 1:
        raise ValueError(f"bucket count must be positive, got {n}")
    return (key & MASK64) % n


def jump_hash_array(keys, n) -> U64Array:
    keys = as_keys(keys).copy()
    size = keys.shape[0]
    n_f = _as_counts(n, size).astype(np.float64)
    b = np.zeros(size, dtype=np.float64)
    j = np.zeros(size, dtype=np.float64)
    mult, one, s33 = np.uint64(_JUMP_MULT), np.uint64(1), np.uint64(33)
    active = np.arange(size)
    while active.size:
        b[active] = j[active]
        k = keys[active] * mult + one
        keys[active] = k
        j[active] = np.floor((b[active] + 1.0) * (_TWO_31 / ((k >> s33).astype(np.float64) + 1.0)))
        active = active[j[active] < n_f[active]]
    return b.astype(np.uint64)


def mod_hash_array(keys, n) -> U64Array:
    keys = as_keys(keys)
    return keys % _as_counts(n, keys.shape[0])
