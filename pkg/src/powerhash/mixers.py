"""Deterministic 64-bit mixing primitives.

Everything here is bit-exact so that other ports of the library produce the
same buckets for the same keys. Scalar functions work on Python ints; the
``*_array`` variants operate on ``numpy.uint64`` arrays and must agree with
the scalar ones element for element.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
STREAM_SALT = 0xD1B54A32D192ED03

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 2.0**-53

U64Array = npt.NDArray[np.uint64]


def mix64(x: int) -> int:
    """Splitmix64 finalizer. A bijection on 64-bit integers."""
    x &= MASK64
    x ^= x >> 30
    x = (x * _M1) & MASK64
    x ^= x >> 27
    x = (x * _M2) & MASK64
    x ^= x >> 31
    return x


def rand_kj(key: int, j: int) -> int:
    """Pseudo-random 64-bit value determined by ``key`` and bit index ``j``."""
    if not 0 <= j <= 63:
        raise ValueError(f"bit index must be in [0, 63], got {j}")
    return mix64(key ^ (((j + 1) * GOLDEN) & MASK64))


@dataclass
class UniformStream:
    """Per-key generator of reals in (0, 1].

    Draws depend only on the seed key and the draw index, so the first k
    values never depend on how many values are requested afterwards.
    """

    state: int
    draws: int = 0

    @classmethod
    def from_key(cls, key: int) -> UniformStream:
        return cls(state=mix64(key ^ STREAM_SALT))

    def next(self) -> float:
        self.state = (self.state + GOLDEN) & MASK64
        self.draws += 1
        return ((mix64(self.state) >> 11) + 1) * _INV_2_53


def stream_new(key: int) -> UniformStream:
    return UniformStream.from_key(key)


def stream_next(stream: UniformStream) -> float:
    return stream.next()


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string (used for textual keys)."""
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


# -- vectorized counterparts -------------------------------------------------

_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)
GOLDEN_U = np.uint64(GOLDEN)
STREAM_SALT_U = np.uint64(STREAM_SALT)


def as_keys(keys) -> U64Array:
    """Coerce ints or an array-like to a 1-d ``uint64`` array."""
    if isinstance(keys, np.ndarray) and keys.dtype == np.uint64:
        return keys
    return np.asarray(keys, dtype=np.uint64)


def mix64_array(x: U64Array) -> U64Array:
    x = as_keys(x)
    x = x ^ (x >> _S30)
    x = x * _M1_U
    x = x ^ (x >> _S27)
    x = x * _M2_U
    return x ^ (x >> _S31)


def rand_kj_array(keys: U64Array, j) -> U64Array:
    """Vectorized :func:`rand_kj`; ``j`` may be a scalar or per-key array."""
    if np.ndim(j) == 0:
        salt = np.uint64(((int(j) + 1) * GOLDEN) & MASK64)
    else:
        salt = (np.asarray(j, dtype=np.uint64) + np.uint64(1)) * GOLDEN_U
    return mix64_array(as_keys(keys) ^ salt)


def stream_states(keys: U64Array) -> U64Array:
    return mix64_array(as_keys(keys) ^ STREAM_SALT_U)


def stream_draw_array(states: U64Array) -> tuple[U64Array, npt.NDArray[np.float64]]:
    """Advance every stream once; return the new states and the draws."""
    states = states + GOLDEN_U
    out = mix64_array(states) >> _S11
    return states, (out.astype(np.float64) + 1.0) * _INV_2_53


def premixed_keys(seed: int, count: int, start: int = 0) -> U64Array:
    """``mix64(seed + i)`` for ``i`` in ``[start, start + count)``."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    return mix64_array(idx + np.uint64(seed & MASK64))
