"""Availability-aware lookup: route keys off unavailable or overloaded buckets.

A key whose home bucket is down is re-probed through :func:`power_hash` with a
derived key ``mix64(key ^ t * GOLDEN)`` for ``t = 1 .. max_probes``. If every
probe lands on an unavailable bucket, the key goes to a reserved fallback
bucket chosen by hashing the key over the fallback list.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import power_hash, power_hash_array
from .mixers import GOLDEN, MASK64, U64Array, as_keys, mix64, mix64_array

MAX_PROBES = 8
SHED_SALT = 0xA24BAED4963EE407


@dataclass(frozen=True)
class AvailabilityView:
    """Snapshot of which buckets may receive keys.

    ``available`` is a boolean mask of length ``n``. Fallback buckets must be
    available; they are the last resort once probing is exhausted.
    """

    n: int
    available: np.ndarray
    fallback: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        mask = np.asarray(self.available, dtype=bool)
        if mask.shape != (self.n,):
            raise ValueError(f"availability mask must have length {self.n}")
        object.__setattr__(self, "available", mask)
        for b in self.fallback:
            if not 0 <= b < self.n:
                raise ValueError(f"fallback bucket {b} outside [0, {self.n})")
            if not mask[b]:
                raise ValueError(f"fallback bucket {b} is marked unavailable")

    @classmethod
    def all_available(cls, n: int, fallback: Sequence[int] = ()) -> AvailabilityView:
        return cls(n, np.ones(n, dtype=bool), tuple(fallback))

    @classmethod
    def from_predicate(
        cls, n: int, is_available: Callable[[int], bool], fallback: Sequence[int] = ()
    ) -> AvailabilityView:
        return cls(n, np.fromiter((bool(is_available(b)) for b in range(n)), bool, n), tuple(fallback))

    @classmethod
    def from_bitmap(cls, bits: str, fallback: Sequence[int] = ()) -> AvailabilityView:
        """Build from a string of ``1`` (available) / ``0`` (down); whitespace ignored."""
        cleaned = "".join(bits.split())
        if not cleaned or set(cleaned) - {"0", "1"}:
            raise ValueError("bitmap must contain only '0' and '1'")
        mask = np.frombuffer(cleaned.encode(), dtype=np.uint8) == ord("1")
        return cls(len(cleaned), mask, tuple(fallback))

    def is_available(self, bucket: int) -> bool:
        return bool(self.available[bucket])

    def without(self, bucket: int) -> AvailabilityView:
        """Copy of this view with ``bucket`` treated as unavailable."""
        mask = self.available.copy()
        mask[bucket] = False
        return AvailabilityView(self.n, mask, tuple(b for b in self.fallback if b != bucket))

    @property
    def has_outage(self) -> bool:
        return not bool(self.available.all())


@dataclass(frozen=True)
class RehashOutcome:
    bucket: int
    probes: int
    fell_back: bool


def probe_key(key: int, t: int) -> int:
    """Derived key used by probe ``t`` (``t >= 1``)."""
    return mix64(key ^ ((t * GOLDEN) & MASK64))


def _fallback(key: int, view: AvailabilityView) -> int:
    if not view.fallback:
        raise ValueError("all probes hit unavailable buckets and the view has no fallback buckets")
    return view.fallback[mix64(key) % len(view.fallback)]


def lookup_available(key: int, view: AvailabilityView, max_probes: int = MAX_PROBES) -> RehashOutcome:
    key &= MASK64
    home = power_hash(key, view.n)
    if view.available[home]:
        return RehashOutcome(home, 0, False)
    for t in range(1, max_probes + 1):
        b = power_hash(probe_key(key, t), view.n)
        if view.available[b]:
            return RehashOutcome(b, t, False)
    return RehashOutcome(_fallback(key, view), max_probes, True)


def shed_score(key: int) -> float:
    """Fixed per-key value in [0, 1] that decides shedding order."""
    return mix64((key & MASK64) ^ SHED_SALT) / 2.0**64


def shed_load(
    key: int,
    view: AvailabilityView,
    shed_fraction: float,
    overloaded: int,
    max_probes: int = MAX_PROBES,
) -> RehashOutcome:
    """Move roughly ``shed_fraction`` of the keys homed on ``overloaded`` elsewhere.

    Shedding uses a per-key score, so the set of shed keys only grows as
    ``shed_fraction`` grows.
    """
    if not 0.0 <= shed_fraction < 1.0:
        raise ValueError("shed_fraction must be in [0, 1)")
    if not 0 <= overloaded < view.n:
        raise ValueError(f"overloaded bucket {overloaded} outside [0, {view.n})")
    key &= MASK64
    home = power_hash(key, view.n)
    if home != overloaded or shed_score(key) >= shed_fraction:
        return lookup_available(key, view, max_probes)
    return lookup_available(key, view.without(overloaded), max_probes)


# -- vectorized counterparts -------------------------------------------------


@dataclass
class RehashBatch:
    buckets: U64Array
    probes: np.ndarray
    fell_back: np.ndarray
    home: U64Array = field(repr=False)


def lookup_available_array(keys, view: AvailabilityView, max_probes: int = MAX_PROBES) -> RehashBatch:
    """Vectorized :func:`lookup_available` over many keys."""
    keys = as_keys(keys)
    home = power_hash_array(keys, view.n)
    buckets = home.copy()
    probes = np.zeros(keys.shape, dtype=np.int32)
    fell_back = np.zeros(keys.shape, dtype=bool)
    pending = np.flatnonzero(~view.available[home])
    for t in range(1, max_probes + 1):
        if not pending.size:
            break
        derived = mix64_array(keys[pending] ^ np.uint64((t * GOLDEN) & MASK64))
        b = power_hash_array(derived, view.n)
        probes[pending] = t
        ok = view.available[b]
        buckets[pending[ok]] = b[ok]
        pending = pending[~ok]
    if pending.size:
        if not view.fallback:
            raise ValueError("all probes hit unavailable buckets and the view has no fallback buckets")
        fb = np.asarray(view.fallback, dtype=np.uint64)
        idx = mix64_array(keys[pending]) % np.uint64(len(fb))
        buckets[pending] = fb[idx]
        fell_back[pending] = True
    return RehashBatch(buckets, probes, fell_back, home)


def shed_scores_array(keys) -> np.ndarray:
    return mix64_array(as_keys(keys) ^ np.uint64(SHED_SALT)).astype(np.float64) / 2.0**64


def shed_load_array(
    keys, view: AvailabilityView, shed_fraction: float, overloaded: int, max_probes: int = MAX_PROBES
) -> RehashBatch:
    """Vectorized :func:`shed_load`."""
    if not 0.0 <= shed_fraction < 1.0:
        raise ValueError("shed_fraction must be in [0, 1)")
    keys = as_keys(keys)
    batch = lookup_available_array(keys, view, max_probes)
    shed = np.flatnonzero((batch.home == np.uint64(overloaded)) & (shed_scores_array(keys) < shed_fraction))
    if shed.size:
        moved = lookup_available_array(keys[shed], view.without(overloaded), max_probes)
        batch.buckets[shed] = moved.buckets
        batch.probes[shed] = moved.probes
        batch.fell_back[shed] = moved.fell_back
    return batch


def random_outage(n: int, fraction: float, seed: int, fallback_size: int = 1) -> AvailabilityView:
    """View with ``round(fraction * n)`` buckets down, chosen reproducibly from ``seed``.

    Fallback buckets are picked among the remaining available ones.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    down = int(round(fraction * n))
    if down + fallback_size > n:
        raise ValueError("not enough buckets left for the fallback set")
    mask = np.ones(n, dtype=bool)
    mask[order[:down]] = False
    fallback = tuple(sorted(int(b) for b in order[down:down + fallback_size]))
    return AvailabilityView(n, mask, fallback)
