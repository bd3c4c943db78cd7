import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from powerhash.core import power_hash, power_hash_array
from powerhash.mixers import GOLDEN, MASK64, mix64, premixed_keys
from powerhash.rehash import (
    MAX_PROBES,
    SHED_SALT,
    AvailabilityView,
    RehashOutcome,
    lookup_available,
    lookup_available_array,
    probe_key,
    random_outage,
    shed_load,
    shed_load_array,
    shed_score,
)

u64 = st.integers(min_value=0, max_value=MASK64)


def test_view_validation():
    with pytest.raises(ValueError):
        AvailabilityView(3, np.ones(4, dtype=bool))
    with pytest.raises(ValueError):
        AvailabilityView(3, np.array([True, False, True]), fallback=(1,))
    with pytest.raises(ValueError):
        AvailabilityView(3, np.ones(3, dtype=bool), fallback=(3,))


def test_view_constructors_agree():
    a = AvailabilityView.from_bitmap("1101\n01", fallback=(0,))
    b = AvailabilityView.from_predicate(6, lambda i: i not in (2, 4), fallback=(0,))
    assert a.n == 6
    assert np.array_equal(a.available, b.available)
    assert a.is_available(3) and not a.is_available(2)
    with pytest.raises(ValueError):
        AvailabilityView.from_bitmap("10x1")


def test_probe_key_definition():
    assert probe_key(5, 3) == mix64(5 ^ ((3 * GOLDEN) & MASK64))


@given(u64, st.integers(1, 5000))
def test_all_available_is_identity(key, n):
    out = lookup_available(key, AvailabilityView.all_available(n))
    assert (out.bucket, out.probes, out.fell_back) == (power_hash(key, n), 0, False)


def test_probing_lands_on_available_bucket():
    view = random_outage(200, 0.25, seed=3, fallback_size=2)
    for k in premixed_keys(9, 5000):
        out = lookup_available(int(k), view)
        assert view.available[out.bucket]
        assert out.probes <= MAX_PROBES
        assert not out.fell_back or out.bucket in view.fallback
        if view.available[power_hash(int(k), 200)]:
            assert out.probes == 0


def test_fallback_path():
    # three of four buckets down: each probe succeeds with probability 1/4
    view = AvailabilityView(4, np.array([False, False, False, True]), fallback=(3,))
    outs = [lookup_available(int(k), view) for k in premixed_keys(1, 4000)]
    assert all(o.bucket == 3 for o in outs)
    fb = [o for o in outs if o.fell_back]
    assert fb and all(o.probes == MAX_PROBES for o in fb)
    assert abs(len(fb) / 4000 - 0.75**8) < 0.03


def test_fallback_hashes_over_fallback_set():
    view = AvailabilityView(6, np.array([False] * 4 + [True, True]), fallback=(4, 5))
    for k in premixed_keys(2, 500):
        out = lookup_available(int(k), view, max_probes=0)
        if power_hash(int(k), 6) >= 4:
            assert out == RehashOutcome(power_hash(int(k), 6), 0, False)
            continue
        assert out.fell_back
        assert out.bucket == (4, 5)[mix64(int(k)) % 2]


def test_no_fallback_raises_when_exhausted():
    view = AvailabilityView(2, np.array([False, True]))
    with pytest.raises(ValueError):
        for k in premixed_keys(3, 2000):
            lookup_available(int(k), view, max_probes=1)


def test_array_matches_scalar():
    view = random_outage(64, 0.3, seed=5, fallback_size=3)
    keys = premixed_keys(4, 20000)
    batch = lookup_available_array(keys, view)
    for i in range(0, 20000, 3):
        o = lookup_available(int(keys[i]), view)
        assert (o.bucket, o.probes, o.fell_back) == (int(batch.buckets[i]), int(batch.probes[i]), bool(batch.fell_back[i]))


@pytest.mark.parametrize("q", [0.05, 0.1, 0.25])
def test_expected_attempts_near_geometric(q):
    view = random_outage(1000, q, seed=11, fallback_size=1)
    batch = lookup_available_array(premixed_keys(12, 1_000_000), view)
    attempts = batch.probes.mean() + 1.0
    target = 1.0 / (1.0 - q)
    assert attempts <= target * 1.1
    assert abs(attempts - target) <= 0.1 * target


def test_toggling_one_bucket_moves_its_keys_only():
    n = 100
    keys = premixed_keys(13, 1_000_000)
    base = lookup_available_array(keys, AvailabilityView.all_available(n)).buckets
    toggled = lookup_available_array(keys, AvailabilityView.all_available(n).without(37)).buckets
    moved = base != toggled
    assert np.all(base[moved] == 37)
    assert abs(moved.mean() - 1 / n) < 0.002


def test_shed_zero_fraction_is_identity():
    view = AvailabilityView.all_available(64, fallback=(0,))
    for k in premixed_keys(1, 3000):
        out = shed_load(int(k), view, 0.0, 5)
        assert out.bucket == power_hash(int(k), 64) and out.probes == 0


def test_shed_fraction_of_overloaded_keys():
    # with n = 64 (a power of two) every key whose low six bits are zero lives on bucket 0
    keys = premixed_keys(2, 1_000_000) & np.uint64(~63 & MASK64)
    view = AvailabilityView.all_available(64, fallback=(1,))
    assert np.all(power_hash_array(keys, 64) == 0)
    out = shed_load_array(keys, view, 0.25, 0)
    moved = out.buckets != 0
    assert abs(moved.mean() - 0.25) < 0.01
    assert np.all(out.probes[moved] >= 1)


def test_shed_sets_are_nested():
    keys = [int(k) for k in premixed_keys(8, 100_000)]
    view = AvailabilityView.all_available(16, fallback=(3,))
    def shed_set(p):
        return {k for k in keys if shed_load(k, view, p, 2).bucket != power_hash(k, 16)}
    low, high = shed_set(0.2), shed_set(0.3)
    assert low and low <= high


def test_shed_score_definition():
    assert shed_score(77) == mix64(77 ^ SHED_SALT) / 2.0**64


def test_shed_array_matches_scalar():
    view = AvailabilityView.all_available(48, fallback=(9,))
    keys = premixed_keys(15, 20000)
    batch = shed_load_array(keys, view, 0.4, 6)
    for i in range(0, 20000, 5):
        o = shed_load(int(keys[i]), view, 0.4, 6)
        assert (o.bucket, o.probes, o.fell_back) == (int(batch.buckets[i]), int(batch.probes[i]), bool(batch.fell_back[i]))


@pytest.mark.parametrize("fraction, bucket", [(-0.1, 0), (1.0, 0), (0.5, 64)])
def test_shed_rejects_bad_arguments(fraction, bucket):
    with pytest.raises(ValueError):
        shed_load(1, AvailabilityView.all_available(64), fraction, bucket)


def test_outage_is_reproducible():
    a, b = random_outage(500, 0.1, seed=4), random_outage(500, 0.1, seed=4)
    assert np.array_equal(a.available, b.available) and a.fallback == b.fallback
    assert np.count_nonzero(~a.available) == 50
