"""Power consistent hash: O(1) expected-time, O(1)-space consistent hashing."""
from .baselines import jump_hash, mod_hash
from .core import (
    ITER_CAP,
    MAX_BUCKETS,
    GTrace,
    PowerOfTwo,
    f,
    find_last_one_bit,
    g,
    power_hash,
    power_hash_array,
    premix,
    smallest_pow2_geq,
)
from .mixers import UniformStream, mix64, rand_kj, stream_new, stream_next
from .rehash import AvailabilityView, RehashOutcome, lookup_available, shed_load

__all__ = [
    "AvailabilityView",
    "GTrace",
    "ITER_CAP",
    "MAX_BUCKETS",
    "PowerOfTwo",
    "RehashOutcome",
    "UniformStream",
    "f",
    "find_last_one_bit",
    "g",
    "jump_hash",
    "lookup_available",
    "mix64",
    "mod_hash",
    "power_hash",
    "power_hash_array",
    "premix",
    "rand_kj",
    "shed_load",
    "smallest_pow2_geq",
    "stream_new",
    "stream_next",
]
