"""Counter-based splittable random streams and pair-invariant hashing.

Every stochastic routine takes a 64-bit master seed and derives independent
Philox streams via hash(master seed, purpose tag, trial index).  Per-pair
edge randomness is derived from a symmetric hash of content-based vertex
keys so the edge set does not depend on vertex ordering or on how pair
enumeration is scheduled.
"""

import hashlib

import numpy as np

_U64 = np.uint64
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _tag_int(tag: str) -> int:
    """Stable 64-bit integer for a purpose tag."""
    return int.from_bytes(hashlib.blake2s(tag.encode()).digest()[:8], "little")


def stream(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Independent counter-based generator for (seed, tag, index)."""
    ss = np.random.SeedSequence(
        entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=(_tag_int(tag), int(index)),
    )
    return np.random.Generator(np.random.Philox(ss))


def mix64(z):
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    z = np.asarray(z, dtype=_U64)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        z = (z + _U64(0x9E3779B97F4A7C15)) & _MASK
        z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
        z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> _U64(31))


def vertex_keys(locations, marks) -> np.ndarray:
    """Content-based 64-bit key per vertex (order-independent)."""
    locs = np.ascontiguousarray(locations, dtype=np.float64)
    key = mix64(np.ascontiguousarray(marks, dtype=np.float64).view(_U64))
    for k in range(locs.shape[1]):
        bits = locs[:, k].copy().view(_U64)
        key = mix64(key ^ mix64(bits + _U64(k + 1)))
    return key


def pair_uniform(seed: int, key_i, key_j) -> np.ndarray:
    """Uniform(0,1) per unordered pair, symmetric in (key_i, key_j)."""
    ki = np.asarray(key_i, dtype=_U64)
    kj = np.asarray(key_j, dtype=_U64)
    lo = np.minimum(ki, kj)
    hi = np.maximum(ki, kj)
    s = _U64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    h = mix64(mix64(lo ^ s) ^ hi)
    # 53-bit mantissa, strictly below 1
    return (h >> _U64(11)).astype(np.float64) * (2.0**-53)
