"""Counter-based random draws keyed by (seed, stream, ids).

Every random decision in the package is a pure function of the master seed,
a stream name and integer keys (edge id, node id, ...).  Draws therefore do
not depend on evaluation order, chunking or thread count.

The mixing function is the SplitMix64 finalizer applied in a chain.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _stable_hash(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def derive_seed(master: int, *parts) -> int:
    """Derive a 63-bit child seed from a master seed and any hashable tags."""
    return _stable_hash(int(master), *parts) >> 1


def keyed_bits(seed, stream: str, *keys) -> np.ndarray:
    """64-bit hash for every broadcast combination of ``seed`` and ``keys``."""
    seed_arr = np.asarray(seed)
    if seed_arr.dtype == object or seed_arr.ndim == 0:
        seed_arr = np.asarray(int(seed) & _MASK64, dtype=np.uint64)
    else:
        seed_arr = seed_arr.astype(np.uint64)
    h = _mix64(seed_arr ^ np.uint64(_stable_hash("stream", stream)))
    for k in keys:
        k = np.asarray(k).astype(np.uint64)
        with np.errstate(over="ignore"):
            h = _mix64(h ^ _mix64(k + _GOLDEN))
    return h


def keyed_uniform(seed, stream: str, *keys) -> np.ndarray:
    """Uniform floats in [0, 1), one per broadcast element of ``seed`` x ``keys``."""
    bits = keyed_bits(seed, stream, *keys)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def generator(seed: int, *parts) -> np.random.Generator:
    """A numpy Generator for sequential work (graph generation, splits)."""
    return np.random.default_rng(derive_seed(seed, *parts))
