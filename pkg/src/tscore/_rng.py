"""Counter-based keyed random streams.

Sample-splitting noise must be a pure function of (seed, stream, coordinate
key): results then do not depend on evaluation order or thread schedule, and
jointly permuting coordinates together with their identifiers permutes the
noise with them.  A stateful generator cannot provide that, so normals are
produced by hashing the key material through the SplitMix64 finalizer and
inverting the standard normal CDF.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(state: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, elementwise over uint64."""
    z = state + _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def string_key(text: str) -> int:
    """Stable 64-bit key for a string identifier (process-independent)."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(seed: int, *tokens: int) -> int:
    """Fold integer tokens into a seed, producing a new 64-bit seed."""
    state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for token in tokens:
            state = _mix(state ^ np.uint64(token & 0xFFFFFFFFFFFFFFFF))
    return int(state)


def keyed_normals(seed: int, stream: int, keys: np.ndarray) -> np.ndarray:
    """One standard normal per key, a pure function of (seed, stream, key)."""
    keys = np.asarray(keys, dtype=np.uint64)
    base = np.uint64(derive_seed(seed, stream))
    with np.errstate(over="ignore"):
        bits = _mix(_mix(keys) ^ base)
    # 53-bit mantissa, offset by half a ulp so u lies strictly inside (0, 1)
    u = ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def coordinate_keys(ids: list[str] | None, n: int) -> np.ndarray:
    """Per-coordinate stream keys: hashed ids when present, else positions."""
    if ids is None:
        return np.arange(n, dtype=np.uint64)
    return np.array([string_key(i) for i in ids], dtype=np.uint64)
