"""Deterministic seed derivation.

Every source of randomness in the package is a `numpy` generator seeded
through :func:`derive_seed`, a splitmix64-style mixer over (master seed,
stream index).  Work items (shadow model j, example i, ...) draw their seeds
independently from the master seed, never sequentially from a shared
generator, so results cannot depend on execution order or concurrency.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, stream: int) -> int:
    """Stable 64-bit seed for `stream` under `master`.

    Distinct streams give statistically independent generators; identical
    inputs always give the identical seed.
    """
    return _mix64((master + (stream + 1) * _GOLDEN) & _MASK64)


def stream_of(label: str) -> int:
    """Map a string label (e.g. a model digest) to a 64-bit stream index."""
    raw = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(raw[:8], "big")


def rng_for(master: int, *streams: int | str) -> np.random.Generator:
    """Generator for a chain of stream indices/labels under `master`."""
    seed = master & _MASK64
    for s in streams:
        seed = derive_seed(seed, stream_of(s) if isinstance(s, str) else s)
    return np.random.default_rng(seed)


# Reserved stream tags, kept well clear of shadow-model indices (0..n-1).
TARGET_MODEL_STREAM = 1 << 33
SHUFFLE_STREAM = 1 << 34
PROBE_MODEL_STREAM = 1 << 35
