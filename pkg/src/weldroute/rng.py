"""Seeded, splittable random streams.

Every stream is a Philox (counter-based) generator keyed by a root seed plus a
path of integer or string keys.  The same ``(seed, *keys)`` always yields the
same draws, independent of how many other streams were created before it.
"""

from __future__ import annotations

import random
import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k) & _MASK64


def stream(seed: int, *keys) -> np.random.Generator:
    """Return the generator named by ``seed`` and ``keys``."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, *(_key(k) for k in keys)])
    return np.random.Generator(np.random.Philox(ss))


def as_pyrandom(rng) -> random.Random:
    """Adapt ``rng`` for scalar-heavy inner loops.

    numpy scalar draws cost about a microsecond each, which dominates the
    tree-embedding kernels; those kernels draw from a ``random.Random`` seeded
    once from the caller's generator instead.
    """
    if isinstance(rng, random.Random):
        return rng
    if isinstance(rng, np.random.Generator):
        return random.Random(int(rng.integers(0, 2**63)))
    if isinstance(rng, (int, np.integer)):
        return random.Random(int(rng))
    raise TypeError(f"unsupported random source: {type(rng).__name__}")


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, random.Random):
        return stream(rng.getrandbits(63))
    if isinstance(rng, (int, np.integer)):
        return stream(int(rng))
    raise TypeError(f"unsupported random source: {type(rng).__name__}")
