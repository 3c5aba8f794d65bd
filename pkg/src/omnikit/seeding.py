"""Deterministic seeding.

A run has one integer seed. Every consumer asks for a named stream; the name is
hashed (CRC32) into the spawn key of a ``numpy.random.SeedSequence`` so streams
are independent of each other and of call order.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *names) -> np.random.Generator:
    key = tuple(zlib.crc32(str(n).encode()) for n in names)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
