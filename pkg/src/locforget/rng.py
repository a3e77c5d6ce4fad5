"""Seeded, counter-based random streams.

Every stream is numpy's Philox4x64-10 generator keyed by a 128-bit key built
from a 64-bit ``seed`` (low word) and a 64-bit ``stream`` index (high word):
``key = seed + (stream << 64)``, counter starting at zero.  Chain ``k`` of a run
with seed ``s`` draws from stream ``k``; standard normals come from
``Generator.standard_normal`` (ziggurat).  Another implementation reproduces the
streams bit-for-bit by matching Philox4x64-10 and numpy's ziggurat.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    if index < 0 or index > _MASK64:
        raise ValueError(f"stream index must fit in 64 bits, got {index}")
    return np.random.Generator(np.random.Philox(key=seed + (index << 64)))


def standard_normal(seed: int, shape, index: int = 0) -> np.ndarray:
    return stream(seed, index).standard_normal(shape)
