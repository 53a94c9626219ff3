"""Seeded random-number substreams.

All randomness in the package flows from a single run seed. Components pull
named substreams so that, e.g., changing the number of DE generations never
perturbs the train/test split.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, label: str) -> np.random.Generator:
    """Generator for the named substream of a run seed.

    The same (seed, label) pair always yields the same stream, independent
    of platform and of any other stream drawn from the same seed.
    """
    return np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(label.encode("utf-8"))])
