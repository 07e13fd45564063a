"""Named, splittable random streams.

Every stochastic draw in the package comes from a generator built here, keyed
by an integer seed plus a path of names/integers, so independent components
never share a stream and runs are reproducible bit for bit.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode())


def stream(seed: int, *path) -> np.random.Generator:
    """Generator for ``seed`` and a stream path such as ``("env", episode)``."""
    entropy = [int(seed)] + [_key(p) for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
