"""Named random substreams derived from one master seed.

Each consumer (traffic per slice, fading, exploration, minibatches, ...) gets
its own generator keyed by name, so changing how much randomness one consumer
draws never shifts another consumer's stream.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))
