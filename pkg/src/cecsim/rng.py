"""Counter-based random streams derived from one run seed."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .errors import UsageError

# Sub-stream tags; a stream is addressed by (tag, *indices) under the run seed.
CELL_STREAM = 1
TRAJECTORY_STREAM = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the named sub-stream ``key`` of ``seed``.

    The same (seed, key) always yields the same sequence, whichever process
    asks for it.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=_key(key))
    return np.random.Generator(np.random.Philox(sequence))


def _key(key: Tuple[int, ...]) -> Tuple[int, ...]:
    if any(int(k) < 0 for k in key):
        raise UsageError(f"stream key entries must be non-negative: {key}")
    return tuple(int(k) for k in key)
