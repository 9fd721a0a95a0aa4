from __future__ import annotations

import hashlib

import numpy as np


def purpose_key(purpose: str) -> int:
    """Stable 32-bit key for a stream purpose (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(purpose.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big")


def stream(master_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """
    Independent generator keyed by (master_seed, purpose, *indices).

    Streams with different keys are statistically independent, and the same key always
    yields the same sequence, so work can be split across processes in any order.
    """
    if master_seed < 0:
        raise ValueError(f"master_seed must be nonnegative; got {master_seed}")
    if any(i < 0 for i in indices):
        raise ValueError(f"stream indices must be nonnegative; got {indices!r}")

    seq = np.random.SeedSequence(
        entropy=master_seed,
        spawn_key=(purpose_key(purpose), *indices),
    )
    return np.random.Generator(np.random.PCG64(seq))
