"""Deterministic seed derivation.

Every random choice in the package is driven by a 64-bit integer seed.  Child
seeds are derived from a master seed with a fixed, documented mixing function
so that runs can be reproduced by other implementations:

    child = int.from_bytes(blake2b(f"{master}/{tag}/{index}", digest_size=8), "little")

where ``master`` and ``index`` are written in decimal and ``tag`` is a short
ASCII stage name such as ``"sample"`` or ``"partition"``.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(master: int, tag: str, index: int = 0) -> int:
    payload = f"{int(master) & SEED_MASK}/{tag}/{int(index)}".encode("ascii")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    return np.random.default_rng(int(seed) & SEED_MASK)
