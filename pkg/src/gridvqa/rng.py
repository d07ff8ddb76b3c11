"""Stable hash-derived randomness.

Every stochastic choice in the pipeline draws from a stream derived by
hashing the global seed together with the identifiers of the work item
(image id, question key, ...). Results are therefore independent of
iteration order and worker scheduling.
"""

from __future__ import annotations

import hashlib
import random


def _digest(*parts: object, size: int = 16) -> bytes:
    h = hashlib.blake2b(digest_size=size)
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


def derive_seed(*parts: object) -> int:
    return int.from_bytes(_digest(*parts, size=8), "big")


def derive_rng(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))


def rank(seed: int, key: str) -> bytes:
    """Deterministic ranking token; keeping the smallest tokens up to a cap
    gives an order-independent uniform subsample."""
    return _digest("rank", seed, key)
