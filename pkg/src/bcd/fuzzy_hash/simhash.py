"""64-bit SimHash fingerprints; Hamming distance estimates cosine distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnhashableError
from .minhash import DEFAULT_SEED, DEFAULT_WINDOW, hash_shingles, shingle

BITS = 64


@dataclass(frozen=True)
class SimHashDigest:
    bits: int
    t: int = BITS

    def __post_init__(self):
        if self.t != BITS:
            raise ValueError(f"only {BITS}-bit digests are supported")
        if not 0 <= self.bits < (1 << BITS):
            raise ValueError("digest out of range")


def simhash_digest(tokens, seed: int = DEFAULT_SEED, window: int = DEFAULT_WINDOW) -> SimHashDigest:
    """Aggregate shingle hashes bit-wise: each shingle votes +1/-1 per bit position."""
    parts = shingle(tokens, window)
    if not parts:
        raise UnhashableError("unhashable: empty function")
    hashes = hash_shingles(parts, seed)
    shifts = np.arange(BITS, dtype=np.uint64)
    ones = ((hashes[:, None] >> shifts[None, :]) & np.uint64(1)).sum(axis=0)
    majority = ones * 2 > hashes.size  # ties resolve to 0
    value = 0
    for j in range(BITS):
        if majority[j]:
            value |= 1 << j
    return SimHashDigest(bits=value)


def simhash_distance(a: SimHashDigest, b: SimHashDigest) -> int:
    """Hamming distance in [0, 64]; lower means more similar."""
    return (a.bits ^ b.bits).bit_count()
