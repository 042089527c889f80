"""MinHash signatures over token shingles.

A signature is the slot-wise minimum of ``p`` keyed 64-bit permutations
applied to the shingle hashes of a token stream. Two signatures built under
the same ``(p, seed)`` estimate Jaccard similarity as the fraction of equal
slots.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import xxhash

from ..errors import IncompatibleSignatureError, UnhashableError

DEFAULT_P = 256
DEFAULT_SEED = 0x0BCD5EED
DEFAULT_WINDOW = 4
SUPPORTED_P = (64, 128, 256, 512, 1024)

# Base hash for shingles; the identifier is recorded in database headers so
# stored signatures stay comparable across versions.
BASE_HASH_ID = 1  # xxh64
BASE_HASH_NAME = "xxh64"

_SEP = b" "
_CHUNK = 8192

# splitmix64 finalizer constants; each slot key XOR + this mixer is a fixed
# bijection of the 64-bit shingle-hash space.
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)


def _tokens_of(tokens) -> Sequence[str]:
    return tokens.tokens if hasattr(tokens, "tokens") else tokens


def shingle(tokens, window: int = DEFAULT_WINDOW) -> list[bytes]:
    """All contiguous ``window``-token slices, each joined into one byte string.

    Streams shorter than the window yield a single shingle of the whole
    stream; an empty stream yields no shingles.
    """
    if window < 1:
        raise ValueError(f"shingle window must be >= 1, got {window}")
    toks = [t.encode("utf-8") for t in _tokens_of(tokens)]
    if not toks:
        return []
    if len(toks) < window:
        return [_SEP.join(toks)]
    return [_SEP.join(toks[i : i + window]) for i in range(len(toks) - window + 1)]


def shingle_bytes(data: bytes, window: int = DEFAULT_WINDOW) -> list[bytes]:
    """Byte-level shingles, for parity experiments with the byte-oriented hashes."""
    if window < 1:
        raise ValueError(f"shingle window must be >= 1, got {window}")
    if not data:
        return []
    if len(data) < window:
        return [data]
    return [data[i : i + window] for i in range(len(data) - window + 1)]


@dataclass(frozen=True)
class MinHashSignature:
    values: tuple[int, ...]
    p: int
    seed: int

    def __post_init__(self):
        if len(self.values) != self.p:
            raise ValueError(f"signature has {len(self.values)} values, expected p={self.p}")


def slot_keys(p: int, seed: int) -> np.ndarray:
    """The p per-slot permutation keys, derived deterministically from seed."""
    rng = random.Random(seed)
    return np.array([rng.getrandbits(64) for _ in range(p)], dtype=np.uint64)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def hash_shingles(shingles: Iterable[bytes], seed: int) -> np.ndarray:
    """Distinct 64-bit base hashes of the shingles."""
    return np.fromiter(
        {xxhash.xxh64_intdigest(s, seed & 0xFFFFFFFFFFFFFFFF) for s in shingles},
        dtype=np.uint64,
    )


def sign_hashes(hashes: np.ndarray, p: int, seed: int) -> MinHashSignature:
    """Slot-wise minima of the keyed permutations over precomputed shingle hashes."""
    if hashes.size == 0:
        raise UnhashableError("unhashable: empty function")
    keys = slot_keys(p, seed)
    minima = np.full(p, np.iinfo(np.uint64).max, dtype=np.uint64)
    for start in range(0, hashes.size, _CHUNK):
        block = hashes[start : start + _CHUNK]
        mixed = _mix(block[:, None] ^ keys[None, :])
        np.minimum(minima, mixed.min(axis=0), out=minima)
    return MinHashSignature(values=tuple(int(v) for v in minima), p=p, seed=seed)


def minhash_sign(
    tokens,
    p: int = DEFAULT_P,
    seed: int = DEFAULT_SEED,
    window: int = DEFAULT_WINDOW,
    byte_shingles: bool = False,
) -> MinHashSignature:
    """Signature of a token stream.

    ``byte_shingles`` switches the shingle unit from tokens to the serialized
    byte form, matching what the byte-oriented hashes consume.
    """
    if byte_shingles:
        data = _SEP.join(t.encode("utf-8") for t in _tokens_of(tokens))
        parts = shingle_bytes(data, window)
    else:
        parts = shingle(tokens, window)
    if not parts:
        raise UnhashableError("unhashable: empty function")
    return sign_hashes(hash_shingles(parts, seed), p, seed)


def minhash_similarity(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of equal slots; estimates Jaccard similarity of the shingle sets."""
    if a.p != b.p or a.seed != b.seed:
        raise IncompatibleSignatureError(
            f"signatures not comparable: (p={a.p}, seed={a.seed:#x}) "
            f"vs (p={b.p}, seed={b.seed:#x})"
        )
    matches = sum(1 for x, y in zip(a.values, b.values) if x == y)
    return matches / a.p
