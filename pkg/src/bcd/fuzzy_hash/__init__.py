"""The four similarity fingerprints and a shared verdict contract.

MinHash and CTPH report similarity (higher is more similar); SimHash and
TLSH report distance (lower is more similar). ``verdict`` folds a raw score
and a threshold into a direction-aware boolean.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ValidationError
from .ctph import CtphDigest, ctph_compare, ctph_digest
from .minhash import (
    DEFAULT_P,
    DEFAULT_SEED,
    DEFAULT_WINDOW,
    SUPPORTED_P,
    BASE_HASH_ID,
    BASE_HASH_NAME,
    MinHashSignature,
    hash_shingles,
    minhash_sign,
    minhash_similarity,
    shingle,
    shingle_bytes,
    sign_hashes,
    slot_keys,
)
from .simhash import SimHashDigest, simhash_digest, simhash_distance
from .tlsh import TlshStyleDigest, tlsh_digest, tlsh_distance

ALGORITHMS = ("minhash", "simhash", "ctph", "tlsh")

# True when a higher raw score means more similar.
HIGHER_IS_SIMILAR = {"minhash": True, "simhash": False, "ctph": True, "tlsh": False}


@dataclass(frozen=True)
class SimilarityVerdict:
    algorithm: str
    raw: float
    threshold: float
    similar: bool

    @property
    def higher_is_similar(self) -> bool:
        return HIGHER_IS_SIMILAR[self.algorithm]


def verdict(algorithm: str, raw: float, threshold: float) -> SimilarityVerdict:
    """Apply a threshold in the algorithm's native direction.

    MinHash thresholds above 1 are read on the 0-100 percent scale
    (50 means 0.5).
    """
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}")
    if algorithm == "minhash":
        if not 0 <= threshold <= 100:
            raise ValidationError(f"minhash threshold {threshold} outside [0, 100]")
        if threshold > 1:
            threshold /= 100
    elif algorithm == "simhash":
        if not 0 <= threshold <= 64:
            raise ValidationError(f"simhash threshold {threshold} outside [0, 64]")
    elif algorithm == "ctph":
        if not 0 <= threshold <= 100:
            raise ValidationError(f"ctph threshold {threshold} outside [0, 100]")
    else:
        if threshold < 0:
            raise ValidationError(f"tlsh threshold {threshold} must be >= 0")
    similar = raw >= threshold if HIGHER_IS_SIMILAR[algorithm] else raw <= threshold
    return SimilarityVerdict(algorithm=algorithm, raw=raw, threshold=threshold, similar=similar)


__all__ = [
    "ALGORITHMS",
    "HIGHER_IS_SIMILAR",
    "BASE_HASH_ID",
    "BASE_HASH_NAME",
    "DEFAULT_P",
    "DEFAULT_SEED",
    "DEFAULT_WINDOW",
    "SUPPORTED_P",
    "CtphDigest",
    "MinHashSignature",
    "SimHashDigest",
    "SimilarityVerdict",
    "TlshStyleDigest",
    "ctph_compare",
    "ctph_digest",
    "hash_shingles",
    "minhash_sign",
    "minhash_similarity",
    "shingle",
    "shingle_bytes",
    "sign_hashes",
    "simhash_digest",
    "simhash_distance",
    "slot_keys",
    "tlsh_digest",
    "tlsh_distance",
    "verdict",
]
