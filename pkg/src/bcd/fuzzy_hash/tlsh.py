"""TLSH-style locality-sensitive hash: Pearson-hashed byte triplets from a
5-byte sliding window populate 128 buckets; the digest encodes per-bucket
quartile codes plus a short header, and distance combines body diff with
modular header differences. Lower distance means more similar; 0 is a match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import UnhashableError

MIN_DATA_LENGTH = 50  # inputs must exceed this many bytes
WINDOW = 5
BUCKETS = 128
CODE_SIZE = 32  # bytes of packed 2-bit bucket codes

# Pearson's permutation table, as used for the triplet bucket mapping.
_V = bytes(
    [
        1, 87, 49, 12, 176, 178, 102, 166, 121, 193, 6, 84, 249, 230, 44, 163,
        14, 197, 213, 181, 161, 85, 218, 80, 64, 239, 24, 226, 236, 142, 38, 200,
        110, 177, 104, 103, 141, 253, 255, 50, 77, 101, 81, 18, 45, 96, 31, 222,
        25, 107, 190, 70, 86, 237, 240, 34, 72, 242, 20, 214, 244, 227, 149, 235,
        97, 234, 57, 22, 60, 250, 82, 175, 208, 5, 127, 199, 111, 62, 135, 248,
        174, 169, 211, 58, 66, 154, 106, 195, 245, 171, 17, 187, 182, 179, 0, 243,
        132, 56, 148, 75, 128, 133, 158, 100, 130, 126, 91, 13, 153, 246, 216, 219,
        119, 68, 223, 78, 83, 88, 201, 99, 122, 11, 92, 32, 136, 114, 52, 10,
        138, 30, 48, 183, 156, 35, 61, 26, 143, 74, 251, 94, 129, 162, 63, 152,
        170, 7, 115, 167, 241, 206, 3, 150, 55, 59, 151, 220, 90, 53, 23, 131,
        125, 173, 15, 238, 79, 95, 89, 16, 105, 137, 225, 224, 217, 160, 37, 123,
        118, 73, 2, 157, 46, 116, 9, 145, 134, 228, 207, 212, 202, 215, 69, 229,
        27, 188, 67, 124, 168, 252, 42, 4, 29, 108, 21, 247, 19, 205, 39, 203,
        233, 40, 186, 147, 198, 192, 155, 33, 164, 191, 98, 204, 165, 180, 117, 76,
        140, 36, 210, 172, 41, 54, 159, 8, 185, 232, 113, 196, 231, 47, 146, 120,
        51, 65, 28, 144, 254, 221, 93, 189, 194, 139, 112, 43, 71, 109, 184, 209,
    ]
)

_LOG_1_5 = 0.4054651081081644
_LOG_1_3 = 0.26236426446749106
_LOG_1_1 = 0.09531017980432486


def _pearson(salt: int, i: int, j: int, k: int) -> int:
    h = _V[salt]
    h = _V[h ^ i]
    h = _V[h ^ j]
    h = _V[h ^ k]
    return h


def _capture_length(n: int) -> int:
    if n <= 656:
        i = math.floor(math.log(n) / _LOG_1_5)
    elif n <= 3199:
        i = math.floor(math.log(n) / _LOG_1_3 - 8.72777)
    else:
        i = math.floor(math.log(n) / _LOG_1_1 - 62.5472)
    return i & 0xFF


def _swap_nibbles(b: int) -> int:
    return ((b & 0x0F) << 4) | (b >> 4)


@dataclass(frozen=True)
class TlshStyleDigest:
    checksum: int
    length_byte: int
    q1_ratio: int
    q2_ratio: int
    body: bytes  # CODE_SIZE packed bytes, 4 buckets of 2 bits each

    def __post_init__(self):
        if len(self.body) != CODE_SIZE:
            raise ValueError(f"body must be {CODE_SIZE} bytes")

    def hex(self) -> str:
        header = bytes(
            [
                _swap_nibbles(self.checksum),
                _swap_nibbles(self.length_byte),
                _swap_nibbles((self.q1_ratio << 4) | self.q2_ratio),
            ]
        )
        return "T1" + (header + self.body[::-1]).hex().upper()


def tlsh_digest(data: bytes) -> TlshStyleDigest:
    """Digest of a byte string longer than the 50-byte minimum-size gate."""
    n = len(data)
    if n <= MIN_DATA_LENGTH:
        raise UnhashableError(
            f"input of {n} bytes is below the {MIN_DATA_LENGTH}-byte size gate"
        )
    buckets = [0] * 256
    checksum = 0
    for i in range(4, n):
        b0, b1, b2, b3, b4 = data[i], data[i - 1], data[i - 2], data[i - 3], data[i - 4]
        checksum = _pearson(0, b0, b1, checksum)
        buckets[_pearson(2, b0, b1, b2)] += 1
        buckets[_pearson(3, b0, b1, b3)] += 1
        buckets[_pearson(5, b0, b2, b3)] += 1
        buckets[_pearson(7, b0, b2, b4)] += 1
        buckets[_pearson(11, b0, b1, b4)] += 1
        buckets[_pearson(13, b0, b3, b4)] += 1

    counts = buckets[:BUCKETS]
    ordered = sorted(counts)
    q1, q2, q3 = ordered[BUCKETS // 4 - 1], ordered[BUCKETS // 2 - 1], ordered[3 * BUCKETS // 4 - 1]
    nonzero = sum(1 for c in counts if c > 0)
    if q3 == 0 or nonzero <= BUCKETS // 2:
        raise UnhashableError("input has too little variation to fill the buckets")

    body = bytearray(CODE_SIZE)
    for i in range(CODE_SIZE):
        h = 0
        for j in range(4):
            k = counts[4 * i + j]
            if q3 < k:
                h += 3 << (j * 2)
            elif q2 < k:
                h += 2 << (j * 2)
            elif q1 < k:
                h += 1 << (j * 2)
        body[i] = h

    return TlshStyleDigest(
        checksum=checksum,
        length_byte=_capture_length(n),
        q1_ratio=int((q1 * 100) / q3) % 16,
        q2_ratio=int((q2 * 100) / q3) % 16,
        body=bytes(body),
    )


def _mod_diff(x: int, y: int, rng: int) -> int:
    d = (x - y) % rng
    return min(d, rng - d)


def tlsh_distance(a: TlshStyleDigest, b: TlshStyleDigest) -> int:
    """Unbounded distance, 0 for near-identical inputs."""
    diff = 0
    ldiff = _mod_diff(a.length_byte, b.length_byte, 256)
    if ldiff > 1:
        diff += ldiff * 12
    else:
        diff += ldiff
    for qa, qb in ((a.q1_ratio, b.q1_ratio), (a.q2_ratio, b.q2_ratio)):
        qdiff = _mod_diff(qa, qb, 16)
        if qdiff <= 1:
            diff += qdiff
        else:
            diff += (qdiff - 1) * 12
    if a.checksum != b.checksum:
        diff += 1
    for xa, xb in zip(a.body, b.body):
        for shift in (0, 2, 4, 6):
            d = abs(((xa >> shift) & 3) - ((xb >> shift) & 3))
            diff += 6 if d == 3 else d
    return diff
