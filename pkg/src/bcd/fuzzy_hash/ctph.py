"""Context-triggered piecewise hashing (spamsum family).

A rolling hash over the input triggers block boundaries; each block
contributes one base64 character derived from an FNV-style block hash. Two
digests are produced per input, at the triggered block size and at double
that size, and comparison rescales the digest edit distance to 0-100.
Digest text form ``blocksize:chunk:double_chunk`` is interoperable with the
standard tool format.
"""

from __future__ import annotations

from dataclasses import dataclass

MIN_BLOCKSIZE = 3
DIGEST_LEN = 64
ROLLING_WINDOW = 7
_FNV_PRIME = 0x01000193
_HASH_INIT = 0x28021967
_B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"
_U32 = 0xFFFFFFFF


@dataclass(frozen=True)
class CtphDigest:
    blocksize: int
    chunk: str
    double_chunk: str

    def __str__(self) -> str:
        return f"{self.blocksize}:{self.chunk}:{self.double_chunk}"

    @classmethod
    def parse(cls, text: str) -> "CtphDigest":
        blocksize, chunk, double_chunk = text.split(":", 2)
        return cls(blocksize=int(blocksize), chunk=chunk, double_chunk=double_chunk)


class _Roll:
    """Rolling hash over a 7-byte window."""

    __slots__ = ("h1", "h2", "h3", "window", "n")

    def __init__(self):
        self.h1 = 0
        self.h2 = 0
        self.h3 = 0
        self.window = bytearray(ROLLING_WINDOW)
        self.n = 0

    def update(self, c: int) -> int:
        self.h2 = (self.h2 - self.h1 + ROLLING_WINDOW * c) & _U32
        self.h1 = (self.h1 + c - self.window[self.n]) & _U32
        self.window[self.n] = c
        self.n = (self.n + 1) % ROLLING_WINDOW
        self.h3 = ((self.h3 << 5) ^ c) & _U32
        return (self.h1 + self.h2 + self.h3) & _U32


def _digest_pass(data: bytes, blocksize: int) -> tuple[str, str, int]:
    """One pass at a fixed blocksize; returns (chunk, double_chunk, trigger_count)."""
    roll = _Roll()
    bh1 = bh2 = _HASH_INIT
    d1: list[str] = []
    d2: list[str] = []
    rh = 0
    for c in data:
        bh1 = ((bh1 * _FNV_PRIME) ^ c) & _U32
        bh2 = ((bh2 * _FNV_PRIME) ^ c) & _U32
        rh = roll.update(c)
        if rh % blocksize == blocksize - 1:
            if len(d1) < DIGEST_LEN - 1:
                d1.append(_B64[bh1 % 64])
                bh1 = _HASH_INIT
        if rh % (blocksize * 2) == blocksize * 2 - 1:
            if len(d2) < DIGEST_LEN // 2 - 1:
                d2.append(_B64[bh2 % 64])
                bh2 = _HASH_INIT
    triggered = len(d1)
    if rh != 0:
        d1.append(_B64[bh1 % 64])
        d2.append(_B64[bh2 % 64])
    return "".join(d1), "".join(d2), triggered


def ctph_digest(data: bytes) -> CtphDigest:
    """Digest any byte string; very short inputs yield short digests."""
    blocksize = MIN_BLOCKSIZE
    while blocksize * DIGEST_LEN < len(data):
        blocksize *= 2
    while True:
        chunk, double_chunk, triggered = _digest_pass(data, blocksize)
        # too coarse a blocksize starves the first digest; retry finer
        if blocksize > MIN_BLOCKSIZE and triggered < DIGEST_LEN // 2:
            blocksize //= 2
        else:
            return CtphDigest(blocksize=blocksize, chunk=chunk, double_chunk=double_chunk)


def _eliminate_sequences(s: str) -> str:
    """Cap runs of one character at three; longer runs carry no extra signal."""
    out: list[str] = []
    for ch in s:
        if len(out) >= 3 and out[-1] == out[-2] == out[-3] == ch:
            continue
        out.append(ch)
    return "".join(out)


def _has_common_substring(s1: str, s2: str) -> bool:
    if len(s1) < ROLLING_WINDOW or len(s2) < ROLLING_WINDOW:
        return False
    grams = {s1[i : i + ROLLING_WINDOW] for i in range(len(s1) - ROLLING_WINDOW + 1)}
    return any(s2[i : i + ROLLING_WINDOW] in grams for i in range(len(s2) - ROLLING_WINDOW + 1))


def _edit_distance(s1: str, s2: str) -> int:
    """Levenshtein with insert/delete cost 1 and replace cost 2."""
    prev = list(range(0, (len(s2) + 1)))
    for i, c1 in enumerate(s1, 1):
        cur = [i]
        for j, c2 in enumerate(s2, 1):
            cur.append(
                min(
                    prev[j] + 1,
                    cur[j - 1] + 1,
                    prev[j - 1] + (0 if c1 == c2 else 2),
                )
            )
        prev = cur
    return prev[-1]


def _score_strings(s1: str, s2: str, blocksize: int) -> int:
    if len(s1) > DIGEST_LEN or len(s2) > DIGEST_LEN:
        return 0
    if not _has_common_substring(s1, s2):
        return 0
    score = _edit_distance(s1, s2)
    score = (score * DIGEST_LEN) // (len(s1) + len(s2))
    score = (100 * score) // DIGEST_LEN
    if score >= 100:
        return 0
    score = 100 - score
    # a small blocksize cannot justify a strong match on a short digest
    if blocksize >= (99 + ROLLING_WINDOW) // ROLLING_WINDOW * MIN_BLOCKSIZE:
        return score
    cap = blocksize // MIN_BLOCKSIZE * min(len(s1), len(s2))
    return min(score, cap)


def ctph_compare(a: CtphDigest | str, b: CtphDigest | str) -> int:
    """Match score 0-100; digests with incomparable blocksizes score 0."""
    if isinstance(a, str):
        a = CtphDigest.parse(a)
    if isinstance(b, str):
        b = CtphDigest.parse(b)
    bs1, bs2 = a.blocksize, b.blocksize
    if bs1 != bs2 and bs1 != bs2 * 2 and bs2 != bs1 * 2:
        return 0
    s1_1 = _eliminate_sequences(a.chunk)
    s1_2 = _eliminate_sequences(a.double_chunk)
    s2_1 = _eliminate_sequences(b.chunk)
    s2_2 = _eliminate_sequences(b.double_chunk)
    # identical non-degenerate signatures are a perfect match regardless of
    # digest length; empty digests (zero-entropy inputs) never match
    if bs1 == bs2 and s1_1 == s2_1 and s1_2 == s2_2 and s1_1:
        return 100
    if bs1 == bs2:
        return max(
            _score_strings(s1_1, s2_1, bs1),
            _score_strings(s1_2, s2_2, bs1 * 2),
        )
    if bs1 == bs2 * 2:
        return _score_strings(s1_1, s2_2, bs1)
    return _score_strings(s1_2, s2_1, bs2)
