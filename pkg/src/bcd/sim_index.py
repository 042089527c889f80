"""MinHash inverted index: the searchable function database.

Every signature value maps to the ids of functions whose signature contains
it, so a lookup probes at most ``p`` buckets and counts hits per candidate.
The database persists to a versioned little-endian binary file (``.bcdb``);
the byte layout is documented in the README.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, replace

from .errors import (
    CorruptDatabaseError,
    IncompatibleDatabaseError,
    ValidationError,
)
from .fuzzy_hash import (
    BASE_HASH_ID,
    DEFAULT_P,
    DEFAULT_SEED,
    DEFAULT_WINDOW,
    MinHashSignature,
    minhash_sign,
)
from .ir_corpus import IrModule, TokenStream, tokenize_module

MAGIC = b"BCDB"
FORMAT_VERSION = 1
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class IndexParams:
    p: int = DEFAULT_P
    seed: int = DEFAULT_SEED
    window: int = DEFAULT_WINDOW
    base_hash: int = BASE_HASH_ID

    def check_compatible(self, other: "IndexParams") -> None:
        if self != other:
            raise IncompatibleDatabaseError(
                f"database params {self} do not match {other}"
            )


@dataclass(frozen=True)
class FunctionRecord:
    name: str
    source: str
    signature: MinHashSignature
    token_count: int
    arch_tag: str | None = None
    id: int | None = None


@dataclass(frozen=True)
class MatchResult:
    function_id: int
    name: str
    source: str
    matched_hashes: int
    score: float


@dataclass
class SearchReport:
    """Per-function ranked matches plus the functions that could not be hashed."""

    results: dict[str, list[MatchResult]]
    skipped: list[str]


class InvertedIndex:
    """Two-phase container: mutable while building, sealed for reading."""

    def __init__(self, params: IndexParams | None = None):
        self.params = params or IndexParams()
        self.buckets: dict[int, list[int]] = {}
        self.functions: dict[int, FunctionRecord] = {}
        self.sealed = False
        self._dedup: dict[tuple[str, str, tuple[int, ...]], int] = {}

    @property
    def function_count(self) -> int:
        return len(self.functions)

    def seal(self) -> "InvertedIndex":
        self.sealed = True
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return (
            self.params == other.params
            and self.buckets == other.buckets
            and self.functions == other.functions
        )


def index_function(idx: InvertedIndex, record: FunctionRecord) -> int:
    """Insert a record, returning its id; exact duplicates are no-ops."""
    if idx.sealed:
        raise IncompatibleDatabaseError("index is sealed; rebuild to add functions")
    sig = record.signature
    if sig.p != idx.params.p or sig.seed != idx.params.seed:
        raise IncompatibleDatabaseError(
            f"record signature (p={sig.p}, seed={sig.seed:#x}) does not match "
            f"database params (p={idx.params.p}, seed={idx.params.seed:#x})"
        )
    key = (record.name, record.source, sig.values)
    existing = idx._dedup.get(key)
    if existing is not None:
        return existing
    fid = len(idx.functions)
    idx.functions[fid] = replace(record, id=fid)
    idx._dedup[key] = fid
    for value in set(sig.values):
        idx.buckets.setdefault(value, []).append(fid)
    return fid


def lookup(
    idx: InvertedIndex, sig: MinHashSignature, threshold: float = DEFAULT_THRESHOLD
) -> list[MatchResult]:
    """Ranked matches with score >= threshold; score is matched slots / p."""
    if not 0 <= threshold <= 1:
        raise ValidationError(f"lookup threshold {threshold} outside [0, 1]")
    if sig.p != idx.params.p or sig.seed != idx.params.seed:
        raise IncompatibleDatabaseError(
            f"query signature (p={sig.p}, seed={sig.seed:#x}) does not match "
            f"database params (p={idx.params.p}, seed={idx.params.seed:#x})"
        )
    counts: dict[int, int] = {}
    buckets = idx.buckets
    for value in set(sig.values):
        for fid in buckets.get(value, ()):
            counts[fid] = counts.get(fid, 0) + 1
    p = idx.params.p
    results = []
    for fid, matched in counts.items():
        score = matched / p
        if score >= threshold:
            rec = idx.functions[fid]
            results.append(
                MatchResult(
                    function_id=fid,
                    name=rec.name,
                    source=rec.source,
                    matched_hashes=matched,
                    score=score,
                )
            )
    results.sort(key=lambda r: (-r.score, r.name, r.source))
    return results


def index_module(idx: InvertedIndex, module: IrModule) -> tuple[int, list[str]]:
    """Tokenize, sign and index every function of a module.

    Returns (indexed count, names skipped because they produced no tokens).
    """
    indexed, skipped = 0, []
    for stream in tokenize_module(module):
        if not stream.tokens:
            skipped.append(stream.function_name)
            continue
        sig = minhash_sign(
            stream, p=idx.params.p, seed=idx.params.seed, window=idx.params.window
        )
        record = FunctionRecord(
            name=stream.function_name,
            source=module.source_path,
            signature=sig,
            token_count=len(stream.tokens),
            arch_tag=module.arch_tag,
        )
        index_function(idx, record)
        indexed += 1
    return indexed, skipped


def search_binary(
    idx: InvertedIndex, module: IrModule, threshold: float = DEFAULT_THRESHOLD
) -> SearchReport:
    """Lookup every function of a module; unhashable functions are skipped."""
    results: dict[str, list[MatchResult]] = {}
    skipped: list[str] = []
    for stream in tokenize_module(module):
        if not stream.tokens:
            skipped.append(stream.function_name)
            continue
        sig = minhash_sign(
            stream, p=idx.params.p, seed=idx.params.seed, window=idx.params.window
        )
        results[stream.function_name] = lookup(idx, sig, threshold)
    return SearchReport(results=results, skipped=skipped)


def search_stream(
    idx: InvertedIndex, stream: TokenStream, threshold: float = DEFAULT_THRESHOLD
) -> list[MatchResult]:
    sig = minhash_sign(stream, p=idx.params.p, seed=idx.params.seed, window=idx.params.window)
    return lookup(idx, sig, threshold)


@dataclass(frozen=True)
class IndexStats:
    functions: int
    buckets: int
    p: int
    seed: int
    window: int
    base_hash: int
    size_on_disk: int | None = None


def stats(idx: InvertedIndex, path: str | None = None) -> IndexStats:
    size = None
    if path is not None and os.path.exists(path):
        size = os.path.getsize(path)
    return IndexStats(
        functions=idx.function_count,
        buckets=len(idx.buckets),
        p=idx.params.p,
        seed=idx.params.seed,
        window=idx.params.window,
        base_hash=idx.params.base_hash,
        size_on_disk=size,
    )


# --- persistence ------------------------------------------------------------

def _write_varint(out: io.BytesIO, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.write(bytes([byte | 0x80]))
        else:
            out.write(bytes([byte]))
            return


def _read_varint(buf: io.BytesIO) -> int:
    shift = value = 0
    while True:
        raw = buf.read(1)
        if not raw:
            raise CorruptDatabaseError("truncated varint")
        byte = raw[0]
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value
        shift += 7


def _write_str(out: io.BytesIO, text: str) -> None:
    data = text.encode("utf-8")
    _write_varint(out, len(data))
    out.write(data)


def _read_str(buf: io.BytesIO) -> str:
    length = _read_varint(buf)
    data = buf.read(length)
    if len(data) != length:
        raise CorruptDatabaseError("truncated string")
    return data.decode("utf-8")


def save(idx: InvertedIndex, path: str) -> None:
    """Write the database; identical indexes always produce identical bytes."""
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(bytes([FORMAT_VERSION, idx.params.base_hash, 0, 0]))
    out.write(struct.pack("<IQI", idx.params.p, idx.params.seed, idx.params.window))
    out.write(struct.pack("<Q", idx.function_count))
    for fid in sorted(idx.functions):
        rec = idx.functions[fid]
        _write_varint(out, fid)
        _write_str(out, rec.name)
        _write_str(out, rec.source)
        if rec.arch_tag is None:
            out.write(b"\x00")
        else:
            out.write(b"\x01")
            _write_str(out, rec.arch_tag)
        _write_varint(out, rec.token_count)
        out.write(struct.pack(f"<{idx.params.p}Q", *rec.signature.values))
    out.write(struct.pack("<Q", len(idx.buckets)))
    for value in sorted(idx.buckets):
        ids = idx.buckets[value]
        out.write(struct.pack("<Q", value))
        _write_varint(out, len(ids))
        prev = 0
        for fid in ids:
            _write_varint(out, fid - prev)
            prev = fid
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(out.getvalue())
    os.replace(tmp, path)


def load(path: str, seal: bool = True) -> InvertedIndex:
    """Read a database file; raises CorruptDatabaseError on bad magic/layout."""
    with open(path, "rb") as fh:
        buf = io.BytesIO(fh.read())
    magic = buf.read(4)
    if magic != MAGIC:
        raise CorruptDatabaseError(f"{path}: bad magic {magic!r}")
    head = buf.read(4)
    if len(head) != 4:
        raise CorruptDatabaseError(f"{path}: truncated header")
    version, base_hash = head[0], head[1]
    if version != FORMAT_VERSION:
        raise CorruptDatabaseError(f"{path}: unsupported format version {version}")
    try:
        p, seed, window = struct.unpack("<IQI", buf.read(16))
        (count,) = struct.unpack("<Q", buf.read(8))
    except struct.error as exc:
        raise CorruptDatabaseError(f"{path}: truncated header") from exc
    idx = InvertedIndex(IndexParams(p=p, seed=seed, window=window, base_hash=base_hash))
    try:
        for _ in range(count):
            fid = _read_varint(buf)
            name = _read_str(buf)
            source = _read_str(buf)
            flag = buf.read(1)
            if not flag:
                raise CorruptDatabaseError(f"{path}: truncated record")
            arch = _read_str(buf) if flag == b"\x01" else None
            token_count = _read_varint(buf)
            raw = buf.read(8 * p)
            if len(raw) != 8 * p:
                raise CorruptDatabaseError(f"{path}: truncated signature")
            values = struct.unpack(f"<{p}Q", raw)
            sig = MinHashSignature(values=values, p=p, seed=seed)
            rec = FunctionRecord(
                name=name,
                source=source,
                signature=sig,
                token_count=token_count,
                arch_tag=arch,
                id=fid,
            )
            idx.functions[fid] = rec
            idx._dedup[(name, source, values)] = fid
        raw = buf.read(8)
        if len(raw) != 8:
            raise CorruptDatabaseError(f"{path}: truncated bucket table")
        (bucket_count,) = struct.unpack("<Q", raw)
        for _ in range(bucket_count):
            raw = buf.read(8)
            if len(raw) != 8:
                raise CorruptDatabaseError(f"{path}: truncated bucket key")
            (value,) = struct.unpack("<Q", raw)
            n_ids = _read_varint(buf)
            ids, prev = [], 0
            for _ in range(n_ids):
                prev += _read_varint(buf)
                ids.append(prev)
            idx.buckets[value] = ids
    except CorruptDatabaseError:
        raise
    except (struct.error, UnicodeDecodeError) as exc:
        raise CorruptDatabaseError(f"{path}: malformed database") from exc
    for value, ids in idx.buckets.items():
        for fid in ids:
            if fid not in idx.functions:
                raise CorruptDatabaseError(
                    f"{path}: bucket {value:#x} references unknown function {fid}"
                )
    if seal:
        idx.seal()
    return idx


def open_or_create(path: str, params: IndexParams | None = None) -> InvertedIndex:
    """Load an existing database for appending, or start a fresh one."""
    if os.path.exists(path):
        idx = load(path, seal=False)
        if params is not None:
            idx.params.check_compatible(params)
        return idx
    return InvertedIndex(params)
