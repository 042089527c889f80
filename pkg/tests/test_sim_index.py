import os
import random

import pytest

from bcd.errors import (
    CorruptDatabaseError,
    IncompatibleDatabaseError,
    ValidationError,
)
from bcd.fuzzy_hash import minhash_sign, minhash_similarity
from bcd.sim_index import (
    FunctionRecord,
    IndexParams,
    InvertedIndex,
    index_function,
    index_module,
    load,
    lookup,
    save,
    search_binary,
    stats,
)

from conftest import make_random_stream


def _record(stream, p=256, seed=None, source=None):
    kwargs = {} if seed is None else {"seed": seed}
    sig = minhash_sign(stream, p=p, **kwargs)
    return FunctionRecord(
        name=stream.function_name,
        source=source or stream.source_path,
        signature=sig,
        token_count=len(stream.tokens),
        arch_tag=stream.arch_tag,
    )


def _random_records(n, seed=0, p=256):
    rng = random.Random(seed)
    return [
        _record(make_random_stream(rng, rng.randrange(20, 120), f"fn{i:04d}"), p=p)
        for i in range(n)
    ]


class TestIndexFunction:
    def test_single_function_bucket_bound(self):
        idx = InvertedIndex()
        rec = _random_records(1)[0]
        index_function(idx, rec)
        assert idx.function_count == 1
        assert len(idx.buckets) <= 256
        assert len(idx.buckets) == len(set(rec.signature.values))

    def test_reindex_is_noop(self):
        idx = InvertedIndex()
        rec = _random_records(1)[0]
        fid1 = index_function(idx, rec)
        before = {v: list(ids) for v, ids in idx.buckets.items()}
        fid2 = index_function(idx, rec)
        assert fid1 == fid2
        assert idx.function_count == 1
        assert idx.buckets == before

    def test_bucket_membership_equals_distinct_values(self):
        idx = InvertedIndex()
        records = _random_records(100)
        for rec in records:
            index_function(idx, rec)
        total_memberships = sum(len(ids) for ids in idx.buckets.values())
        assert total_memberships == sum(len(set(r.signature.values)) for r in records)

    def test_per_bucket_uniqueness(self):
        idx = InvertedIndex()
        for rec in _random_records(60, seed=5):
            index_function(idx, rec)
        for ids in idx.buckets.values():
            assert len(ids) == len(set(ids))

    def test_param_mismatch(self):
        idx = InvertedIndex(IndexParams(p=128))
        with pytest.raises(IncompatibleDatabaseError):
            index_function(idx, _random_records(1, p=256)[0])

    def test_same_name_different_source_is_new_record(self):
        idx = InvertedIndex()
        rng = random.Random(1)
        stream = make_random_stream(rng, 50, "dup")
        index_function(idx, _record(stream, source="a.ll"))
        index_function(idx, _record(stream, source="b.ll"))
        assert idx.function_count == 2

    def test_sealed_index_rejects_writes(self):
        idx = InvertedIndex().seal()
        with pytest.raises(IncompatibleDatabaseError):
            index_function(idx, _random_records(1)[0])


class TestLookup:
    def test_empty_index(self):
        idx = InvertedIndex()
        sig = minhash_sign(["a", "b", "c", "d", "e"])
        assert lookup(idx, sig, 0.0) == []

    def test_self_lookup(self):
        idx = InvertedIndex()
        rec = _random_records(1)[0]
        index_function(idx, rec)
        results = lookup(idx, rec.signature, 0.5)
        assert len(results) == 1
        assert results[0].matched_hashes == len(set(rec.signature.values))
        assert results[0].score == results[0].matched_hashes / 256
        assert results[0].score >= 0.99

    def test_scores_equal_brute_force(self):
        idx = InvertedIndex()
        records = _random_records(50, seed=9)
        for rec in records:
            index_function(idx, rec)
        for query in records[:10]:
            got = {r.function_id: r.score for r in lookup(idx, query.signature, 0.0)}
            for fid, record in idx.functions.items():
                expected = minhash_similarity(query.signature, record.signature)
                assert got.get(fid, 0.0) == expected

    def test_threshold_monotonicity(self):
        idx = InvertedIndex()
        for rec in _random_records(40, seed=3):
            index_function(idx, rec)
        query = idx.functions[0].signature
        previous = lookup(idx, query, 0.0)
        for threshold in (0.1, 0.3, 0.5, 0.9, 1.0):
            current = lookup(idx, query, threshold)
            ids_prev = [r.function_id for r in previous]
            ids_cur = [r.function_id for r in current]
            assert set(ids_cur) <= set(ids_prev)
            surviving = [fid for fid in ids_prev if fid in set(ids_cur)]
            assert surviving == ids_cur
            previous = current

    def test_bad_threshold(self):
        with pytest.raises(ValidationError):
            lookup(InvertedIndex(), minhash_sign(["a", "b"]), 1.5)

    def test_param_mismatch(self):
        idx = InvertedIndex(IndexParams(p=128))
        with pytest.raises(IncompatibleDatabaseError):
            lookup(idx, minhash_sign(["a", "b"], p=256), 0.5)

    def test_ties_broken_by_name_then_source(self):
        idx = InvertedIndex()
        rng = random.Random(4)
        stream = make_random_stream(rng, 60, "zeta")
        rec_b = _record(stream, source="b.ll")
        rec_a = _record(stream, source="a.ll")
        index_function(idx, rec_b)
        index_function(idx, rec_a)
        results = lookup(idx, rec_a.signature, 0.5)
        assert [r.source for r in results] == ["a.ll", "b.ll"]


class TestSearchBinary:
    def test_empty_index_empty_results(self, arm_module):
        report = search_binary(InvertedIndex(), arm_module, 0.5)
        assert len(report.results) == 4
        assert all(matches == [] for matches in report.results.values())
        assert report.skipped == []

    def test_verbatim_module_top_match_self(self, arm_module):
        idx = InvertedIndex()
        index_module(idx, arm_module)
        report = search_binary(idx, arm_module, 0.5)
        for name, matches in report.results.items():
            assert matches[0].name == name
            assert matches[0].score == 1.0

    def test_cross_architecture_rc4(self, arm_module, mips_module):
        idx = InvertedIndex()
        index_module(idx, mips_module)
        report = search_binary(idx, arm_module, 0.5)
        top = report.results["RC4"][0]
        assert top.name == "RC4"
        assert top.score >= 0.5


class TestPersistence:
    def test_empty_roundtrip(self, tmp_path):
        idx = InvertedIndex()
        path = str(tmp_path / "empty.bcdb")
        save(idx, path)
        loaded = load(path)
        assert loaded == idx
        assert loaded.function_count == 0

    def test_roundtrip_and_double_save_determinism(self, tmp_path):
        idx = InvertedIndex()
        for rec in _random_records(200, seed=8):
            index_function(idx, rec)
        p1 = str(tmp_path / "one.bcdb")
        p2 = str(tmp_path / "two.bcdb")
        save(idx, p1)
        loaded = load(p1)
        assert loaded == idx
        save(loaded, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_loaded_index_is_sealed(self, tmp_path):
        idx = InvertedIndex()
        index_function(idx, _random_records(1)[0])
        path = str(tmp_path / "db.bcdb")
        save(idx, path)
        loaded = load(path)
        assert loaded.sealed
        with pytest.raises(IncompatibleDatabaseError):
            index_function(loaded, _random_records(2)[1])

    def test_truncated_file(self, tmp_path):
        idx = InvertedIndex()
        for rec in _random_records(10):
            index_function(idx, rec)
        path = str(tmp_path / "db.bcdb")
        save(idx, path)
        raw = open(path, "rb").read()
        for cut in (2, 10, len(raw) // 2, len(raw) - 3):
            open(path, "wb").write(raw[:cut])
            with pytest.raises(CorruptDatabaseError):
                load(path)

    def test_bad_magic(self, tmp_path):
        path = str(tmp_path / "db.bcdb")
        open(path, "wb").write(b"NOTB" + b"\x00" * 64)
        with pytest.raises(CorruptDatabaseError):
            load(path)

    def test_stats(self, tmp_path):
        idx = InvertedIndex()
        records = _random_records(100, seed=12)
        for rec in records:
            index_function(idx, rec)
        path = str(tmp_path / "db.bcdb")
        save(idx, path)
        s = stats(idx, path)
        assert s.functions == 100
        assert s.buckets <= 25600
        assert s.buckets == len({v for r in records for v in r.signature.values})
        assert s.size_on_disk == os.path.getsize(path)
