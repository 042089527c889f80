import io
import json
import os
import time

import pytest
from starlette.testclient import TestClient

from bcd import __version__
from bcd.cli import main as cli_main
from bcd.service import create_app
from bcd.sim_index import IndexParams, InvertedIndex, save


@pytest.fixture()
def arm_bytes(fixtures_dir):
    return open(os.path.join(fixtures_dir, "rc4_arm.ll"), "rb").read()


@pytest.fixture()
def mips_bytes(fixtures_dir):
    return open(os.path.join(fixtures_dir, "rc4_mips.ll"), "rb").read()


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=str(tmp_path / "data"))
    with TestClient(app) as c:
        yield c


def _index(client, payload, name, db="default", arch=None, headers=None):
    data = {"db": db}
    if arch:
        data["arch"] = arch
    return client.post(
        "/api/v1/index",
        files={"file": (name, payload)},
        data=data,
        headers=headers or {},
    )


class TestHealth:
    def test_healthz_ok(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["version"] == __version__

    def test_503_before_startup(self, tmp_path):
        # requests before the lifespan finished loading report unavailable
        app = create_app(data_dir=str(tmp_path / "data"))
        client = TestClient(app)  # lifespan not entered
        r = client.get("/healthz")
        assert r.status_code == 503
        assert r.json()["status"] == "loading"


class TestIndexEndpoint:
    def test_index_creates_db(self, client, mips_bytes, tmp_path):
        r = _index(client, mips_bytes, "rc4_mips.ll", db="libc-test", arch="mips")
        assert r.status_code == 200
        body = r.json()
        assert body["state"] == "done"
        assert body["result"]["indexed"] == 4
        dbs = client.get("/api/v1/dbs").json()
        entry = next(d for d in dbs if d["name"] == "libc-test")
        assert entry["functions"] == 4

    def test_duplicate_index_is_idempotent(self, client, mips_bytes):
        _index(client, mips_bytes, "rc4_mips.ll", db="dup")
        first = next(d for d in client.get("/api/v1/dbs").json() if d["name"] == "dup")
        _index(client, mips_bytes, "rc4_mips.ll", db="dup")
        second = next(d for d in client.get("/api/v1/dbs").json() if d["name"] == "dup")
        assert first["functions"] == second["functions"]

    def test_read_only_403(self, tmp_path, mips_bytes):
        app = create_app(data_dir=str(tmp_path / "ro"), read_only=True)
        with TestClient(app) as c:
            assert _index(c, mips_bytes, "rc4_mips.ll").status_code == 403

    def test_token_required(self, tmp_path, mips_bytes):
        app = create_app(data_dir=str(tmp_path / "tok"), token="sekrit")
        with TestClient(app) as c:
            assert _index(c, mips_bytes, "rc4_mips.ll").status_code == 403
            ok = _index(c, mips_bytes, "rc4_mips.ll",
                        headers={"Authorization": "Bearer sekrit"})
            assert ok.status_code == 200

    def test_bad_db_name(self, client, mips_bytes):
        assert _index(client, mips_bytes, "rc4_mips.ll", db="../evil").status_code == 422

    def test_param_mismatch_409(self, tmp_path, mips_bytes):
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        save(InvertedIndex(IndexParams(p=64)), str(data_dir / "default.bcdb"))
        app = create_app(data_dir=str(data_dir))
        with TestClient(app) as c:
            r = _index(c, mips_bytes, "rc4_mips.ll")
            assert r.status_code == 409

    def test_oversize_413(self, tmp_path, mips_bytes):
        app = create_app(data_dir=str(tmp_path / "cap"), max_upload=100)
        with TestClient(app) as c:
            assert _index(c, mips_bytes, "rc4_mips.ll").status_code == 413


class TestSearchEndpoint:
    def test_self_search_top_match(self, client, mips_bytes):
        _index(client, mips_bytes, "rc4_mips.ll", db="default", arch="mips")
        r = client.post(
            "/api/v1/search",
            files={"file": ("rc4_mips.ll", mips_bytes)},
            data={"db": "default", "threshold": "0.5"},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["kind"] == "search"
        assert body["state"] == "done"
        for obj in body["result"]["results"]:
            if "matches" in obj:
                assert obj["matches"][0]["name"] == obj["function"]
                assert obj["matches"][0]["score"] == 1.0

    def test_unknown_db_404(self, client, mips_bytes):
        r = client.post("/api/v1/search", files={"file": ("x.ll", mips_bytes)},
                        data={"db": "missing"})
        assert r.status_code == 404

    def test_empty_upload_422(self, client, mips_bytes):
        _index(client, mips_bytes, "rc4_mips.ll")
        r = client.post("/api/v1/search", files={"file": ("x.ll", b"")},
                        data={"db": "default"})
        assert r.status_code == 422

    def test_unknown_job_404(self, client):
        assert client.get("/api/v1/jobs/ffff").status_code == 404

    def test_job_pollable_after_sync_search(self, client, mips_bytes):
        _index(client, mips_bytes, "rc4_mips.ll")
        r = client.post("/api/v1/search", files={"file": ("q.ll", mips_bytes)},
                        data={"db": "default"})
        job_id = r.json()["job_id"]
        poll = client.get(f"/api/v1/jobs/{job_id}")
        assert poll.status_code == 200
        assert poll.json()["state"] == "done"
        assert poll.json()["result"] == r.json()["result"]

    def test_async_path_via_size_limit(self, client, mips_bytes, monkeypatch):
        import bcd.service as service_mod

        _index(client, mips_bytes, "rc4_mips.ll")
        monkeypatch.setattr(service_mod, "SYNC_LL_LIMIT", 0)  # force the job queue
        r = client.post("/api/v1/search", files={"file": ("q.ll", mips_bytes)},
                        data={"db": "default"})
        assert r.status_code == 200
        job_id = r.json()["job_id"]
        deadline = time.time() + 10
        while time.time() < deadline:
            body = client.get(f"/api/v1/jobs/{job_id}").json()
            if body["state"] in ("done", "failed"):
                break
            time.sleep(0.05)
        assert body["state"] == "done"
        assert body["result"]["results"]

    def test_cli_service_parity(self, client, arm_bytes, mips_bytes, tmp_path, capsys):
        # identical inputs and params must serialize identically mod envelope
        _index(client, mips_bytes, "rc4_mips.ll", db="default", arch="mips")
        r = client.post(
            "/api/v1/search",
            files={"file": ("rc4_arm.ll", arm_bytes)},
            data={"db": "default", "threshold": "0.5", "top": "20", "arch": "arm"},
        )
        service_objects = r.json()["result"]["results"]

        db = str(tmp_path / "cli.bcdb")
        arm_path = tmp_path / "rc4_arm.ll"
        arm_path.write_bytes(arm_bytes)
        mips_path = tmp_path / "rc4_mips.ll"
        mips_path.write_bytes(mips_bytes)
        cli_main(["index", "-i", str(mips_path), "-d", db, "--arch", "mips"])
        capsys.readouterr()
        cli_main(["search", "-i", str(arm_path), "-d", db, "--format", "json",
                  "--arch", "arm"])
        out = capsys.readouterr().out
        cli_objects = [json.loads(line) for line in out.strip().splitlines()]
        assert cli_objects == service_objects


class TestConcurrency:
    def test_concurrent_searches_match_serial(self, client, arm_bytes, mips_bytes):
        import concurrent.futures

        _index(client, mips_bytes, "rc4_mips.ll")
        def one_search():
            r = client.post("/api/v1/search", files={"file": ("q.ll", arm_bytes)},
                            data={"db": "default"})
            return r.json()["result"]["results"]

        serial = one_search()
        with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: one_search(), range(8)))
        for result in results:
            assert result == serial
