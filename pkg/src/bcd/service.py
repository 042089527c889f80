"""HTTP API: upload a binary or .ll file, index it into a named database or
search it, poll the job for ranked results. Searches run against sealed
snapshots; writes are serialized per database and reseal it atomically.
"""

from __future__ import annotations

import os
import re
import tempfile
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

from fastapi import FastAPI, File, Form, Header, HTTPException, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .errors import ParseError
from .ir_corpus import lift_binary, parse_module
from .serialize import search_report_to_objects
from .sim_index import (
    DEFAULT_THRESHOLD,
    IndexParams,
    InvertedIndex,
    index_module,
    load,
    save,
    search_binary,
    stats,
)

SAFE_DB_NAME = re.compile(r"^[A-Za-z0-9._-]{1,64}$")
SYNC_LL_LIMIT = 1024 * 1024  # .ll uploads under this run synchronously
DEFAULT_DB_NAME = "default"


@dataclass
class JobRecord:
    job_id: str
    kind: str  # lift | index | search
    state: str = "queued"  # queued | running | done | failed
    result: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "result": self.result,
            "error": self.error,
        }


class JobStore:
    def __init__(self):
        self._jobs: dict[str, JobRecord] = {}
        self._lock = threading.Lock()

    def create(self, kind: str) -> JobRecord:
        job = JobRecord(job_id=uuid.uuid4().hex, kind=kind)
        with self._lock:
            self._jobs[job.job_id] = job
        return job

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def transition(self, job_id: str, state: str, result=None, error=None) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if job.state in ("done", "failed"):
                return  # terminal states are immutable
            job.state = state
            if result is not None:
                job.result = result
            if error is not None:
                job.error = error


class DbRegistry:
    """Named databases under one data directory; sealed snapshots for reads."""

    def __init__(self, data_dir: str, params: IndexParams | None = None):
        self.data_dir = data_dir
        self.params = params or IndexParams()
        self._snapshots: dict[str, InvertedIndex] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        os.makedirs(data_dir, exist_ok=True)

    def path_of(self, name: str) -> str:
        return os.path.join(self.data_dir, f"{name}.bcdb")

    def names(self) -> list[str]:
        found = {
            os.path.splitext(entry)[0]
            for entry in os.listdir(self.data_dir)
            if entry.endswith(".bcdb")
        }
        with self._registry_lock:
            found.update(self._snapshots)
        return sorted(found)

    def load_all(self) -> None:
        for name in self.names():
            self.get(name)

    def _write_lock(self, name: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(name, threading.Lock())

    def get(self, name: str) -> InvertedIndex | None:
        with self._registry_lock:
            snap = self._snapshots.get(name)
        if snap is not None:
            return snap
        path = self.path_of(name)
        if not os.path.exists(path):
            return None
        idx = load(path, seal=True)
        with self._registry_lock:
            self._snapshots[name] = idx
        return idx

    def append(self, name: str, module) -> tuple[int, list[str], InvertedIndex]:
        """Single-writer append: rebuild, save, then swap the read snapshot."""
        with self._write_lock(name):
            path = self.path_of(name)
            if os.path.exists(path):
                idx = load(path, seal=False)
                idx.params.check_compatible(self.params)
            else:
                idx = InvertedIndex(self.params)
            indexed, skipped = index_module(idx, module)
            save(idx, path)
            idx.seal()
            with self._registry_lock:
                self._snapshots[name] = idx
            return indexed, skipped, idx


@dataclass
class ServiceState:
    registry: DbRegistry
    jobs: JobStore
    read_only: bool = False
    token: str | None = None
    max_upload: int = 32 * 1024 * 1024
    ready: bool = False
    pool: ThreadPoolExecutor = field(default_factory=lambda: ThreadPoolExecutor(max_workers=2))


def _module_from_upload(filename: str, payload: bytes, arch: str | None):
    if not payload.strip():
        raise ParseError("uploaded file is empty")
    if filename.endswith(".ll"):
        try:
            text = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{filename}: not valid UTF-8 LLVM IR") from exc
    else:
        with tempfile.NamedTemporaryFile(suffix=os.path.splitext(filename)[1] or ".bin",
                                         delete=False) as fh:
            fh.write(payload)
            tmp_path = fh.name
        try:
            text = lift_binary(tmp_path)
        finally:
            os.unlink(tmp_path)
    module = parse_module(text, arch_tag=arch, source_path=os.path.basename(filename))
    if not module.functions:
        raise ParseError(f"{filename}: no function definitions found")
    return module


def create_app(
    data_dir: str,
    read_only: bool = False,
    token: str | None = None,
    max_upload: int = 32 * 1024 * 1024,
    params: IndexParams | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    state = ServiceState(
        registry=DbRegistry(data_dir, params),
        jobs=JobStore(),
        read_only=read_only,
        token=token,
        max_upload=max_upload,
    )

    @asynccontextmanager
    async def lifespan(_app):
        state.registry.load_all()
        state.ready = True
        yield

    app = FastAPI(title="bcd", version=__version__, lifespan=lifespan)
    app.state.bcd = state

    @app.get("/healthz")
    def healthz():
        if not state.ready:
            return JSONResponse(
                {"status": "loading", "loaded_dbs": [], "version": __version__},
                status_code=503,
            )
        return {
            "status": "ok",
            "loaded_dbs": state.registry.names(),
            "version": __version__,
        }

    @app.get("/api/v1/dbs")
    def list_dbs():
        out = []
        for name in state.registry.names():
            idx = state.registry.get(name)
            if idx is None:
                continue
            s = stats(idx, state.registry.path_of(name))
            out.append(
                {
                    "name": name,
                    "functions": s.functions,
                    "buckets": s.buckets,
                    "p": s.p,
                    "seed": s.seed,
                    "window": s.window,
                    "size_on_disk": s.size_on_disk,
                }
            )
        return out

    def _check_upload(file_bytes: bytes):
        if len(file_bytes) > state.max_upload:
            raise HTTPException(status_code=413, detail="upload exceeds the size cap")

    def _check_write_auth(authorization: str | None):
        if state.read_only:
            raise HTTPException(status_code=403, detail="server is read-only")
        if state.token:
            expected = f"Bearer {state.token}"
            if authorization != expected:
                raise HTTPException(status_code=403, detail="missing or bad bearer token")

    def _run_search(job_id: str, filename: str, payload: bytes, db: str,
                    threshold: float, top: int, arch: str | None):
        state.jobs.transition(job_id, "running")
        try:
            idx = state.registry.get(db)
            if idx is None:
                raise LookupError(f"unknown database {db!r}")
            module = _module_from_upload(filename, payload, arch)
            report = search_binary(idx, module, threshold)
            result = {
                "db": db,
                "threshold": threshold,
                "results": search_report_to_objects(report, idx, top=top),
            }
            state.jobs.transition(job_id, "done", result=result)
        except Exception as exc:  # failures land in the job record
            state.jobs.transition(job_id, "failed", error=str(exc))

    def _run_index(job_id: str, filename: str, payload: bytes, db: str, arch: str | None):
        state.jobs.transition(job_id, "running")
        try:
            module = _module_from_upload(filename, payload, arch)
            indexed, skipped, idx = state.registry.append(db, module)
            s = stats(idx, state.registry.path_of(db))
            result = {
                "db": db,
                "indexed": indexed,
                "skipped": skipped,
                "functions": s.functions,
                "buckets": s.buckets,
            }
            state.jobs.transition(job_id, "done", result=result)
        except Exception as exc:
            state.jobs.transition(job_id, "failed", error=str(exc))

    @app.post("/api/v1/search")
    async def search(
        file: UploadFile = File(...),
        db: str = Form(DEFAULT_DB_NAME),
        threshold: float = Form(DEFAULT_THRESHOLD),
        top: int = Form(20),
        arch: str | None = Form(None),
    ):
        payload = await file.read()
        _check_upload(payload)
        if not 0 <= threshold <= 1:
            raise HTTPException(status_code=422, detail="threshold outside [0, 1]")
        if state.registry.get(db) is None:
            raise HTTPException(status_code=404, detail=f"unknown database {db!r}")
        filename = file.filename or "upload.bin"
        job = state.jobs.create("search")
        if filename.endswith(".ll") and len(payload) <= SYNC_LL_LIMIT:
            _run_search(job.job_id, filename, payload, db, threshold, top, arch)
            refreshed = state.jobs.get(job.job_id)
            if refreshed.state == "failed":
                raise HTTPException(status_code=422, detail=refreshed.error)
            return refreshed.to_dict()
        state.pool.submit(_run_search, job.job_id, filename, payload, db, threshold, top, arch)
        return job.to_dict()

    @app.post("/api/v1/index")
    async def index(
        file: UploadFile = File(...),
        db: str = Form(DEFAULT_DB_NAME),
        arch: str | None = Form(None),
        authorization: str | None = Header(None),
    ):
        _check_write_auth(authorization)
        payload = await file.read()
        _check_upload(payload)
        if not SAFE_DB_NAME.match(db):
            raise HTTPException(status_code=422, detail="database name not allowed")
        filename = file.filename or "upload.bin"
        job = state.jobs.create("index")
        if filename.endswith(".ll") and len(payload) <= SYNC_LL_LIMIT:
            _run_index(job.job_id, filename, payload, db, arch)
            refreshed = state.jobs.get(job.job_id)
            if refreshed.state == "failed":
                error = refreshed.error or ""
                if "params" in error and "match" in error:
                    raise HTTPException(status_code=409, detail=error)
                raise HTTPException(status_code=422, detail=error)
            return refreshed.to_dict()
        state.pool.submit(_run_index, job.job_id, filename, payload, db, arch)
        return job.to_dict()

    @app.get("/api/v1/jobs/{job_id}")
    def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job.to_dict()

    ui_dir = ui_dir or os.environ.get("BCD_UI_DIR") or _default_ui_dir()
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _default_ui_dir() -> str | None:
    here = os.path.dirname(os.path.abspath(__file__))
    for candidate in (
        os.path.join(here, "ui"),
        os.path.normpath(os.path.join(here, "..", "..", "..", "frontend", "dist")),
        os.path.normpath(os.path.join(here, "..", "..", "frontend", "dist")),
    ):
        if os.path.isdir(candidate):
            return candidate
    return None
