"""HTTP API over repositories, classification, analytics, and summaries.

Error bodies follow one shape: {"status", "code", "message", "field"?}
with stable machine codes.  Every mutating endpoint accepts a client
``request_id``; replaying a request id returns the recorded response
instead of re-executing (dedup window: the most recent 1000 ids per
repository, in memory).  Mutations on one repository serialize behind a
per-repository lock; reads never block reads.

Configuration comes from flags or environment variables (flags win):
SKETCHVC_BIND, SKETCHVC_DATA_ROOT, SKETCHVC_MODEL, SKETCHVC_LLM_ENDPOINT,
SKETCHVC_LLM_TOKEN (the bearer-token variable read at request time).
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from collections import OrderedDict
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .analytics import concept_pyramid
from .classify import load_model
from .errors import (
    AlreadyExists,
    CorruptDataRoot,
    EmptyInput,
    EmptyRepo,
    InvalidSpec,
    IoFailure,
    MalformedInput,
    SchemaViolation,
    SketchError,
    StashEmpty,
    UnknownBaseCommit,
    UnknownCommit,
)
from .features import extract_features
from .repo import Repository
from .strokes import record_from_obj, record_to_obj
from .summarize import LlmClientConfig, chronicle_from_repo, summarize_deterministic, summarize_llm

logger = logging.getLogger(__name__)

DEDUP_WINDOW = 1000

_STATUS_FOR = {
    MalformedInput: 400,
    SchemaViolation: 422,
    InvalidSpec: 422,
    EmptyInput: 422,
    EmptyRepo: 422,
    UnknownCommit: 404,
    UnknownBaseCommit: 404,
    AlreadyExists: 409,
    StashEmpty: 409,
    IoFailure: 500,
    CorruptDataRoot: 500,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field = field

    @classmethod
    def from_domain(cls, exc: SketchError) -> "ApiError":
        status = 500
        for kind, mapped in _STATUS_FOR.items():
            if isinstance(exc, kind):
                status = mapped
                break
        return cls(status, exc.code, str(exc), getattr(exc, "field", None))

    def body(self) -> dict:
        out = {"status": self.status, "code": self.code, "message": self.message}
        if self.field:
            out["field"] = self.field
        return out


def _valid_repo_id(repo_id: str) -> bool:
    return bool(repo_id) and len(repo_id) <= 64 and all(
        c.isalnum() or c in "-_" for c in repo_id
    )


class _AppState:
    def __init__(self, data_root, clock, model_path, llm_config, default_author):
        self.data_root = Path(data_root)
        self.clock = clock
        self.llm_config = llm_config
        self.default_author = default_author
        self.repos: dict[str, Repository] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.dedup: dict[str, OrderedDict] = {}
        self.model = None
        if model_path:
            self.model = load_model(model_path)
        self._state_lock = threading.Lock()

    def repo(self, repo_id: str) -> Repository:
        with self._state_lock:
            if repo_id in self.repos:
                return self.repos[repo_id]
        path = self.data_root / repo_id
        if not _valid_repo_id(repo_id) or not path.is_dir():
            raise ApiError(404, "unknown_repo", f"no repository {repo_id!r}")
        repo = Repository.open(path, clock=self.clock)
        with self._state_lock:
            return self.repos.setdefault(repo_id, repo)

    def lock_for(self, repo_id: str) -> threading.Lock:
        with self._state_lock:
            return self.locks.setdefault(repo_id, threading.Lock())

    def replay_or_record(self, repo_id: str, request_id: str | None, compute):
        """Run ``compute`` once per request id; replays return the recorded
        response."""
        if not request_id:
            return compute()
        with self._state_lock:
            window = self.dedup.setdefault(repo_id, OrderedDict())
            if request_id in window:
                return window[request_id]
        response = compute()
        with self._state_lock:
            window = self.dedup.setdefault(repo_id, OrderedDict())
            window[request_id] = response
            while len(window) > DEDUP_WINDOW:
                window.popitem(last=False)
        return response


def create_app(
    data_root,
    model_path=None,
    llm_config: LlmClientConfig | None = None,
    clock=None,
    default_author: str = "designer",
    static_dir=None,
) -> FastAPI:
    data_root = Path(data_root)
    data_root.mkdir(parents=True, exist_ok=True)
    state = _AppState(data_root, clock, model_path, llm_config, default_author)
    app = FastAPI(title="sketchvc", version=__version__)
    app.state.domain = state

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(SketchError)
    async def handle_domain_error(request: Request, exc: SketchError):
        api = ApiError.from_domain(exc)
        return JSONResponse(status_code=api.status, content=api.body())

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        logger.info(
            "%s %s -> %d (%.1f ms)",
            request.method,
            request.url.path,
            response.status_code,
            1000.0 * (time.perf_counter() - started),
        )
        return response

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/repos")
    def create_repo(body: dict = Body(default={})):
        repo_id = body.get("repo_id") or uuid.uuid4().hex[:12]
        if not _valid_repo_id(repo_id):
            raise ApiError(422, "bad_repo_id", "repo_id must be 1-64 chars of [A-Za-z0-9_-]", "repo_id")
        author = body.get("author_name") or state.default_author

        def compute():
            repo = Repository.init(
                state.data_root / repo_id,
                author_name=author,
                author_id=body.get("author_id"),
                clock=state.clock,
            )
            with state._state_lock:
                state.repos[repo_id] = repo
            return {"id": repo_id, "branches": list(repo.branches())}

        return state.replay_or_record(repo_id, body.get("request_id"), compute)

    @app.get("/repos/{repo_id}/tree")
    def tree(repo_id: str):
        return state.repo(repo_id).version_tree()

    @app.post("/repos/{repo_id}/strokes")
    def add_stroke(repo_id: str, body: dict = Body(...)):
        repo = state.repo(repo_id)
        record_obj = body.get("stroke", body)
        request_id = body.get("request_id") if "stroke" in body else None

        def compute():
            record = record_from_obj(record_obj)
            with state.lock_for(repo_id):
                size = repo.add_stroke(record)
            return {"canvas_size": size}

        return state.replay_or_record(repo_id, request_id, compute)

    @app.post("/repos/{repo_id}/commits")
    def commit(repo_id: str, body: dict = Body(default={})):
        repo = state.repo(repo_id)

        def compute():
            with state.lock_for(repo_id):
                commit_id = repo.commit(
                    message=body.get("message", ""),
                    transcript_source=body.get("transcript_source", "typed"),
                )
                kind, value = repo.head()
            return {"commit_id": commit_id, "head": {"kind": kind, "value": value}}

        return state.replay_or_record(repo_id, body.get("request_id"), compute)

    @app.post("/repos/{repo_id}/checkout/{commit_id}")
    def checkout(repo_id: str, commit_id: str, body: dict = Body(default={})):
        repo = state.repo(repo_id)

        def compute():
            with state.lock_for(repo_id):
                canvas = repo.checkout(commit_id)
                kind, value = repo.head()
            return {
                "base": canvas.base,
                "stroke_ids": canvas.stroke_ids(),
                "stroke_count": len(canvas.strokes),
                "strokes": [record_to_obj(s) for s in canvas.strokes],
                "head": {"kind": kind, "value": value},
            }

        return state.replay_or_record(repo_id, (body or {}).get("request_id"), compute)

    @app.get("/repos/{repo_id}/diff")
    def diff(repo_id: str, a: str, b: str):
        return state.repo(repo_id).diff(a, b).to_dict()

    @app.get("/repos/{repo_id}/slideshow/{commit_id}")
    def slideshow(repo_id: str, commit_id: str):
        repo = state.repo(repo_id)
        frames = repo.slideshow(commit_id)
        out = []
        for node in frames:
            obj = node.to_obj()
            obj["strokes"] = [record_to_obj(repo._load_stroke(cid)) for cid in node.stroke_ids]
            out.append(obj)
        return {"frames": out}

    @app.get("/repos/{repo_id}/pyramid")
    def pyramid(repo_id: str):
        return concept_pyramid(state.repo(repo_id)).to_dict()

    @app.get("/repos/{repo_id}/stash")
    def stash_peek(repo_id: str):
        canvas = state.repo(repo_id).stash_peek()
        if canvas is None:
            return {"occupied": False}
        return {"occupied": True, "stroke_count": len(canvas.strokes), "base": canvas.base}

    @app.post("/repos/{repo_id}/summary")
    def summary(repo_id: str, body: dict = Body(default={})):
        repo = state.repo(repo_id)
        mode = (body or {}).get("mode", "deterministic")
        if mode not in ("deterministic", "llm"):
            raise ApiError(422, "bad_mode", "mode must be deterministic or llm", "mode")
        narrative = chronicle_from_repo(repo)
        if mode == "llm":
            if state.llm_config is None:
                return summarize_deterministic(narrative).to_dict() | {"provenance": "fallback"}
            return summarize_llm(narrative, state.llm_config).to_dict()
        return summarize_deterministic(narrative).to_dict()

    @app.post("/classify")
    def classify(body: dict = Body(...)):
        if state.model is None:
            raise ApiError(503, "model_unavailable", "no classifier model is loaded")
        record = record_from_obj(body.get("stroke", body))
        label, probabilities = state.model.predict(extract_features(record))
        return {"label": label, "probabilities": probabilities}

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(bind: str, data_root, model_path=None, llm_config=None, static_dir=None) -> None:
    """Run the service until interrupted (SIGINT/SIGTERM shut down cleanly)."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    app = create_app(data_root, model_path=model_path, llm_config=llm_config, static_dir=static_dir)
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    except OSError as exc:
        from .errors import BindFailure

        raise BindFailure(f"cannot bind {bind}: {exc}") from None
