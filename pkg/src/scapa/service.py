"""HTTP API: repository management, collection control, SCA/PA operations,
search, knowledge graphs, and minimal session auth.

All bodies use the canonical JSON encodings, so every GET route returns the
same content as the corresponding CLI --json command. Long operations
(collection, PA identification) answer 202 with a cursor/job resource to
poll. A guest account always exists and is read-only.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from tempfile import TemporaryDirectory
from typing import Optional

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import harvest, kg, model, pa, sca
from .model import (
    CandidateStatus,
    DataType,
    Dimension,
    RepositoryRef,
    SourceKind,
)
from .search import SearchError, hits_to_json, parse_query, search
from .segment import SegmenterOptions
from .store import Store, StoreError, UnknownCollection, UnknownRepository

SESSION_TTL_S = 24 * 3600
_PBKDF2_ITERATIONS = 60_000


class Role(str, Enum):
    USER = "user"
    GUEST = "guest"


@dataclass(frozen=True)
class UserAccount:
    username: str
    password_hash: str
    salt: str
    role: Role
    created_at: datetime


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _hash_password(password: str, salt: str) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    ).hex()


class Sessions:
    def __init__(self, ttl_s: int = SESSION_TTL_S):
        self.ttl_s = ttl_s
        self._lock = threading.Lock()
        self._tokens: dict[str, tuple[str, Role, float]] = {}

    def create(self, username: str, role: Role) -> str:
        token = secrets.token_hex(16)
        with self._lock:
            self._tokens[token] = (username, role, time.time() + self.ttl_s)
        return token

    def resolve(self, token: str) -> Optional[tuple[str, Role]]:
        with self._lock:
            entry = self._tokens.get(token)
            if entry is None:
                return None
            username, role, expiry = entry
            if time.time() > expiry:
                del self._tokens[token]
                return None
            return username, role

    def drop(self, token: str) -> None:
        with self._lock:
            self._tokens.pop(token, None)


class Accounts:
    def __init__(self, store: Store):
        self.store = store
        self._lock = threading.Lock()
        if self.get("guest") is None:
            self.register("guest", "guest", Role.GUEST)

    def _load(self) -> list[dict]:
        return self.store.load_users()

    def get(self, username: str) -> Optional[UserAccount]:
        for u in self._load():
            if u["username"] == username:
                return UserAccount(
                    username=u["username"],
                    password_hash=u["password_hash"],
                    salt=u["salt"],
                    role=Role(u["role"]),
                    created_at=model.parse_timestamp(u["created_at"]),
                )
        return None

    def register(self, username: str, password: str, role: Role = Role.USER) -> UserAccount:
        if not username or not password:
            raise ApiError(400, "username and password are required")
        with self._lock:
            users = self._load()
            if any(u["username"] == username for u in users):
                raise ApiError(400, f"username {username!r} is taken")
            salt = secrets.token_hex(16)
            account = UserAccount(
                username=username,
                password_hash=_hash_password(password, salt),
                salt=salt,
                role=role,
                created_at=datetime.now(timezone.utc),
            )
            users.append(
                {
                    "username": account.username,
                    "password_hash": account.password_hash,
                    "salt": account.salt,
                    "role": account.role.value,
                    "created_at": model.encode_timestamp(account.created_at),
                }
            )
            self.store.save_users(users)
        return account

    def authenticate(self, username: str, password: str) -> UserAccount:
        account = self.get(username)
        if account is None or _hash_password(password, account.salt) != account.password_hash:
            raise ApiError(401, "bad credentials")
        return account


# -- request bodies -----------------------------------------------------------


class Credentials(BaseModel):
    username: str
    password: str


class RepoCreate(BaseModel):
    owner: str
    name: str
    offline: bool = False


class CollectRequest(BaseModel):
    type: str
    page_size: Optional[int] = None
    restart: bool = False


class PaIdentifyRequest(BaseModel):
    repo: str
    type: str
    scope: Optional[list[str]] = None
    threshold: Optional[float] = None


def create_app(
    store: Store,
    harvest_cfg: Optional[harvest.HarvestConfig] = None,
    classifier: Optional[model.ClassifierModel] = None,
    session_ttl_s: int = SESSION_TTL_S,
    cors_origins: Optional[list[str]] = None,
) -> FastAPI:
    cfg = harvest_cfg or harvest.HarvestConfig()
    sessions = Sessions(session_ttl_s)
    accounts = Accounts(store)
    running_collections: set[tuple[str, str]] = set()
    running_lock = threading.Lock()
    state: dict = {"worker": None}

    def get_classifier() -> model.ClassifierModel:
        if state.get("classifier") is None:
            state["classifier"] = classifier or pa.load_bundled_model()
        return state["classifier"]

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        worker = pa.QueueWorker(store, get_classifier())
        worker.start()
        state["worker"] = worker
        try:
            yield
        finally:
            worker.stop()

    app = FastAPI(title="assumption mining api", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # -- plumbing -------------------------------------------------------------

    def current_user(authorization: Optional[str] = Header(default=None)) -> tuple[str, Role]:
        if not authorization or not authorization.lower().startswith("bearer "):
            raise ApiError(401, "missing session token")
        resolved = sessions.resolve(authorization.split(" ", 1)[1])
        if resolved is None:
            raise ApiError(401, "invalid or expired session token")
        return resolved

    def write_user(user: tuple[str, Role] = Depends(current_user)) -> tuple[str, Role]:
        if user[1] is Role.GUEST:
            raise ApiError(403, "guest accounts are read-only")
        return user

    def _domain_response(exc: Exception) -> JSONResponse:
        status = 500
        body: dict = {"error": str(exc)}
        if isinstance(exc, ApiError):
            status = exc.status
        elif isinstance(exc, (UnknownRepository, UnknownCollection, pa.UnknownJob,
                              pa.UnknownCandidate, harvest.RepoNotFound, kg.NoData)):
            status = 404
        elif isinstance(exc, (pa.AlreadyDecided, harvest.AlreadyCollecting)):
            status = 409
        elif isinstance(exc, harvest.RateLimited):
            status = 429
            if exc.reset_at is not None:
                body["reset_at"] = model.encode_timestamp(exc.reset_at)
        elif isinstance(exc, (SearchError, StoreError, kg.KgError, pa.PaError, ValueError)):
            status = 400
        elif isinstance(exc, harvest.HarvestError):
            status = 502
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(ApiError)
    async def _api_error(_req, exc: ApiError):
        return _domain_response(exc)

    @app.middleware("http")
    async def _request_log(request: Request, call_next):
        try:
            response = await call_next(request)
        except Exception as exc:  # domain errors map to status codes, not 500 logs
            response = _domain_response(exc)
        user = "-"
        auth = request.headers.get("authorization", "")
        if auth.lower().startswith("bearer "):
            resolved = sessions.resolve(auth.split(" ", 1)[1])
            if resolved:
                user = resolved[0]
        stamp = model.encode_timestamp(datetime.now(timezone.utc))
        store.append_log(f"{stamp}\t{user}\t{request.method} {request.url.path}\t{response.status_code}")
        return response

    def parse_ref(owner: str, name: str) -> RepositoryRef:
        ref = RepositoryRef(owner=owner, name=name)
        bad = model.validate(ref)
        if bad:
            raise ApiError(400, "; ".join(bad))
        return ref

    def parse_type(value: str) -> DataType:
        try:
            return DataType(value)
        except ValueError:
            raise ApiError(400, f"type must be one of {[t.value for t in DataType]}")

    def parse_scope(value: Optional[str]) -> Optional[list[SourceKind]]:
        if not value:
            return None
        try:
            return [SourceKind(v) for v in value.split(",") if v]
        except ValueError as e:
            raise ApiError(400, str(e))

    # -- auth -------------------------------------------------------------------

    @app.post("/api/auth/register", status_code=201)
    def register(body: Credentials):
        account = accounts.register(body.username, body.password)
        return {"username": account.username, "role": account.role.value}

    @app.post("/api/auth/login")
    def login(body: Credentials):
        account = accounts.authenticate(body.username, body.password)
        token = sessions.create(account.username, account.role)
        return {"token": token, "role": account.role.value, "username": account.username}

    @app.post("/api/auth/logout", status_code=204)
    def logout(authorization: Optional[str] = Header(default=None)):
        if authorization and authorization.lower().startswith("bearer "):
            sessions.drop(authorization.split(" ", 1)[1])
        return Response(status_code=204)

    # -- repositories --------------------------------------------------------------

    @app.get("/api/repos")
    def list_repos(user=Depends(current_user)):
        return [model.encode(r) for r in store.list_repositories()]

    @app.post("/api/repos", status_code=201)
    def add_repo(body: RepoCreate, user=Depends(write_user)):
        ref = parse_ref(body.owner, body.name)
        if store.has_repository(ref):
            raise ApiError(409, f"{ref.slug} already exists")
        if body.offline:
            record = model.RepositoryRecord(
                ref=ref,
                url=f"https://github.com/{ref.slug}",
                releases=[],
                tags=[],
                added_at=datetime.now(timezone.utc),
            )
        else:
            record = harvest.fetch_repository_info(ref, cfg)
        store.add_repository(record)
        return model.encode(record)

    @app.get("/api/repos/{owner}/{name}")
    def get_repo(owner: str, name: str, user=Depends(current_user)):
        return model.encode(store.get_repository(parse_ref(owner, name)))

    @app.delete("/api/repos/{owner}/{name}")
    def delete_repo(owner: str, name: str, user=Depends(write_user)):
        return {"purged": store.delete_repository(parse_ref(owner, name))}

    # -- collection ------------------------------------------------------------------

    @app.post("/api/repos/{owner}/{name}/collect", status_code=202)
    def start_collect(owner: str, name: str, body: CollectRequest, user=Depends(write_user)):
        ref = parse_ref(owner, name)
        data_type = parse_type(body.type)
        if not store.has_repository(ref):
            raise UnknownRepository(ref.slug)
        key = (ref.slug, data_type.value)
        with running_lock:
            if key in running_collections:
                raise ApiError(409, f"collection already running for {ref.slug} {data_type.value}")
            running_collections.add(key)
        try:
            cursor = store.get_cursor(ref, data_type)
            if body.restart:
                cursor = harvest.new_cursor(ref, data_type)
        except UnknownCollection:
            cursor = harvest.new_cursor(ref, data_type)
        store.save_cursor(cursor)
        run_cfg = cfg
        if body.page_size:
            run_cfg = harvest.HarvestConfig(
                endpoint_url=cfg.endpoint_url,
                token=cfg.token,
                page_size=body.page_size,
                refresh_interval_s=cfg.refresh_interval_s,
                max_retries=cfg.max_retries,
                retry_backoff_s=cfg.retry_backoff_s,
                timeout_s=cfg.timeout_s,
            )

        def run() -> None:
            try:
                final = harvest.collect(
                    ref, data_type, cursor, run_cfg, store.make_sink(ref, data_type)
                )
                store.save_cursor(final)
            finally:
                with running_lock:
                    running_collections.discard(key)

        threading.Thread(target=run, daemon=True).start()
        return model.encode(cursor)

    @app.get("/api/repos/{owner}/{name}/collect/status")
    def collect_status(owner: str, name: str, type: str, user=Depends(current_user)):
        ref = parse_ref(owner, name)
        return model.encode(store.get_cursor(ref, parse_type(type)))

    @app.get("/api/repos/{owner}/{name}/releases/{tag}/download")
    def download_release(owner: str, name: str, tag: str, user=Depends(current_user)):
        ref = parse_ref(owner, name)
        record = store.get_repository(ref)
        release = next((r for r in record.releases if r.tag_name == tag), None)
        if release is None:
            raise ApiError(404, f"no release {tag} in {ref.slug}")
        with TemporaryDirectory() as tmp:
            path = harvest.download_release_archive(release, f"{tmp}/archive.tar.gz", cfg)
            blob = open(path, "rb").read()
        return Response(
            content=blob,
            media_type="application/gzip",
            headers={"Content-Disposition": f'attachment; filename="{name}-{tag}.tar.gz"'},
        )

    # -- SCA ----------------------------------------------------------------------------

    @app.get("/api/repos/{owner}/{name}/sca/identify")
    def sca_identify(
        owner: str,
        name: str,
        type: str,
        mask_code: bool = False,
        scope: Optional[str] = None,
        user=Depends(current_user),
    ):
        ref = parse_ref(owner, name)
        data_type = parse_type(type)
        opts = SegmenterOptions(mask_fenced_code=mask_code)
        records = store.get_records(ref, data_type)
        return sca.identification_to_json(
            sca.identify_repo_records(ref, data_type, records, opts, parse_scope(scope))
        )

    @app.get("/api/repos/{owner}/{name}/sca/export.csv")
    def sca_export(
        owner: str,
        name: str,
        type: str,
        mask_code: bool = False,
        scope: Optional[str] = None,
        user=Depends(current_user),
    ):
        ref = parse_ref(owner, name)
        data_type = parse_type(type)
        opts = SegmenterOptions(mask_fenced_code=mask_code)
        records = store.get_records(ref, data_type)
        rows = sca.extract_repo_records(ref, data_type, records, opts, parse_scope(scope))
        store.save_sca_rows(ref, data_type, rows)
        with TemporaryDirectory() as tmp:
            path = f"{tmp}/sca.csv"
            sca.write_csv(rows, ref, data_type, path)
            text = open(path, "r", encoding="utf-8", newline="").read()
        return Response(
            content=text,
            media_type="text/csv",
            headers={
                "Content-Disposition": f'attachment; filename="{owner}_{name}_{type}_sca.csv"'
            },
        )

    # -- PA ------------------------------------------------------------------------------

    @app.post("/api/pa/identify", status_code=202)
    def pa_identify(body: PaIdentifyRequest, user=Depends(write_user)):
        ref = RepositoryRef.parse(body.repo)
        data_type = parse_type(body.type)
        scope = [SourceKind(s) for s in body.scope] if body.scope else None
        job = pa.enqueue_identify(store, ref, data_type, scope)
        return model.encode(job)

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: int, user=Depends(current_user)):
        return model.encode(pa.job_status(store, job_id))

    @app.get("/api/pa/candidates")
    def pa_candidates(
        repo: str,
        type: Optional[str] = None,
        status: Optional[str] = None,
        user=Depends(current_user),
    ):
        ref = RepositoryRef.parse(repo)
        data_type = parse_type(type) if type else None
        candidates = store.load_candidates(ref, data_type)
        if status:
            wanted = {CandidateStatus(s) for s in status.split(",") if s}
            candidates = [c for c in candidates if c.status in wanted]
        candidates.sort(key=lambda c: (-c.score, c.id))
        return [model.encode(c) for c in candidates]

    @app.get("/api/repos/{owner}/{name}/pa/export.csv")
    def pa_export(
        owner: str,
        name: str,
        type: str,
        status: Optional[str] = None,
        user=Depends(current_user),
    ):
        ref = parse_ref(owner, name)
        data_type = parse_type(type)
        wanted = {CandidateStatus(s) for s in status.split(",") if s} if status else None
        with TemporaryDirectory() as tmp:
            path = f"{tmp}/pa.csv"
            pa.extract_pas(store, ref, data_type, path, wanted)
            text = open(path, "r", encoding="utf-8", newline="").read()
        return Response(
            content=text,
            media_type="text/csv",
            headers={
                "Content-Disposition": f'attachment; filename="{owner}_{name}_{type}_pa.csv"'
            },
        )

    @app.post("/api/pa/{candidate_id}/confirm")
    def pa_confirm(candidate_id: str, user=Depends(write_user)):
        return model.encode(pa.triage(store, candidate_id, "confirm", user[0]))

    @app.post("/api/pa/{candidate_id}/reject")
    def pa_reject(candidate_id: str, user=Depends(write_user)):
        return model.encode(pa.triage(store, candidate_id, "reject", user[0]))

    # -- search and graphs ------------------------------------------------------------------

    @app.get("/api/search")
    def do_search(
        repo: str,
        type: str,
        q: str,
        scope: Optional[str] = None,
        user=Depends(current_user),
    ):
        ref = RepositoryRef.parse(repo)
        data_type = parse_type(type)
        scope_kinds = parse_scope(scope) or list(model.SOURCE_KINDS_BY_TYPE[data_type])
        query = parse_query(q, scope_kinds)
        return hits_to_json(search(store, ref, data_type, scope_kinds, query))

    @app.get("/api/repos/{owner}/{name}/kg")
    def knowledge_graph(
        owner: str,
        name: str,
        dimension: str,
        include: Optional[str] = None,
        user=Depends(current_user),
    ):
        ref = parse_ref(owner, name)
        try:
            dim = Dimension(dimension)
        except ValueError:
            raise ApiError(400, f"dimension must be one of {[d.value for d in Dimension]}")
        kinds = [v for v in include.split(",") if v] if include else list(kg.DEFAULT_INCLUDE)
        return kg.graph_to_json(kg.build_graph(store, ref, dim, kinds))

    @app.get("/health")
    def health():
        return {"ok": True}

    return app
