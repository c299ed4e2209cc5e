"""Local test double for the GitHub GraphQL endpoint.

Serves fixture records over the same wire protocol the harvester speaks:
POST /graphql with cursor pagination, nested comment/review pages,
a point budget per simulated hour, and page-level fault injection.
Release archives are served under /{owner}/{name}/archive/refs/tags/.

Useful knobs: ``page_cap`` (server-side max page size), ``cost_per_request``,
``budget`` (points per simulated hour), ``fail_pages`` (1-based page numbers
that answer 500 until cleared), ``require_token``.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from . import model
from .model import (
    CommitRecord,
    DataType,
    IssueRecord,
    PullRequestRecord,
    ReleaseRecord,
    RepositoryRef,
)

_INNER_PAGE = 100


@dataclass
class RepoFixture:
    ref: RepositoryRef
    releases: list[ReleaseRecord] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    issues: list[IssueRecord] = field(default_factory=list)
    prs: list[PullRequestRecord] = field(default_factory=list)
    commits: list[CommitRecord] = field(default_factory=list)
    archives: dict[str, bytes] = field(default_factory=dict)


def _token(offset: int) -> str:
    return f"offset:{offset}"


def _offset(token: Optional[str]) -> int:
    if token is None:
        return 0
    if not token.startswith("offset:"):
        raise ValueError(f"bad cursor token {token!r}")
    return int(token.split(":", 1)[1])


def _page(seq: list, after: Optional[str], first: int) -> tuple[list, dict, int]:
    start = _offset(after)
    chunk = seq[start : start + first]
    end = start + len(chunk)
    page_info = {
        "endCursor": _token(end) if chunk else (after or _token(0)),
        "hasNextPage": end < len(seq),
    }
    return chunk, page_info, start


def _iso(dt) -> Optional[str]:
    return model.encode_timestamp(dt) if dt else None


def _comment_nodes(comments, after: Optional[str], first: int) -> dict:
    chunk, page_info, _ = _page(comments, after, first)
    return {
        "totalCount": len(comments),
        "pageInfo": page_info,
        "nodes": [
            {"author": {"login": c.author}, "body": c.body, "createdAt": _iso(c.created_at)}
            for c in chunk
        ],
    }


class MockGitHub:
    """In-process GitHub stand-in for tests and offline demos."""

    def __init__(
        self,
        page_cap: int = 100,
        cost_per_request: int = 1,
        budget: int = 5000,
        require_token: Optional[str] = None,
    ):
        self.page_cap = page_cap
        self.cost_per_request = cost_per_request
        self.budget = budget
        self.require_token = require_token
        self.remaining = budget
        self.window_start = datetime(2023, 1, 1, tzinfo=timezone.utc)
        self.repos: dict[tuple[str, str], RepoFixture] = {}
        self.fail_pages: dict[tuple[str, str, str], set[int]] = {}
        self.request_count = 0
        self.rejected_count = 0
        self._lock = threading.Lock()
        self._server: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None
        self._port: Optional[int] = None

    # -- fixture management -------------------------------------------------

    def add_repo(self, fixture: RepoFixture) -> None:
        self.repos[(fixture.ref.owner, fixture.ref.name)] = fixture

    def repo_url(self, ref: RepositoryRef) -> str:
        return f"{self.url}/{ref.owner}/{ref.name}"

    def fail_at(self, ref: RepositoryRef, data_type: DataType, pages: set[int]) -> None:
        self.fail_pages[(ref.owner, ref.name, data_type.value)] = set(pages)

    def clear_failures(self) -> None:
        self.fail_pages.clear()

    def advance_hour(self) -> None:
        with self._lock:
            self.window_start += timedelta(hours=1)
            self.remaining = self.budget

    @property
    def reset_at(self) -> datetime:
        return self.window_start + timedelta(hours=1)

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> str:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self._port = self._server.server_address[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.url

    def stop(self) -> None:
        if self._server:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockGitHub":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self._port}"

    @property
    def graphql_url(self) -> str:
        return f"{self.url}/graphql"

    # -- GraphQL resolution -----------------------------------------------------

    def resolve(self, query: str, variables: dict) -> tuple[int, dict]:
        """Returns (http_status, body)."""
        with self._lock:
            if self.remaining < self.cost_per_request:
                self.rejected_count += 1
                return 200, {
                    "data": None,
                    "errors": [
                        {
                            "type": "RATE_LIMITED",
                            "message": "API rate limit exhausted",
                            "extensions": {"resetAt": _iso(self.reset_at)},
                        }
                    ],
                }
            self.remaining -= self.cost_per_request
            self.request_count += 1
            remaining = self.remaining

        owner = variables.get("owner", "")
        name = variables.get("name", "")
        fixture = self.repos.get((owner, name))
        rate = {
            "cost": self.cost_per_request,
            "remaining": remaining,
            "resetAt": _iso(self.reset_at),
        }
        if fixture is None:
            return 200, {
                "data": {"repository": None, "rateLimit": rate},
                "errors": [
                    {
                        "type": "NOT_FOUND",
                        "message": f"Could not resolve to a Repository named '{owner}/{name}'.",
                    }
                ],
            }

        first = min(int(variables.get("first") or self.page_cap), self.page_cap)
        ref = fixture.ref

        # Nested overflow queries are recognised by the "number" variable.
        if "number" in variables:
            number = variables["number"]
            after = variables.get("after")
            if "pullRequest(" in query:
                parent = next((p for p in fixture.prs if p.id == number), None)
                coll = "pullRequest"
            else:
                parent = next((i for i in fixture.issues if i.id == number), None)
                coll = "issue"
            if parent is None:
                return 200, {"data": {"repository": {coll: None}, "rateLimit": rate}}
            items = parent.reviews if "reviews(" in query else parent.comments
            fname = "reviews" if "reviews(" in query else "comments"
            return 200, {
                "data": {
                    "repository": {coll: {fname: _comment_nodes(items, after, first)}},
                    "rateLimit": rate,
                }
            }

        after = variables.get("after")
        if "issues(" in query:
            status = self._maybe_fail(ref, DataType.ISSUE, after, first)
            if status:
                return status
            chunk, page_info, _ = _page(fixture.issues, after, first)
            nodes = [self._issue_node(r) for r in chunk]
            conn = {"totalCount": len(fixture.issues), "pageInfo": page_info, "nodes": nodes}
            return 200, {"data": {"repository": {"issues": conn}, "rateLimit": rate}}
        if "pullRequests(" in query:
            status = self._maybe_fail(ref, DataType.PR, after, first)
            if status:
                return status
            chunk, page_info, _ = _page(fixture.prs, after, first)
            nodes = [self._pr_node(r) for r in chunk]
            conn = {"totalCount": len(fixture.prs), "pageInfo": page_info, "nodes": nodes}
            return 200, {"data": {"repository": {"pullRequests": conn}, "rateLimit": rate}}
        if "history(" in query:
            status = self._maybe_fail(ref, DataType.COMMIT, after, first)
            if status:
                return status
            chunk, page_info, _ = _page(fixture.commits, after, first)
            nodes = [
                {
                    "oid": c.oid,
                    "author": {"name": c.author_name, "email": c.author_email},
                    "committedDate": _iso(c.committed_date),
                    "url": c.url,
                    "message": c.message,
                }
                for c in chunk
            ]
            conn = {"totalCount": len(fixture.commits), "pageInfo": page_info, "nodes": nodes}
            return 200, {
                "data": {
                    "repository": {"defaultBranchRef": {"target": {"history": conn}}},
                    "rateLimit": rate,
                }
            }
        if "releases(" in query:
            rel_chunk, rel_page, _ = _page(fixture.releases, variables.get("relAfter"), first)
            tag_chunk, tag_page, _ = _page(fixture.tags, variables.get("tagAfter"), first)
            return 200, {
                "data": {
                    "repository": {
                        "url": self.repo_url(ref),
                        "releases": {
                            "pageInfo": rel_page,
                            "nodes": [
                                {"tagName": r.tag_name, "publishedAt": _iso(r.published_at)}
                                for r in rel_chunk
                            ],
                        },
                        "refs": {
                            "pageInfo": tag_page,
                            "nodes": [{"name": t} for t in tag_chunk],
                        },
                    },
                    "rateLimit": rate,
                }
            }
        return 200, {
            "data": None,
            "errors": [{"type": "UNPROCESSABLE", "message": "unrecognised query"}],
        }

    def _maybe_fail(self, ref, data_type, after, first):
        pages = self.fail_pages.get((ref.owner, ref.name, data_type.value), set())
        if pages:
            page_number = _offset(after) // max(first, 1) + 1
            if page_number in pages:
                return 500, {"message": f"injected failure at page {page_number}"}
        return None

    def _issue_node(self, r: IssueRecord) -> dict:
        return {
            "title": r.title,
            "number": r.id,
            "author": {"login": r.author},
            "url": r.url,
            "labels": {"nodes": [{"name": l} for l in r.labels]},
            "state": r.state.value.upper(),
            "body": r.body,
            "createdAt": _iso(r.created_at),
            "closedAt": _iso(r.closed_at),
            "comments": _comment_nodes(r.comments, None, _INNER_PAGE),
        }

    def _pr_node(self, r: PullRequestRecord) -> dict:
        node = self._issue_node(r)  # same shape for the shared fields
        node["state"] = r.state.value.upper()
        node["mergedAt"] = _iso(r.merged_at)
        node["reviews"] = _comment_nodes(r.reviews, None, _INNER_PAGE)
        return node

    def archive_bytes(self, owner: str, name: str, tag: str) -> Optional[bytes]:
        fixture = self.repos.get((owner, name))
        if fixture is None:
            return None
        return fixture.archives.get(tag)


def _make_handler(mock: MockGitHub):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args) -> None:  # keep test output clean
            pass

        def _send_json(self, status: int, body: dict) -> None:
            payload = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def do_POST(self) -> None:
            if self.path != "/graphql":
                self._send_json(404, {"message": "not found"})
                return
            if mock.require_token is not None:
                auth = self.headers.get("Authorization", "")
                if auth != f"bearer {mock.require_token}":
                    self._send_json(401, {"message": "Bad credentials"})
                    return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                payload = json.loads(self.rfile.read(length) or b"{}")
                status, body = mock.resolve(
                    payload.get("query", ""), payload.get("variables") or {}
                )
            except Exception as e:  # malformed request
                self._send_json(400, {"message": str(e)})
                return
            self._send_json(status, body)

        def do_GET(self) -> None:
            # /{owner}/{name}/archive/refs/tags/{tag}.tar.gz
            parts = self.path.strip("/").split("/")
            if len(parts) == 6 and parts[2] == "archive" and parts[3] == "refs" and parts[4] == "tags":
                tag = parts[5]
                if tag.endswith(".tar.gz"):
                    tag = tag[: -len(".tar.gz")]
                blob = mock.archive_bytes(parts[0], parts[1], tag)
                if blob is not None:
                    self.send_response(200)
                    self.send_header("Content-Type", "application/gzip")
                    self.send_header("Content-Length", str(len(blob)))
                    self.end_headers()
                    self.wfile.write(blob)
                    return
            self._send_json(404, {"message": "not found"})

    return Handler
