"""GitHub GraphQL harvesting with resumable cursor pagination.

One query template per data type requests exactly the modeled fields plus
``pageInfo`` and ``rateLimit``. Comments and reviews are fetched with a
fixed inner page of 100; items with more get follow-up queries. Collection
is driven page by page through a sink that persists each batch together
with the updated cursor, so an interrupted run resumes from the first
unfetched page without re-delivering anything.
"""

from __future__ import annotations

import errno
import os
import tempfile
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Union

import requests

from .model import (
    CollectionCursor,
    Comment,
    CommitRecord,
    CursorStatus,
    DataType,
    IssueRecord,
    IssueState,
    PrState,
    PullRequestRecord,
    Record,
    ReleaseRecord,
    RepositoryRecord,
    RepositoryRef,
    parse_timestamp,
)

INNER_PAGE = 100


class HarvestError(Exception):
    pass


class RepoNotFound(HarvestError):
    pass


class AuthFailed(HarvestError):
    pass


class RateLimited(HarvestError):
    def __init__(self, reset_at: Optional[datetime] = None):
        self.reset_at = reset_at
        when = reset_at.isoformat() if reset_at else "unknown"
        super().__init__(f"rate limit exhausted, resets at {when}")


class NetworkError(HarvestError):
    pass


class SchemaError(HarvestError):
    pass


class DiskFull(HarvestError):
    pass


class AlreadyCollecting(HarvestError):
    pass


@dataclass(frozen=True)
class HarvestConfig:
    endpoint_url: str = "https://api.github.com/graphql"
    token: str = ""
    page_size: int = 50
    refresh_interval_s: int = 10
    max_retries: int = 3
    retry_backoff_s: float = 1.0
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        if not (1 <= self.page_size <= 100):
            raise ValueError("page_size must be within 1..100")
        if self.refresh_interval_s < 1:
            raise ValueError("refresh_interval_s must be >= 1")


@dataclass(frozen=True)
class HarvestBatch:
    items: list[Record]
    next_cursor: Optional[str]
    cost_points: int


Sink = Callable[[list[Record], CollectionCursor], None]

# --------------------------------------------------------------------------
# Query templates
# --------------------------------------------------------------------------

_COMMENT_Fields = "author{login} body createdAt"

REPO_INFO_QUERY = """
query($owner:String!,$name:String!,$first:Int!,$relAfter:String,$tagAfter:String){
  repository(owner:$owner,name:$name){
    url
    releases(first:$first,after:$relAfter,orderBy:{field:CREATED_AT,direction:ASC}){
      pageInfo{endCursor hasNextPage}
      nodes{tagName publishedAt}
    }
    refs(refPrefix:"refs/tags/",first:$first,after:$tagAfter){
      pageInfo{endCursor hasNextPage}
      nodes{name}
    }
  }
  rateLimit{cost remaining resetAt}
}
"""

ISSUES_QUERY = """
query($owner:String!,$name:String!,$first:Int!,$after:String){
  repository(owner:$owner,name:$name){
    issues(first:$first,after:$after,orderBy:{field:CREATED_AT,direction:ASC}){
      totalCount
      pageInfo{endCursor hasNextPage}
      nodes{
        title number author{login} url
        labels(first:50){nodes{name}}
        state body createdAt closedAt
        comments(first:100){
          totalCount
          pageInfo{endCursor hasNextPage}
          nodes{%(comment)s}
        }
      }
    }
  }
  rateLimit{cost remaining resetAt}
}
""" % {"comment": _COMMENT_Fields}

PULL_REQUESTS_QUERY = """
query($owner:String!,$name:String!,$first:Int!,$after:String){
  repository(owner:$owner,name:$name){
    pullRequests(first:$first,after:$after,orderBy:{field:CREATED_AT,direction:ASC}){
      totalCount
      pageInfo{endCursor hasNextPage}
      nodes{
        title number author{login} url
        labels(first:50){nodes{name}}
        state body createdAt closedAt mergedAt
        comments(first:100){
          totalCount
          pageInfo{endCursor hasNextPage}
          nodes{%(comment)s}
        }
        reviews(first:100){
          totalCount
          pageInfo{endCursor hasNextPage}
          nodes{%(comment)s}
        }
      }
    }
  }
  rateLimit{cost remaining resetAt}
}
""" % {"comment": _COMMENT_Fields}

COMMITS_QUERY = """
query($owner:String!,$name:String!,$first:Int!,$after:String){
  repository(owner:$owner,name:$name){
    defaultBranchRef{
      target{
        ... on Commit{
          history(first:$first,after:$after){
            totalCount
            pageInfo{endCursor hasNextPage}
            nodes{oid author{name email} committedDate url message}
          }
        }
      }
    }
  }
  rateLimit{cost remaining resetAt}
}
"""

ISSUE_COMMENTS_QUERY = """
query($owner:String!,$name:String!,$number:Int!,$first:Int!,$after:String){
  repository(owner:$owner,name:$name){
    issue(number:$number){
      comments(first:$first,after:$after){
        pageInfo{endCursor hasNextPage}
        nodes{%(comment)s}
      }
    }
  }
  rateLimit{cost remaining resetAt}
}
""" % {"comment": _COMMENT_Fields}

PR_COMMENTS_QUERY = ISSUE_COMMENTS_QUERY.replace("issue(", "pullRequest(")
PR_REVIEWS_QUERY = PR_COMMENTS_QUERY.replace("comments(", "reviews(")


class GitHubClient:
    """Minimal GraphQL client: retries, auth, and rate-budget tracking."""

    def __init__(self, cfg: HarvestConfig):
        self.cfg = cfg
        self.session = requests.Session()
        if cfg.token:
            self.session.headers["Authorization"] = f"bearer {cfg.token}"
        self._remaining: Optional[int] = None
        self._last_cost: Optional[int] = None
        self._reset_at: Optional[datetime] = None

    def execute(self, query: str, variables: dict) -> dict:
        """POST one query; returns the ``data`` object."""
        if (
            self._remaining is not None
            and self._last_cost is not None
            and self._remaining < self._last_cost
        ):
            raise RateLimited(self._reset_at)
        payload = {"query": query, "variables": variables}
        last_exc: Optional[Exception] = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                resp = self.session.post(
                    self.cfg.endpoint_url, json=payload, timeout=self.cfg.timeout_s
                )
            except requests.RequestException as e:
                last_exc = e
                if attempt < self.cfg.max_retries:
                    time.sleep(self.cfg.retry_backoff_s * (2**attempt))
                continue
            if resp.status_code in (401, 403):
                raise AuthFailed(f"endpoint returned {resp.status_code}")
            if resp.status_code >= 500:
                last_exc = NetworkError(f"server error {resp.status_code}")
                if attempt < self.cfg.max_retries:
                    time.sleep(self.cfg.retry_backoff_s * (2**attempt))
                continue
            if resp.status_code != 200:
                raise NetworkError(f"unexpected status {resp.status_code}")
            body = resp.json()
            self._note_rate_limit(body)
            errors = body.get("errors") or []
            for err in errors:
                etype = err.get("type", "")
                if etype == "RATE_LIMITED":
                    reset = err.get("extensions", {}).get("resetAt")
                    raise RateLimited(parse_timestamp(reset) if reset else self._reset_at)
                if etype == "NOT_FOUND":
                    raise RepoNotFound(err.get("message", "not found"))
            if errors:
                raise SchemaError(f"GraphQL errors: {errors}")
            data = body.get("data")
            if data is None:
                raise SchemaError("response carries no data")
            return data
        raise NetworkError(f"request failed after {self.cfg.max_retries + 1} attempts: {last_exc}")

    def _note_rate_limit(self, body: dict) -> None:
        info = (body.get("data") or {}).get("rateLimit") or body.get("rateLimit")
        if not info:
            return
        self._last_cost = info.get("cost", self._last_cost)
        self._remaining = info.get("remaining", self._remaining)
        reset = info.get("resetAt")
        if reset:
            self._reset_at = parse_timestamp(reset)


# --------------------------------------------------------------------------
# Response parsing
# --------------------------------------------------------------------------


def _login(node: Optional[dict]) -> str:
    return (node or {}).get("login") or ""


def _ts(value: Optional[str]) -> Optional[datetime]:
    return parse_timestamp(value) if value else None


def _parse_comments(conn: dict) -> list[Comment]:
    return [
        Comment(author=_login(n.get("author")), body=n.get("body") or "", created_at=_ts(n["createdAt"]))
        for n in conn.get("nodes", [])
    ]


def _parse_issue(ref: RepositoryRef, node: dict) -> IssueRecord:
    return IssueRecord(
        repo_name=ref.name,
        title=node["title"],
        id=node["number"],
        author=_login(node.get("author")),
        url=node["url"],
        labels=[l["name"] for l in node.get("labels", {}).get("nodes", [])],
        state=IssueState(node["state"].lower()),
        body=node.get("body") or "",
        comments=_parse_comments(node.get("comments", {})),
        created_at=_ts(node["createdAt"]),
        closed_at=_ts(node.get("closedAt")),
    )


def _parse_pr(ref: RepositoryRef, node: dict) -> PullRequestRecord:
    return PullRequestRecord(
        repo_name=ref.name,
        owner=ref.owner,
        title=node["title"],
        id=node["number"],
        author=_login(node.get("author")),
        url=node["url"],
        labels=[l["name"] for l in node.get("labels", {}).get("nodes", [])],
        state=PrState(node["state"].lower()),
        body=node.get("body") or "",
        comments=_parse_comments(node.get("comments", {})),
        reviews=_parse_comments(node.get("reviews", {})),
        created_at=_ts(node["createdAt"]),
        closed_at=_ts(node.get("closedAt")),
        merged_at=_ts(node.get("mergedAt")),
    )


def _parse_commit(ref: RepositoryRef, node: dict) -> CommitRecord:
    author = node.get("author") or {}
    return CommitRecord(
        repo_name=ref.name,
        owner=ref.owner,
        oid=node["oid"],
        author_name=author.get("name") or "",
        author_email=author.get("email") or "",
        committed_date=_ts(node["committedDate"]),
        url=node["url"],
        message=node.get("message") or "",
    )


def _overflow_comments(
    client: GitHubClient,
    ref: RepositoryRef,
    query: str,
    container: str,
    field: str,
    number: int,
    after: Optional[str],
) -> list[Comment]:
    """Fetch the remaining inner pages of a comments/reviews connection."""
    out: list[Comment] = []
    while after is not None:
        data = client.execute(
            query,
            {
                "owner": ref.owner,
                "name": ref.name,
                "number": number,
                "first": INNER_PAGE,
                "after": after,
            },
        )
        try:
            conn = data["repository"][container][field]
        except (KeyError, TypeError) as e:
            raise SchemaError(f"missing {container}.{field} in response") from e
        out.extend(_parse_comments(conn))
        page = conn.get("pageInfo", {})
        after = page.get("endCursor") if page.get("hasNextPage") else None
    return out


def _fetch_page(
    client: GitHubClient,
    ref: RepositoryRef,
    data_type: DataType,
    after: Optional[str],
    page_size: int,
) -> HarvestBatch:
    variables = {"owner": ref.owner, "name": ref.name, "first": page_size, "after": after}
    if data_type is DataType.ISSUE:
        data = client.execute(ISSUES_QUERY, variables)
        repo = data.get("repository")
        if repo is None:
            raise RepoNotFound(ref.slug)
        conn = repo["issues"]
        items: list[Record] = []
        for node in conn["nodes"]:
            record = _parse_issue(ref, node)
            cpage = node.get("comments", {}).get("pageInfo", {})
            if cpage.get("hasNextPage"):
                extra = _overflow_comments(
                    client, ref, ISSUE_COMMENTS_QUERY, "issue", "comments",
                    record.id, cpage.get("endCursor"),
                )
                record = replace(record, comments=record.comments + extra)
            items.append(record)
    elif data_type is DataType.PR:
        data = client.execute(PULL_REQUESTS_QUERY, variables)
        repo = data.get("repository")
        if repo is None:
            raise RepoNotFound(ref.slug)
        conn = repo["pullRequests"]
        items = []
        for node in conn["nodes"]:
            record = _parse_pr(ref, node)
            cpage = node.get("comments", {}).get("pageInfo", {})
            if cpage.get("hasNextPage"):
                extra = _overflow_comments(
                    client, ref, PR_COMMENTS_QUERY, "pullRequest", "comments",
                    record.id, cpage.get("endCursor"),
                )
                record = replace(record, comments=record.comments + extra)
            rpage = node.get("reviews", {}).get("pageInfo", {})
            if rpage.get("hasNextPage"):
                extra = _overflow_comments(
                    client, ref, PR_REVIEWS_QUERY, "pullRequest", "reviews",
                    record.id, rpage.get("endCursor"),
                )
                record = replace(record, reviews=record.reviews + extra)
            items.append(record)
    elif data_type is DataType.COMMIT:
        data = client.execute(COMMITS_QUERY, variables)
        repo = data.get("repository")
        if repo is None:
            raise RepoNotFound(ref.slug)
        branch = repo.get("defaultBranchRef")
        if branch is None:
            conn = {"nodes": [], "pageInfo": {"hasNextPage": False, "endCursor": None}}
        else:
            conn = branch["target"]["history"]
        items = [_parse_commit(ref, n) for n in conn["nodes"]]
    else:
        raise ValueError(f"unknown data type {data_type}")

    try:
        page = conn["pageInfo"]
        next_cursor = page["endCursor"] if page["hasNextPage"] else None
    except (KeyError, TypeError) as e:
        raise SchemaError("response is missing pageInfo") from e
    cost = client._last_cost or 1
    return HarvestBatch(items=items, next_cursor=next_cursor, cost_points=cost)


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def fetch_repository_info(ref: RepositoryRef, cfg: HarvestConfig) -> RepositoryRecord:
    """Repository url, all releases, and all tags. Does not persist."""
    client = GitHubClient(cfg)
    releases: list[ReleaseRecord] = []
    tags: list[str] = []
    url: Optional[str] = None
    rel_after: Optional[str] = None
    tag_after: Optional[str] = None
    rel_more = True
    tag_more = True
    while rel_more or tag_more:
        data = client.execute(
            REPO_INFO_QUERY,
            {
                "owner": ref.owner,
                "name": ref.name,
                "first": cfg.page_size,
                "relAfter": rel_after,
                "tagAfter": tag_after,
            },
        )
        repo = data.get("repository")
        if repo is None:
            raise RepoNotFound(ref.slug)
        url = repo["url"]
        if rel_more:
            conn = repo["releases"]
            for node in conn["nodes"]:
                tag = node["tagName"]
                releases.append(
                    ReleaseRecord(
                        tag_name=tag,
                        published_at=parse_timestamp(node["publishedAt"]),
                        source_archive_url=f"{url}/archive/refs/tags/{tag}.tar.gz",
                    )
                )
            rel_more = conn["pageInfo"]["hasNextPage"]
            rel_after = conn["pageInfo"]["endCursor"]
        if tag_more:
            conn = repo["refs"]
            tags.extend(n["name"] for n in conn["nodes"])
            tag_more = conn["pageInfo"]["hasNextPage"]
            tag_after = conn["pageInfo"]["endCursor"]
    return RepositoryRecord(
        ref=ref,
        url=url or "",
        releases=releases,
        tags=tags,
        added_at=datetime.now(timezone.utc),
    )


_active_lock = threading.Lock()
_active: set[tuple[str, str]] = set()


def new_cursor(ref: RepositoryRef, data_type: DataType) -> CollectionCursor:
    return CollectionCursor(
        repo=ref,
        data_type=data_type,
        cursor_token=None,
        pages_done=0,
        items_done=0,
        status=CursorStatus.COLLECTING,
    )


def collect(
    ref: RepositoryRef,
    data_type: DataType,
    cursor: CollectionCursor,
    cfg: HarvestConfig,
    sink: Sink,
) -> CollectionCursor:
    """Page through one collection, persisting each batch via the sink.

    Returns the final cursor: finished on success, error (with the token of
    the first unfetched page) on failure. A finished cursor is returned
    unchanged. At most one collect per (repo, data type) may run at a time.
    """
    if cursor.status is CursorStatus.FINISHED and cursor.cursor_token is None:
        return cursor
    key = (ref.slug, data_type.value)
    with _active_lock:
        if key in _active:
            raise AlreadyCollecting(f"{ref.slug} {data_type.value}")
        _active.add(key)
    try:
        client = GitHubClient(cfg)
        cur = replace(cursor, status=CursorStatus.COLLECTING, last_error=None)
        token = cur.cursor_token
        while True:
            try:
                batch = _fetch_page(client, ref, data_type, token, cfg.page_size)
            except HarvestError as e:
                err = replace(
                    cur,
                    status=CursorStatus.ERROR,
                    cursor_token=token,
                    last_error=str(e),
                )
                sink([], err)
                return err
            finished = batch.next_cursor is None
            cur = replace(
                cur,
                pages_done=cur.pages_done + 1,
                items_done=cur.items_done + len(batch.items),
                cursor_token=batch.next_cursor,
                status=CursorStatus.FINISHED if finished else CursorStatus.COLLECTING,
            )
            if batch.items:
                sink(batch.items, cur)
            if finished:
                return cur
            token = batch.next_cursor
    finally:
        with _active_lock:
            _active.discard(key)


def run_collection(
    store,
    ref: RepositoryRef,
    data_type: DataType,
    cfg: HarvestConfig,
    restart: bool = False,
) -> CollectionCursor:
    """Resume (or start) a collection against a store and persist the outcome."""
    cursor = None
    if not restart:
        try:
            cursor = store.get_cursor(ref, data_type)
        except Exception:
            cursor = None
    if cursor is None:
        cursor = new_cursor(ref, data_type)
    final = collect(ref, data_type, cursor, cfg, store.make_sink(ref, data_type))
    store.save_cursor(final)
    return final


def collection_status(store, ref: RepositoryRef, data_type: DataType) -> CollectionCursor:
    """Persisted cursor snapshot; raises UnknownCollection when absent."""
    return store.get_cursor(ref, data_type)


def download_release_archive(release: ReleaseRecord, dest_path, cfg: Optional[HarvestConfig] = None) -> str:
    """Stream the source archive to dest_path (overwrites)."""
    cfg = cfg or HarvestConfig()
    dest = Path(dest_path)
    dest.parent.mkdir(parents=True, exist_ok=True)
    try:
        resp = requests.get(release.source_archive_url, stream=True, timeout=cfg.timeout_s)
    except requests.RequestException as e:
        raise NetworkError(str(e)) from e
    if resp.status_code != 200:
        raise NetworkError(f"archive request returned {resp.status_code}")
    fd, tmp = tempfile.mkstemp(prefix=dest.name + ".", dir=dest.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            for chunk in resp.iter_content(chunk_size=65536):
                f.write(chunk)
        os.replace(tmp, dest)
    except OSError as e:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        if e.errno == errno.ENOSPC:
            raise DiskFull(str(e)) from e
        raise
    return str(dest)


def delete_repository_data(store, ref: RepositoryRef) -> int:
    """Purge records, cursors, and SCA/PA results for a repository."""
    return store.delete_repository(ref)
