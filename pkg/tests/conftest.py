"""Shared fixtures and record factories."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from scapa.model import (
    Comment,
    CommitRecord,
    IssueRecord,
    IssueState,
    PrState,
    PullRequestRecord,
    RepositoryRef,
    SourceKind,
    TextUnit,
)
from scapa.store import Store

T0 = datetime(2022, 11, 1, tzinfo=timezone.utc)


def ts(days: float = 0, hours: float = 0) -> datetime:
    return T0 + timedelta(days=days, hours=hours)


def make_issue(i: int, repo: str = "repo", owner: str = "owner", **kw) -> IssueRecord:
    defaults = dict(
        repo_name=repo,
        title=f"Issue {i}",
        id=i,
        author=f"user{i % 5}",
        url=f"https://example.test/{owner}/{repo}/issues/{i}",
        labels=["bug"] if i % 3 == 0 else [],
        state=IssueState.CLOSED if i % 2 == 0 else IssueState.OPEN,
        body=f"Body of issue {i}.",
        comments=[],
        created_at=ts(days=i % 60, hours=i % 24),
        closed_at=ts(days=i % 60, hours=(i % 24) + 4) if i % 2 == 0 else None,
    )
    defaults.update(kw)
    return IssueRecord(**defaults)


def make_pr(i: int, repo: str = "repo", owner: str = "owner", **kw) -> PullRequestRecord:
    state = [PrState.OPEN, PrState.CLOSED, PrState.MERGED][i % 3]
    defaults = dict(
        repo_name=repo,
        owner=owner,
        title=f"PR {i}",
        id=i,
        author=f"dev{i % 4}",
        url=f"https://example.test/{owner}/{repo}/pull/{i}",
        labels=[],
        state=state,
        body=f"Change description {i}.",
        comments=[],
        reviews=[],
        created_at=ts(days=i % 60),
        closed_at=ts(days=i % 60 + 1) if state is not PrState.OPEN else None,
        merged_at=ts(days=i % 60, hours=20) if state is PrState.MERGED else None,
    )
    defaults.update(kw)
    return PullRequestRecord(**defaults)


def make_commit(i: int, repo: str = "repo", owner: str = "owner", **kw) -> CommitRecord:
    defaults = dict(
        repo_name=repo,
        owner=owner,
        oid="%040x" % (i + 1),
        author_name=f"Dev {i % 4}",
        author_email=f"dev{i % 4}@example.test",
        committed_date=ts(days=i % 90, hours=i % 24),
        url=f"https://example.test/{owner}/{repo}/commit/{'%040x' % (i + 1)}",
        message=f"Commit message {i}.",
    )
    defaults.update(kw)
    return CommitRecord(**defaults)


def make_comment(k: int, body: str = "", **kw) -> Comment:
    defaults = dict(author=f"c{k % 6}", body=body or f"comment {k}", created_at=ts(hours=k))
    defaults.update(kw)
    return Comment(**defaults)


def make_unit(text: str, kind: SourceKind = SourceKind.ISSUE_BODY, **kw) -> TextUnit:
    defaults = dict(
        source_kind=kind,
        repo=RepositoryRef("owner", "repo"),
        source_url="https://example.test/owner/repo/issues/1",
        author="user1",
        text=text,
    )
    defaults.update(kw)
    return TextUnit(**defaults)


@pytest.fixture
def store(tmp_path) -> Store:
    return Store(tmp_path / "store")


@pytest.fixture
def ref() -> RepositoryRef:
    return RepositoryRef("owner", "repo")
