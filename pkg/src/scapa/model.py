"""Domain types shared across the mining pipeline.

Everything here is an immutable value object: records harvested from
GitHub, text fragments derived from them, assumption datasets, and the
cursor/graph bookkeeping types. No I/O. Invariants are checked by
:func:`validate`, which returns violation messages instead of raising so
callers can report all problems at once.
"""

from __future__ import annotations

import json
import re
import typing
from dataclasses import dataclass, field, fields, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from graphlib import CycleError, TopologicalSorter
from typing import Any, Optional, Union

#: The eight assumption-related search terms. All share the prefix
#: "assum", which the scanners exploit as a cheap pre-filter.
KEYWORD_TERMS: tuple[str, ...] = (
    "assumption",
    "assumptions",
    "assume",
    "assumes",
    "assumed",
    "assuming",
    "assumable",
    "assumably",
)

_OID_RE = re.compile(r"^[0-9a-f]{40}$")


def is_word_char(ch: str) -> bool:
    """True for characters that continue a word (letter, digit, underscore)."""
    return ch.isalnum() or ch == "_"


def contains_keyword(text: str) -> bool:
    """Whole-word, case-insensitive containment check for the keyword set."""
    low = text.lower()
    if "assum" not in low:
        return False
    for term in KEYWORD_TERMS:
        start = 0
        while True:
            i = low.find(term, start)
            if i < 0:
                break
            j = i + len(term)
            before_ok = i == 0 or not is_word_char(low[i - 1])
            after_ok = j == len(low) or not is_word_char(low[j])
            if before_ok and after_ok:
                return True
            start = i + 1
    return False


class DataType(str, Enum):
    ISSUE = "issue"
    PR = "pr"
    COMMIT = "commit"


class SourceKind(str, Enum):
    ISSUE_TITLE = "issue_title"
    ISSUE_BODY = "issue_body"
    ISSUE_COMMENT_BODY = "issue_comment_body"
    PR_TITLE = "pr_title"
    PR_BODY = "pr_body"
    PR_COMMENT_BODY = "pr_comment_body"
    COMMIT_MESSAGE = "commit_message"


#: Search/extraction scope per data type, in stable field order.
SOURCE_KINDS_BY_TYPE: dict[DataType, tuple[SourceKind, ...]] = {
    DataType.ISSUE: (
        SourceKind.ISSUE_TITLE,
        SourceKind.ISSUE_BODY,
        SourceKind.ISSUE_COMMENT_BODY,
    ),
    DataType.PR: (
        SourceKind.PR_TITLE,
        SourceKind.PR_BODY,
        SourceKind.PR_COMMENT_BODY,
    ),
    DataType.COMMIT: (SourceKind.COMMIT_MESSAGE,),
}


class IssueState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


class PrState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"
    MERGED = "merged"


class CursorStatus(str, Enum):
    COLLECTING = "collecting"
    FINISHED = "finished"
    ERROR = "error"


class CandidateStatus(str, Enum):
    PENDING = "pending"
    CONFIRMED = "confirmed"
    REJECTED = "rejected"


class Dimension(str, Enum):
    RELEASE = "release"
    MONTH = "month"
    DAY = "day"


class NodeKind(str, Enum):
    ISSUE = "issue"
    PR = "pr"
    COMMIT = "commit"
    RELEASE = "release"
    SCA = "sca"
    PA = "pa"
    BUCKET = "bucket"


class EdgeRelation(str, Enum):
    LIFECYCLE_NEXT = "lifecycle_next"
    SAME_BUCKET = "same_bucket"
    TIMELINE_NEXT = "timeline_next"
    ATTACHED_TO = "attached_to"


@dataclass(frozen=True)
class RepositoryRef:
    """Unique repository key: owner + name."""

    owner: str
    name: str

    @property
    def slug(self) -> str:
        return f"{self.owner}/{self.name}"

    @classmethod
    def parse(cls, slug: str) -> "RepositoryRef":
        owner, _, name = slug.partition("/")
        return cls(owner=owner, name=name)


@dataclass(frozen=True)
class ReleaseRecord:
    tag_name: str
    published_at: datetime
    source_archive_url: str


@dataclass(frozen=True)
class RepositoryRecord:
    ref: RepositoryRef
    url: str
    releases: list[ReleaseRecord]
    tags: list[str]
    added_at: datetime


@dataclass(frozen=True)
class Comment:
    author: str
    body: str
    created_at: datetime


@dataclass(frozen=True)
class IssueRecord:
    repo_name: str
    title: str
    id: int
    author: str
    url: str
    labels: list[str]
    state: IssueState
    body: str
    comments: list[Comment]
    # Timeline extension: required to place the issue on a knowledge-graph
    # timeline (created/closed instants are not part of the CSV datasets).
    created_at: datetime
    closed_at: Optional[datetime] = None


@dataclass(frozen=True)
class PullRequestRecord:
    repo_name: str
    owner: str
    title: str
    id: int
    author: str
    url: str
    labels: list[str]
    state: PrState
    body: str
    comments: list[Comment]
    reviews: list[Comment]
    created_at: datetime
    closed_at: Optional[datetime] = None
    merged_at: Optional[datetime] = None


@dataclass(frozen=True)
class CommitRecord:
    repo_name: str
    owner: str
    oid: str
    author_name: str
    author_email: str
    committed_date: datetime
    url: str
    message: str


#: Any harvested artifact.
Record = Union[IssueRecord, PullRequestRecord, CommitRecord]

RECORD_TYPES: dict[DataType, type] = {
    DataType.ISSUE: IssueRecord,
    DataType.PR: PullRequestRecord,
    DataType.COMMIT: CommitRecord,
}


def record_id(record: Record) -> str:
    """Stable identity used for upserts and ordering."""
    if isinstance(record, CommitRecord):
        return record.oid
    return str(record.id)


@dataclass(frozen=True)
class TextUnit:
    """One searchable text field of a harvested record."""

    source_kind: SourceKind
    repo: RepositoryRef
    source_url: str
    author: str
    text: str


@dataclass(frozen=True)
class Sentence:
    """A segmented sentence with character offsets into its parent text."""

    text: str
    start: int
    end: int
    index: int


@dataclass(frozen=True)
class MatchSpan:
    """A whole-word keyword hit: [start, end) in the scanned text."""

    term: str
    start: int
    end: int


@dataclass(frozen=True)
class ScaRecord:
    """One dataset row of the SCA extraction output.

    Two variants share the class: issue/PR rows carry author/title/state,
    commit rows carry author_name/message. Exactly one group is set.
    """

    owner: str
    repo_name: str
    url: str
    sca_sentence: str
    author: Optional[str] = None
    title: Optional[str] = None
    state: Optional[str] = None
    author_name: Optional[str] = None
    message: Optional[str] = None

    @property
    def is_commit_variant(self) -> bool:
        return self.message is not None


@dataclass(frozen=True)
class PaCandidate:
    """A scored sentence awaiting human triage.

    The id is a deterministic digest of the provenance so re-running a job
    never duplicates candidates.
    """

    id: str
    sentence: Sentence
    unit: TextUnit
    score: float
    status: CandidateStatus = CandidateStatus.PENDING
    decided_by: Optional[str] = None
    decided_at: Optional[datetime] = None


@dataclass(frozen=True)
class CollectionCursor:
    repo: RepositoryRef
    data_type: DataType
    cursor_token: Optional[str]
    pages_done: int
    items_done: int
    status: CursorStatus
    last_error: Optional[str] = None


@dataclass(frozen=True)
class TrainingConfig:
    train_fraction: float = 0.8
    batch_size: int = 32
    learning_rate: float = 0.1
    max_steps: int = 50_000
    threshold: float = 0.5


@dataclass(frozen=True)
class ClassifierModel:
    vocabulary: dict[str, int]
    feature_dim: int
    weights: list[float]
    bias: float
    config: TrainingConfig
    seed: int


@dataclass(frozen=True)
class Query:
    and_terms: list[str]
    or_terms: list[str]
    scope: list[SourceKind]


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: NodeKind
    state: str
    bucket: str
    label: str


@dataclass(frozen=True)
class GraphEdge:
    src_id: str
    dst_id: str
    relation: EdgeRelation


@dataclass(frozen=True)
class KnowledgeGraph:
    dimension: Dimension
    nodes: list[GraphNode]
    edges: list[GraphEdge]


# ---------------------------------------------------------------------------
# Canonical JSON codec
# ---------------------------------------------------------------------------


def encode_timestamp(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_timestamp(value: str) -> datetime:
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    return datetime.fromisoformat(value)


_encode_datetime = encode_timestamp
_decode_datetime = parse_timestamp


def _encode_value(value: Any) -> Any:
    if value is None or isinstance(value, (bool, int, float)) and not isinstance(value, Enum):
        return value
    if isinstance(value, datetime):
        return _encode_datetime(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, str):
        return value
    if is_dataclass(value):
        return encode(value)
    if isinstance(value, (list, tuple)):
        return [_encode_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _encode_value(v) for k, v in value.items()}
    raise TypeError(f"cannot encode {type(value).__name__}")


def encode(record: Any) -> dict[str, Any]:
    """Canonical dict encoding: snake_case field names in declaration order."""
    if not is_dataclass(record):
        raise TypeError(f"expected a domain dataclass, got {type(record).__name__}")
    return {f.name: _encode_value(getattr(record, f.name)) for f in fields(record)}


def _decode_value(tp: Any, value: Any) -> Any:
    origin = typing.get_origin(tp)
    if origin is Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _decode_value(args[0], value)
    if tp is datetime:
        return _decode_datetime(value)
    if isinstance(tp, type) and issubclass(tp, Enum):
        return tp(value)
    if isinstance(tp, type) and is_dataclass(tp):
        return decode(tp, value)
    if origin is list:
        (item_tp,) = typing.get_args(tp)
        return [_decode_value(item_tp, v) for v in value]
    if origin is dict:
        _, val_tp = typing.get_args(tp)
        return {k: _decode_value(val_tp, v) for k, v in value.items()}
    if tp is float and value is not None:
        return float(value)
    return value


def decode(cls: type, data: dict[str, Any]) -> Any:
    """Inverse of :func:`encode`. Strict: the key set must match exactly."""
    hints = typing.get_type_hints(cls)
    declared = {f.name for f in fields(cls)}
    if set(data) != declared:
        missing = sorted(declared - set(data))
        extra = sorted(set(data) - declared)
        raise ValueError(
            f"{cls.__name__}: field mismatch (missing={missing}, extra={extra})"
        )
    kwargs = {name: _decode_value(hints[name], data[name]) for name in declared}
    return cls(**kwargs)


def to_json(record: Any) -> str:
    """One-line canonical JSON (UTF-8, compact separators)."""
    return json.dumps(encode(record), ensure_ascii=False, separators=(",", ":"))


def from_json(cls: type, line: str) -> Any:
    return decode(cls, json.loads(line))


# ---------------------------------------------------------------------------
# Text unit derivation
# ---------------------------------------------------------------------------


def units_of_record(
    ref: RepositoryRef,
    data_type: DataType,
    record: Record,
    scope: Optional[typing.Iterable[SourceKind]] = None,
) -> list[TextUnit]:
    """All non-empty scoped text fields of one record, in stable field order."""
    wanted = set(scope) if scope is not None else set(SOURCE_KINDS_BY_TYPE[data_type])
    units: list[TextUnit] = []

    def add(kind: SourceKind, author: str, text: str) -> None:
        if kind in wanted and text:
            units.append(
                TextUnit(
                    source_kind=kind,
                    repo=ref,
                    source_url=record.url,
                    author=author,
                    text=text,
                )
            )

    if isinstance(record, PullRequestRecord):
        add(SourceKind.PR_TITLE, record.author, record.title)
        add(SourceKind.PR_BODY, record.author, record.body)
        for c in record.comments:
            add(SourceKind.PR_COMMENT_BODY, c.author, c.body)
    elif isinstance(record, IssueRecord):
        add(SourceKind.ISSUE_TITLE, record.author, record.title)
        add(SourceKind.ISSUE_BODY, record.author, record.body)
        for c in record.comments:
            add(SourceKind.ISSUE_COMMENT_BODY, c.author, c.body)
    elif isinstance(record, CommitRecord):
        add(SourceKind.COMMIT_MESSAGE, record.author_name, record.message)
    else:
        raise TypeError(f"not a harvested record: {type(record).__name__}")
    return units


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _check_ts(violations: list[str], name: str, value: Any, optional: bool = False) -> None:
    if value is None:
        if not optional:
            violations.append(f"{name} is required")
        return
    if not isinstance(value, datetime) or value.tzinfo is None:
        violations.append(f"{name} must be a timezone-aware timestamp")


def _validate_ref(ref: RepositoryRef) -> list[str]:
    out = []
    for name in ("owner", "name"):
        value = getattr(ref, name)
        if not value:
            out.append(f"{name} must be non-empty")
        elif "/" in value or any(ch.isspace() for ch in value):
            out.append(f"{name} must not contain whitespace or '/'")
    return out


def _validate_issue_like(r: Union[IssueRecord, PullRequestRecord], states: type) -> list[str]:
    out = []
    if r.id <= 0:
        out.append("id must be > 0")
    if not r.url:
        out.append("url must be non-empty")
    if not isinstance(r.state, states):
        out.append(f"state must be one of {[s.value for s in states]}")
    for i, c in enumerate(r.comments):
        _check_ts(out, f"comments[{i}].created_at", c.created_at)
    _check_ts(out, "created_at", r.created_at)
    _check_ts(out, "closed_at", r.closed_at, optional=True)
    return out


def validate(record: Any) -> list[str]:
    """Check every invariant of a domain value; empty list means valid."""
    v: list[str] = []
    if isinstance(record, RepositoryRef):
        v += _validate_ref(record)
    elif isinstance(record, ReleaseRecord):
        _check_ts(v, "published_at", record.published_at)
    elif isinstance(record, RepositoryRecord):
        v += _validate_ref(record.ref)
        names = [r.tag_name for r in record.releases]
        if len(names) != len(set(names)):
            v.append("releases must have unique tag names")
        _check_ts(v, "added_at", record.added_at)
        for i, rel in enumerate(record.releases):
            _check_ts(v, f"releases[{i}].published_at", rel.published_at)
    elif isinstance(record, PullRequestRecord):
        v += _validate_issue_like(record, PrState)
        for i, c in enumerate(record.reviews):
            _check_ts(v, f"reviews[{i}].created_at", c.created_at)
        _check_ts(v, "merged_at", record.merged_at, optional=True)
    elif isinstance(record, IssueRecord):
        v += _validate_issue_like(record, IssueState)
    elif isinstance(record, CommitRecord):
        if not _OID_RE.match(record.oid):
            v.append("oid must be 40 hex chars")
        if not record.url:
            v.append("url must be non-empty")
        _check_ts(v, "committed_date", record.committed_date)
    elif isinstance(record, Comment):
        _check_ts(v, "created_at", record.created_at)
    elif isinstance(record, TextUnit):
        if not isinstance(record.source_kind, SourceKind):
            v.append("source_kind must be a known source kind")
        v += [f"repo.{msg}" for msg in _validate_ref(record.repo)]
    elif isinstance(record, Sentence):
        if not (0 <= record.start < record.end):
            v.append("start < end required (0 <= start)")
        if not record.text.strip():
            v.append("text must be non-empty after trimming")
        if len(record.text) != record.end - record.start:
            v.append("text length must equal end - start")
    elif isinstance(record, MatchSpan):
        if record.term not in KEYWORD_TERMS:
            v.append("term must be one of the eight keyword terms")
        if not (0 <= record.start < record.end):
            v.append("start < end required")
        elif record.term in KEYWORD_TERMS and record.end - record.start != len(record.term):
            v.append("span length must equal term length")
    elif isinstance(record, ScaRecord):
        issue_fields = (record.author, record.title, record.state)
        commit_fields = (record.author_name, record.message)
        if record.message is not None:
            if any(f is not None for f in issue_fields):
                v.append("author/title/state must be unset in the commit variant")
            if record.author_name is None:
                v.append("author_name is required in the commit variant")
        else:
            if any(f is None for f in issue_fields):
                v.append("author, title, and state are required in the issue/PR variant")
            if any(f is not None for f in commit_fields):
                v.append("author_name/message must be unset in the issue/PR variant")
        if not contains_keyword(record.sca_sentence):
            v.append("sca_sentence must contain a whole-word keyword")
    elif isinstance(record, PaCandidate):
        if not (0.0 <= record.score <= 1.0):
            v.append("score must be within [0, 1]")
        if not isinstance(record.status, CandidateStatus):
            v.append("status must be a known candidate status")
        elif record.status is CandidateStatus.PENDING:
            if record.decided_by is not None or record.decided_at is not None:
                v.append("decided_by/decided_at must be unset while status is pending")
        else:
            if record.decided_by is None or record.decided_at is None:
                v.append("decided_by and decided_at are required once decided")
        v += [f"sentence.{m}" for m in validate(record.sentence)]
    elif isinstance(record, CollectionCursor):
        if record.pages_done < 0:
            v.append("pages_done must be >= 0")
        if record.items_done < 0:
            v.append("items_done must be >= 0")
        if not isinstance(record.status, CursorStatus):
            v.append("status must be a known cursor status")
        elif record.status is CursorStatus.FINISHED and record.cursor_token is not None:
            v.append("cursor_token must be absent once status is finished")
    elif isinstance(record, TrainingConfig):
        if not (0.0 < record.train_fraction < 1.0):
            v.append("train_fraction must be in (0, 1)")
        if record.batch_size < 1:
            v.append("batch_size must be >= 1")
        if record.learning_rate <= 0:
            v.append("learning_rate must be > 0")
        if record.max_steps < 1:
            v.append("max_steps must be >= 1")
        if not (0.0 <= record.threshold <= 1.0):
            v.append("threshold must be within [0, 1]")
    elif isinstance(record, ClassifierModel):
        if record.feature_dim < 1:
            v.append("feature_dim must be >= 1")
        if len(record.weights) != record.feature_dim:
            v.append("weights length must equal feature_dim")
        v += validate(record.config)
    elif isinstance(record, Query):
        if not record.and_terms and not record.or_terms:
            v.append("and_terms/or_terms: at least one term required")
        for group in ("and_terms", "or_terms"):
            for t in getattr(record, group):
                if not t or t != t.lower():
                    v.append(f"{group} entries must be non-empty and lowercase")
                    break
        for s in record.scope:
            if not isinstance(s, SourceKind):
                v.append("scope entries must be known source kinds")
                break
    elif isinstance(record, KnowledgeGraph):
        ids = [n.id for n in record.nodes]
        known = set(ids)
        if len(ids) != len(known):
            v.append("nodes must have unique ids")
        dag: dict[str, set[str]] = {i: set() for i in known}
        for e in record.edges:
            if e.src_id not in known or e.dst_id not in known:
                v.append(f"edges reference unknown node ({e.src_id} -> {e.dst_id})")
                continue
            if e.relation in (EdgeRelation.LIFECYCLE_NEXT, EdgeRelation.TIMELINE_NEXT):
                dag[e.dst_id].add(e.src_id)
        try:
            tuple(TopologicalSorter(dag).static_order())
        except CycleError:
            v.append("edges: lifecycle_next/timeline_next must form a DAG")
    elif isinstance(record, (GraphNode, GraphEdge)):
        pass
    else:
        raise TypeError(f"validate: unsupported type {type(record).__name__}")
    return v
