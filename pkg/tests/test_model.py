"""Domain type validation and canonical JSON round-trips."""

from dataclasses import replace
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from scapa import model
from scapa.model import (
    CandidateStatus,
    ClassifierModel,
    CollectionCursor,
    CursorStatus,
    DataType,
    Dimension,
    EdgeRelation,
    GraphEdge,
    GraphNode,
    IssueState,
    KnowledgeGraph,
    MatchSpan,
    NodeKind,
    PaCandidate,
    Query,
    ReleaseRecord,
    RepositoryRecord,
    RepositoryRef,
    ScaRecord,
    Sentence,
    SourceKind,
    TextUnit,
    TrainingConfig,
    validate,
)
from conftest import make_commit, make_issue, make_pr, make_unit, ts


def test_commit_bad_oid_violation():
    bad = replace(make_commit(1), oid="abc")
    violations = validate(bad)
    assert violations == ["oid must be 40 hex chars"]


def test_wellformed_closed_issue_validates():
    issue = make_issue(395, state=IssueState.CLOSED, closed_at=ts(days=1))
    assert validate(issue) == []


def test_empty_sentence_span_violation():
    s = Sentence(text="", start=5, end=5, index=0)
    assert any("start < end" in v for v in validate(s))


@pytest.mark.parametrize(
    "record,field,bad,needle",
    [
        (RepositoryRef("o", "n"), "owner", "a b", "owner"),
        (RepositoryRef("o", "n"), "name", "x/y", "name"),
        (make_issue(3), "id", -1, "id"),
        (make_issue(3), "url", "", "url"),
        (make_commit(3), "oid", "zz", "oid"),
        (make_commit(3), "committed_date", datetime(2020, 1, 1), "committed_date"),
        (
            Sentence(text="abc", start=0, end=3, index=0),
            "text",
            "ab",
            "text",
        ),
        (MatchSpan(term="assume", start=0, end=6), "term", "banana", "term"),
        (MatchSpan(term="assume", start=0, end=6), "end", 9, "length"),
        (
            CollectionCursor(RepositoryRef("o", "n"), DataType.ISSUE, None, 1, 5, CursorStatus.FINISHED),
            "pages_done",
            -2,
            "pages_done",
        ),
        (
            CollectionCursor(RepositoryRef("o", "n"), DataType.ISSUE, None, 1, 5, CursorStatus.FINISHED),
            "cursor_token",
            "tok",
            "cursor_token",
        ),
        (TrainingConfig(), "train_fraction", 1.5, "train_fraction"),
        (TrainingConfig(), "batch_size", 0, "batch_size"),
        (TrainingConfig(), "learning_rate", -1.0, "learning_rate"),
    ],
)
def test_corrupting_a_field_names_it(record, field, bad, needle):
    corrupted = replace(record, **{field: bad})
    violations = validate(corrupted)
    assert violations, f"expected violations for {field}={bad!r}"
    assert any(needle in v for v in violations)


def test_release_names_must_be_unique():
    rec = RepositoryRecord(
        ref=RepositoryRef("o", "n"),
        url="https://example.test/o/n",
        releases=[
            ReleaseRecord("v1", ts(), "u1"),
            ReleaseRecord("v1", ts(1), "u2"),
        ],
        tags=[],
        added_at=ts(),
    )
    assert any("unique" in v for v in validate(rec))


def test_sca_record_requires_keyword():
    row = ScaRecord(
        owner="o", repo_name="n", url="u", sca_sentence="nothing to see",
        author="a", title="t", state="open",
    )
    assert any("keyword" in v for v in validate(row))
    ok = replace(row, sca_sentence="we assume it works")
    assert validate(ok) == []


def test_sca_record_variant_exclusivity():
    mixed = ScaRecord(
        owner="o", repo_name="n", url="u", sca_sentence="assume so",
        author="a", title="t", state="open", message="m", author_name="x",
    )
    assert any("variant" in v for v in validate(mixed))


def test_pending_candidate_may_not_carry_decision():
    cand = PaCandidate(
        id="abc",
        sentence=Sentence("text here", 0, 9, 0),
        unit=make_unit("text here"),
        score=0.7,
        status=CandidateStatus.PENDING,
        decided_by="alice",
        decided_at=ts(),
    )
    assert any("pending" in v for v in validate(cand))


def test_graph_validation_catches_cycles_and_dangling_edges():
    nodes = [
        GraphNode("a", NodeKind.BUCKET, "", "1", "1"),
        GraphNode("b", NodeKind.BUCKET, "", "2", "2"),
    ]
    cyclic = KnowledgeGraph(
        dimension=Dimension.DAY,
        nodes=nodes,
        edges=[
            GraphEdge("a", "b", EdgeRelation.TIMELINE_NEXT),
            GraphEdge("b", "a", EdgeRelation.TIMELINE_NEXT),
        ],
    )
    assert any("DAG" in v for v in validate(cyclic))
    dangling = KnowledgeGraph(
        dimension=Dimension.DAY,
        nodes=nodes,
        edges=[GraphEdge("a", "zzz", EdgeRelation.SAME_BUCKET)],
    )
    assert any("unknown node" in v for v in validate(dangling))


# -- canonical codec ----------------------------------------------------------


def _samples():
    issue = make_issue(7, comments=[])
    pr = make_pr(8)
    commit = make_commit(9)
    unit = make_unit("Assume this text.")
    return [
        RepositoryRef("tensorflow", "tensorflow"),
        ReleaseRecord("v2.9.1", ts(), "https://example.test/a.tar.gz"),
        RepositoryRecord(
            ref=RepositoryRef("o", "n"), url="https://example.test/o/n",
            releases=[ReleaseRecord("v1", ts(), "u")], tags=["v1"], added_at=ts(),
        ),
        issue,
        pr,
        commit,
        unit,
        Sentence("Assume this text.", 0, 18, 0),
        MatchSpan("assume", 0, 6),
        ScaRecord(owner="o", repo_name="n", url="u", sca_sentence="assume it",
                  author="a", title="t", state="open"),
        ScaRecord(owner="o", repo_name="n", url="u", sca_sentence="assume it",
                  author_name="a", message="assume it"),
        PaCandidate(id="deadbeef", sentence=Sentence("x y", 0, 3, 0), unit=unit, score=0.25),
        CollectionCursor(RepositoryRef("o", "n"), DataType.PR, "tok", 2, 100,
                         CursorStatus.COLLECTING, None),
        TrainingConfig(),
        ClassifierModel(vocabulary={"assume": 3}, feature_dim=4,
                        weights=[0.0, 1.5, -2.25, 0.125], bias=-0.5,
                        config=TrainingConfig(), seed=42),
        Query(and_terms=["assume"], or_terms=["software"], scope=[SourceKind.ISSUE_TITLE]),
        KnowledgeGraph(
            dimension=Dimension.MONTH,
            nodes=[GraphNode("a", NodeKind.ISSUE, "open", "2022-11", "t")],
            edges=[GraphEdge("a", "a", EdgeRelation.ATTACHED_TO)],
        ),
    ]


@pytest.mark.parametrize("record", _samples(), ids=lambda r: type(r).__name__)
def test_json_round_trip(record):
    line = model.to_json(record)
    back = model.from_json(type(record), line)
    assert back == record


def test_decode_rejects_field_mismatch():
    line = model.to_json(make_commit(1))
    with pytest.raises(ValueError, match="field mismatch"):
        model.from_json(type(make_issue(1)), line)


@given(
    title=st.text(max_size=80),
    body=st.text(max_size=300),
    n=st.integers(min_value=1, max_value=10**6),
)
def test_issue_round_trip_arbitrary_text(title, body, n):
    issue = make_issue(n, title=title, body=body)
    assert model.from_json(type(issue), model.to_json(issue)) == issue


def test_timestamps_encode_as_utc_z():
    data = model.encode(make_commit(1))
    assert data["committed_date"].endswith("Z")
    parsed = model.parse_timestamp(data["committed_date"])
    assert parsed.tzinfo is not None
    assert parsed.utcoffset().total_seconds() == 0
