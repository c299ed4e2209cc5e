"""Store contract: upserts, fixtures, text units, crash safety."""

import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from scapa import model
from scapa.model import DataType, RepositoryRecord, RepositoryRef, SourceKind
from scapa.store import (
    ParseError,
    Store,
    StoreError,
    TypeMismatch,
    UnknownCollection,
    UnknownRepository,
    ValidationFailed,
)
from conftest import make_comment, make_commit, make_issue, make_pr, ts


def test_put_batch_counts_and_get_all(store, ref):
    items = [make_issue(i) for i in range(1, 101)]
    assert store.put_batch(ref, DataType.ISSUE, items) == 100
    assert len(store.get_records(ref, DataType.ISSUE)) == 100


def test_put_batch_upsert_idempotent(store, ref):
    items = [make_issue(i) for i in range(1, 101)]
    store.put_batch(ref, DataType.ISSUE, items)
    store.put_batch(ref, DataType.ISSUE, items)
    assert len(store.get_records(ref, DataType.ISSUE)) == 100
    # replacement takes the newer version
    updated = make_issue(1, title="Updated title")
    store.put_batch(ref, DataType.ISSUE, [updated])
    by_id = {r.id: r for r in store.get_records(ref, DataType.ISSUE)}
    assert by_id[1].title == "Updated title"
    assert len(by_id) == 100


def test_put_batch_all_or_nothing_on_invalid(store, ref):
    good = [make_commit(i) for i in range(5)]
    store.put_batch(ref, DataType.COMMIT, good)
    before = store.get_records(ref, DataType.COMMIT)
    batch = [make_commit(10), make_commit(11, oid="abc"), make_commit(12)]
    with pytest.raises(ValidationFailed, match="oid"):
        store.put_batch(ref, DataType.COMMIT, batch)
    assert store.get_records(ref, DataType.COMMIT) == before


def test_get_text_units_counts(store, ref):
    issue = make_issue(
        1,
        body="the body",
        comments=[make_comment(1), make_comment(2)],
    )
    store.put_batch(ref, DataType.ISSUE, [issue])
    units = list(
        store.get_text_units(
            ref, DataType.ISSUE, [SourceKind.ISSUE_BODY, SourceKind.ISSUE_COMMENT_BODY]
        )
    )
    assert len(units) == 3
    assert [u.source_kind for u in units] == [
        SourceKind.ISSUE_BODY,
        SourceKind.ISSUE_COMMENT_BODY,
        SourceKind.ISSUE_COMMENT_BODY,
    ]


def test_get_text_units_skips_empty_fields(store, ref):
    store.put_batch(ref, DataType.ISSUE, [make_issue(1, body="")])
    units = list(store.get_text_units(ref, DataType.ISSUE))
    assert [u.source_kind for u in units] == [SourceKind.ISSUE_TITLE]


def test_get_text_units_commit_scope_count(store, ref):
    store.put_batch(ref, DataType.COMMIT, [make_commit(i) for i in range(500)])
    units = list(store.get_text_units(ref, DataType.COMMIT, [SourceKind.COMMIT_MESSAGE]))
    assert len(units) == 500


def test_get_text_units_missing_collection(store, ref):
    with pytest.raises(UnknownCollection):
        list(store.get_text_units(ref, DataType.PR))


def test_get_text_units_order_deterministic(store, ref):
    items = [make_issue(i) for i in (5, 3, 9, 1)]
    store.put_batch(ref, DataType.ISSUE, items)
    a = [(u.source_kind, u.source_url) for u in store.get_text_units(ref, DataType.ISSUE)]
    b = [(u.source_kind, u.source_url) for u in store.get_text_units(ref, DataType.ISSUE)]
    assert a == b
    ids = [u.source_url for u in store.get_text_units(ref, DataType.ISSUE, [SourceKind.ISSUE_TITLE])]
    assert ids == sorted(ids, key=lambda u: int(u.rsplit("/", 1)[1]))


def test_fixture_round_trip(store, ref, tmp_path):
    prs = [make_pr(i) for i in range(1, 51)]
    store.put_batch(ref, DataType.PR, prs)
    out = tmp_path / "prs.jsonl"
    assert store.export_fixture(ref, DataType.PR, out) == 50
    store2 = Store(tmp_path / "s2")
    assert store2.import_fixture(out, ref, DataType.PR) == 50
    assert store2.get_records(ref, DataType.PR) == prs
    # export ∘ import ∘ export is byte-identical
    out2 = tmp_path / "prs2.jsonl"
    store2.export_fixture(ref, DataType.PR, out2)
    assert out.read_bytes() == out2.read_bytes()


def test_fixture_malformed_line_reports_number(store, ref, tmp_path):
    lines = [model.to_json(make_issue(i)) for i in range(1, 10)]
    lines[6] = '{"broken": '
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        store.import_fixture(path, ref, DataType.ISSUE)
    assert info.value.line == 7
    assert not (store.root / "owner__repo" / "issue.jsonl").exists()


def test_fixture_type_mismatch(store, ref, tmp_path):
    path = tmp_path / "commits.jsonl"
    path.write_text(model.to_json(make_commit(1)) + "\n", encoding="utf-8")
    with pytest.raises(TypeMismatch):
        store.import_fixture(path, ref, DataType.ISSUE)


def test_schema_version_marker(tmp_path):
    store = Store(tmp_path / "s")
    (store.root / "store.json").write_text('{"schema_version": 99}', encoding="utf-8")
    with pytest.raises(StoreError, match="schema_version"):
        Store(tmp_path / "s")


def test_repository_metadata_and_delete_counts(store, ref):
    record = RepositoryRecord(ref=ref, url="https://example.test/o/r", releases=[], tags=[], added_at=ts())
    store.add_repository(record)
    assert store.get_repository(ref) == record
    assert store.delete_repository(ref) >= 1
    with pytest.raises(UnknownRepository):
        store.delete_repository(ref)


def test_delete_counts_records_and_cursors(store, ref):
    from scapa.harvest import new_cursor

    store.put_batch(ref, DataType.ISSUE, [make_issue(i) for i in range(1, 11)])
    store.save_cursor(new_cursor(ref, DataType.ISSUE))
    store.save_cursor(new_cursor(ref, DataType.COMMIT))
    assert store.delete_repository(ref) == 12
    with pytest.raises(UnknownCollection):
        list(store.get_text_units(ref, DataType.ISSUE))


def test_cursor_round_trip(store, ref):
    from scapa.harvest import new_cursor

    cursor = new_cursor(ref, DataType.PR)
    store.save_cursor(cursor)
    assert store.get_cursor(ref, DataType.PR) == cursor
    with pytest.raises(UnknownCollection):
        store.get_cursor(ref, DataType.ISSUE)


@pytest.mark.slow
def test_put_batch_survives_process_kill(tmp_path):
    """Kill the writer mid-stream; every stored batch must be complete."""
    root = tmp_path / "croot"
    Store(root)  # create marker before the child starts
    tests_dir = Path(__file__).parent
    child = subprocess.Popen(
        [sys.executable, str(tests_dir / "_crash_child.py"), str(root), str(tests_dir)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.time() + 20
        target = root / "o__r" / "issue.jsonl"
        while time.time() < deadline and not target.exists():
            time.sleep(0.02)
        assert target.exists(), "child never wrote anything"
        time.sleep(0.15)  # let a few batches land, then kill mid-write
    finally:
        child.send_signal(signal.SIGKILL)
        child.wait()

    store = Store(root)
    records = store.get_records(RepositoryRef("o", "r"), DataType.ISSUE)
    assert records, "at least one batch should have committed"
    ids = sorted(r.id for r in records)
    assert len(ids) % 200 == 0, "a torn batch leaked into the store"
    assert ids == list(range(1, len(ids) + 1)), "batches must be whole and contiguous"
    # and the file itself is well-formed JSONL
    for line in (root / "o__r" / "issue.jsonl").read_text("utf-8").splitlines():
        json.loads(line)
