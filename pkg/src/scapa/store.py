"""Embedded on-disk store for harvested data and derived datasets.

Layout under the root directory:

    store.json                     schema version marker
    users.json                     accounts (salted password hashes)
    jobs.json                      PA job queue state
    <owner>__<name>/
        meta.json                  RepositoryRecord
        cursors.json               one CollectionCursor per data type
        issue.jsonl / pr.jsonl / commit.jsonl
        sca/<data_type>.jsonl      extracted SCA rows
        sca/confirmed.jsonl        triage-confirmed rows
        pa/<data_type>.jsonl       PA candidates

All writes go through a temp-file + rename, so a killed process never
leaves a half-written collection behind. Writers are serialized per file;
readers always see a complete snapshot.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
import threading
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

from . import model
from .model import (
    CollectionCursor,
    DataType,
    PaCandidate,
    Record,
    RepositoryRecord,
    RepositoryRef,
    ScaRecord,
    SourceKind,
    TextUnit,
    record_id,
    units_of_record,
)

SCHEMA_VERSION = 1


class StoreError(Exception):
    pass


class ValidationFailed(StoreError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class ParseError(StoreError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TypeMismatch(StoreError):
    pass


class UnknownRepository(StoreError):
    pass


class UnknownCollection(StoreError):
    pass


def _repo_dirname(ref: RepositoryRef) -> str:
    return f"{ref.owner}__{ref.name}"


class Store:
    """One directory, many JSON/JSONL collections."""

    def __init__(self, root, create: bool = True):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        marker = self.root / "store.json"
        if marker.exists():
            meta = json.loads(marker.read_text(encoding="utf-8"))
            version = meta.get("schema_version")
            if version != SCHEMA_VERSION:
                raise StoreError(f"unsupported store schema_version {version!r}")
        elif create:
            self.root.mkdir(parents=True, exist_ok=True)
            self._write_atomic(marker, json.dumps({"schema_version": SCHEMA_VERSION}) + "\n")
        else:
            raise StoreError(f"no store at {self.root}")

    # -- low-level helpers -------------------------------------------------

    def _lock_for(self, path: Path) -> threading.Lock:
        key = str(path)
        with self._locks_guard:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    def _write_atomic(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def _read_jsonl(self, path: Path, cls: type) -> list[Any]:
        if not path.exists():
            return []
        out = []
        with path.open("r", encoding="utf-8") as f:
            for n, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ParseError(n, str(e)) from e
                try:
                    out.append(model.decode(cls, data))
                except (ValueError, TypeError, KeyError) as e:
                    raise ParseError(n, f"not a valid {cls.__name__}: {e}") from e
        return out

    def _write_jsonl(self, path: Path, records: Iterable[Any]) -> None:
        text = "".join(model.to_json(r) + "\n" for r in records)
        with self._lock_for(path):
            self._write_atomic(path, text)

    def _repo_dir(self, ref: RepositoryRef, must_exist: bool = False) -> Path:
        d = self.root / _repo_dirname(ref)
        if must_exist and not d.is_dir():
            raise UnknownRepository(ref.slug)
        return d

    # -- repository metadata -----------------------------------------------

    def add_repository(self, record: RepositoryRecord) -> None:
        violations = model.validate(record)
        if violations:
            raise ValidationFailed(violations)
        path = self._repo_dir(record.ref) / "meta.json"
        with self._lock_for(path):
            self._write_atomic(path, model.to_json(record) + "\n")

    def get_repository(self, ref: RepositoryRef) -> RepositoryRecord:
        path = self._repo_dir(ref) / "meta.json"
        if not path.exists():
            raise UnknownRepository(ref.slug)
        return model.from_json(RepositoryRecord, path.read_text(encoding="utf-8"))

    def has_repository(self, ref: RepositoryRef) -> bool:
        return (self._repo_dir(ref) / "meta.json").exists()

    def list_repositories(self) -> list[RepositoryRecord]:
        out = []
        for meta in sorted(self.root.glob("*__*/meta.json")):
            out.append(model.from_json(RepositoryRecord, meta.read_text(encoding="utf-8")))
        return out

    def delete_repository(self, ref: RepositoryRef) -> int:
        """Purge everything for a repository; returns the record count removed."""
        repo_dir = self._repo_dir(ref, must_exist=True)
        count = 0
        if (repo_dir / "meta.json").exists():
            count += 1
        for dt in DataType:
            count += len(self.get_records(ref, dt))
        count += len(self._cursors(ref))
        for path in repo_dir.glob("sca/*.jsonl"):
            count += sum(1 for line in path.read_text(encoding="utf-8").splitlines() if line)
        for dt in DataType:
            count += len(self.load_candidates(ref, dt))
        shutil.rmtree(repo_dir)
        return count

    # -- harvested records ---------------------------------------------------

    def _collection_path(self, ref: RepositoryRef, data_type: DataType) -> Path:
        return self._repo_dir(ref) / f"{data_type.value}.jsonl"

    def put_batch(self, ref: RepositoryRef, data_type: DataType, items: Iterable[Record]) -> int:
        """Upsert records by id; all-or-nothing on validation failure."""
        items = list(items)
        cls = model.RECORD_TYPES[data_type]
        violations: list[str] = []
        for item in items:
            if not isinstance(item, cls):
                raise TypeMismatch(
                    f"expected {cls.__name__}, got {type(item).__name__}"
                )
            violations += [f"{record_id(item)}: {v}" for v in model.validate(item)]
        if violations:
            raise ValidationFailed(violations)
        path = self._collection_path(ref, data_type)
        with self._lock_for(path):
            existing = self._read_jsonl(path, cls)
            by_id = {record_id(r): i for i, r in enumerate(existing)}
            for item in items:
                key = record_id(item)
                if key in by_id:
                    existing[by_id[key]] = item
                else:
                    by_id[key] = len(existing)
                    existing.append(item)
            self._write_atomic(path, "".join(model.to_json(r) + "\n" for r in existing))
        return len(items)

    def get_records(self, ref: RepositoryRef, data_type: DataType) -> list[Record]:
        return self._read_jsonl(
            self._collection_path(ref, data_type), model.RECORD_TYPES[data_type]
        )

    def count_records(self, ref: RepositoryRef, data_type: DataType) -> int:
        return len(self.get_records(ref, data_type))

    def get_text_units(
        self,
        ref: RepositoryRef,
        data_type: DataType,
        scope: Optional[Iterable[SourceKind]] = None,
    ) -> Iterator[TextUnit]:
        """One unit per non-empty scoped field, in stable (record id, field) order."""
        path = self._collection_path(ref, data_type)
        if not path.exists():
            raise UnknownCollection(f"{ref.slug}/{data_type.value}")
        records = self._read_jsonl(path, model.RECORD_TYPES[data_type])
        if data_type is DataType.COMMIT:
            records.sort(key=record_id)
        else:
            records.sort(key=lambda r: r.id)
        scope = list(scope) if scope is not None else None
        for record in records:
            yield from units_of_record(ref, data_type, record, scope)

    # -- cursors -------------------------------------------------------------

    def _cursors_path(self, ref: RepositoryRef) -> Path:
        return self._repo_dir(ref) / "cursors.json"

    def _cursors(self, ref: RepositoryRef) -> dict[str, CollectionCursor]:
        path = self._cursors_path(ref)
        if not path.exists():
            return {}
        raw = json.loads(path.read_text(encoding="utf-8"))
        return {k: model.decode(CollectionCursor, v) for k, v in raw.items()}

    def save_cursor(self, cursor: CollectionCursor) -> None:
        path = self._cursors_path(cursor.repo)
        with self._lock_for(path):
            cursors = self._cursors(cursor.repo)
            cursors[cursor.data_type.value] = cursor
            text = json.dumps(
                {k: model.encode(c) for k, c in sorted(cursors.items())},
                ensure_ascii=False,
                indent=2,
            )
            self._write_atomic(path, text + "\n")

    def get_cursor(self, ref: RepositoryRef, data_type: DataType) -> CollectionCursor:
        cursor = self._cursors(ref).get(data_type.value)
        if cursor is None:
            raise UnknownCollection(f"{ref.slug}/{data_type.value}")
        return cursor

    def cursors_for(self, ref: RepositoryRef) -> list[CollectionCursor]:
        return list(self._cursors(ref).values())

    def make_sink(self, ref: RepositoryRef, data_type: DataType):
        """Batch consumer for collect(): records first, then the cursor.

        Records are upserted by id, so replaying a page after a crash
        between the two writes cannot duplicate data.
        """

        def sink(items: list[Record], cursor: CollectionCursor) -> None:
            if items:
                self.put_batch(ref, data_type, items)
            self.save_cursor(cursor)

        return sink

    # -- fixtures ------------------------------------------------------------

    def import_fixture(self, path, ref: RepositoryRef, data_type: DataType) -> int:
        """Load a JSONL fixture; nothing is written unless every line parses."""
        cls = model.RECORD_TYPES[data_type]
        records = []
        with open(path, "r", encoding="utf-8") as f:
            for n, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ParseError(n, str(e)) from e
                try:
                    record = model.decode(cls, data)
                except (ValueError, TypeError, KeyError) as e:
                    raise TypeMismatch(f"line {n}: not a {cls.__name__}: {e}") from e
                bad = model.validate(record)
                if bad:
                    raise ParseError(n, "; ".join(bad))
                records.append(record)
        return self.put_batch(ref, data_type, records)

    def export_fixture(self, ref: RepositoryRef, data_type: DataType, path) -> int:
        records = self.get_records(ref, data_type)
        text = "".join(model.to_json(r) + "\n" for r in records)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        return len(records)

    # -- SCA datasets ----------------------------------------------------------

    def save_sca_rows(self, ref: RepositoryRef, data_type: DataType, rows: list[ScaRecord]) -> None:
        self._write_jsonl(self._repo_dir(ref) / "sca" / f"{data_type.value}.jsonl", rows)

    def load_sca_rows(self, ref: RepositoryRef, data_type: DataType) -> list[ScaRecord]:
        return self._read_jsonl(self._repo_dir(ref) / "sca" / f"{data_type.value}.jsonl", ScaRecord)

    def append_confirmed_sca(self, ref: RepositoryRef, row: ScaRecord) -> None:
        path = self._repo_dir(ref) / "sca" / "confirmed.jsonl"
        with self._lock_for(path):
            existing = path.read_text(encoding="utf-8") if path.exists() else ""
            self._write_atomic(path, existing + model.to_json(row) + "\n")

    def load_confirmed_scas(self, ref: RepositoryRef) -> list[ScaRecord]:
        return self._read_jsonl(self._repo_dir(ref) / "sca" / "confirmed.jsonl", ScaRecord)

    # -- PA candidates ----------------------------------------------------------

    def _candidates_path(self, ref: RepositoryRef, data_type: DataType) -> Path:
        return self._repo_dir(ref) / "pa" / f"{data_type.value}.jsonl"

    def upsert_candidates(
        self, ref: RepositoryRef, data_type: DataType, candidates: Iterable[PaCandidate]
    ) -> int:
        """Insert new candidates; existing ids keep their stored state."""
        path = self._candidates_path(ref, data_type)
        added = 0
        with self._lock_for(path):
            existing = self._read_jsonl(path, PaCandidate)
            known = {c.id for c in existing}
            for cand in candidates:
                if cand.id not in known:
                    existing.append(cand)
                    known.add(cand.id)
                    added += 1
            self._write_atomic(path, "".join(model.to_json(c) + "\n" for c in existing))
        return added

    def load_candidates(
        self, ref: RepositoryRef, data_type: Optional[DataType] = None
    ) -> list[PaCandidate]:
        types = [data_type] if data_type else list(DataType)
        out: list[PaCandidate] = []
        for dt in types:
            out.extend(self._read_jsonl(self._candidates_path(ref, dt), PaCandidate))
        return out

    def find_candidate(self, candidate_id: str):
        """Locate a candidate anywhere in the store.

        Returns (ref, data_type, candidate) or None.
        """
        for repo_dir in sorted(p for p in self.root.glob("*__*") if p.is_dir()):
            owner, _, name = repo_dir.name.partition("__")
            ref = RepositoryRef(owner=owner, name=name)
            for dt in DataType:
                for cand in self._read_jsonl(self._candidates_path(ref, dt), PaCandidate):
                    if cand.id == candidate_id:
                        return ref, dt, cand
        return None

    def replace_candidate(self, ref: RepositoryRef, data_type: DataType, cand: PaCandidate) -> None:
        path = self._candidates_path(ref, data_type)
        with self._lock_for(path):
            existing = self._read_jsonl(path, PaCandidate)
            replaced = False
            for i, c in enumerate(existing):
                if c.id == cand.id:
                    existing[i] = cand
                    replaced = True
                    break
            if not replaced:
                raise StoreError(f"candidate {cand.id} not found")
            self._write_atomic(path, "".join(model.to_json(c) + "\n" for c in existing))

    # -- users and jobs -----------------------------------------------------------

    def load_users(self) -> list[dict]:
        path = self.root / "users.json"
        if not path.exists():
            return []
        return json.loads(path.read_text(encoding="utf-8"))

    def save_users(self, users: list[dict]) -> None:
        path = self.root / "users.json"
        with self._lock_for(path):
            self._write_atomic(path, json.dumps(users, ensure_ascii=False, indent=2) + "\n")

    def load_jobs_state(self) -> dict:
        path = self.root / "jobs.json"
        if not path.exists():
            return {"next_id": 1, "jobs": []}
        return json.loads(path.read_text(encoding="utf-8"))

    def save_jobs_state(self, state: dict) -> None:
        path = self.root / "jobs.json"
        with self._lock_for(path):
            self._write_atomic(path, json.dumps(state, ensure_ascii=False, indent=2) + "\n")

    # -- request log -----------------------------------------------------------

    def append_log(self, line: str) -> None:
        path = self.root / "requests.log"
        with self._lock_for(path):
            with path.open("a", encoding="utf-8") as f:
                f.write(line.rstrip("\n") + "\n")
