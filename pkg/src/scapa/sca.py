"""Self-claimed assumption identification and extraction.

Identification is a whole-word, case-insensitive scan for the eight
assumption-related terms; extraction segments the text and keeps the
sentences that overlap at least one hit (one row per sentence, however
many hits it contains). Datasets are written as CSV with a title line
naming the repository and data type.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import (
    KEYWORD_TERMS,
    CommitRecord,
    DataType,
    IssueRecord,
    MatchSpan,
    PullRequestRecord,
    Record,
    RepositoryRef,
    ScaRecord,
    Sentence,
    TextUnit,
    is_word_char,
    units_of_record,
)
from .segment import SegmenterOptions, mask_code, segment


class MissingProvenance(Exception):
    """A unit lacks the url/author needed for a dataset row."""


@dataclass(frozen=True)
class KeywordSet:
    """The fixed assumption term list, lowercase."""

    terms: frozenset[str] = frozenset(KEYWORD_TERMS)


#: CSV column order for the two dataset variants.
ISSUE_PR_COLUMNS = ("owner", "repo_name", "author", "title", "state", "url", "SCA")
COMMIT_COLUMNS = ("owner", "repo_name", "author_name", "message", "url", "SCA")

_TERMS_LONGEST_FIRST = tuple(sorted(KEYWORD_TERMS, key=len, reverse=True))


def scan_terms(text: str, terms: Sequence[str]) -> list[MatchSpan]:
    """All whole-word, case-insensitive occurrences of terms, sorted.

    Longer terms win at a shared start position ("assumptions" is one hit,
    not "assumption" plus a stray "s").
    """
    low = text.lower()
    ordered = sorted(set(terms), key=len, reverse=True)
    spans: list[MatchSpan] = []
    taken_until = -1
    # Collect candidate start positions across all terms, then resolve
    # longest-first per position.
    starts: dict[int, str] = {}
    for term in ordered:
        if not term:
            continue
        pos = 0
        while True:
            i = low.find(term, pos)
            if i < 0:
                break
            j = i + len(term)
            before_ok = i == 0 or not is_word_char(low[i - 1])
            after_ok = j == len(low) or not is_word_char(low[j])
            if before_ok and after_ok and i not in starts:
                starts[i] = term
            pos = i + 1
    for i in sorted(starts):
        term = starts[i]
        if i > taken_until:
            spans.append(MatchSpan(term=term, start=i, end=i + len(term)))
            taken_until = i + len(term) - 1
    return spans


def scan_keywords(text: str) -> list[MatchSpan]:
    """Whole-word scan for the eight terms (all share the "assum" prefix)."""
    if "assum" not in text.lower():
        return []
    return scan_terms(text, _TERMS_LONGEST_FIRST)


def identify(unit: TextUnit, opts: Optional[SegmenterOptions] = None) -> list[MatchSpan]:
    """Word-level identification; offsets refer to the original text."""
    text = unit.text
    if opts is not None and opts.mask_fenced_code:
        text, _ = mask_code(text)
    return scan_keywords(text)


def extract(unit: TextUnit, opts: Optional[SegmenterOptions] = None) -> list[Sentence]:
    """Sentence-level extraction: sentences overlapping at least one hit."""
    opts = opts or SegmenterOptions()
    if opts.mask_fenced_code:
        scan_text, _ = mask_code(unit.text)
    else:
        scan_text = unit.text
    spans = scan_keywords(scan_text)
    if not spans:
        return []
    sentences = segment(unit.text, opts)
    out = []
    for s in sentences:
        if any(sp.start < s.end and sp.end > s.start for sp in spans):
            out.append(s)
    return out


def to_records(
    repo: RepositoryRef,
    data_type: DataType,
    extractions: Iterable[tuple[Record, TextUnit, Sentence]],
) -> list[ScaRecord]:
    """One dataset row per extracted sentence."""
    rows: list[ScaRecord] = []
    for record, unit, sentence in extractions:
        if not unit.source_url:
            raise MissingProvenance(f"unit for {repo.slug} lacks a source url")
        if isinstance(record, CommitRecord):
            if not record.author_name:
                raise MissingProvenance(f"commit {record.oid} lacks an author name")
            rows.append(
                ScaRecord(
                    owner=repo.owner,
                    repo_name=repo.name,
                    url=unit.source_url,
                    sca_sentence=sentence.text,
                    author_name=record.author_name,
                    message=record.message,
                )
            )
        else:
            if not record.author:
                raise MissingProvenance(f"{data_type.value} {record.id} lacks an author")
            rows.append(
                ScaRecord(
                    owner=repo.owner,
                    repo_name=repo.name,
                    url=unit.source_url,
                    sca_sentence=sentence.text,
                    author=record.author,
                    title=record.title,
                    state=record.state.value,
                )
            )
    return rows


def extract_repo_records(
    repo: RepositoryRef,
    data_type: DataType,
    records: Iterable[Record],
    opts: Optional[SegmenterOptions] = None,
    scope=None,
) -> list[ScaRecord]:
    """Full pipeline over harvested records: units -> sentences -> rows."""
    triples = []
    for record in records:
        for unit in units_of_record(repo, data_type, record, scope):
            for sentence in extract(unit, opts):
                triples.append((record, unit, sentence))
    return to_records(repo, data_type, triples)


def identify_repo_records(
    repo: RepositoryRef,
    data_type: DataType,
    records: Iterable[Record],
    opts: Optional[SegmenterOptions] = None,
    scope=None,
) -> list[tuple[TextUnit, list[MatchSpan]]]:
    """Word-level results with provenance, for highlighting."""
    out = []
    for record in records:
        for unit in units_of_record(repo, data_type, record, scope):
            spans = identify(unit, opts)
            if spans:
                out.append((unit, spans))
    return out


def identification_to_json(results: Iterable[tuple[TextUnit, list[MatchSpan]]]) -> list[dict]:
    """Wire shape shared by the HTTP API and the CLI --json output."""
    return [
        {
            "source_kind": unit.source_kind.value,
            "url": unit.source_url,
            "author": unit.author,
            "text": unit.text,
            "spans": [{"term": s.term, "start": s.start, "end": s.end} for s in spans],
        }
        for unit, spans in results
    ]


def title_line(repo: RepositoryRef, data_type: DataType, what: str = "SCA") -> str:
    return f"{repo.slug} {data_type.value} {what} extraction"


def write_csv(
    records: Sequence[ScaRecord],
    repo: RepositoryRef,
    data_type: DataType,
    path,
) -> str:
    """Write the dataset: title line, column header, RFC-4180 rows."""
    variants = {r.is_commit_variant for r in records}
    if len(variants) > 1:
        raise ValueError("records must all be the same variant")
    commit_variant = data_type is DataType.COMMIT
    columns = COMMIT_COLUMNS if commit_variant else ISSUE_PR_COLUMNS
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([title_line(repo, data_type)])
        writer.writerow(columns)
        for r in records:
            if commit_variant:
                writer.writerow(
                    [r.owner, r.repo_name, r.author_name, r.message, r.url, r.sca_sentence]
                )
            else:
                writer.writerow(
                    [r.owner, r.repo_name, r.author, r.title, r.state, r.url, r.sca_sentence]
                )
    return str(path)


def read_csv(path) -> tuple[str, list[ScaRecord]]:
    """Parse a dataset file back into rows (round-trip check, CLI display)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if len(rows) < 2:
        raise ValueError("dataset file must have a title line and a header")
    title = rows[0][0]
    header = tuple(rows[1])
    records = []
    for row in rows[2:]:
        data = dict(zip(header, row))
        if header == COMMIT_COLUMNS:
            records.append(
                ScaRecord(
                    owner=data["owner"],
                    repo_name=data["repo_name"],
                    url=data["url"],
                    sca_sentence=data["SCA"],
                    author_name=data["author_name"],
                    message=data["message"],
                )
            )
        elif header == ISSUE_PR_COLUMNS:
            records.append(
                ScaRecord(
                    owner=data["owner"],
                    repo_name=data["repo_name"],
                    url=data["url"],
                    sca_sentence=data["SCA"],
                    author=data["author"],
                    title=data["title"],
                    state=data["state"],
                )
            )
        else:
            raise ValueError(f"unknown dataset header: {header}")
    return title, records
