"""Scoped keyword search with AND/OR semantics and highlight spans.

Quoted tokens are AND terms, bare tokens OR terms; both may coexist. A unit
matches when every AND term occurs as a whole word and, if any OR terms were
given, at least one of them occurs. Matching is a linear scan over the
store: the corpus sizes involved keep that sub-second, and it shares the
whole-word scanner with SCA identification so the two agree by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .model import DataType, Query, RepositoryRef, SourceKind, TextUnit
from .sca import scan_terms
from .store import Store


class SearchError(Exception):
    pass


class EmptyQuery(SearchError):
    pass


class UnbalancedQuotes(SearchError):
    pass


class EmptyScope(SearchError):
    pass


@dataclass(frozen=True)
class HighlightSpan:
    term: str
    start: int
    end: int


@dataclass(frozen=True)
class SearchHit:
    unit: TextUnit
    spans: list[HighlightSpan]
    record_url: str


def parse_query(raw: str, scope: Optional[Iterable[SourceKind]] = None) -> Query:
    """Tokens inside double quotes -> and_terms; bare tokens -> or_terms."""
    if not raw or not raw.strip():
        raise EmptyQuery("query is empty")
    and_terms: list[str] = []
    or_terms: list[str] = []
    in_quote = False
    token: list[str] = []

    def flush() -> None:
        if token:
            word = "".join(token).lower()
            target = and_terms if in_quote else or_terms
            if word and word not in target:
                target.append(word)
            token.clear()

    for ch in raw:
        if ch == '"':
            flush()
            in_quote = not in_quote
        elif ch.isspace() and not in_quote:
            flush()
        else:
            token.append(ch)
    if in_quote:
        raise UnbalancedQuotes(raw)
    flush()
    if not and_terms and not or_terms:
        raise EmptyQuery("query has no terms")
    return Query(and_terms=and_terms, or_terms=or_terms, scope=list(scope or []))


def match_unit(unit: TextUnit, query: Query) -> Optional[list[HighlightSpan]]:
    """Spans for a matching unit, None otherwise."""
    terms = list(dict.fromkeys(query.and_terms + query.or_terms))
    raw_spans = scan_terms(unit.text, terms)
    found = {s.term for s in raw_spans}
    if any(t not in found for t in query.and_terms):
        return None
    if query.or_terms and not any(t in found for t in query.or_terms):
        return None
    return [HighlightSpan(term=s.term, start=s.start, end=s.end) for s in raw_spans]


def search(
    store: Store,
    ref: RepositoryRef,
    data_type: DataType,
    scope: Iterable[SourceKind],
    query: Query,
) -> list[SearchHit]:
    """All matching units in stable (record id, field) order."""
    scope = list(scope)
    if not scope:
        raise EmptyScope("search scope is empty")
    hits: list[SearchHit] = []
    for unit in store.get_text_units(ref, data_type, scope):
        spans = match_unit(unit, query)
        if spans is not None:
            hits.append(SearchHit(unit=unit, spans=spans, record_url=unit.source_url))
    return hits


def hits_to_json(hits: list[SearchHit]) -> dict:
    """Wire shape shared by the HTTP API and the CLI --json output."""
    return {
        "hits": [
            {
                "url": h.record_url,
                "source_kind": h.unit.source_kind.value,
                "author": h.unit.author,
                "text": h.unit.text,
                "spans": [
                    {"term": s.term, "start": s.start, "end": s.end} for s in h.spans
                ],
            }
            for h in hits
        ]
    }
