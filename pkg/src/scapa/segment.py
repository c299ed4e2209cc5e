"""Sentence segmentation for GitHub-flavored prose.

Issue and commit text is noisy: sentences without terminators, code
identifiers like ``a.b``, decimals, URLs, markdown lists. The rules here
are deliberately conservative and pinned by a golden corpus
(``data/segmenter_golden.jsonl``): a period only ends a sentence when
followed by whitespace and not preceded by a known abbreviation; blank
lines, list items, and headings always split; leftover fragments become
sentences of their own.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import Sentence

DEFAULT_ABBREVIATIONS = frozenset(
    {"e.g", "i.e", "etc", "vs", "cf", "fig", "eq", "dr", "mr", "no"}
)

#: Characters that may trail a terminator before the whitespace check.
_CLOSERS = "\"')]}`’”"

_HEADING_RE = re.compile(r"^ {0,3}#{1,6}(\s|$)")
_LIST_ITEM_RE = re.compile(r"^ {0,3}(?:[-*+]\s|\d{1,9}[.)]\s)")
_FENCE_RE = re.compile(r"^ {0,3}```")


@dataclass(frozen=True)
class SegmenterOptions:
    mask_fenced_code: bool = False
    abbreviation_list: frozenset[str] = DEFAULT_ABBREVIATIONS
    max_sentence_chars: int = 2000

    def __post_init__(self) -> None:
        normalized = frozenset(a.lower().rstrip(".") for a in self.abbreviation_list)
        object.__setattr__(self, "abbreviation_list", normalized)


def _is_abbreviation(text: str, period: int, abbreviations: frozenset[str]) -> bool:
    """True when the token ending at ``period`` is a listed abbreviation."""
    k = period - 1
    while k >= 0 and (text[k].isalnum() or text[k] == "."):
        k -= 1
    token = text[k + 1 : period].lstrip(".").lower()
    return bool(token) and token in abbreviations


def _blocks(text: str) -> list[tuple[int, int]]:
    """Structural blocks: blank lines separate, list items/headings split."""
    blocks: list[tuple[int, int]] = []
    current_start: int | None = None
    pos = 0
    n = len(text)
    while pos <= n:
        eol = text.find("\n", pos)
        if eol < 0:
            eol = n
        line = text[pos:eol]
        if not line.strip():
            if current_start is not None:
                blocks.append((current_start, pos))
                current_start = None
        elif _HEADING_RE.match(line) or _FENCE_RE.match(line):
            if current_start is not None:
                blocks.append((current_start, pos))
                current_start = None
            blocks.append((pos, eol))
        elif _LIST_ITEM_RE.match(line):
            if current_start is not None:
                blocks.append((current_start, pos))
            current_start = pos
        else:
            if current_start is None:
                current_start = pos
        if eol >= n:
            break
        pos = eol + 1
    if current_start is not None:
        blocks.append((current_start, n))
    return blocks


def _sentence_ends(text: str, start: int, end: int, abbreviations: frozenset[str]) -> list[int]:
    """Offsets (exclusive) where a sentence ends inside text[start:end)."""
    ends: list[int] = []
    i = start
    while i < end:
        ch = text[i]
        if ch in ".!?":
            j = i + 1
            while j < end and text[j] in _CLOSERS:
                j += 1
            at_boundary = j >= end or text[j].isspace()
            if at_boundary and not (ch == "." and _is_abbreviation(text, i, abbreviations)):
                ends.append(j)
                i = j
                continue
        i += 1
    if not ends or ends[-1] != end:
        ends.append(end)
    return ends


def _trim(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def _hard_split(text: str, start: int, end: int, limit: int) -> list[tuple[int, int]]:
    """Split an oversized span at the last whitespace before the limit."""
    spans: list[tuple[int, int]] = []
    while end - start > limit:
        cut = start + limit
        ws = -1
        for k in range(cut, start, -1):
            if text[k - 1].isspace():
                ws = k - 1
                break
        cut = ws if ws > start else cut
        spans.append((start, cut))
        start = cut
        while start < end and text[start].isspace():
            start += 1
    if start < end:
        spans.append((start, end))
    return spans


def segment(text: str, opts: SegmenterOptions | None = None) -> list[Sentence]:
    """Split text into offset-faithful sentences.

    Every non-whitespace character lands in exactly one sentence span;
    the gaps between spans are whitespace only.
    """
    opts = opts or SegmenterOptions()
    if opts.mask_fenced_code:
        scan_text, _ = mask_code(text)
    else:
        scan_text = text

    raw_spans: list[tuple[int, int]] = []
    for b_start, b_end in _blocks(scan_text):
        # A list marker like "2. " must not end a sentence by itself.
        marker = _LIST_ITEM_RE.match(scan_text[b_start:b_end])
        scan_from = b_start + marker.end() if marker else b_start
        prev = b_start
        for cut in _sentence_ends(scan_text, scan_from, b_end, opts.abbreviation_list):
            raw_spans.append((prev, cut))
            prev = cut

    sentences: list[Sentence] = []
    for s, e in raw_spans:
        s, e = _trim(scan_text, s, e)
        if s >= e:
            continue
        for hs, he in _hard_split(scan_text, s, e, opts.max_sentence_chars):
            sentences.append(
                Sentence(text=text[hs:he], start=hs, end=he, index=len(sentences))
            )
    return sentences


def mask_code(text: str) -> tuple[str, list[tuple[int, int]]]:
    """Replace fenced and inline code by same-length placeholders.

    Offsets are preserved: fenced block content keeps its whitespace and
    every other character becomes ``x``; inline backtick spans likewise.
    An unclosed fence turns the rest of the text into code. Returns the
    masked text and the [start, end) regions covering each code construct.
    """
    chars = list(text)
    regions: list[tuple[int, int]] = []

    def mask_range(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            if not chars[k].isspace():
                chars[k] = "x"

    # Fenced blocks first (line oriented).
    lines: list[tuple[int, int]] = []
    pos = 0
    while pos <= len(text):
        eol = text.find("\n", pos)
        if eol < 0:
            eol = len(text)
        lines.append((pos, eol))
        if eol >= len(text):
            break
        pos = eol + 1

    fenced: list[tuple[int, int]] = []
    open_start: int | None = None
    content_start = 0
    for l_start, l_end in lines:
        if _FENCE_RE.match(text[l_start:l_end]):
            if open_start is None:
                open_start = l_start
                content_start = min(l_end + 1, len(text))
            else:
                fenced.append((open_start, l_end))
                mask_range(content_start, l_start)
                open_start = None
    if open_start is not None:
        fenced.append((open_start, len(text)))
        mask_range(content_start, len(text))
    regions.extend(fenced)

    def in_fence(k: int) -> bool:
        return any(lo <= k < hi for lo, hi in fenced)

    # Inline spans on the already fence-masked text.
    i = 0
    while i < len(chars):
        if chars[i] == "`" and not in_fence(i):
            j = i + 1
            while j < len(chars) and chars[j] != "`" and chars[j] != "\n":
                j += 1
            if j < len(chars) and chars[j] == "`":
                mask_range(i + 1, j)
                regions.append((i, j + 1))
                i = j + 1
                continue
        i += 1

    regions.sort()
    return "".join(chars), regions
