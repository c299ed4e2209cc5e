// HTML rendering of text with term-highlight spans (offsets are character
// offsets into the original text, sorted and non-overlapping).

import type { Span } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function renderHighlights(text: string, spans: Span[]): string {
  const ordered = [...spans].sort((a, b) => a.start - b.start);
  const parts: string[] = [];
  let cursor = 0;
  for (const span of ordered) {
    if (span.start < cursor || span.end > text.length) continue; // defensive
    parts.push(escapeHtml(text.slice(cursor, span.start)));
    parts.push(`<mark>${escapeHtml(text.slice(span.start, span.end))}</mark>`);
    cursor = span.end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join("");
}
