// Node-link rendering of knowledge-graph JSON: one column per bucket in
// timeline order, bucket node on top, artifact nodes below. The output is
// an SVG string, so layout stays testable without a DOM.

import { escapeHtml } from "./highlight.js";
import type { GraphEdge, GraphNode, KnowledgeGraphDoc } from "./types.js";

export interface LayoutOptions {
  colWidth: number;
  rowHeight: number;
  margin: number;
}

const DEFAULTS: LayoutOptions = { colWidth: 190, rowHeight: 46, margin: 30 };

const KIND_COLOR: Record<string, string> = {
  bucket: "#4a5568",
  issue: "#2b6cb0",
  pr: "#b86f28",
  commit: "#2f855a",
  release: "#805ad5",
  sca: "#c53030",
  pa: "#b7791f",
};

export interface PlacedNode extends GraphNode {
  x: number;
  y: number;
}

export interface GraphLayout {
  nodes: PlacedNode[];
  edges: GraphEdge[];
  buckets: string[];
  width: number;
  height: number;
}

/** Buckets in timeline order, recovered from the timeline_next chain. */
export function bucketOrder(doc: KnowledgeGraphDoc): string[] {
  const bucketIds = doc.nodes.filter((n) => n.kind === "bucket").map((n) => n.id);
  const nexts = new Map<string, string>();
  for (const e of doc.edges) {
    if (e.relation === "timeline_next") nexts.set(e.src_id, e.dst_id);
  }
  const destinations = new Set(nexts.values());
  const heads = bucketIds.filter((id) => !destinations.has(id));
  const order: string[] = [];
  const seen = new Set<string>();
  let current = heads[0];
  while (current && !seen.has(current)) {
    seen.add(current);
    order.push(current);
    current = nexts.get(current) ?? "";
  }
  for (const id of bucketIds) {
    if (!seen.has(id)) order.push(id); // orphan buckets after the chain
  }
  return order.map((id) => id.replace(/^bucket:/, ""));
}

/** Restrict the graph to its first `count` buckets (the dynamic view). */
export function truncateToBucketPrefix(doc: KnowledgeGraphDoc, count: number): KnowledgeGraphDoc {
  const allowed = new Set(bucketOrder(doc).slice(0, Math.max(0, count)));
  const nodes = doc.nodes.filter((n) => allowed.has(n.bucket));
  const ids = new Set(nodes.map((n) => n.id));
  const edges = doc.edges.filter((e) => ids.has(e.src_id) && ids.has(e.dst_id));
  return { dimension: doc.dimension, nodes, edges };
}

export function layoutGraph(doc: KnowledgeGraphDoc, opts: Partial<LayoutOptions> = {}): GraphLayout {
  const { colWidth, rowHeight, margin } = { ...DEFAULTS, ...opts };
  const buckets = bucketOrder(doc);
  const columnOf = new Map(buckets.map((b, i) => [b, i]));
  const placed: PlacedNode[] = [];
  const rows = new Map<number, number>();
  let maxRow = 0;

  const sorted = [...doc.nodes].sort((a, b) => {
    const ca = columnOf.get(a.bucket) ?? 0;
    const cb = columnOf.get(b.bucket) ?? 0;
    if (ca !== cb) return ca - cb;
    if (a.kind !== b.kind) return a.kind === "bucket" ? -1 : b.kind === "bucket" ? 1 : a.kind < b.kind ? -1 : 1;
    return a.id < b.id ? -1 : 1;
  });
  for (const node of sorted) {
    const col = columnOf.get(node.bucket) ?? 0;
    const row = node.kind === "bucket" ? 0 : (rows.get(col) ?? 0) + 1;
    if (node.kind !== "bucket") rows.set(col, row);
    maxRow = Math.max(maxRow, row);
    placed.push({
      ...node,
      x: margin + col * colWidth + colWidth / 2,
      y: margin + row * rowHeight + rowHeight / 2,
    });
  }
  return {
    nodes: placed,
    edges: doc.edges,
    buckets,
    width: margin * 2 + Math.max(1, buckets.length) * colWidth,
    height: margin * 2 + (maxRow + 1) * rowHeight,
  };
}

export function renderGraphSvg(doc: KnowledgeGraphDoc, opts: Partial<LayoutOptions> = {}): string {
  const layout = layoutGraph(doc, opts);
  const byId = new Map(layout.nodes.map((n) => [n.id, n]));
  const lines: string[] = [];
  for (const edge of layout.edges) {
    const a = byId.get(edge.src_id);
    const b = byId.get(edge.dst_id);
    if (!a || !b) continue;
    const cls = escapeHtml(edge.relation);
    lines.push(
      `<line class="edge ${cls}" x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}"></line>`,
    );
  }
  const circles: string[] = [];
  for (const node of layout.nodes) {
    const color = KIND_COLOR[node.kind] ?? "#718096";
    const label = node.kind === "bucket" ? node.label : `${node.label} [${node.state}]`;
    circles.push(
      `<g class="node ${escapeHtml(node.kind)}">` +
        `<circle cx="${node.x}" cy="${node.y}" r="9" fill="${color}">` +
        `<title>${escapeHtml(`${node.id} (${node.bucket})`)}</title></circle>` +
        `<text x="${node.x + 12}" y="${node.y + 4}">${escapeHtml(truncate(label, 26))}</text>` +
        `</g>`,
    );
  }
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${layout.width} ${layout.height}" ` +
    `width="${layout.width}" height="${layout.height}">` +
    lines.join("") +
    circles.join("") +
    `</svg>`
  );
}

function truncate(text: string, limit: number): string {
  return text.length <= limit ? text : text.slice(0, limit - 1) + "…";
}
