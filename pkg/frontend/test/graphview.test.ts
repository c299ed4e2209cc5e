import { describe, expect, it } from "vitest";

import { bucketOrder, layoutGraph, renderGraphSvg, truncateToBucketPrefix } from "../src/graphview.js";
import type { KnowledgeGraphDoc } from "../src/types.js";

const DOC: KnowledgeGraphDoc = {
  dimension: "day",
  nodes: [
    { id: "bucket:2022-11-01", kind: "bucket", state: "", bucket: "2022-11-01", label: "2022-11-01" },
    { id: "bucket:2022-11-02", kind: "bucket", state: "", bucket: "2022-11-02", label: "2022-11-02" },
    { id: "bucket:2022-11-03", kind: "bucket", state: "", bucket: "2022-11-03", label: "2022-11-03" },
    { id: "pr:1:published", kind: "pr", state: "published", bucket: "2022-11-01", label: "A pr" },
    { id: "pr:1:merged", kind: "pr", state: "merged", bucket: "2022-11-02", label: "A pr" },
    { id: "pr:1:closed", kind: "pr", state: "closed", bucket: "2022-11-03", label: "A pr" },
  ],
  edges: [
    { src_id: "pr:1:published", dst_id: "bucket:2022-11-01", relation: "same_bucket" },
    { src_id: "pr:1:merged", dst_id: "bucket:2022-11-02", relation: "same_bucket" },
    { src_id: "pr:1:closed", dst_id: "bucket:2022-11-03", relation: "same_bucket" },
    { src_id: "pr:1:published", dst_id: "pr:1:merged", relation: "lifecycle_next" },
    { src_id: "pr:1:merged", dst_id: "pr:1:closed", relation: "lifecycle_next" },
    { src_id: "bucket:2022-11-01", dst_id: "bucket:2022-11-02", relation: "timeline_next" },
    { src_id: "bucket:2022-11-02", dst_id: "bucket:2022-11-03", relation: "timeline_next" },
  ],
};

describe("bucketOrder", () => {
  it("recovers the timeline chain", () => {
    expect(bucketOrder(DOC)).toEqual(["2022-11-01", "2022-11-02", "2022-11-03"]);
  });
});

describe("layoutGraph", () => {
  it("puts buckets in columns with artifacts below", () => {
    const layout = layoutGraph(DOC);
    const byId = new Map(layout.nodes.map((n) => [n.id, n]));
    const b1 = byId.get("bucket:2022-11-01")!;
    const b2 = byId.get("bucket:2022-11-02")!;
    const p1 = byId.get("pr:1:published")!;
    expect(b1.x).toBeLessThan(b2.x);
    expect(p1.x).toBe(b1.x);
    expect(p1.y).toBeGreaterThan(b1.y);
    expect(layout.buckets).toHaveLength(3);
  });

  it("is deterministic", () => {
    expect(layoutGraph(DOC)).toEqual(layoutGraph(DOC));
  });
});

describe("truncateToBucketPrefix", () => {
  it("keeps only the first k buckets and interior edges", () => {
    const frame = truncateToBucketPrefix(DOC, 2);
    expect(frame.nodes.map((n) => n.id)).toEqual([
      "bucket:2022-11-01",
      "bucket:2022-11-02",
      "pr:1:published",
      "pr:1:merged",
    ]);
    expect(frame.edges.some((e) => e.dst_id === "pr:1:closed")).toBe(false);
    expect(frame.edges.some((e) => e.relation === "lifecycle_next")).toBe(true);
  });

  it("grows monotonically to the full graph", () => {
    const sizes = [1, 2, 3].map((k) => truncateToBucketPrefix(DOC, k).nodes.length);
    expect(sizes).toEqual([...sizes].sort((a, b) => a - b));
    expect(sizes[2]).toBe(DOC.nodes.length);
  });
});

describe("renderGraphSvg", () => {
  it("emits one circle per node and one line per edge", () => {
    const svg = renderGraphSvg(DOC);
    expect(svg.match(/<circle /g)).toHaveLength(DOC.nodes.length);
    expect(svg.match(/<line /g)).toHaveLength(DOC.edges.length);
    expect(svg).toContain('class="edge lifecycle_next"');
  });

  it("escapes labels", () => {
    const doc: KnowledgeGraphDoc = {
      dimension: "day",
      nodes: [
        { id: "bucket:b", kind: "bucket", state: "", bucket: "b", label: "b" },
        { id: "issue:1:open", kind: "issue", state: "open", bucket: "b", label: "<script>x" },
      ],
      edges: [],
    };
    const svg = renderGraphSvg(doc);
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
  });
});
