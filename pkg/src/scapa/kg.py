"""Timeline knowledge graphs of repository activity and assumptions.

Artifacts become one node per evidenced lifecycle state (a merged PR yields
published -> merged -> closed chained by lifecycle_next); every artifact
node hangs off its time bucket via same_bucket; buckets chain
chronologically via timeline_next. SCA/PA nodes, when included, attach to
their source artifact. Buckets come in three granularities: calendar day,
calendar month, or enclosing release.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional

from . import model
from .model import (
    CandidateStatus,
    CommitRecord,
    DataType,
    Dimension,
    EdgeRelation,
    GraphEdge,
    GraphNode,
    IssueRecord,
    IssueState,
    KnowledgeGraph,
    NodeKind,
    PrState,
    PullRequestRecord,
    ReleaseRecord,
    RepositoryRef,
)
from .store import Store, UnknownCollection, UnknownRepository

PRE_RELEASE_BUCKET = "pre-release"

#: Everything build_graph can place on the timeline.
INCLUDABLE = ("issue", "pr", "commit", "release", "sca", "pa")
DEFAULT_INCLUDE = ("issue", "pr", "commit")


class KgError(Exception):
    pass


class NoData(KgError):
    pass


def bucket(
    timestamp: datetime, dimension: Dimension, releases: Iterable[ReleaseRecord] = ()
) -> str:
    """Bucket id: "YYYY-MM-DD", "YYYY-MM", or the enclosing release tag."""
    if dimension is Dimension.DAY:
        return timestamp.strftime("%Y-%m-%d")
    if dimension is Dimension.MONTH:
        return timestamp.strftime("%Y-%m")
    chosen = None
    for rel in releases:  # releases sorted by published_at
        if rel.published_at <= timestamp:
            chosen = rel.tag_name
        else:
            break
    return chosen if chosen is not None else PRE_RELEASE_BUCKET


@dataclass
class _Builder:
    dimension: Dimension
    releases: list[ReleaseRecord]
    nodes: list[GraphNode]
    edges: list[GraphEdge]
    bucket_times: dict[str, datetime]
    node_ids: set[str]

    def bucket_for(self, ts: datetime) -> str:
        b = bucket(ts, self.dimension, self.releases)
        known = self.bucket_times.get(b)
        if known is None or ts < known:
            self.bucket_times[b] = ts
        return b

    def add_node(self, node: GraphNode) -> None:
        if node.id in self.node_ids:
            return
        self.node_ids.add(node.id)
        self.nodes.append(node)

    def add_artifact(self, kind: NodeKind, key: str, label: str, events: list[tuple[str, datetime]]) -> Optional[str]:
        """One node per lifecycle state, chained in event order.

        Returns the id of the first state node (attachment point).
        """
        events = [(s, t) for s, t in events if t is not None]
        if not events:
            return None
        events.sort(key=lambda e: e[1])
        prev_id = None
        first_id = None
        for state, ts in events:
            b = self.bucket_for(ts)
            node_id = f"{kind.value}:{key}:{state}"
            self.add_node(GraphNode(id=node_id, kind=kind, state=state, bucket=b, label=label))
            self.edges.append(
                GraphEdge(src_id=node_id, dst_id=f"bucket:{b}", relation=EdgeRelation.SAME_BUCKET)
            )
            if prev_id is not None:
                self.edges.append(
                    GraphEdge(src_id=prev_id, dst_id=node_id, relation=EdgeRelation.LIFECYCLE_NEXT)
                )
            if first_id is None:
                first_id = node_id
            prev_id = node_id
        return first_id


def _issue_events(r: IssueRecord) -> list[tuple[str, datetime]]:
    events = [("open", r.created_at)]
    if r.state is IssueState.CLOSED and r.closed_at is not None:
        events.append(("closed", r.closed_at))
    return events


def _pr_events(r: PullRequestRecord) -> list[tuple[str, datetime]]:
    events = [("published", r.created_at)]
    if r.state is PrState.MERGED and r.merged_at is not None:
        events.append(("merged", r.merged_at))
    if r.state in (PrState.CLOSED, PrState.MERGED):
        closed = r.closed_at or r.merged_at
        if closed is not None:
            events.append(("closed", closed))
    return events


def _short(text: str, limit: int = 80) -> str:
    line = text.splitlines()[0] if text else ""
    return line if len(line) <= limit else line[: limit - 1] + "…"


def build_graph(
    store: Store,
    ref: RepositoryRef,
    dimension: Dimension,
    include: Iterable[str] = DEFAULT_INCLUDE,
) -> KnowledgeGraph:
    """Assemble the graph from everything collected for one repository."""
    include = set(include)
    unknown = include - set(INCLUDABLE)
    if unknown:
        raise KgError(f"unknown include kinds: {sorted(unknown)}")

    releases: list[ReleaseRecord] = []
    try:
        repo = store.get_repository(ref)
        releases = sorted(repo.releases, key=lambda r: r.published_at)
    except UnknownRepository:
        repo = None

    builder = _Builder(
        dimension=dimension,
        releases=releases,
        nodes=[],
        edges=[],
        bucket_times={},
        node_ids=set(),
    )
    attach_by_url: dict[str, str] = {}

    def load(data_type: DataType):
        try:
            return store.get_records(ref, data_type)
        except UnknownCollection:
            return []

    if "issue" in include:
        for r in load(DataType.ISSUE):
            first = builder.add_artifact(NodeKind.ISSUE, str(r.id), _short(r.title), _issue_events(r))
            if first:
                attach_by_url[r.url] = first
    if "pr" in include:
        for r in load(DataType.PR):
            first = builder.add_artifact(NodeKind.PR, str(r.id), _short(r.title), _pr_events(r))
            if first:
                attach_by_url[r.url] = first
    if "commit" in include:
        for r in load(DataType.COMMIT):
            first = builder.add_artifact(
                NodeKind.COMMIT, r.oid, _short(r.message), [("committed", r.committed_date)]
            )
            if first:
                attach_by_url[r.url] = first
    if "release" in include and dimension is not Dimension.RELEASE:
        for rel in releases:
            builder.add_artifact(
                NodeKind.RELEASE, rel.tag_name, rel.tag_name, [("published", rel.published_at)]
            )

    if "sca" in include:
        for dt in DataType:
            for i, row in enumerate(store.load_sca_rows(ref, dt)):
                target = attach_by_url.get(row.url)
                if target is None:
                    continue
                node_id = f"sca:{dt.value}:{i}"
                target_node = next(n for n in builder.nodes if n.id == target)
                builder.add_node(
                    GraphNode(
                        id=node_id,
                        kind=NodeKind.SCA,
                        state="extracted",
                        bucket=target_node.bucket,
                        label=_short(row.sca_sentence),
                    )
                )
                builder.edges.append(
                    GraphEdge(src_id=target, dst_id=node_id, relation=EdgeRelation.ATTACHED_TO)
                )
    if "pa" in include:
        for dt in DataType:
            for cand in store.load_candidates(ref, dt):
                if cand.status is CandidateStatus.REJECTED:
                    continue
                target = attach_by_url.get(cand.unit.source_url)
                if target is None:
                    continue
                target_node = next(n for n in builder.nodes if n.id == target)
                builder.add_node(
                    GraphNode(
                        id=f"pa:{cand.id}",
                        kind=NodeKind.PA,
                        state=cand.status.value,
                        bucket=target_node.bucket,
                        label=_short(cand.sentence.text),
                    )
                )
                builder.edges.append(
                    GraphEdge(src_id=target, dst_id=f"pa:{cand.id}", relation=EdgeRelation.ATTACHED_TO)
                )

    if not builder.nodes:
        raise NoData(f"nothing to graph for {ref.slug}")

    ordered_buckets = sorted(builder.bucket_times, key=lambda b: builder.bucket_times[b])
    for b in ordered_buckets:
        builder.add_node(
            GraphNode(id=f"bucket:{b}", kind=NodeKind.BUCKET, state="", bucket=b, label=b)
        )
    for a, b in zip(ordered_buckets, ordered_buckets[1:]):
        builder.edges.append(
            GraphEdge(src_id=f"bucket:{a}", dst_id=f"bucket:{b}", relation=EdgeRelation.TIMELINE_NEXT)
        )
    return KnowledgeGraph(dimension=dimension, nodes=builder.nodes, edges=builder.edges)


def graph_to_json(graph: KnowledgeGraph) -> dict:
    """Deterministic export shape: nodes sorted by (bucket, kind, id)."""
    nodes = sorted(graph.nodes, key=lambda n: (n.bucket, n.kind.value, n.id))
    edges = sorted(graph.edges, key=lambda e: (e.relation.value, e.src_id, e.dst_id))
    return {
        "dimension": graph.dimension.value,
        "nodes": [model.encode(n) for n in nodes],
        "edges": [model.encode(e) for e in edges],
    }


def export_graph(graph: KnowledgeGraph, path) -> str:
    bad = model.validate(graph)
    if bad:
        raise KgError("; ".join(bad))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(graph_to_json(graph), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return str(path)


def load_graph(path) -> KnowledgeGraph:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return KnowledgeGraph(
        dimension=Dimension(doc["dimension"]),
        nodes=[model.decode(GraphNode, n) for n in doc["nodes"]],
        edges=[model.decode(GraphEdge, e) for e in doc["edges"]],
    )


def export_frames(graph: KnowledgeGraph, directory) -> list[str]:
    """Dynamic view: one export per bucket prefix, in timeline order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    seen: set[str] = set()
    # Recover bucket order from the timeline chain.
    nexts = {e.src_id: e.dst_id for e in graph.edges if e.relation is EdgeRelation.TIMELINE_NEXT}
    dsts = set(nexts.values())
    heads = [n.id for n in graph.nodes if n.kind is NodeKind.BUCKET and n.id not in dsts]
    order: list[str] = []
    cur = heads[0] if heads else None
    while cur is not None and cur not in seen:
        seen.add(cur)
        order.append(cur)
        cur = nexts.get(cur)
    buckets = [b.removeprefix("bucket:") for b in order]
    paths: list[str] = []
    for i in range(1, len(buckets) + 1):
        allowed = set(buckets[:i])
        keep_nodes = [n for n in graph.nodes if n.bucket in allowed]
        keep_ids = {n.id for n in keep_nodes}
        keep_edges = [
            e for e in graph.edges if e.src_id in keep_ids and e.dst_id in keep_ids
        ]
        frame = KnowledgeGraph(dimension=graph.dimension, nodes=keep_nodes, edges=keep_edges)
        out = directory / f"frame_{i:04d}.json"
        export_graph(frame, out)
        paths.append(str(out))
    return paths
