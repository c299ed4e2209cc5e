"""Knowledge graph construction, bucketing, determinism, DAG property."""

import json
import random
from datetime import timedelta

import pytest

from scapa import kg, model
from scapa.kg import NoData, bucket, build_graph, export_frames, export_graph, load_graph
from scapa.model import (
    DataType,
    Dimension,
    EdgeRelation,
    IssueState,
    NodeKind,
    PrState,
    ReleaseRecord,
    RepositoryRecord,
    RepositoryRef,
)
from conftest import make_commit, make_issue, make_pr, ts


def releases():
    return [
        ReleaseRecord("r1", ts(days=0), "u1"),
        ReleaseRecord("r2", ts(days=60), "u2"),
    ]


def test_bucket_day_and_month():
    assert bucket(ts(days=3, hours=10), Dimension.DAY) == "2022-11-04"
    assert bucket(ts(days=3), Dimension.MONTH) == "2022-11"


def test_bucket_release_boundaries():
    rels = releases()
    assert bucket(ts(days=-1), Dimension.RELEASE, rels) == "pre-release"
    assert bucket(ts(days=0), Dimension.RELEASE, rels) == "r1"
    assert bucket(ts(days=30), Dimension.RELEASE, rels) == "r1"
    assert bucket(ts(days=61), Dimension.RELEASE, rels) == "r2"


def put_pr_lifecycle(store, ref):
    pr = make_pr(
        1,
        state=PrState.MERGED,
        created_at=ts(days=0),
        merged_at=ts(days=1),
        closed_at=ts(days=2),
    )
    store.put_batch(ref, DataType.PR, [pr])
    return pr


def test_pr_lifecycle_three_nodes_two_edges(store, ref):
    put_pr_lifecycle(store, ref)
    g = build_graph(store, ref, Dimension.DAY, include={"pr"})
    pr_nodes = [n for n in g.nodes if n.kind is NodeKind.PR]
    lifecycle = [e for e in g.edges if e.relation is EdgeRelation.LIFECYCLE_NEXT]
    assert len(pr_nodes) == 3
    assert [n.state for n in pr_nodes] == ["published", "merged", "closed"]
    assert len(lifecycle) == 2
    assert len([n for n in g.nodes if n.kind is NodeKind.BUCKET]) == 3
    assert model.validate(g) == []


def test_open_issue_yields_single_node(store, ref):
    store.put_batch(ref, DataType.ISSUE, [make_issue(1, state=IssueState.OPEN, closed_at=None)])
    g = build_graph(store, ref, Dimension.DAY, include={"issue"})
    issue_nodes = [n for n in g.nodes if n.kind is NodeKind.ISSUE]
    assert [n.state for n in issue_nodes] == ["open"]


def test_ten_commits_one_month(store, ref):
    commits = [make_commit(i, committed_date=ts(days=4, hours=i)) for i in range(10)]
    store.put_batch(ref, DataType.COMMIT, commits)
    g = build_graph(store, ref, Dimension.MONTH, include={"commit"})
    kinds = {
        "commit": [n for n in g.nodes if n.kind is NodeKind.COMMIT],
        "bucket": [n for n in g.nodes if n.kind is NodeKind.BUCKET],
    }
    rels = {
        "same": [e for e in g.edges if e.relation is EdgeRelation.SAME_BUCKET],
        "timeline": [e for e in g.edges if e.relation is EdgeRelation.TIMELINE_NEXT],
    }
    assert len(kinds["commit"]) == 10
    assert len(kinds["bucket"]) == 1
    assert len(rels["same"]) == 10
    assert len(rels["timeline"]) == 0


def test_empty_repo_raises_no_data(store, ref):
    with pytest.raises(NoData):
        build_graph(store, ref, Dimension.DAY)


def test_release_dimension_uses_release_buckets(store, ref):
    store.add_repository(
        RepositoryRecord(ref=ref, url="u", releases=releases(), tags=[], added_at=ts())
    )
    store.put_batch(
        ref,
        DataType.COMMIT,
        [
            make_commit(0, committed_date=ts(days=-2)),
            make_commit(1, committed_date=ts(days=10)),
            make_commit(2, committed_date=ts(days=90)),
        ],
    )
    g = build_graph(store, ref, Dimension.RELEASE, include={"commit"})
    buckets = {n.bucket for n in g.nodes if n.kind is NodeKind.COMMIT}
    assert buckets == {"pre-release", "r1", "r2"}
    chain = [e for e in g.edges if e.relation is EdgeRelation.TIMELINE_NEXT]
    assert [(e.src_id, e.dst_id) for e in chain] == [
        ("bucket:pre-release", "bucket:r1"),
        ("bucket:r1", "bucket:r2"),
    ]


def test_sca_and_pa_nodes_attach(store, ref, tmp_path):
    issue = make_issue(1, body="We assume the cache is warm.")
    store.put_batch(ref, DataType.ISSUE, [issue])
    from scapa.model import ScaRecord

    store.save_sca_rows(
        ref,
        DataType.ISSUE,
        [
            ScaRecord(
                owner=ref.owner, repo_name=ref.name, url=issue.url,
                sca_sentence="We assume the cache is warm.",
                author=issue.author, title=issue.title, state=issue.state.value,
            )
        ],
    )
    g = build_graph(store, ref, Dimension.MONTH, include={"issue", "sca"})
    sca_nodes = [n for n in g.nodes if n.kind is NodeKind.SCA]
    attach = [e for e in g.edges if e.relation is EdgeRelation.ATTACHED_TO]
    assert len(sca_nodes) == 1
    assert len(attach) == 1
    assert attach[0].dst_id == sca_nodes[0].id
    assert model.validate(g) == []


def test_export_round_trip_and_determinism(store, ref, tmp_path):
    put_pr_lifecycle(store, ref)
    g = build_graph(store, ref, Dimension.DAY, include={"pr"})
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    export_graph(g, p1)
    export_graph(g, p2)
    assert p1.read_bytes() == p2.read_bytes()
    loaded = load_graph(p1)
    assert set(loaded.nodes) == set(g.nodes)
    assert set(loaded.edges) == set(g.edges)
    assert loaded.dimension == g.dimension
    export_graph(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    doc = json.loads(p1.read_text("utf-8"))
    assert len(doc["nodes"]) == len(g.nodes)


def test_frames_are_prefixes(store, ref, tmp_path):
    put_pr_lifecycle(store, ref)
    g = build_graph(store, ref, Dimension.DAY, include={"pr"})
    frames = export_frames(g, tmp_path / "frames")
    assert len(frames) == 3
    sizes = [len(load_graph(f).nodes) for f in frames]
    assert sizes == sorted(sizes)
    assert sizes[-1] == len(g.nodes)


def random_repo(store, rng, idx):
    ref = RepositoryRef("o", f"rand{idx}")
    issues = []
    for i in range(rng.randint(0, 6)):
        state = IssueState.CLOSED if rng.random() < 0.5 else IssueState.OPEN
        closed = (
            ts(days=rng.randint(120, 200))
            if state is IssueState.CLOSED and rng.random() < 0.9
            else None
        )
        issues.append(
            make_issue(i + 1, state=state, created_at=ts(days=rng.randint(0, 120)), closed_at=closed)
        )
    prs = [
        make_pr(
            i + 1,
            state=[PrState.OPEN, PrState.CLOSED, PrState.MERGED][rng.randint(0, 2)],
            created_at=ts(days=rng.randint(0, 100)),
            merged_at=ts(days=rng.randint(100, 150)),
            closed_at=ts(days=rng.randint(150, 220)),
        )
        for i in range(rng.randint(0, 6))
    ]
    commits = [
        make_commit(i, committed_date=ts(days=rng.randint(0, 300), hours=i))
        for i in range(rng.randint(0, 10))
    ]
    if issues:
        store.put_batch(ref, DataType.ISSUE, issues)
    if prs:
        store.put_batch(ref, DataType.PR, prs)
    if commits:
        store.put_batch(ref, DataType.COMMIT, commits)
    return ref, bool(issues or prs or commits)


@pytest.mark.parametrize("dimension", list(Dimension))
def test_random_repos_graphs_are_dags(store, dimension):
    rng = random.Random(hash(dimension.value) & 0xFFFF)
    built = 0
    for idx in range(25):
        ref, has_data = random_repo(store, rng, idx)
        if not has_data:
            continue
        g = build_graph(store, ref, dimension)
        assert model.validate(g) == []
        built += 1
        # lifecycle edges respect event time: source bucket time <= dest bucket time
        times = {}
        for n in g.nodes:
            times[n.id] = n.bucket
        bucket_order = {
            n.bucket: i
            for i, n in enumerate(
                sorted(
                    (x for x in g.nodes if x.kind is NodeKind.BUCKET),
                    key=lambda b: _chain_rank(g, b.id),
                )
            )
        }
        for e in g.edges:
            if e.relation is EdgeRelation.LIFECYCLE_NEXT:
                assert bucket_order[times[e.src_id]] <= bucket_order[times[e.dst_id]]
    assert built >= 10


def _chain_rank(g, bucket_id):
    nexts = {e.src_id: e.dst_id for e in g.edges if e.relation is EdgeRelation.TIMELINE_NEXT}
    dsts = set(nexts.values())
    heads = [n.id for n in g.nodes if n.kind is NodeKind.BUCKET and n.id not in dsts]
    order = []
    cur = heads[0] if heads else None
    seen = set()
    while cur and cur not in seen:
        seen.add(cur)
        order.append(cur)
        cur = nexts.get(cur)
    return order.index(bucket_id)
