"""Command-line interface.

The full workflow is scriptable offline: import fixtures, identify and
extract SCAs, train the PA classifier, run PA identification jobs, triage
candidates, search, and export knowledge graphs. `serve` starts the HTTP
API. Read commands accept --json and emit the same shapes as the API.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harvest, kg, pa, sca
from . import model
from .model import (
    CandidateStatus,
    DataType,
    Dimension,
    RepositoryRef,
    SourceKind,
)
from .search import hits_to_json, parse_query, search
from .segment import SegmenterOptions
from .store import Store

_HIGHLIGHT = "\033[1;33m"
_RESET = "\033[0m"


def _config_path() -> Path:
    return Path(os.environ.get("AM_CONFIG", "~/.config/am/config.json")).expanduser()


def _load_config() -> dict:
    path = _config_path()
    if path.exists():
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return {}
    return {}


def resolve_token(flag_value: str | None) -> str:
    """Environment variable first, then config file, then --token."""
    return os.environ.get("GITHUB_TOKEN") or _load_config().get("token") or flag_value or ""


def resolve_endpoint(flag_value: str | None) -> str:
    return (
        flag_value
        or os.environ.get("AM_ENDPOINT")
        or _load_config().get("endpoint")
        or "https://api.github.com/graphql"
    )


def _store(args) -> Store:
    return Store(args.store)


def _ref(value: str) -> RepositoryRef:
    if "/" not in value:
        raise argparse.ArgumentTypeError("repository must be owner/name")
    ref = RepositoryRef.parse(value)
    bad = model.validate(ref)
    if bad:
        raise argparse.ArgumentTypeError("; ".join(bad))
    return ref


def _data_type(value: str) -> DataType:
    try:
        return DataType(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"type must be one of {[t.value for t in DataType]}")


def _scope(value: str) -> list[SourceKind]:
    try:
        return [SourceKind(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _harvest_cfg(args) -> harvest.HarvestConfig:
    return harvest.HarvestConfig(
        endpoint_url=resolve_endpoint(getattr(args, "endpoint", None)),
        token=resolve_token(getattr(args, "token", None)),
        page_size=getattr(args, "page_size", None) or 50,
    )


def _emit(args, payload) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))


# -- command handlers --------------------------------------------------------


def cmd_repo_add(args) -> int:
    store = _store(args)
    ref = RepositoryRef(args.owner, args.name)
    bad = model.validate(ref)
    if bad:
        print("error: " + "; ".join(bad), file=sys.stderr)
        return 1
    if args.offline:
        from datetime import datetime, timezone

        record = model.RepositoryRecord(
            ref=ref,
            url=f"https://github.com/{ref.slug}",
            releases=[],
            tags=[],
            added_at=datetime.now(timezone.utc),
        )
    else:
        record = harvest.fetch_repository_info(ref, _harvest_cfg(args))
    store.add_repository(record)
    if args.json:
        _emit(args, model.encode(record))
    else:
        print(f"added {ref.slug} ({len(record.releases)} releases, {len(record.tags)} tags)")
    return 0


def cmd_repo_list(args) -> int:
    records = _store(args).list_repositories()
    if args.json:
        _emit(args, [model.encode(r) for r in records])
    else:
        for r in records:
            print(f"{r.ref.slug}\t{len(r.releases)} releases\t{r.url}")
    return 0


def cmd_repo_rm(args) -> int:
    count = _store(args).delete_repository(RepositoryRef(args.owner, args.name))
    print(f"purged {count} records")
    return 0


def cmd_collect_run(args) -> int:
    store = _store(args)
    ref = args.repo
    final = harvest.run_collection(store, ref, args.type, _harvest_cfg(args), restart=args.restart)
    if args.json:
        _emit(args, model.encode(final))
    else:
        print(
            f"{ref.slug} {args.type.value}: {final.status.value} "
            f"({final.items_done} items, {final.pages_done} pages)"
            + (f" error: {final.last_error}" if final.last_error else "")
        )
    return 0 if final.status is not model.CursorStatus.ERROR else 1


def cmd_collect_status(args) -> int:
    store = _store(args)
    cursors = (
        [store.get_cursor(args.repo, args.type)]
        if args.type
        else store.cursors_for(args.repo)
    )
    if args.json:
        # Single-type output mirrors the API's status route body.
        _emit(args, model.encode(cursors[0]) if args.type else [model.encode(c) for c in cursors])
    else:
        for c in cursors:
            print(
                f"{c.repo.slug} {c.data_type.value}: {c.status.value} "
                f"({c.items_done} items, {c.pages_done} pages)"
                + (f" error: {c.last_error}" if c.last_error else "")
            )
    return 0


def cmd_release_download(args) -> int:
    store = _store(args)
    record = store.get_repository(args.repo)
    release = next((r for r in record.releases if r.tag_name == args.tag), None)
    if release is None:
        print(f"error: no release {args.tag} in {args.repo.slug}", file=sys.stderr)
        return 1
    path = harvest.download_release_archive(release, args.out, _harvest_cfg(args))
    print(path)
    return 0


def cmd_sca_identify(args) -> int:
    store = _store(args)
    opts = SegmenterOptions(mask_fenced_code=args.mask_code)
    records = store.get_records(args.repo, args.type)
    results = sca.identify_repo_records(args.repo, args.type, records, opts, args.scope)
    if args.json:
        _emit(args, sca.identification_to_json(results))
    else:
        total = sum(len(spans) for _, spans in results)
        print(f"{total} keyword hits in {len(results)} text units")
        for unit, spans in results:
            terms = ", ".join(s.term for s in spans)
            print(f"  {unit.source_kind.value}\t{unit.source_url}\t{terms}")
    return 0


def cmd_sca_extract(args) -> int:
    store = _store(args)
    opts = SegmenterOptions(mask_fenced_code=args.mask_code)
    records = store.get_records(args.repo, args.type)
    rows = sca.extract_repo_records(args.repo, args.type, records, opts, args.scope)
    store.save_sca_rows(args.repo, args.type, rows)
    sca.write_csv(rows, args.repo, args.type, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_pa_train(args) -> int:
    dataset = pa.load_labeled(args.corpus)
    cfg = model.TrainingConfig(
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        max_steps=args.max_steps,
        threshold=args.threshold,
    )
    classifier, metrics = pa.train(dataset, cfg, seed=args.seed, feature_dim=args.feature_dim)
    pa.save_model(classifier, args.out)
    if args.json:
        _emit(args, metrics)
    else:
        print(f"trained on {len(dataset)} sentences -> {args.out}")
        print("  " + "  ".join(f"{k}={v:.4f}" for k, v in metrics.items()))
    return 0


def _load_classifier(args):
    return pa.load_model(args.model) if args.model else pa.load_bundled_model()


def cmd_pa_identify(args) -> int:
    store = _store(args)
    job = pa.enqueue_identify(store, args.repo, args.type, args.scope)
    if not args.no_run:
        classifier = _load_classifier(args)
        pa.run_queue(store, classifier, threshold=args.threshold)
        job = pa.job_status(store, job.id)
    if args.json:
        _emit(args, model.encode(job))
    else:
        print(
            f"job {job.id}: {job.state.value} "
            f"({job.processed_units}/{job.total_units} units)"
            + (f" error: {job.error}" if job.error else "")
        )
    return 0 if job.state is not pa.JobState.FAILED else 1


def cmd_pa_extract(args) -> int:
    store = _store(args)
    statuses = None
    if args.status:
        statuses = {CandidateStatus(s.strip()) for s in args.status.split(",") if s.strip()}
    pa.extract_pas(store, args.repo, args.type, args.out, statuses)
    print(args.out)
    return 0


def cmd_pa_triage(args) -> int:
    store = _store(args)
    cand = pa.triage(store, args.candidate_id, args.decision, args.user)
    if args.json:
        _emit(args, model.encode(cand))
    else:
        print(f"{cand.id}: {cand.status.value} by {cand.decided_by}")
    return 0


def cmd_search(args) -> int:
    store = _store(args)
    scope = args.scope or list(model.SOURCE_KINDS_BY_TYPE[args.type])
    query = parse_query(args.query, scope)
    hits = search(store, args.repo, args.type, scope, query)
    if args.json:
        _emit(args, hits_to_json(hits))
        return 0
    print(f"{len(hits)} hits")
    for hit in hits:
        text = hit.unit.text
        rendered = []
        last = 0
        for span in hit.spans:
            rendered.append(text[last : span.start])
            rendered.append(_HIGHLIGHT + text[span.start : span.end] + _RESET)
            last = span.end
        rendered.append(text[last:])
        first_line = "".join(rendered).splitlines()[0] if text else ""
        print(f"  {hit.unit.source_kind.value}\t{hit.record_url}\t{first_line}")
    return 0


def cmd_kg_export(args) -> int:
    store = _store(args)
    include = (
        [v.strip() for v in args.include.split(",") if v.strip()]
        if args.include
        else list(kg.DEFAULT_INCLUDE)
    )
    graph = kg.build_graph(store, args.repo, args.dimension, include)
    kg.export_graph(graph, args.out)
    if args.frames:
        frames = kg.export_frames(graph, args.frames)
        print(f"{args.out} (+{len(frames)} frames)")
    else:
        print(args.out)
    return 0


def cmd_fixture_import(args) -> int:
    store = _store(args)
    if not store.has_repository(args.repo):
        from datetime import datetime, timezone

        store.add_repository(
            model.RepositoryRecord(
                ref=args.repo,
                url=f"https://github.com/{args.repo.slug}",
                releases=[],
                tags=[],
                added_at=datetime.now(timezone.utc),
            )
        )
    count = store.import_fixture(args.path, args.repo, args.type)
    print(f"imported {count} records")
    return 0


def cmd_fixture_export(args) -> int:
    count = _store(args).export_fixture(args.repo, args.type, args.path)
    print(f"exported {count} records")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_store(args), _harvest_cfg(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="am", description="Mine self-claimed and potential assumptions from GitHub data."
    )
    parser.add_argument(
        "--store",
        default=os.environ.get("AM_STORE", "am-store"),
        help="store directory (env AM_STORE)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_json(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")

    def add_net(p):
        p.add_argument("--endpoint", help="GraphQL endpoint url")
        p.add_argument("--token", help="access token (env GITHUB_TOKEN wins)")

    repo = sub.add_parser("repo", help="repository management").add_subparsers(
        dest="sub", required=True
    )
    p = repo.add_parser("add", help="register a repository")
    p.add_argument("owner")
    p.add_argument("name")
    p.add_argument("--offline", action="store_true", help="create without contacting the endpoint")
    add_net(p)
    add_json(p)
    p.set_defaults(func=cmd_repo_add)
    p = repo.add_parser("list")
    add_json(p)
    p.set_defaults(func=cmd_repo_list)
    p = repo.add_parser("rm", help="delete a repository and all its data")
    p.add_argument("owner")
    p.add_argument("name")
    p.set_defaults(func=cmd_repo_rm)

    collect = sub.add_parser("collect", help="data collection").add_subparsers(
        dest="sub", required=True
    )
    p = collect.add_parser("run")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("--page-size", type=int, dest="page_size")
    p.add_argument("--restart", action="store_true", help="ignore any existing cursor")
    add_net(p)
    add_json(p)
    p.set_defaults(func=cmd_collect_run)
    p = collect.add_parser("status")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type)
    add_json(p)
    p.set_defaults(func=cmd_collect_status)

    release = sub.add_parser("release", help="release archives").add_subparsers(
        dest="sub", required=True
    )
    p = release.add_parser("download")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--tag", required=True)
    p.add_argument("--out", required=True)
    add_net(p)
    p.set_defaults(func=cmd_release_download)

    sca_p = sub.add_parser("sca", help="self-claimed assumptions").add_subparsers(
        dest="sub", required=True
    )
    p = sca_p.add_parser("identify")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("--scope", type=_scope)
    p.add_argument("--mask-code", action="store_true")
    add_json(p)
    p.set_defaults(func=cmd_sca_identify)
    p = sca_p.add_parser("extract")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scope", type=_scope)
    p.add_argument("--mask-code", action="store_true")
    p.set_defaults(func=cmd_sca_extract)

    pa_p = sub.add_parser("pa", help="potential assumptions").add_subparsers(
        dest="sub", required=True
    )
    p = pa_p.add_parser("train")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-steps", type=int, default=50_000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--feature-dim", type=int, default=pa.DEFAULT_FEATURE_DIM)
    add_json(p)
    p.set_defaults(func=cmd_pa_train)
    p = pa_p.add_parser("identify")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("--scope", type=_scope)
    p.add_argument("--model", help="model file (default: bundled)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--no-run", action="store_true", help="enqueue only")
    add_json(p)
    p.set_defaults(func=cmd_pa_identify)
    p = pa_p.add_parser("extract")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--status", help="comma list: pending,confirmed,rejected")
    p.set_defaults(func=cmd_pa_extract)
    p = pa_p.add_parser("triage")
    p.add_argument("candidate_id")
    p.add_argument("decision", choices=["confirm", "reject"])
    p.add_argument("--user", required=True)
    add_json(p)
    p.set_defaults(func=cmd_pa_triage)

    p = sub.add_parser("search", help="scoped keyword search")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("--scope", type=_scope)
    p.add_argument("query")
    add_json(p)
    p.set_defaults(func=cmd_search)

    kg_p = sub.add_parser("kg", help="knowledge graphs").add_subparsers(dest="sub", required=True)
    p = kg_p.add_parser("export")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument(
        "--dimension", type=Dimension, choices=list(Dimension), required=True
    )
    p.add_argument("--include", help="comma list of issue,pr,commit,release,sca,pa")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", help="directory for the bucket-prefix frame sequence")
    p.set_defaults(func=cmd_kg_export)

    fixture = sub.add_parser("fixture", help="JSONL fixtures").add_subparsers(
        dest="sub", required=True
    )
    p = fixture.add_parser("import")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("path")
    p.set_defaults(func=cmd_fixture_import)
    p = fixture.add_parser("export")
    p.add_argument("--repo", type=_ref, required=True)
    p.add_argument("--type", type=_data_type, required=True)
    p.add_argument("path")
    p.set_defaults(func=cmd_fixture_export)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    add_net(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
