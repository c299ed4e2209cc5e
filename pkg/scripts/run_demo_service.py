#!/usr/bin/env python3
"""Run the HTTP API against a seeded in-process mock GitHub endpoint.

Useful for driving the review UI locally and for frontend integration
tests. Prints one READY line with the service URL once listening.

    python3 scripts/run_demo_service.py --port 8787 --store /tmp/demo-store
"""

from __future__ import annotations

import argparse
import tempfile
import threading

import uvicorn

from scapa import harvest
from scapa.mock_github import MockGitHub, RepoFixture
from scapa.model import Comment, IssueRecord, IssueState, RepositoryRef
from scapa.service import create_app
from scapa.store import Store

from datetime import datetime, timedelta, timezone

T0 = datetime(2022, 11, 1, tzinfo=timezone.utc)

ISSUE_395 = (
    "Assume we are trying to learn a sequence to sequence map. For this we can "
    "use Recurrent and TimeDistributedDense layers. Now assume that the sequences "
    "have different lengths. We should pad both input and desired sequences with "
    "zeros, right? But how will the objective function handle the padded values? "
    "There is no choice to pass a mask to the objective function. Won't this bias "
    "the cost function?"
)

PA_BODIES = [
    "i think the planner should probably change",
    "the system will not crash under heavy load",
    "fixed the cache and updated the test",
    "both false and true outputs should be considered independently",
    "updated the parser to the latest version",
]


def seed_mock(mock: MockGitHub) -> RepositoryRef:
    ref = RepositoryRef("keras-team", "keras")
    issues = []
    for i, body in enumerate([ISSUE_395, *PA_BODIES], start=1):
        issues.append(
            IssueRecord(
                repo_name=ref.name,
                title=f"Demo issue {i}",
                id=i,
                author=f"user{i % 3}",
                url=f"https://example.test/{ref.slug}/issues/{i}",
                labels=["demo"],
                state=IssueState.OPEN if i % 2 else IssueState.CLOSED,
                body=body,
                comments=[
                    Comment(author="bot", body="maybe this should wait for v3",
                            created_at=T0 + timedelta(days=i, hours=2))
                ],
                created_at=T0 + timedelta(days=i),
                closed_at=None if i % 2 else T0 + timedelta(days=i + 3),
            )
        )
    mock.add_repo(RepoFixture(ref=ref, issues=issues))
    return ref


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--store", default=None, help="store directory (default: temp)")
    parser.add_argument("--page-size", type=int, default=2,
                        help="small pages make collection progress visible")
    args = parser.parse_args()

    store_dir = args.store or tempfile.mkdtemp(prefix="am-demo-store-")
    store = Store(store_dir)
    mock = MockGitHub()
    mock.start()
    seed_mock(mock)
    cfg = harvest.HarvestConfig(
        endpoint_url=mock.graphql_url, token="demo-token", page_size=args.page_size,
        retry_backoff_s=0.0,
    )
    app = create_app(store, cfg)

    config = uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    server = uvicorn.Server(config)

    def announce() -> None:
        import time

        while not server.started:
            time.sleep(0.02)
        print(f"READY http://{args.host}:{args.port} store={store_dir} "
              f"mock={mock.graphql_url} (guest/guest to log in)", flush=True)

    threading.Thread(target=announce, daemon=True).start()
    try:
        server.run()
    finally:
        mock.stop()


if __name__ == "__main__":
    main()
