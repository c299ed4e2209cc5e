#!/usr/bin/env python3
"""Identification throughput experiment.

Generates synthetic text units (~20 words each) and times the whole-word
keyword scan, single-threaded.

    python3 scripts/bench_identify.py --units 100000
"""

from __future__ import annotations

import argparse
import random
import time

from scapa.model import RepositoryRef, SourceKind, TextUnit
from scapa.sca import identify

VOCAB = [
    "tensor", "graph", "layer", "builds", "quickly", "the", "model", "assume",
    "assumption", "training", "loss", "drops", "every", "epoch", "with",
    "padding", "masked", "values", "it", "works",
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--units", type=int, default=100_000)
    parser.add_argument("--words", type=int, default=20)
    parser.add_argument("--seed", type=int, default=99)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    ref = RepositoryRef("bench", "bench")
    units = [
        TextUnit(
            source_kind=SourceKind.ISSUE_BODY,
            repo=ref,
            source_url=f"https://example.test/{i}",
            author="bench",
            text=" ".join(rng.choice(VOCAB) for _ in range(args.words)),
        )
        for i in range(args.units)
    ]

    started = time.monotonic()
    hits = sum(len(identify(u)) for u in units)
    elapsed = time.monotonic() - started
    rate = args.units / elapsed
    print(f"{args.units} units, {hits} hits, {elapsed:.3f}s ({rate:,.0f} units/s)")


if __name__ == "__main__":
    main()
