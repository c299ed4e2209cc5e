#!/usr/bin/env python3
"""Train the bundled PA classifier from the bundled corpus.

    python3 scripts/train_pa_model.py [--seed 7] [--max-steps 4000]

Writes src/scapa/data/pa_model.json (sparse JSON weights).
"""

from __future__ import annotations

import argparse
from pathlib import Path

from scapa import pa
from scapa.model import TrainingConfig

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_OUT = ROOT / "src" / "scapa" / "data" / "pa_model.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", default=str(ROOT / "src/scapa/data/pa_corpus.jsonl"))
    parser.add_argument("--out", default=str(DEFAULT_OUT))
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--max-steps", type=int, default=4000)
    parser.add_argument("--learning-rate", type=float, default=0.1)
    args = parser.parse_args()

    dataset = pa.load_labeled(args.corpus)
    cfg = TrainingConfig(max_steps=args.max_steps, learning_rate=args.learning_rate)
    model, metrics = pa.train(dataset, cfg, seed=args.seed)
    pa.save_model(model, args.out)
    print(f"trained on {len(dataset)} sentences, held-out metrics: {metrics}")
    print(f"model written to {args.out}")


if __name__ == "__main__":
    main()
