#!/usr/bin/env python3
"""Author the bundled PA mini-corpus (labeled sentences, JSONL).

Positive sentences state expectations, future behaviour, guesses, opinions,
or suspicions without using the explicit assumption terms; negatives are
factual reports, completed actions, and instructions. Stems are instantiated
with a few subject fillers for lexical variety; every sentence was reviewed
by hand. Run from the repo root:

    python3 scripts/build_pa_corpus.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "scapa" / "data" / "pa_corpus.jsonl"

FILLERS = ["the data loader", "the optimizer", "the caching layer"]

# Quoted verbatim in the upstream issue trackers these examples came from.
FIXED_PA = [
    "i think the right way to create demo tensorboard instances is to simply run "
    "a tensorboard in the cloud, rather than keep maintaining this mocked-out backend.",
    "The system will not crash under heavy load",
    "both false and true outputs should be considered independently",
    "I suspect the race only happens when two workers flush at the same time.",
    "My guess is that the scheduler drops the last batch on purpose.",
    "Ideally the parser would recover instead of aborting the whole run.",
    "I have a feeling this timeout is masking a deeper deadlock.",
    "We will probably need a migration step before the next release.",
]

FIXED_NOT_PA = [
    "Fixed a typo in the README.",
    "The stack trace points to line 142 of session.py.",
    "Steps to reproduce: run the attached script with python 3.8.",
    "The test suite passed on all three platforms.",
    "This reverts commit 4f2a1c9.",
    "Version 1.4.2 was released on Tuesday.",
    "The error message is attached below.",
    "Renamed the module and updated the imports.",
]

PA_STEMS = [
    "i think {} should be configurable",
    "in my opinion {} is the wrong place for this check",
    "i believe {} will break once we upgrade",
    "{} should raise a clear error instead of returning none",
    "{} should handle unicode input as well",
    "users will expect {} to work out of the box",
    "we expect {} to scale to millions of rows",
    "the next release will rework {} entirely",
    "{} will eventually need its own thread pool",
    "this change will make {} twice as fast",
    "maybe {} is caching stale results",
    "perhaps {} misreads the config on windows",
    "{} might deadlock when the queue is full",
    "{} may return early under memory pressure",
    "i suspect {} is the real bottleneck here",
    "my suspicion is that {} swallows the exception",
    "i guess {} was never designed for streaming input",
    "presumably {} retries on a transient failure",
    "it seems like {} ignores the timeout flag",
    "it looks like {} drops events during shutdown",
    "i feel that {} complicates the public api",
    "hopefully {} can reuse the existing buffer",
    "ideally {} would fall back to the cpu path",
    "{} ought to validate its arguments first",
    "i would expect {} to respect the environment variable",
    "there is a chance {} never releases the lock",
    "{} could silently truncate long messages",
    "i bet {} fails on the first leap day",
    "chances are {} needs a warmup pass",
    "{} probably misbehaves with an empty dataset",
    "most likely {} reuses the stale handle",
    "i imagine {} was meant to be internal only",
    "it is possible that {} reorders the callbacks",
    "{} is likely to regress once the cache fills up",
    "i doubt {} handles nested generics correctly",
    "the plan is that {} will move to its own package",
    "in the future {} should stream results lazily",
    "{} is supposed to be idempotent, right",
    "we should document how {} treats missing keys",
    "someone should benchmark {} before we ship",
    "it would be better if {} accepted an iterator",
    "a cleaner design would let {} own its lifecycle",
    "i wonder whether {} keeps a reference after close",
    "{} is expected to tolerate clock skew",
    "sooner or later {} will need pagination",
    "my hunch is that {} double counts retries",
    "if demand grows, {} will become the hot path",
    "the team expects {} to stay backward compatible",
    "we anticipate {} needing a feature flag",
    "i would not be surprised if {} leaks file handles",
    "{} should not block the event loop",
    "one day {} will support incremental updates",
    "odds are {} never sees the second signal",
    "i reckon {} should live next to the scheduler",
    "it appears {} skips validation in release builds",
    "my expectation is that {} preserves insertion order",
    "{} should degrade gracefully on old drivers",
    "i predict {} will be the first thing to saturate",
    "we might want {} to emit structured logs",
    "{} could use a smarter eviction policy",
    "i have a hunch {} swallows keyboard interrupts",
    "surely {} should fail fast on a bad schema",
    "{} would benefit from an async variant",
    "i suppose {} was tuned for small batches only",
    "the docs suggest {} should accept relative paths",
    "{} will need to cope with partial writes",
    "it is conceivable that {} races with the reaper",
    "who knows whether {} survives a config reload",
    "i trust {} will keep the old defaults",
    "expect {} to change once the rfc lands",
    "{} should emit a warning before overwriting files",
]

NOT_PA_STEMS = [
    "fixed a typo in {}",
    "updated {} to the latest version",
    "this commit removes {}",
    "added a regression test for {}",
    "the crash happens inside {}",
    "{} was introduced in version 2.3",
    "refactored {} into two smaller functions",
    "the profiler shows {} taking 40 percent of runtime",
    "documented the flags accepted by {}",
    "see the attached log from {}",
    "{} raised a keyerror on the second call",
    "renamed {} to match the style guide",
    "the pull request replaces {} with a lookup table",
    "deleted the dead code path in {}",
    "{} returned an empty list for this input",
    "measured the latency of {} on the ci machine",
    "the screenshot shows the output of {}",
    "bumped the pinned dependency used by {}",
    "merged the branch that touches {}",
    "reverted the change to {}",
    "{} crashed with a segmentation fault",
    "upgraded the compiler used to build {}",
    "the configuration file lists {} twice",
    "moved {} into its own module",
    "the benchmark ran {} one thousand times",
    "{} now logs the request id",
    "ported {} to the new api",
    "the traceback ends in {}",
    "disabled {} in the nightly build",
    "re-ran the failing job that exercises {}",
    "{} reads its settings from the environment",
    "the diff touches only {}",
    "compiled {} with optimizations enabled",
    "the release notes mention {}",
    "restored the old behaviour of {}",
    "switched {} to use a binary search",
    "pinned the random seed used by {}",
    "the unit test covers {} with empty input",
    "removed the global state from {}",
    "{} threw a timeout after ninety seconds",
    "installed the package that provides {}",
    "captured a heap profile while running {}",
    "the error reproduces on master with {}",
    "split {} out of the monolith",
    "set the default batch size in {} to 32",
    "the table below compares {} across versions",
    "marked {} as deprecated in the changelog",
    "cleaned up the imports in {}",
    "the dashboard graphs the throughput of {}",
    "rebased the branch before touching {}",
    "hard coded the path inside {} for now",
    "verified the checksum produced by {}",
    "the ci failure was unrelated to {}",
    "attached the core dump generated by {}",
    "rewrote {} without recursion",
    "the manual page describes {} in section four",
    "inlined the helper called by {}",
    "the patch adds retries around {}",
    "formatted {} with the project linter",
    "collected metrics while {} was under load",
    "the container image bundles {}",
    "initialized {} before the first request",
    "the schema validates the payload sent to {}",
    "printed the intermediate state of {}",
    "archived the old implementation of {}",
    "the commit message explains the change to {}",
    "registered {} with the plugin system",
    "lowered the log level inside {}",
    "the flame graph highlights {}",
    "wired {} into the startup sequence",
    "tagged the release that ships {}",
    "stubbed out {} in the unit tests",
]


def main() -> None:
    rows: list[dict] = []
    for text in FIXED_PA:
        rows.append({"text": text, "label": "pa"})
    for text in FIXED_NOT_PA:
        rows.append({"text": text, "label": "not_pa"})
    for stem in PA_STEMS:
        for filler in FILLERS:
            rows.append({"text": stem.format(filler), "label": "pa"})
    for stem in NOT_PA_STEMS:
        for filler in FILLERS:
            rows.append({"text": stem.format(filler), "label": "not_pa"})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    pa = sum(1 for r in rows if r["label"] == "pa")
    print(f"wrote {len(rows)} sentences ({pa} pa / {len(rows) - pa} not_pa) to {OUT}")


if __name__ == "__main__":
    main()
