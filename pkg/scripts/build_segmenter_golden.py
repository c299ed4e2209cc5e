#!/usr/bin/env python3
"""Author the golden segmentation corpus.

Each case is written as (input, expected sentence texts, options); spans are
derived by locating the texts left-to-right, independent of the segmenter.
Run from the repo root:

    python3 scripts/build_segmenter_golden.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "scapa" / "data" / "segmenter_golden.jsonl"

ISSUE_395 = (
    "Assume we are trying to learn a sequence to sequence map. For this we can "
    "use Recurrent and TimeDistributedDense layers. Now assume that the sequences "
    "have different lengths. We should pad both input and desired sequences with "
    "zeros, right? But how will the objective function handle the padded values? "
    "There is no choice to pass a mask to the objective function. Won't this bias "
    "the cost function?"
)

# (input, [expected sentence texts], options or None)
CASES: list[tuple[str, list[str], dict | None]] = [
    (
        "Assume we are trying to learn a sequence to sequence map. For this we "
        "can use Recurrent and TimeDistributedDense layers. Now assume that the "
        "sequences have different lengths.",
        [
            "Assume we are trying to learn a sequence to sequence map.",
            "For this we can use Recurrent and TimeDistributedDense layers.",
            "Now assume that the sequences have different lengths.",
        ],
        None,
    ),
    ("", [], None),
    ("   \n  \t ", [], None),
    ("use tf.nn.relu here", ["use tf.nn.relu here"], None),
    (
        "The value is 3.14. The next value is 2.71.",
        ["The value is 3.14.", "The next value is 2.71."],
        None,
    ),
    ("pi equals 3.14159 and e equals 2.71828", ["pi equals 3.14159 and e equals 2.71828"], None),
    (
        "We upgraded to v2.9.1 yesterday. It fixed the crash.",
        ["We upgraded to v2.9.1 yesterday.", "It fixed the crash."],
        None,
    ),
    (
        "See https://github.com/keras-team/keras/issues/395 for details.",
        ["See https://github.com/keras-team/keras/issues/395 for details."],
        None,
    ),
    (
        "Docs live at https://example.com/a.b.c. Read them first.",
        ["Docs live at https://example.com/a.b.c.", "Read them first."],
        None,
    ),
    ("a sentence does not have a terminator", ["a sentence does not have a terminator"], None),
    ("First point\n\nSecond point", ["First point", "Second point"], None),
    ("e.g. padding can be zero", ["e.g. padding can be zero"], None),
    (
        "Masks work, e.g. with zeros. Padding is optional.",
        ["Masks work, e.g. with zeros.", "Padding is optional."],
        None,
    ),
    ("i.e. the default behaviour", ["i.e. the default behaviour"], None),
    ("Stop! Why did it crash?", ["Stop!", "Why did it crash?"], None),
    ("Won't this bias the cost function?", ["Won't this bias the cost function?"], None),
    ("Is this right? Yes. It works.", ["Is this right?", "Yes.", "It works."], None),
    (
        "See no. 5 in the list. It explains the flag.",
        ["See no. 5 in the list.", "It explains the flag."],
        None,
    ),
    # Consequence of keeping "no" in the default abbreviation list.
    ("The answer is no. Try again.", ["The answer is no. Try again."], None),
    ("# Heading\nBody sentence here.", ["# Heading", "Body sentence here."], None),
    (
        "## Two words\n\nMore text. And more.",
        ["## Two words", "More text.", "And more."],
        None,
    ),
    (
        "- first item\n- second item\n- third item",
        ["- first item", "- second item", "- third item"],
        None,
    ),
    ("* star item\n* another star", ["* star item", "* another star"], None),
    ("1. numbered one\n2. numbered two", ["1. numbered one", "2. numbered two"], None),
    (
        "- item with trailing dot.\n- another item.",
        ["- item with trailing dot.", "- another item."],
        None,
    ),
    (
        "Intro:\n- bullet a\n- bullet b\nOutro sentence.",
        ["Intro:", "- bullet a", "- bullet b\nOutro sentence."],
        None,
    ),
    ("Check the file README.md for setup", ["Check the file README.md for setup"], None),
    (
        "Install torch 1.13.0. Then run the tests.",
        ["Install torch 1.13.0.", "Then run the tests."],
        None,
    ),
    ("It crashed!? Really?!", ["It crashed!?", "Really?!"], None),
    ("Wait... what happened?", ["Wait...", "what happened?"], None),
    ("Mr. Smith reported the bug.", ["Mr. Smith reported the bug."], None),
    ("Dr. Who fixed it. Thanks.", ["Dr. Who fixed it.", "Thanks."], None),
    ("cf. the earlier discussion", ["cf. the earlier discussion"], None),
    (
        "See fig. 3 for the plot. The axis is wrong.",
        ["See fig. 3 for the plot.", "The axis is wrong."],
        None,
    ),
    ("eq. 2 shows the loss", ["eq. 2 shows the loss"], None),
    ("vs. the baseline", ["vs. the baseline"], None),
    ("etc. and so on", ["etc. and so on"], None),
    (
        'He said "it works." Then left.',
        ['He said "it works."', "Then left."],
        None,
    ),
    ("(See the log.) More text.", ["(See the log.)", "More text."], None),
    ("```\nassume = 1\n```", ["```", "assume = 1", "```"], None),
    (
        "```\nassume = 1\n```",
        ["```", "assume = 1", "```"],
        {"mask_fenced_code": True},
    ),
    ("run `assume` now", ["run `assume` now"], None),
    (
        "aaaa bbbb cccc dddd eeee",
        ["aaaa bbbb cccc dddd", "eeee"],
        {"max_sentence_chars": 20},
    ),
    ("x" * 30, ["x" * 20, "x" * 10], {"max_sentence_chars": 20}),
    ("first.second", ["first.second"], None),
    ("end with period.", ["end with period."], None),
    ("Multiple   spaces.   Next.", ["Multiple   spaces.", "Next."], None),
    ("\n\nLeading blanks. Then text.\n\n", ["Leading blanks.", "Then text."], None),
    ("Tab\tseparated words. Second.", ["Tab\tseparated words.", "Second."], None),
    ("Das ist gut. Непонятно что.", ["Das ist gut.", "Непонятно что."], None),
    ('He asked "why?" loudly', ['He asked "why?"', "loudly"], None),
    ("CRLF line one.\r\nLine two here.", ["CRLF line one.", "Line two here."], None),
    (
        ISSUE_395,
        [
            "Assume we are trying to learn a sequence to sequence map.",
            "For this we can use Recurrent and TimeDistributedDense layers.",
            "Now assume that the sequences have different lengths.",
            "We should pad both input and desired sequences with zeros, right?",
            "But how will the objective function handle the padded values?",
            "There is no choice to pass a mask to the objective function.",
            "Won't this bias the cost function?",
        ],
        None,
    ),
    (
        "strict enforcement of user input assumptions, and raising of helpful error messages.",
        ["strict enforcement of user input assumptions, and raising of helpful error messages."],
        None,
    ),
    (
        "[tf/xla] fixup numbering of xla parameters used for aliasing previously, "
        "the xla argument parameter was incorrectly assumed to be corresponding to "
        "the index in the vector of `xlacompiler::argument'",
        [
            "[tf/xla] fixup numbering of xla parameters used for aliasing previously, "
            "the xla argument parameter was incorrectly assumed to be corresponding to "
            "the index in the vector of `xlacompiler::argument'"
        ],
        None,
    ),
    ("### Deep heading with trailing.\ntext", ["### Deep heading with trailing.", "text"], None),
    (
        "Para one line one\npara one line two. Still para one.\n\nPara two.",
        ["Para one line one\npara one line two.", "Still para one.", "Para two."],
        None,
    ),
    ("100% sure? Maybe.", ["100% sure?", "Maybe."], None),
    ("node.js and vue.js are tools", ["node.js and vue.js are tools"], None),
    ("Ends with abbreviation e.g.", ["Ends with abbreviation e.g."], None),
]


def spans_for(text: str, sentences: list[str]) -> list[list[int]]:
    spans = []
    cursor = 0
    for s in sentences:
        idx = text.index(s, cursor)
        spans.append([idx, idx + len(s)])
        cursor = idx + len(s)
    return spans


def main() -> None:
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", encoding="utf-8") as f:
        for text, sentences, options in CASES:
            row = {
                "input": text,
                "options": options or {},
                "expected_spans": spans_for(text, sentences),
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(CASES)} cases to {OUT}")


if __name__ == "__main__":
    main()
