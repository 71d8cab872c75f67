"""Line-level diff engine: alignment opcodes, modified-line and hunk counts.

Alignment uses recursive longest-contiguous-matching-block decomposition:
find the longest run of identical consecutive lines (preferring the match
that starts earliest in `a`, then earliest in `b`), recurse on both sides,
and emit the non-matching remainders as insert/delete/replace opcodes.
Matching is exact line equality; there are no junk or whitespace heuristics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

EQUAL = "equal"
INSERT = "insert"
DELETE = "delete"
REPLACE = "replace"


class Opcode(NamedTuple):
    """One aligned region: a[a_start:a_end] versus b[b_start:b_end]."""

    kind: str
    a_start: int
    a_end: int
    b_start: int
    b_end: int


@dataclass(frozen=True)
class DiffConfig:
    """Hunk grouping parameters; context_lines matches unified-diff context."""

    context_lines: int = 3

    def __post_init__(self) -> None:
        if self.context_lines < 0:
            raise ValueError("context_lines must be >= 0")


@dataclass(frozen=True)
class DiffMetrics:
    modified_lines: int
    hunks: int


def split_lines(text: str) -> list[str]:
    """Split text on LF; a trailing newline does not add a phantom empty line."""
    if not text:
        return []
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def _longest_match(
    a: Sequence[str],
    b2j: dict[str, list[int]],
    alo: int,
    ahi: int,
    blo: int,
    bhi: int,
) -> tuple[int, int, int]:
    """Longest block with a[i:i+k] == b[j:j+k], earliest i then earliest j.

    Scans i ascending while carrying, for each j, the length of the longest
    match ending at (i, j); strictly-greater updates preserve the earliest
    tie-break.
    """
    besti, bestj, bestsize = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        newj2len: dict[int, int] = {}
        for j in b2j.get(a[i], ()):
            if j < blo:
                continue
            if j >= bhi:
                break
            k = newj2len[j] = j2len.get(j - 1, 0) + 1
            if k > bestsize:
                besti, bestj, bestsize = i - k + 1, j - k + 1, k
        j2len = newj2len
    return besti, bestj, bestsize


def _matching_blocks(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int, int]]:
    b2j: dict[str, list[int]] = {}
    for j, line in enumerate(b):
        b2j.setdefault(line, []).append(j)

    stack = [(0, len(a), 0, len(b))]
    found: list[tuple[int, int, int]] = []
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        i, j, k = _longest_match(a, b2j, alo, ahi, blo, bhi)
        if k:
            found.append((i, j, k))
            stack.append((alo, i, blo, j))
            stack.append((i + k, ahi, j + k, bhi))
    found.sort()

    # Adjacent blocks produced by the recursion are fused into one.
    merged: list[tuple[int, int, int]] = []
    mi = mj = mk = 0
    for i, j, k in found:
        if mk and mi + mk == i and mj + mk == j:
            mk += k
        else:
            if mk:
                merged.append((mi, mj, mk))
            mi, mj, mk = i, j, k
    if mk:
        merged.append((mi, mj, mk))
    merged.append((len(a), len(b), 0))
    return merged


def align(a: Sequence[str], b: Sequence[str]) -> list[Opcode]:
    """Tile both line sequences, in order, with equal/insert/delete/replace.

    The opcodes cover every line of `a` and `b` exactly once, with no gaps.
    """
    opcodes: list[Opcode] = []
    ia = jb = 0
    for i, j, size in _matching_blocks(a, b):
        if ia < i and jb < j:
            opcodes.append(Opcode(REPLACE, ia, i, jb, j))
        elif ia < i:
            opcodes.append(Opcode(DELETE, ia, i, jb, j))
        elif jb < j:
            opcodes.append(Opcode(INSERT, ia, i, jb, j))
        if size:
            opcodes.append(Opcode(EQUAL, i, i + size, j, j + size))
        ia, jb = i + size, j + size
    return opcodes


def modified_lines(opcodes: Sequence[Opcode]) -> int:
    """Total changed lines: inserts count b-side, deletes a-side, and a
    k-line-to-m-line replace counts max(k, m) so a one-line rewrite is 1."""
    total = 0
    for op in opcodes:
        if op.kind == INSERT:
            total += op.b_end - op.b_start
        elif op.kind == DELETE:
            total += op.a_end - op.a_start
        elif op.kind == REPLACE:
            total += max(op.a_end - op.a_start, op.b_end - op.b_start)
    return total


def count_hunks(opcodes: Sequence[Opcode], cfg: DiffConfig | None = None) -> int:
    """Unified-diff hunk count: change runs separated by at most
    2 * context_lines equal lines share a hunk; longer equal runs split."""
    if cfg is None:
        cfg = DiffConfig()
    max_gap = 2 * cfg.context_lines
    hunks = 0
    in_hunk = False
    for op in opcodes:
        if op.kind == EQUAL:
            if in_hunk and (op.a_end - op.a_start) > max_gap:
                in_hunk = False
        else:
            if not in_hunk:
                hunks += 1
                in_hunk = True
    return hunks


def diff_metrics(pre: str, post: str, cfg: DiffConfig | None = None) -> DiffMetrics:
    """Modified-line and hunk counts between two texts, split on LF."""
    ops = align(split_lines(pre), split_lines(post))
    return DiffMetrics(modified_lines(ops), count_hunks(ops, cfg))
