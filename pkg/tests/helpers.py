"""Shared test utilities: oracles, dataset builders, parse-back helpers."""
from __future__ import annotations

import difflib
import random

from editsynth.records import EditTriplet, STYLE_DESCRIPTIVE, STYLE_LAZY


def unified_diff_oracle(a: list[str], b: list[str], context: int = 3) -> tuple[int, int]:
    """Independent metrics read off difflib's textual unified diff.

    Hunks are the @@ headers. Modified lines come from grouping the body:
    a maximal run of '-' lines optionally followed by '+' lines is one
    change block contributing max(len(-run), len(+run)).
    """
    diff = list(difflib.unified_diff(a, b, n=context, lineterm=""))
    body = diff[2:] if diff else []
    hunks = sum(1 for line in body if line.startswith("@@"))

    modified = 0
    minus = plus = 0

    def flush() -> None:
        nonlocal modified, minus, plus
        modified += max(minus, plus)
        minus = plus = 0

    for line in body:
        if line.startswith("@@"):
            flush()
        elif line.startswith("-"):
            if plus:
                flush()
            minus += 1
        elif line.startswith("+"):
            plus += 1
        else:
            flush()
    flush()
    return modified, hunks


def apply_opcodes(a: list[str], b: list[str], opcodes) -> list[str]:
    """Reconstruct b from a plus the alignment; the round-trip oracle."""
    out: list[str] = []
    for op in opcodes:
        if op.kind == "equal":
            out.extend(a[op.a_start : op.a_end])
        elif op.kind in ("insert", "replace"):
            out.extend(b[op.b_start : op.b_end])
    return out


def random_lines(rng: random.Random, max_len: int = 40, alphabet_size: int = 6) -> list[str]:
    return [f"L{rng.randrange(alphabet_size)}" for _ in range(rng.randint(0, max_len))]


_INSTRUCTIONS = [
    ("add logging to the loader", "Add a module logger to the loader and log each file."),
    ("fix the off by one", "Fix the off-by-one error in the index loop bound."),
    ("handle missing keys", "Handle missing config keys by falling back to defaults."),
    ("rename the helper", "Rename the helper function to match the module naming."),
]


def make_triplet(
    pre_edit: str = "def f():\n    return 1\n",
    post_edit: str = "def f():\n    return 2\n",
    style: str = STYLE_LAZY,
    instruction: str | None = None,
    source: str = "src.py",
    shot_id: int = 0,
    flags: frozenset[str] = frozenset(),
    variant: int = 0,
) -> EditTriplet:
    if instruction is None:
        lazy, descriptive = _INSTRUCTIONS[variant % len(_INSTRUCTIONS)]
        instruction = lazy if style == STYLE_LAZY else descriptive
    return EditTriplet(
        pre_edit=pre_edit,
        instruction=instruction,
        post_edit=post_edit,
        style=style,
        generator_id="test",
        pair_provenance=((source, 1), (source + ".b", 1)),
        shot_id=shot_id,
        flags=flags,
    )


def numbered_code(n: int, tag: str = "x") -> str:
    """n lines of unique, stable content."""
    return "\n".join(f"{tag}_{i} = {i}" for i in range(n))


def edit_lines(code: str, positions: list[int], tag: str = "edited") -> str:
    """Replace each listed (0-based) line with a new unique line."""
    lines = code.split("\n")
    for p in positions:
        lines[p] = f"{tag}_{p} = '{tag}'"
    return "\n".join(lines)


def replace_block(code: str, start: int, count: int, tag: str = "blk") -> str:
    """Replace count consecutive lines starting at 0-based start."""
    lines = code.split("\n")
    for p in range(start, start + count):
        lines[p] = f"{tag}_{p} = '{tag}'"
    return "\n".join(lines)


def parse_finetune_input(input_text: str) -> tuple[str, str]:
    """Invert the training-input layout back into (pre_edit, instruction)."""
    assert input_text.startswith("## Code Before:\n")
    assert input_text.endswith("## Code After:\n")
    rest = input_text[len("## Code Before:\n") : -len("\n## Code After:\n")]
    pre, instruction = rest.split("\n## Instruction:\n")
    return pre, instruction
