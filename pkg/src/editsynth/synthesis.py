"""Two-round dialogue per snippet pair, parsed into validated edit triplets.

Round 1 yields the pre-edit code plus both instruction styles in one pass;
round 2 continues the same dialogue and yields the post-edit code (shared by
both styles) or the ill-posed token. Each pair gets a single attempt:
malformed or ill-posed outputs are discarded, never regenerated.
"""
from __future__ import annotations

import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .corpus import Corpus, SnippetConfig, SnippetPair, sample_pair
from .backends import ChatTurn, GenParams, GenResult, ROLE_ASSISTANT, ROLE_USER
from .errors import (
    ContextOverflow,
    MalformedRound1,
    MalformedRound2,
    MalformedTask,
    RateLimited,
    TransportError,
)
from .prompts import (
    DESCRIPTIVE_MARKER,
    LAZY_MARKER,
    PRE_EDIT_MARKER,
    ShotExample,
    UNREASONABLE_TOKEN,
    build_round1_prompt,
    build_round2_prompt,
)
from .records import (
    DISCARD_GENERATION_ERROR,
    DISCARD_MALFORMED_ROUND1,
    DISCARD_MALFORMED_ROUND2,
    DISCARD_UNREASONABLE,
    EditTask,
    EditTriplet,
    STYLE_DESCRIPTIVE,
    STYLE_LAZY,
    SynthesisOutcome,
)
from .seeding import derive_rng

_GENERATION_FAILURES = (TransportError, RateLimited, ContextOverflow)


def _first_fenced_block(text: str) -> str | None:
    """Content of the first fenced code block, or None when there is none."""
    lines = text.split("\n")
    content: list[str] = []
    inside = False
    for line in lines:
        if line.strip().startswith("```"):
            if inside:
                return "\n".join(content)
            inside = True
            continue
        if inside:
            content.append(line)
    # Tolerate a missing closing fence at end-of-response.
    if inside and content:
        return "\n".join(content)
    return None


def _split_sections(text: str, markers: Sequence[str]) -> dict[str, str]:
    """Body of each marker line (first occurrence) up to the next marker.

    Prose outside marked sections is ignored.
    """
    lines = text.split("\n")
    marker_lines = [i for i, line in enumerate(lines) if line.strip() in markers]
    sections: dict[str, str] = {}
    for pos, i in enumerate(marker_lines):
        marker = lines[i].strip()
        if marker in sections:
            continue
        end = marker_lines[pos + 1] if pos + 1 < len(marker_lines) else len(lines)
        sections[marker] = "\n".join(lines[i + 1 : end])
    return sections


def parse_round1(text: str) -> EditTask:
    """Extract the fenced pre-edit code and both instruction bodies."""
    sections = _split_sections(text, (PRE_EDIT_MARKER, LAZY_MARKER, DESCRIPTIVE_MARKER))
    for marker in (PRE_EDIT_MARKER, LAZY_MARKER, DESCRIPTIVE_MARKER):
        if marker not in sections:
            raise MalformedRound1(f"missing {marker} section")
    code = _first_fenced_block(sections[PRE_EDIT_MARKER])
    if code is None or not code.strip():
        raise MalformedRound1("pre-edit section has no non-empty fenced code block")
    lazy = sections[LAZY_MARKER].strip()
    descriptive = sections[DESCRIPTIVE_MARKER].strip()
    if not lazy or not descriptive:
        raise MalformedRound1("instruction section is empty")
    try:
        return EditTask(pre_edit=code, instruction_lazy=lazy, instruction_descriptive=descriptive)
    except MalformedTask as exc:
        raise MalformedRound1(str(exc)) from exc


def parse_round2(text: str) -> str | None:
    """Post-edit code from the first fenced block, or None when the response
    carries the ill-posed token (the token wins even if code follows)."""
    if UNREASONABLE_TOKEN in text:
        return None
    code = _first_fenced_block(text)
    if code is None or not code.strip():
        raise MalformedRound2("response has neither the ill-posed token nor code")
    return code


def synthesize_pair(
    pair: SnippetPair,
    pool: list[ShotExample],
    params: GenParams,
    backend,
    rng: random.Random,
) -> SynthesisOutcome:
    """Run both rounds for one pair; failures map to a discard reason."""
    bundle = build_round1_prompt(pair, pool, rng)
    try:
        round1 = backend.generate([ChatTurn(ROLE_USER, bundle.round1_text)], params)
    except _GENERATION_FAILURES:
        return SynthesisOutcome(discard_reason=DISCARD_GENERATION_ERROR)

    try:
        task = parse_round1(round1.text)
    except MalformedRound1:
        return SynthesisOutcome(discard_reason=DISCARD_MALFORMED_ROUND1)

    history = [
        ChatTurn(ROLE_USER, bundle.round1_text),
        ChatTurn(ROLE_ASSISTANT, round1.text),
        ChatTurn(ROLE_USER, build_round2_prompt(task)),
    ]
    try:
        round2 = backend.generate(history, params)
    except _GENERATION_FAILURES:
        return SynthesisOutcome(discard_reason=DISCARD_GENERATION_ERROR)

    try:
        post_edit = parse_round2(round2.text)
    except MalformedRound2:
        return SynthesisOutcome(discard_reason=DISCARD_MALFORMED_ROUND2)
    if post_edit is None:
        return SynthesisOutcome(discard_reason=DISCARD_UNREASONABLE)

    provenance = (
        (pair.first.source_id, pair.first.start_line),
        (pair.second.source_id, pair.second.start_line),
    )
    shared = dict(
        pre_edit=task.pre_edit,
        post_edit=post_edit,
        generator_id=round2.backend_id,
        pair_provenance=provenance,
        shot_id=bundle.shot_id,
    )
    return SynthesisOutcome(
        triplets=(
            EditTriplet(instruction=task.instruction_lazy, style=STYLE_LAZY, **shared),
            EditTriplet(
                instruction=task.instruction_descriptive, style=STYLE_DESCRIPTIVE, **shared
            ),
        )
    )


@dataclass(frozen=True)
class BatchResult:
    triplets: tuple[EditTriplet, ...]
    discards: dict[str, int]
    pairs_attempted: int

    @property
    def pairs_succeeded(self) -> int:
        return self.pairs_attempted - sum(self.discards.values())


def synthesize_batch(
    corpus: Corpus,
    n_pairs: int,
    pool: list[ShotExample],
    params: GenParams,
    backend,
    snippet_cfg: SnippetConfig,
    master_seed: int,
    parallelism: int = 8,
) -> BatchResult:
    """Sample n_pairs snippet pairs and run the dialogues under bounded
    concurrency; output order follows the pair index, not completion order.

    Each pair uses its own random stream derived from (master_seed, index),
    so results do not depend on scheduling.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")

    def run_one(index: int) -> SynthesisOutcome:
        rng = derive_rng(master_seed, "pair", index)
        pair = sample_pair(corpus, snippet_cfg, rng)
        return synthesize_pair(pair, pool, params, backend, rng)

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool_exec:
        outcomes = list(pool_exec.map(run_one, range(n_pairs)))

    triplets: list[EditTriplet] = []
    discards: Counter[str] = Counter()
    for outcome in outcomes:
        if outcome.discard_reason is not None:
            discards[outcome.discard_reason] += 1
        else:
            triplets.extend(outcome.triplets)
    return BatchResult(
        triplets=tuple(triplets),
        discards=dict(sorted(discards.items())),
        pairs_attempted=n_pairs,
    )
