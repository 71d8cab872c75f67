"""Round-1 and round-2 prompt construction, including the rotating one-shot.

The response grammar is dictated by the prompts themselves: round 1 must
answer with a [PRE-EDIT] fenced code block plus [LAZY] and [DESCRIPTIVE]
sections; round 2 answers with either the ill-posed token or one fenced
code block.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import SnippetPair
from .errors import ConfigError, EmptyShotPool, MalformedTask
from .records import EditTask

logger = logging.getLogger(__name__)

PRE_EDIT_MARKER = "[PRE-EDIT]"
LAZY_MARKER = "[LAZY]"
DESCRIPTIVE_MARKER = "[DESCRIPTIVE]"
UNREASONABLE_TOKEN = "<UNREASONABLE>"

DEFAULT_POOL_SIZE = 20
TEMPLATE_VERSION = "v1"

_SNIPPET_ONE = "{{SNIPPET_ONE}}"
_SNIPPET_TWO = "{{SNIPPET_TWO}}"
_SHOT_EXAMPLE = "{{SHOT_EXAMPLE}}"
_PRE_EDIT = "{{PRE_EDIT}}"
_INSTRUCTION = "{{INSTRUCTION}}"


@dataclass(frozen=True)
class ShotExample:
    shot_id: int
    rendered_text: str

    def __post_init__(self) -> None:
        if not self.rendered_text.strip():
            raise ValueError("shot example text must be non-empty")


@dataclass(frozen=True)
class PromptBundle:
    round1_text: str
    pair: SnippetPair
    shot_id: int
    template_version: str


def _asset_text(name: str) -> str:
    return resources.files("editsynth.assets").joinpath(name).read_text(encoding="utf-8")


def load_shot_pool(path: str | Path | None = None) -> list[ShotExample]:
    """Read the one-shot pool (JSONL with shot_id/text), in file order.

    Pools smaller than the shipped default of 20 are accepted with a warning.
    """
    if path is None:
        raw = _asset_text("shot_pool.jsonl")
        origin = "packaged shot pool"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"shot pool not readable: {p}")
        raw = p.read_text(encoding="utf-8")
        origin = str(p)
    pool = []
    for i, line in enumerate(raw.splitlines()):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{origin}:{i + 1}: invalid JSON: {exc}") from exc
        pool.append(ShotExample(shot_id=int(rec["shot_id"]), rendered_text=rec["text"]))
    if not pool:
        raise EmptyShotPool(f"{origin} contains no examples")
    if len(pool) < DEFAULT_POOL_SIZE:
        logger.warning("shot pool %s has only %d examples (default is %d)",
                       origin, len(pool), DEFAULT_POOL_SIZE)
    return pool


def load_template(name: str, override_path: str | Path | None = None) -> str:
    if override_path is not None:
        p = Path(override_path)
        if not p.is_file():
            raise ConfigError(f"prompt template not readable: {p}")
        return p.read_text(encoding="utf-8")
    return _asset_text(name)


def build_round1_prompt(
    pair: SnippetPair,
    pool: list[ShotExample],
    rng: random.Random,
    template: str | None = None,
) -> PromptBundle:
    """Render the round-1 prompt with one uniformly chosen shot example.

    Both snippets are embedded verbatim, each exactly once.
    """
    if not pool:
        raise EmptyShotPool("cannot build a round-1 prompt from an empty pool")
    shot = pool[rng.randrange(len(pool))]
    if template is None:
        template = load_template("round1_template.txt")
    text = (
        template.replace(_SHOT_EXAMPLE, shot.rendered_text)
        .replace(_SNIPPET_ONE, pair.first.text)
        .replace(_SNIPPET_TWO, pair.second.text)
    )
    return PromptBundle(
        round1_text=text,
        pair=pair,
        shot_id=shot.shot_id,
        template_version=TEMPLATE_VERSION,
    )


def build_round2_prompt(task: EditTask, template: str | None = None) -> str:
    """Render the round-2 prompt from the pre-edit code and the descriptive
    instruction; the prompt also spells out the ill-posed-task token."""
    if not task.pre_edit.strip():
        raise MalformedTask("task has no pre-edit code")
    if not task.instruction_descriptive.strip():
        raise MalformedTask("task has no descriptive instruction")
    if template is None:
        template = load_template("round2_template.txt")
    return template.replace(_PRE_EDIT, task.pre_edit).replace(
        _INSTRUCTION, task.instruction_descriptive
    )
