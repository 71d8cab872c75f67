"""Core data records: edit tasks, triplets, and fine-tuning pairs."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedTask

STYLE_LAZY = "lazy"
STYLE_DESCRIPTIVE = "descriptive"
STYLES = (STYLE_LAZY, STYLE_DESCRIPTIVE)

FLAG_UNREASONABLE = "unreasonable"
FLAG_PARSE_FAILED = "parse_failed"
KNOWN_FLAGS = frozenset({FLAG_UNREASONABLE, FLAG_PARSE_FAILED})

DISCARD_UNREASONABLE = "unreasonable"
DISCARD_MALFORMED_ROUND1 = "malformed_round1"
DISCARD_MALFORMED_ROUND2 = "malformed_round2"
DISCARD_GENERATION_ERROR = "generation_error"

Provenance = tuple[tuple[str, int], tuple[str, int]]


@dataclass(frozen=True)
class EditTask:
    """Round-1 output: pre-edit code plus both instruction styles."""

    pre_edit: str
    instruction_lazy: str
    instruction_descriptive: str

    def __post_init__(self) -> None:
        if not self.pre_edit.strip():
            raise MalformedTask("pre_edit must contain a non-blank line")
        if not self.instruction_lazy.strip() or not self.instruction_descriptive.strip():
            raise MalformedTask("both instructions must be non-empty")


@dataclass(frozen=True)
class EditTriplet:
    """One (pre-edit, instruction, post-edit) training record."""

    pre_edit: str
    instruction: str
    post_edit: str
    style: str
    generator_id: str
    pair_provenance: Provenance
    shot_id: int
    flags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.style not in STYLES:
            raise ValueError(f"style must be one of {STYLES}, got {self.style!r}")
        if not self.flags and not (self.pre_edit and self.instruction and self.post_edit):
            raise ValueError("an unflagged triplet must have non-empty text fields")

    def to_record(self) -> dict:
        rec = {
            "pre_edit": self.pre_edit,
            "instruction": self.instruction,
            "post_edit": self.post_edit,
            "style": self.style,
            "generator_id": self.generator_id,
            "pair_provenance": [list(p) for p in self.pair_provenance],
            "shot_id": self.shot_id,
            "flags": sorted(self.flags),
        }
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "EditTriplet":
        prov_raw = rec.get("pair_provenance") or [["", 0], ["", 0]]
        provenance = tuple((str(src), int(line)) for src, line in prov_raw)
        return cls(
            pre_edit=rec["pre_edit"],
            instruction=rec["instruction"],
            post_edit=rec["post_edit"],
            style=rec["style"],
            generator_id=rec.get("generator_id", ""),
            pair_provenance=provenance,  # type: ignore[arg-type]
            shot_id=int(rec.get("shot_id", -1)),
            flags=frozenset(rec.get("flags", ())),
        )


@dataclass(frozen=True)
class SynthesisOutcome:
    """Result of one two-round dialogue: two triplets or one discard reason."""

    triplets: tuple[EditTriplet, ...] = ()
    discard_reason: str | None = None

    def __post_init__(self) -> None:
        if bool(self.triplets) == (self.discard_reason is not None):
            raise ValueError("exactly one of triplets / discard_reason must be set")


@dataclass(frozen=True)
class FinetunePair:
    """Serialized model input/output in the training layout."""

    input_text: str
    output_text: str

    def __post_init__(self) -> None:
        if not self.input_text or not self.output_text:
            raise ValueError("finetune pair fields must be non-empty")

    def to_record(self) -> dict:
        return {"input_text": self.input_text, "output_text": self.output_text}
