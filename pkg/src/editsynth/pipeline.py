"""DT-Filtering and dataset assembly.

Curation runs in two stages: diff filtering drops edits that are too large
(more than 70 modified lines), too scattered (more than 7 hunks) or empty
(zero hunks), then topic filtering rebalances each instruction style to its
target size via HDP dominant topics and quota allocation. The default flow
mixes sources first and filters the combined set.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import random
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import AllDocumentsEmpty, DatasetFormatError, SourceExhausted, StyleExhausted
from .linediff import DiffConfig, DiffMetrics, diff_metrics
from .records import EditTriplet, FinetunePair, STYLES, STYLE_DESCRIPTIVE, STYLE_LAZY
from .seeding import derive_rng, derive_seed
from .topics import (
    HdpConfig,
    TokenizerConfig,
    default_tokenizer_config,
    dominant_topic,
    fit_hdp,
    quota_allocate,
    select_by_quota,
    tokenize,
)

REJECT_TOO_MANY_LINES = "too_many_lines"
REJECT_TOO_MANY_HUNKS = "too_many_hunks"
REJECT_ZERO_HUNKS = "zero_hunks"

FORMAT_TRIPLETS = "triplet_records"
FORMAT_FINETUNE = "finetune_records"

FINETUNE_TEMPLATE = "## Code Before:\n{pre_edit}\n## Instruction:\n{instruction}\n## Code After:\n"

# Documents with no surviving tokens get their own pseudo-topic in quotas.
UNASSIGNED_TOPIC = -1


@dataclass(frozen=True)
class FilterThresholds:
    max_modified_lines: int = 70
    max_hunks: int = 7
    drop_zero_hunks: bool = True

    def __post_init__(self) -> None:
        if self.max_modified_lines < 1 or self.max_hunks < 1:
            raise ValueError("thresholds must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    target_total: int = 20000
    seed: int = 0
    thresholds: FilterThresholds = field(default_factory=FilterThresholds)
    hdp: HdpConfig = field(default_factory=HdpConfig)

    def __post_init__(self) -> None:
        if self.target_total % 2 != 0:
            raise ValueError("target_total must be even (two styles, 1:1)")

    @property
    def per_style_target(self) -> int:
        return self.target_total // 2


@dataclass(frozen=True)
class Rejection:
    index: int
    reason: str
    metrics: DiffMetrics


@dataclass(frozen=True)
class CurationResult:
    curated: tuple[EditTriplet, ...]
    rejections_by_reason: dict[str, int]
    counts_by_style: dict[str, int]
    input_count: int
    warnings: tuple[str, ...]


def diff_filter(
    triplets: Sequence[EditTriplet],
    thresholds: FilterThresholds | None = None,
    diff_cfg: DiffConfig | None = None,
) -> tuple[list[EditTriplet], list[Rejection]]:
    """Keep triplets whose edit fits the complexity window: at least one
    hunk, at most max_hunks hunks, at most max_modified_lines lines."""
    if thresholds is None:
        thresholds = FilterThresholds()
    kept: list[EditTriplet] = []
    rejected: list[Rejection] = []
    for i, triplet in enumerate(triplets):
        if triplet.flags:
            raise ValueError("diff_filter expects flag-free triplets")
        metrics = diff_metrics(triplet.pre_edit, triplet.post_edit, diff_cfg)
        if thresholds.drop_zero_hunks and metrics.hunks == 0:
            rejected.append(Rejection(i, REJECT_ZERO_HUNKS, metrics))
        elif metrics.modified_lines > thresholds.max_modified_lines:
            rejected.append(Rejection(i, REJECT_TOO_MANY_LINES, metrics))
        elif metrics.hunks > thresholds.max_hunks:
            rejected.append(Rejection(i, REJECT_TOO_MANY_HUNKS, metrics))
        else:
            kept.append(triplet)
    return kept, rejected


def topic_filter(
    triplets: Sequence[EditTriplet],
    per_style_target: int,
    hdp_cfg: HdpConfig,
    rng: random.Random,
    tokenizer_cfg: TokenizerConfig | None = None,
) -> list[EditTriplet]:
    """Reduce one style's triplets to the target via topic quotas.

    Documents are the concatenation of pre-edit code and instruction; each is
    grouped under its dominant topic, per-topic retention comes from
    quota_allocate, and survivors keep their input order.
    """
    styles = {t.style for t in triplets}
    if len(styles) > 1:
        raise ValueError(f"topic_filter expects a single style, got {sorted(styles)}")
    if len(triplets) <= per_style_target:
        return list(triplets)
    if tokenizer_cfg is None:
        tokenizer_cfg = default_tokenizer_config()

    docs = [tokenize(f"{t.pre_edit}\n{t.instruction}", tokenizer_cfg) for t in triplets]
    groups: dict[int, list[int]] = defaultdict(list)
    try:
        model = fit_hdp(docs, hdp_cfg)
    except AllDocumentsEmpty:
        groups[UNASSIGNED_TOPIC] = list(range(len(triplets)))
    else:
        for i in range(len(triplets)):
            if model.doc_assignments[i]:
                groups[dominant_topic(model, i)].append(i)
            else:
                groups[UNASSIGNED_TOPIC].append(i)

    plan = quota_allocate({t: len(ids) for t, ids in groups.items()}, per_style_target)
    keep = select_by_quota(groups, plan, rng)
    return [triplets[i] for i in sorted(keep)]


def dt_filter(
    triplets: Sequence[EditTriplet],
    cfg: PipelineConfig,
    tokenizer_cfg: TokenizerConfig | None = None,
) -> CurationResult:
    """Diff filtering over everything, then per-style topic filtering, then a
    merge ordered by (style, original index).

    Styles that end below target produce a StyleExhausted warning, not an
    error: partial corpora stay usable.
    """
    notes: list[str] = []
    present = {t.style for t in triplets}
    for style in STYLES:
        if style not in present:
            notes.append(f"input has no {style} triplets")

    survivors, rejected = diff_filter(triplets, cfg.thresholds)
    reject_counts: dict[str, int] = defaultdict(int)
    for r in rejected:
        reject_counts[r.reason] += 1

    # Survivors keep their index in the input dataset for stable ordering.
    index_of = {id(t): i for i, t in enumerate(triplets)}
    by_style: dict[str, list[EditTriplet]] = defaultdict(list)
    for t in survivors:
        by_style[t.style].append(t)

    curated: list[EditTriplet] = []
    for style in sorted(present):
        group = by_style.get(style, [])
        if len(group) < cfg.per_style_target:
            notes.append(
                f"style {style}: only {len(group)} survivors for target {cfg.per_style_target}"
            )
        hdp_cfg = dataclasses.replace(cfg.hdp, seed=derive_seed(cfg.seed, "hdp", style))
        rng = derive_rng(cfg.seed, "select", style)
        curated.extend(topic_filter(group, cfg.per_style_target, hdp_cfg, rng, tokenizer_cfg))

    for note in notes:
        warnings.warn(StyleExhausted(note))
    curated.sort(key=lambda t: (t.style, index_of[id(t)]))
    counts = {style: sum(1 for t in curated if t.style == style) for style in sorted(present)}
    return CurationResult(
        curated=tuple(curated),
        rejections_by_reason=dict(sorted(reject_counts.items())),
        counts_by_style=counts,
        input_count=len(triplets),
        warnings=tuple(notes),
    )


def mix_sources(
    datasets: Sequence[tuple[str, Sequence[EditTriplet]]],
    per_style_per_source: int,
    rng: random.Random,
) -> list[EditTriplet]:
    """Uniform without-replacement sample of per_style_per_source triplets
    per (source, style), concatenated in source order."""
    mixed: list[EditTriplet] = []
    for source_id, triplets in datasets:
        for style in STYLES:
            pool = [t for t in triplets if t.style == style]
            if len(pool) < per_style_per_source:
                raise SourceExhausted(
                    f"source {source_id!r} has {len(pool)} {style} triplets, "
                    f"needs {per_style_per_source}"
                )
            picked = sorted(rng.sample(range(len(pool)), per_style_per_source))
            mixed.extend(pool[i] for i in picked)
    return mixed


def to_finetune_pair(triplet: EditTriplet) -> FinetunePair:
    """Serialize one triplet into the training input/output layout."""
    if triplet.flags:
        raise ValueError("flagged triplets cannot be serialized for training")
    return FinetunePair(
        input_text=FINETUNE_TEMPLATE.format(
            pre_edit=triplet.pre_edit, instruction=triplet.instruction
        ),
        output_text=triplet.post_edit + "\n",
    )


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def export_dataset(
    triplets: Sequence[EditTriplet],
    path: str | Path,
    fmt: str = FORMAT_TRIPLETS,
    *,
    config: dict | None = None,
    seed: int | None = None,
    rejections_by_reason: dict[str, int] | None = None,
    manifest_path: str | Path | None = None,
) -> dict:
    """Write line-delimited records plus a sidecar manifest; returns the
    manifest dict. The manifest carries config, seed, per-style counts,
    rejection counts and the file's content digest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == FORMAT_TRIPLETS:
        rows: Iterable[dict] = (t.to_record() for t in triplets)
    elif fmt == FORMAT_FINETUNE:
        rows = (to_finetune_pair(t).to_record() for t in triplets)
    else:
        raise ValueError(f"unknown export format {fmt!r}")

    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")

    counts_by_style = {
        style: sum(1 for t in triplets if t.style == style)
        for style in sorted({t.style for t in triplets})
    }
    manifest = {
        "format": fmt,
        "records": len(triplets),
        "counts_by_style": counts_by_style,
        "rejections_by_reason": rejections_by_reason or {},
        "seed": seed,
        "config": config or {},
        "sha256": _sha256_file(path),
    }
    if manifest_path is None:
        manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path = Path(manifest_path)
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def load_triplets(path: str | Path) -> list[EditTriplet]:
    """Read a triplet_records file back into memory."""
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError(f"dataset not readable: {path}")
    triplets: list[EditTriplet] = []
    with path.open(encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                triplets.append(EditTriplet.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"{path}:{i + 1}: bad triplet record: {exc}") from exc
    return triplets
