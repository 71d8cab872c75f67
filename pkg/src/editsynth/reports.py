"""Corpus diagnostics (complexity, topics, instruction shape) and pass@1.

Everything here aggregates immutable datasets into plot-ready tables; the
figures themselves are left to external tooling.
"""
from __future__ import annotations

import csv
import json
import string
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyOutcomes
from .linediff import DiffConfig, diff_metrics
from .pipeline import UNASSIGNED_TOPIC
from .records import EditTriplet, STYLES
from .topics import (
    HdpConfig,
    TokenizerConfig,
    TopicModel,
    default_tokenizer_config,
    dominant_topic,
    fit_hdp,
    tokenize,
)

LINE_BIN_WIDTH = 5
HUNK_BIN_WIDTH = 1
WORD_BIN_WIDTH = 5

# Skipped when looking for the object that follows an instruction's verb.
OBJECT_SKIP_WORDS = frozenset(
    """a an the this that these those its his her their your my our some any
    all each every no and or of to for in on at with from by as is are be
    been was were""".split()
)


@dataclass(frozen=True)
class Histogram:
    bin_edges: tuple[int, ...]
    counts: tuple[int, ...]
    total: int


@dataclass(frozen=True)
class VerbEntry:
    verb: str
    count: int
    objects: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class VerbObjectTable:
    entries: tuple[VerbEntry, ...]


@dataclass(frozen=True)
class TopicReport:
    """Dominant-topic document counts, largest first; docs with no modeled
    tokens appear under the unassigned pseudo-topic."""

    entries: tuple[tuple[int, int], ...]
    total: int


def make_histogram(values: Sequence[int], width: int) -> Histogram:
    if width < 1:
        raise ValueError("bin width must be >= 1")
    hi = (max(values) // width + 1) * width if values else width
    edges = tuple(range(0, hi + 1, width))
    counts = [0] * (len(edges) - 1)
    for v in values:
        counts[v // width] += 1
    return Histogram(bin_edges=edges, counts=tuple(counts), total=len(values))


def complexity_report(
    dataset: Sequence[EditTriplet], diff_cfg: DiffConfig | None = None
) -> tuple[Histogram, Histogram]:
    """Histograms of modified lines (width-5 bins) and hunks (width-1)."""
    metrics = [diff_metrics(t.pre_edit, t.post_edit, diff_cfg) for t in dataset]
    lines = make_histogram([m.modified_lines for m in metrics], LINE_BIN_WIDTH)
    hunks = make_histogram([m.hunks for m in metrics], HUNK_BIN_WIDTH)
    return lines, hunks


def instruction_length_hist(dataset: Sequence[EditTriplet], style: str) -> Histogram:
    """Instruction lengths in whitespace-separated word counts, width-5 bins."""
    lengths = [len(t.instruction.split()) for t in dataset if t.style == style]
    return make_histogram(lengths, WORD_BIN_WIDTH)


def _clean(token: str) -> str:
    return token.strip(string.punctuation).lower()


def verb_object_table(
    dataset: Sequence[EditTriplet], k_verbs: int = 20, k_objects: int = 10
) -> VerbObjectTable:
    """Top verbs with their top objects, from a rule-based reading of each
    instruction: the verb is the first word, the object the first following
    word outside the article/stopword list. An approximation of dependency
    parsing, adequate for imperative edit instructions."""
    verb_counts: Counter[str] = Counter()
    object_counts: dict[str, Counter[str]] = defaultdict(Counter)
    for t in dataset:
        words = t.instruction.split()
        if not words:
            continue
        verb = _clean(words[0])
        if not verb:
            continue
        verb_counts[verb] += 1
        for token in words[1:]:
            obj = _clean(token)
            if obj and obj not in OBJECT_SKIP_WORDS:
                object_counts[verb][obj] += 1
                break

    ranked = sorted(verb_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k_verbs]
    entries = []
    for verb, count in ranked:
        objects = sorted(object_counts[verb].items(), key=lambda kv: (-kv[1], kv[0]))
        entries.append(VerbEntry(verb=verb, count=count, objects=tuple(objects[:k_objects])))
    return VerbObjectTable(entries=tuple(entries))


def topic_report(model: TopicModel) -> TopicReport:
    """Per-dominant-topic document counts, sorted descending."""
    counts: Counter[int] = Counter()
    for i, assignments in enumerate(model.doc_assignments):
        counts[dominant_topic(model, i) if assignments else UNASSIGNED_TOPIC] += 1
    entries = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return TopicReport(entries=tuple(entries), total=model.n_docs)


def pass_at_1(outcomes: Sequence[bool]) -> float:
    """Fraction of solutions that pass all tests: mean of the indicators."""
    if len(outcomes) == 0:
        raise EmptyOutcomes("pass@1 needs at least one outcome")
    return sum(1 for ok in outcomes if ok) / len(outcomes)


@dataclass(frozen=True)
class ReportBundle:
    record_count: int
    counts_by_style: dict[str, int]
    modified_lines: Histogram
    hunks: Histogram
    topics: TopicReport
    instruction_lengths: dict[str, Histogram]
    verb_object: VerbObjectTable


def build_reports(
    dataset: Sequence[EditTriplet],
    hdp_cfg: HdpConfig | None = None,
    tokenizer_cfg: TokenizerConfig | None = None,
) -> ReportBundle:
    """All diagnostics for one dataset; the topic model is fit here on the
    concatenated pre-edit + instruction documents."""
    if hdp_cfg is None:
        hdp_cfg = HdpConfig()
    if tokenizer_cfg is None:
        tokenizer_cfg = default_tokenizer_config()
    lines_hist, hunks_hist = complexity_report(dataset)
    docs = [tokenize(f"{t.pre_edit}\n{t.instruction}", tokenizer_cfg) for t in dataset]
    if any(docs):
        topics = topic_report(fit_hdp(docs, hdp_cfg))
    else:
        topics = TopicReport(
            entries=((UNASSIGNED_TOPIC, len(dataset)),) if dataset else (),
            total=len(dataset),
        )
    return ReportBundle(
        record_count=len(dataset),
        counts_by_style={
            style: sum(1 for t in dataset if t.style == style) for style in STYLES
        },
        modified_lines=lines_hist,
        hunks=hunks_hist,
        topics=topics,
        instruction_lengths={style: instruction_length_hist(dataset, style) for style in STYLES},
        verb_object=verb_object_table(dataset),
    )


def _write_hist_csv(path: Path, hist: Histogram) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_start", "bin_end", "count"])
        for i, count in enumerate(hist.counts):
            writer.writerow([hist.bin_edges[i], hist.bin_edges[i + 1], count])


def emit_report(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write summary.json plus one CSV table per distribution; deterministic
    byte-for-byte for a given bundle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    _write_hist_csv(out / "modified_lines.csv", bundle.modified_lines)
    written.append(out / "modified_lines.csv")
    _write_hist_csv(out / "hunks.csv", bundle.hunks)
    written.append(out / "hunks.csv")

    topics_path = out / "topics.csv"
    with topics_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["topic_id", "doc_count"])
        for topic_id, count in bundle.topics.entries:
            writer.writerow([topic_id, count])
    written.append(topics_path)

    for style, hist in sorted(bundle.instruction_lengths.items()):
        path = out / f"instr_len_{style}.csv"
        _write_hist_csv(path, hist)
        written.append(path)

    vo_path = out / "verb_object.csv"
    with vo_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["verb", "verb_count", "object", "object_count"])
        for entry in bundle.verb_object.entries:
            if not entry.objects:
                writer.writerow([entry.verb, entry.count, "", 0])
            for obj, count in entry.objects:
                writer.writerow([entry.verb, entry.count, obj, count])
    written.append(vo_path)

    summary = {
        "records": bundle.record_count,
        "counts_by_style": bundle.counts_by_style,
        "histogram_totals": {
            "modified_lines": bundle.modified_lines.total,
            "hunks": bundle.hunks.total,
            "topics": bundle.topics.total,
            **{
                f"instr_len_{style}": hist.total
                for style, hist in sorted(bundle.instruction_lengths.items())
            },
        },
        "top_verbs": [e.verb for e in bundle.verb_object.entries],
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", "utf-8")
    written.append(summary_path)
    return written
