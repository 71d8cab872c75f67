"""Seed corpus ingestion and snippet-pair sampling.

A corpus is either a directory tree of source files or a line-delimited
record file with a designated code field. Line terminators are normalized
to LF at ingestion so downstream diff metrics are platform-independent.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, FileTooShort, InsufficientFiles, ZeroEligibleFiles

CORPUS_KIND_DIR = "dir"
CORPUS_KIND_RECORDS = "records"


@dataclass(frozen=True)
class CorpusSpec:
    """Ingestion descriptor (config section [corpus])."""

    kind: str = CORPUS_KIND_DIR
    path: str = ""
    code_field: str = "code"
    language_tag: str = "python"


@dataclass(frozen=True)
class SnippetConfig:
    min_lines: int = 5
    max_lines: int = 15

    def __post_init__(self) -> None:
        if not 1 <= self.min_lines <= self.max_lines:
            raise ValueError("need 1 <= min_lines <= max_lines")


@dataclass(frozen=True)
class SourceFile:
    source_id: str
    path_or_key: str
    lines: tuple[str, ...]
    language_tag: str = "python"


@dataclass(frozen=True)
class SeedSnippet:
    """A contiguous run of lines from one source file; start_line is 1-based."""

    source_id: str
    start_line: int
    lines: tuple[str, ...]

    @property
    def text(self) -> str:
        return "\n".join(self.lines)


@dataclass(frozen=True)
class SnippetPair:
    first: SeedSnippet
    second: SeedSnippet

    def __post_init__(self) -> None:
        if self.first.source_id == self.second.source_id:
            raise ValueError("pair snippets must come from distinct files")


@dataclass(frozen=True)
class IngestionReport:
    total_files: int
    eligible_files: int
    excluded_short: int


@dataclass(frozen=True)
class Corpus:
    """Immutable once loaded; files holds only the eligible ones."""

    files: tuple[SourceFile, ...]
    report: IngestionReport


def normalize_lines(text: str) -> tuple[str, ...]:
    """CRLF/CR -> LF, then split; a trailing LF adds no empty final line."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    if not text:
        return ()
    if text.endswith("\n"):
        text = text[:-1]
    return tuple(text.split("\n"))


def _iter_dir_files(root: Path) -> list[Path]:
    return sorted(p for p in root.rglob("*") if p.is_file())


def load_corpus(spec: CorpusSpec, cfg: SnippetConfig | None = None) -> Corpus:
    """Ingest per the descriptor; files shorter than min_lines are excluded
    from the eligible set but still counted in the report."""
    if cfg is None:
        cfg = SnippetConfig()
    path = Path(spec.path)
    if spec.kind == CORPUS_KIND_DIR:
        if not path.is_dir():
            raise ConfigError(f"corpus directory not readable: {path}")
        candidates = []
        for p in _iter_dir_files(path):
            text = p.read_text(encoding="utf-8", errors="replace")
            rel = p.relative_to(path).as_posix()
            candidates.append(SourceFile(rel, str(p), normalize_lines(text), spec.language_tag))
    elif spec.kind == CORPUS_KIND_RECORDS:
        if not path.is_file():
            raise ConfigError(f"corpus record file not readable: {path}")
        candidates = []
        with path.open(encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{path}:{i + 1}: invalid JSON record: {exc}") from exc
                code = rec.get(spec.code_field, "")
                if not isinstance(code, str):
                    raise ConfigError(f"{path}:{i + 1}: field {spec.code_field!r} is not text")
                source_id = f"{path.name}:{i}"
                candidates.append(
                    SourceFile(source_id, source_id, normalize_lines(code), spec.language_tag)
                )
    else:
        raise ConfigError(f"unknown corpus kind {spec.kind!r} (expected dir|records)")

    eligible = tuple(f for f in candidates if len(f.lines) >= cfg.min_lines)
    report = IngestionReport(
        total_files=len(candidates),
        eligible_files=len(eligible),
        excluded_short=len(candidates) - len(eligible),
    )
    if not eligible:
        raise ZeroEligibleFiles(
            f"no file has at least {cfg.min_lines} lines ({report.total_files} inspected)"
        )
    return Corpus(files=eligible, report=report)


def sample_snippet(file: SourceFile, cfg: SnippetConfig, rng: random.Random) -> SeedSnippet:
    """Draw length uniformly from [min_lines, min(max_lines, file length)],
    then the start position uniformly among the valid offsets."""
    n = len(file.lines)
    if n < cfg.min_lines:
        raise FileTooShort(f"{file.source_id}: {n} lines < min {cfg.min_lines}")
    length = rng.randint(cfg.min_lines, min(cfg.max_lines, n))
    start = rng.randint(1, n - length + 1)
    return SeedSnippet(file.source_id, start, file.lines[start - 1 : start - 1 + length])


def sample_pair(corpus: Corpus, cfg: SnippetConfig, rng: random.Random) -> SnippetPair:
    """Two snippets from two distinct eligible files."""
    if len(corpus.files) < 2:
        raise InsufficientFiles(
            f"need >= 2 eligible files to sample a pair, have {len(corpus.files)}"
        )
    i, j = rng.sample(range(len(corpus.files)), 2)
    return SnippetPair(
        first=sample_snippet(corpus.files[i], cfg, rng),
        second=sample_snippet(corpus.files[j], cfg, rng),
    )
