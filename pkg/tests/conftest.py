from __future__ import annotations

import json
from pathlib import Path

import pytest

from editsynth.corpus import CorpusSpec, SnippetConfig, load_corpus
from editsynth.topics import TokenizerConfig


@pytest.fixture
def small_tok_cfg() -> TokenizerConfig:
    return TokenizerConfig(
        nl_stopwords=frozenset({"for", "the", "a", "to"}),
        code_stopwords=frozenset({"def", "return", "if", "else"}),
    )


def write_corpus_dir(root: Path, line_counts: list[int]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for i, n in enumerate(line_counts):
        body = "\n".join(f"file{i}_line{j} = {j}" for j in range(n))
        (root / f"file_{i:02d}.py").write_text(body + ("\n" if n else ""), encoding="utf-8")
    return root


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    return write_corpus_dir(tmp_path / "corpus", [30, 25, 40, 12, 18, 26, 33, 21])


@pytest.fixture
def loaded_corpus(corpus_dir: Path):
    return load_corpus(CorpusSpec(kind="dir", path=str(corpus_dir)), SnippetConfig())


def write_records_file(path: Path, codes: list[str], field: str = "code") -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for code in codes:
            fh.write(json.dumps({field: code, "meta": "x"}) + "\n")
    return path
