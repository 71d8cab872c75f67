"""Run configuration: TOML file -> dataclasses, with CLI-flag overrides.

The resolved configuration is embedded in every output manifest so a run can
be reproduced from its artifacts. The output directory is deliberately not
part of it: where a dataset is written is not part of its identity.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .corpus import CorpusSpec, SnippetConfig
from .errors import ConfigError
from .pipeline import FilterThresholds
from .topics import HdpConfig


@dataclass(frozen=True)
class PromptsConfig:
    shot_pool_path: str | None = None
    round1_template_path: str | None = None
    round2_template_path: str | None = None


@dataclass(frozen=True)
class GenConfig:
    base_url: str = ""
    model_id: str = ""
    temperature: float = 0.8
    top_p: float = 0.95
    max_tokens: int = 2048
    parallelism: int = 8
    requests_per_minute: int = 0
    max_retries: int = 3


@dataclass(frozen=True)
class PipelineSection:
    target_total: int = 20000
    # 0 means "use the minimum availability across (source, style)".
    per_style_per_source: int = 0


@dataclass(frozen=True)
class RunConfig:
    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    snippet: SnippetConfig = field(default_factory=SnippetConfig)
    prompts: PromptsConfig = field(default_factory=PromptsConfig)
    gen: GenConfig = field(default_factory=GenConfig)
    thresholds: FilterThresholds = field(default_factory=FilterThresholds)
    hdp: HdpConfig = field(default_factory=HdpConfig)
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    master_seed: int = 0


# TOML section name -> (RunConfig attribute, dataclass, keys accepted there).
_SECTIONS = {
    "corpus": ("corpus", CorpusSpec, ("kind", "path", "code_field", "language_tag")),
    "snippet": ("snippet", SnippetConfig, ("min_lines", "max_lines")),
    "prompts": (
        "prompts",
        PromptsConfig,
        ("shot_pool_path", "round1_template_path", "round2_template_path"),
    ),
    "gen": (
        "gen",
        GenConfig,
        (
            "base_url",
            "model_id",
            "temperature",
            "top_p",
            "max_tokens",
            "parallelism",
            "requests_per_minute",
            "max_retries",
        ),
    ),
    "thresholds": (
        "thresholds",
        FilterThresholds,
        ("max_modified_lines", "max_hunks", "drop_zero_hunks"),
    ),
    "hdp": (
        "hdp",
        HdpConfig,
        ("gamma", "alpha0", "eta", "max_topics", "iterations", "min_doc_freq"),
    ),
    "pipeline": ("pipeline", PipelineSection, ("target_total", "per_style_per_source")),
}


def load_run_config(path: str | Path | None) -> RunConfig:
    """Parse the TOML config file; unknown sections or keys are errors."""
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not readable: {p}")
    try:
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: invalid TOML: {exc}") from exc

    kwargs: dict = {}
    for name, value in data.items():
        if name == "master_seed":
            kwargs["master_seed"] = int(value)
            continue
        if name not in _SECTIONS:
            raise ConfigError(f"{p}: unknown config section [{name}]")
        attr, cls, allowed = _SECTIONS[name]
        if not isinstance(value, dict):
            raise ConfigError(f"{p}: [{name}] must be a section")
        unknown = set(value) - set(allowed)
        if unknown:
            raise ConfigError(f"{p}: unknown key(s) in [{name}]: {sorted(unknown)}")
        try:
            kwargs[attr] = cls(**value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{p}: bad [{name}] section: {exc}") from exc
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def resolved_config(cfg: RunConfig) -> dict:
    """JSON-serializable view of the full configuration, for manifests."""
    return dataclasses.asdict(cfg)
