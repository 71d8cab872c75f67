"""editsynth: synthesize and curate code-edit instruction-tuning triplets.

The pipeline samples snippet pairs from a seed corpus, runs a two-round
generation dialogue per pair (pre-edit code and both instruction styles,
then post-edit code), and curates the result with diff-complexity and
topic-quota filtering before serializing fine-tuning records.
"""

__version__ = "0.1.0"

from .corpus import Corpus, CorpusSpec, SeedSnippet, SnippetConfig, SnippetPair, load_corpus
from .linediff import DiffConfig, DiffMetrics, align, count_hunks, diff_metrics, modified_lines
from .pipeline import (
    FilterThresholds,
    PipelineConfig,
    diff_filter,
    dt_filter,
    export_dataset,
    load_triplets,
    mix_sources,
    to_finetune_pair,
    topic_filter,
)
from .records import EditTask, EditTriplet, FinetunePair, SynthesisOutcome
from .reports import pass_at_1
from .synthesis import parse_round1, parse_round2, synthesize_batch, synthesize_pair
from .topics import (
    HdpConfig,
    TokenizerConfig,
    TopicModel,
    dominant_topic,
    fit_hdp,
    quota_allocate,
    select_by_quota,
    tokenize,
)

__all__ = [
    "Corpus",
    "CorpusSpec",
    "DiffConfig",
    "DiffMetrics",
    "EditTask",
    "EditTriplet",
    "FilterThresholds",
    "FinetunePair",
    "HdpConfig",
    "PipelineConfig",
    "SeedSnippet",
    "SnippetConfig",
    "SnippetPair",
    "SynthesisOutcome",
    "TokenizerConfig",
    "TopicModel",
    "align",
    "count_hunks",
    "diff_filter",
    "diff_metrics",
    "dominant_topic",
    "dt_filter",
    "export_dataset",
    "fit_hdp",
    "load_corpus",
    "load_triplets",
    "mix_sources",
    "modified_lines",
    "parse_round1",
    "parse_round2",
    "pass_at_1",
    "quota_allocate",
    "select_by_quota",
    "synthesize_batch",
    "synthesize_pair",
    "to_finetune_pair",
    "tokenize",
    "topic_filter",
]
