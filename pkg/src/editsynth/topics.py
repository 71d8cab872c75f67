"""Topic modeling and quota-balanced retention.

The topic model is a hierarchical Dirichlet process fit by collapsed Gibbs
sampling with direct assignment (Chinese-restaurant-franchise construction):
each token is reassigned given the current global topic weights; new topics
are spawned from the remaining stick mass, bounded by max_topics; after each
sweep the global weights are resampled from simulated table counts. The
sampler is single-threaded by design so a seed fully determines the result.

Quota allocation is the lock-and-redistribute procedure: topics no larger
than the current per-topic quota are locked and kept whole, the remaining
target is redistributed over the unlocked topics, and the final quota is
floored with the remainder going to the largest topics.
"""
from __future__ import annotations

import heapq
import random
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import AllDocumentsEmpty, EmptyDocument, PlanMismatch

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class TokenizerConfig:
    nl_stopwords: frozenset[str]
    code_stopwords: frozenset[str]
    min_token_len: int = 2
    drop_numeric: bool = True


@dataclass(frozen=True)
class HdpConfig:
    gamma: float = 1.0
    alpha0: float = 1.0
    eta: float = 0.5
    max_topics: int = 150
    iterations: int = 200
    seed: int = 0
    min_doc_freq: int = 2
    debug_checks: bool = False

    def __post_init__(self) -> None:
        if min(self.gamma, self.alpha0, self.eta) <= 0:
            raise ValueError("gamma, alpha0 and eta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.max_topics < 1:
            raise ValueError("max_topics must be >= 1")


@dataclass(frozen=True)
class TopicModel:
    topic_word_counts: dict[int, dict[str, int]]
    doc_assignments: tuple[tuple[int, ...], ...]
    active_topics: frozenset[int]

    @property
    def n_docs(self) -> int:
        return len(self.doc_assignments)


@dataclass(frozen=True)
class QuotaPlan:
    kept: dict[Hashable, int]

    @property
    def total_kept(self) -> int:
        return sum(self.kept.values())


def load_stopwords(path_or_asset: str, packaged: bool = False) -> frozenset[str]:
    """One lowercase token per line; blank lines and #-comments are skipped."""
    if packaged:
        text = resources.files("editsynth.assets").joinpath(path_or_asset).read_text("utf-8")
    else:
        with open(path_or_asset, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        token = line.strip().lower()
        if token and not token.startswith("#"):
            words.add(token)
    return frozenset(words)


def default_tokenizer_config() -> TokenizerConfig:
    return TokenizerConfig(
        nl_stopwords=load_stopwords("nl_stopwords.txt", packaged=True),
        code_stopwords=load_stopwords("code_stopwords.txt", packaged=True),
    )


def tokenize(doc: str, cfg: TokenizerConfig) -> list[str]:
    """Lowercase, split on every non-alphanumeric character, then drop short
    tokens, pure numbers (when configured) and both stopword sets."""
    out = []
    for token in _TOKEN_RE.findall(doc.lower()):
        if len(token) < cfg.min_token_len:
            continue
        if cfg.drop_numeric and token.isdigit():
            continue
        if token in cfg.nl_stopwords or token in cfg.code_stopwords:
            continue
        out.append(token)
    return out


class _HdpSampler:
    """Mutable Gibbs state over fixed-capacity count arrays.

    Topic ids are array slots; retired slots go to a min-heap and are reused
    so ids stay below max_topics.
    """

    def __init__(self, docs: list[np.ndarray], vocab_size: int, cfg: HdpConfig):
        self.cfg = cfg
        self.docs = docs
        self.V = vocab_size
        cap = cfg.max_topics
        self.n_kw = np.zeros((cap, vocab_size), dtype=np.int64)
        self.n_k = np.zeros(cap, dtype=np.int64)
        self.n_dk = np.zeros((len(docs), cap), dtype=np.int64)
        self.beta = np.zeros(cap, dtype=np.float64)
        self.beta_rem = 1.0
        self.active: list[int] = []
        self._active_arr = np.zeros(0, dtype=np.int64)
        self.free: list[int] = list(range(cap))
        heapq.heapify(self.free)
        self.z = [np.full(len(d), -1, dtype=np.int64) for d in docs]
        self.rng = np.random.default_rng(cfg.seed)

    def _refresh_active(self) -> None:
        self._active_arr = np.array(sorted(self.active), dtype=np.int64)

    def _spawn(self) -> int:
        slot = heapq.heappop(self.free)
        self.active.append(slot)
        self._refresh_active()
        nu = self.rng.beta(1.0, self.cfg.gamma)
        self.beta[slot] = nu * self.beta_rem
        self.beta_rem *= 1.0 - nu
        return slot

    def _retire(self, k: int) -> None:
        self.active.remove(k)
        heapq.heappush(self.free, k)
        self._refresh_active()
        self.beta_rem += self.beta[k]
        self.beta[k] = 0.0

    def _sample_topic(self, d: int, w: int) -> int:
        act = self._active_arr
        eta = self.cfg.eta
        alpha0 = self.cfg.alpha0
        if act.size:
            weights = (
                (self.n_dk[d, act] + alpha0 * self.beta[act])
                * (self.n_kw[act, w] + eta)
                / (self.n_k[act] + eta * self.V)
            )
            cum = np.cumsum(weights)
            total = cum[-1]
        else:
            cum = np.zeros(0)
            total = 0.0
        can_spawn = len(self.active) < self.cfg.max_topics
        p_new = alpha0 * self.beta_rem / self.V if can_spawn else 0.0
        u = self.rng.random() * (total + p_new)
        idx = int(np.searchsorted(cum, u, side="right"))
        if idx < act.size:
            return int(act[idx])
        if can_spawn:
            return self._spawn()
        return int(act[-1])

    def _assign(self, d: int, n: int, w: int, k: int) -> None:
        self.z[d][n] = k
        self.n_dk[d, k] += 1
        self.n_kw[k, w] += 1
        self.n_k[k] += 1

    def _remove(self, d: int, n: int, w: int) -> None:
        k = int(self.z[d][n])
        self.n_dk[d, k] -= 1
        self.n_kw[k, w] -= 1
        self.n_k[k] -= 1
        if self.n_k[k] == 0:
            self._retire(k)

    def bootstrap(self) -> None:
        for d, doc in enumerate(self.docs):
            for n, w in enumerate(doc):
                self._assign(d, n, int(w), self._sample_topic(d, int(w)))

    def sweep(self) -> None:
        for d, doc in enumerate(self.docs):
            for n, w in enumerate(doc):
                self._remove(d, n, int(w))
                self._assign(d, n, int(w), self._sample_topic(d, int(w)))

    def resample_beta(self) -> None:
        """Simulate Chinese-restaurant table counts per (doc, topic), then
        draw fresh global weights from Dirichlet(m_1..m_K, gamma)."""
        act = self._active_arr
        if act.size == 0:
            self.beta_rem = 1.0
            return
        m = np.zeros(act.size, dtype=np.float64)
        slot_to_pos = {int(k): i for i, k in enumerate(act)}
        alpha0 = self.cfg.alpha0
        for d in range(len(self.docs)):
            row = self.n_dk[d]
            for k in np.nonzero(row)[0]:
                count = int(row[k])
                theta = alpha0 * self.beta[k]
                if theta <= 0.0 or count == 1:
                    tables = 1
                else:
                    draws = self.rng.random(count) < theta / (theta + np.arange(count))
                    tables = max(1, int(draws.sum()))
                m[slot_to_pos[int(k)]] += tables
        weights = self.rng.dirichlet(np.append(m, self.cfg.gamma))
        self.beta[:] = 0.0
        self.beta[act] = weights[:-1]
        self.beta_rem = float(weights[-1])

    def check_consistency(self) -> None:
        n_kw = np.zeros_like(self.n_kw)
        for d, doc in enumerate(self.docs):
            for n, w in enumerate(doc):
                n_kw[self.z[d][n], w] += 1
        if not np.array_equal(n_kw, self.n_kw):
            raise AssertionError("topic-word counts diverged from assignments")


def fit_hdp(docs: Sequence[Sequence[str]], cfg: HdpConfig) -> TopicModel:
    """Fit the HDP on tokenized documents; deterministic given cfg.seed.

    Tokens appearing in fewer than cfg.min_doc_freq documents are pruned
    before fitting (set min_doc_freq=1 to disable).
    """
    doc_freq: Counter[str] = Counter()
    for doc in docs:
        doc_freq.update(set(doc))
    vocab = sorted(t for t, c in doc_freq.items() if c >= cfg.min_doc_freq)
    word_id = {t: i for i, t in enumerate(vocab)}

    encoded = [
        np.array([word_id[t] for t in doc if t in word_id], dtype=np.int64) for doc in docs
    ]
    if not any(len(e) for e in encoded):
        raise AllDocumentsEmpty(
            "no document has tokens after stopword filtering and pruning"
        )

    sampler = _HdpSampler(encoded, len(vocab), cfg)
    sampler.bootstrap()
    for _ in range(cfg.iterations):
        sampler.resample_beta()
        sampler.sweep()
        if cfg.debug_checks:
            sampler.check_consistency()

    active = frozenset(int(k) for k in sampler.active)
    topic_word_counts: dict[int, dict[str, int]] = {}
    for k in sorted(active):
        row = sampler.n_kw[k]
        nz = np.nonzero(row)[0]
        topic_word_counts[k] = {vocab[int(w)]: int(row[w]) for w in nz}
    assignments = tuple(tuple(int(k) for k in z) for z in sampler.z)
    return TopicModel(
        topic_word_counts=topic_word_counts,
        doc_assignments=assignments,
        active_topics=active,
    )


def dominant_topic(model: TopicModel, doc_index: int) -> int:
    """Topic holding the most token assignments in the document; ties go to
    the lowest topic id."""
    assignments = model.doc_assignments[doc_index]
    if not assignments:
        raise EmptyDocument(f"document {doc_index} has no token assignments")
    counts = Counter(assignments)
    return max(counts.items(), key=lambda kv: (kv[1], -kv[0]))[0]


def quota_allocate(counts: Mapping[Hashable, int], target: int) -> QuotaPlan:
    """Per-topic retention counts: iteratively lock topics whose size is at
    most the current quota (kept whole), then floor-split what remains, with
    the remainder going one each to the largest unlocked topics.

    Deterministic; ties break toward the lowest topic id.
    """
    if target < 0:
        raise ValueError("target must be >= 0")
    if any(c < 0 for c in counts.values()):
        raise ValueError("counts must be non-negative")
    total = sum(counts.values())
    if target >= total:
        return QuotaPlan(kept=dict(counts))

    kept: dict[Hashable, int] = {t: 0 for t in counts}
    remaining = target
    unlocked = sorted(counts)
    while unlocked:
        quota = Fraction(remaining, len(unlocked))
        locking = [t for t in unlocked if counts[t] <= quota]
        if not locking:
            break
        for t in locking:
            kept[t] = counts[t]
            remaining -= counts[t]
        locked = set(locking)
        unlocked = [t for t in unlocked if t not in locked]

    if unlocked:
        base, spare = divmod(remaining, len(unlocked))
        for t in unlocked:
            kept[t] = base
        for t in sorted(unlocked, key=lambda t: (-counts[t], t))[:spare]:
            kept[t] += 1
    return QuotaPlan(kept=kept)


def select_by_quota(
    doc_ids_by_topic: Mapping[Hashable, Sequence[Hashable]],
    plan: QuotaPlan,
    rng: random.Random,
) -> set:
    """Uniform without-replacement sample of kept[t] documents per topic."""
    if set(doc_ids_by_topic) != set(plan.kept):
        raise PlanMismatch("plan topics do not match the grouping")
    selected: set = set()
    for topic in sorted(doc_ids_by_topic):
        ids = list(doc_ids_by_topic[topic])
        k = plan.kept[topic]
        if k > len(ids):
            raise PlanMismatch(f"topic {topic!r}: plan keeps {k} of {len(ids)} available")
        selected.update(rng.sample(ids, k))
    return selected
