"""Corpus vocabulary construction and frequent-word subsampling."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _iter_line_tokens(path):
    """Yield per-line lists of tokens, split on ASCII whitespace only.

    The corpus is read as bytes so that Unicode whitespace (NBSP etc.) stays
    inside tokens; token bytes must decode as UTF-8.
    """
    with open(path, "rb") as fh:
        for raw in fh:
            tokens = raw.split()
            if tokens:
                yield [t.decode("utf-8") for t in tokens]


@dataclass
class Vocabulary:
    """Words surviving the frequency threshold, with dense stable ids.

    Ids are assigned by descending count, ties broken lexicographically, so
    rebuilding from the same corpus always yields the same word -> id map.
    ``total_tokens`` counts every corpus occurrence of a kept word.
    """

    words: list[str]
    counts: np.ndarray
    total_tokens: int
    min_count: int
    word_ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.word_ids = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_ids

    def id_of(self, word: str) -> int | None:
        return self.word_ids.get(word)

    def dump_tsv(self, fh) -> None:
        """Write ``word<TAB>count`` lines in id (descending count) order."""
        for word, count in zip(self.words, self.counts):
            fh.write(f"{word}\t{count}\n")

    @classmethod
    def from_counts(cls, counts: dict[str, int], min_count: int) -> "Vocabulary":
        kept = [(w, c) for w, c in counts.items() if c >= min_count]
        if not kept:
            raise ConfigError(
                f"no word reaches min_count={min_count}; vocabulary would be empty"
            )
        kept.sort(key=lambda wc: (-wc[1], wc[0]))
        words = [w for w, _ in kept]
        arr = np.array([c for _, c in kept], dtype=np.int64)
        return cls(words=words, counts=arr, total_tokens=int(arr.sum()), min_count=min_count)

    @classmethod
    def load_tsv(cls, fh, min_count: int | None = None) -> "Vocabulary":
        """Rebuild a vocabulary from a ``dump_tsv`` file."""
        counts: dict[str, int] = {}
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, count = line.rpartition("\t")
            counts[word] = int(count)
        if not counts:
            raise ConfigError("empty vocabulary file")
        if min_count is None:
            min_count = min(counts.values())
        return cls.from_counts(counts, min_count)


def build_vocabulary(corpus_path, min_count: int) -> Vocabulary:
    """Count whitespace-separated tokens in ``corpus_path`` and threshold them.

    Raises OSError if the file cannot be read and ConfigError if nothing
    survives ``min_count``.
    """
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    counter: Counter[str] = Counter()
    for tokens in _iter_line_tokens(corpus_path):
        counter.update(tokens)
    return Vocabulary.from_counts(counter, min_count)


def discard_probability(word_freq: int, total: int, t: float) -> float:
    """Probability of dropping a word with ``word_freq`` corpus occurrences.

    Uses p = max(0, 1 - sqrt(t / f)) with f the relative frequency, so words
    at or below the threshold ratio ``t`` are never dropped.
    """
    if not 0 < word_freq <= total:
        raise ValueError(f"need 0 < word_freq <= total, got {word_freq}/{total}")
    f = word_freq / total
    if f <= t:
        return 0.0
    return 1.0 - math.sqrt(t / f)


@dataclass
class SubsamplingPolicy:
    """Per-word discard probabilities for frequent-word subsampling."""

    threshold: float
    discard: np.ndarray

    @classmethod
    def for_vocabulary(cls, vocab: Vocabulary, threshold: float = 1e-4) -> "SubsamplingPolicy":
        if math.isinf(threshold):
            probs = np.zeros(len(vocab), dtype=np.float64)
        else:
            freq = vocab.counts / vocab.total_tokens
            probs = np.clip(1.0 - np.sqrt(threshold / freq), 0.0, 1.0)
        return cls(threshold=threshold, discard=probs)


def iterate_tokens(corpus_path, vocab: Vocabulary, policy: SubsamplingPolicy, rng: np.random.Generator):
    """Yield word ids for kept tokens; OOV and subsampled tokens are skipped.

    One uniform draw is consumed per in-vocabulary token, so a fixed rng seed
    reproduces the stream exactly.
    """
    lookup = vocab.word_ids
    discard = policy.discard
    for tokens in _iter_line_tokens(corpus_path):
        ids = [lookup[t] for t in tokens if t in lookup]
        if not ids:
            continue
        draws = rng.random(len(ids))
        for wid, u in zip(ids, draws):
            if u >= discard[wid]:
                yield wid
