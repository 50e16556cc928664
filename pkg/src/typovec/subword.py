"""Character n-gram extraction and hashing into input-matrix rows.

The input matrix has ``len(vocab)`` word rows followed by ``bucket_count``
hashed n-gram rows, so bucket ids live in [len(vocab), len(vocab) + bucket_count).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vocab import Vocabulary

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193
_MASK32 = 0xFFFFFFFF


@dataclass(frozen=True)
class NgramConfig:
    """N-gram length bounds and hashed-table size.

    With ``boundary_markers`` on, tokens are wrapped in '<' and '>' before
    extraction; the default follows the unmarked convention.
    """

    minn: int = 3
    maxn: int = 6
    bucket_count: int = 2_000_000
    boundary_markers: bool = False

    def __post_init__(self):
        if not 1 <= self.minn <= self.maxn:
            raise ValueError(f"need 1 <= minn <= maxn, got {self.minn}..{self.maxn}")
        if self.bucket_count < 1:
            raise ValueError("bucket_count must be >= 1")


def extract_ngrams(token: str, config: NgramConfig) -> list[str]:
    """Unique n-grams of ``token`` with lengths in [minn, maxn].

    Substrings equal to the whole token are excluded (the word itself enters
    the model through its own row instead). Order: increasing length, then
    first occurrence left to right.

    >>> extract_ngrams("banana", NgramConfig(minn=3, maxn=5, bucket_count=1))
    ['ban', 'ana', 'nan', 'bana', 'anan', 'nana', 'banan', 'anana']
    """
    if not token:
        raise ValueError("token must be nonempty")
    if config.boundary_markers:
        token = f"<{token}>"
    grams: list[str] = []
    seen: set[str] = set()
    length = len(token)
    for n in range(config.minn, min(config.maxn, length) + 1):
        for start in range(length - n + 1):
            gram = token[start : start + n]
            if len(gram) == length or gram in seen:
                continue
            seen.add(gram)
            grams.append(gram)
    return grams


def fnv1a_32(data: bytes) -> int:
    """FNV-1a 32-bit hash; the bit-exact basis for bucket assignment."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK32
    return h


def hash_ngram(gram: str, bucket_count: int) -> int:
    """Bucket index of an n-gram: FNV-1a 32 over UTF-8 bytes, mod bucket_count."""
    if not gram:
        raise ValueError("gram must be nonempty")
    return fnv1a_32(gram.encode("utf-8")) % bucket_count


@dataclass
class InputIdSet:
    """Rows of the input matrix composing one token's representation.

    ``word_id`` is present iff the token is in the vocabulary and the caller
    asked for it; ``bucket_ids`` are absolute row ids (word-count offset
    already applied). Distinct grams colliding into one bucket keep their
    duplicate entries.
    """

    word_id: int | None
    bucket_ids: np.ndarray

    def row_ids(self) -> np.ndarray:
        if self.word_id is None:
            return self.bucket_ids
        return np.concatenate(([self.word_id], self.bucket_ids))

    def __len__(self) -> int:
        return len(self.bucket_ids) + (self.word_id is not None)


def _bucket_ids(token: str, config: NgramConfig, vocab_size: int) -> np.ndarray:
    grams = extract_ngrams(token, config)
    ids = [vocab_size + hash_ngram(g, config.bucket_count) for g in grams]
    return np.array(ids, dtype=np.int64)


def word_input_ids(word: str, vocab: Vocabulary, config: NgramConfig) -> InputIdSet:
    """Rows for a word used as itself: its vocab row (if any) plus its n-grams."""
    return InputIdSet(word_id=vocab.id_of(word), bucket_ids=_bucket_ids(word, config, len(vocab)))


def misspelling_input_ids(token: str, config: NgramConfig, vocab_size: int) -> InputIdSet:
    """Rows for a token treated as a misspelling: n-gram buckets only.

    Never includes a word row, even when the token happens to be in the
    vocabulary. May be empty for tokens shorter than ``minn``.
    """
    return InputIdSet(word_id=None, bucket_ids=_bucket_ids(token, config, vocab_size))


def build_id_table(vocab: Vocabulary, config: NgramConfig) -> tuple[np.ndarray, np.ndarray]:
    """Precompute composed row ids for every vocab word, as (flat, offsets).

    Word ``w`` composes from ``flat[offsets[w]:offsets[w + 1]]``; the first
    entry is always the word's own row. Used by the trainer's hot path.
    """
    flat: list[np.ndarray] = []
    offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
    for wid, word in enumerate(vocab.words):
        ids = np.concatenate(([wid], _bucket_ids(word, config, len(vocab))))
        flat.append(ids)
        offsets[wid + 1] = offsets[wid] + len(ids)
    return np.concatenate(flat), offsets
