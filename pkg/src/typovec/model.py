"""Parameter matrices plus the scoring, loss, and gradient math of both objectives.

Two branches share the input matrix:

* ``semantic``: a composed token representation scores against a context
  word's row in the output matrix (skip-gram with negative sampling).
* ``correction``: a misspelling's n-gram composition scores against the
  *input* row of its correctly spelled word, pulling the two together.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError
from .subword import NgramConfig, build_id_table
from .vocab import Vocabulary

SEMANTIC = "semantic"
CORRECTION = "correction"

_MAGIC = b"TYPV"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQIIIIQI")


def logistic_loss(x: float) -> float:
    """log(1 + exp(-x)), branch-selected so large |x| neither overflows nor
    loses the tiny tail (loss(100) ~ 3.7e-44)."""
    if x >= 0:
        return math.log1p(math.exp(-x))
    return -x + math.log1p(math.exp(x))


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass
class TrainingExample:
    """One positive pair with its negatives, tagged with the loss branch.

    ``input_ids`` are rows of the input matrix; ``target`` and ``negatives``
    are word ids, living in the output matrix for the semantic branch and in
    the input matrix for the correction branch.
    """

    input_ids: np.ndarray
    target: int
    negatives: np.ndarray
    branch: str


class EmbeddingModel:
    """Input matrix over words + n-gram buckets, output matrix over words."""

    def __init__(self, vocab: Vocabulary, config: NgramConfig, input_matrix: np.ndarray,
                 output_matrix: np.ndarray, normalize_compose: bool = True):
        expected = (len(vocab) + config.bucket_count, input_matrix.shape[1])
        if input_matrix.shape != expected:
            raise ValueError(f"input matrix shape {input_matrix.shape}, expected {expected}")
        if output_matrix.shape != (len(vocab), input_matrix.shape[1]):
            raise ValueError(f"output matrix shape {output_matrix.shape} does not match")
        self.vocab = vocab
        self.config = config
        self.input_matrix = input_matrix
        self.output_matrix = output_matrix
        self.normalize_compose = normalize_compose

    @classmethod
    def create(cls, vocab: Vocabulary, config: NgramConfig, dim: int = 300, seed: int = 1,
               normalize_compose: bool = True, dtype=np.float32) -> "EmbeddingModel":
        """Fresh model: input rows uniform in [-1/dim, 1/dim], output rows zero.

        Zero outputs make every semantic score exactly 0 at step 0.
        """
        rng = np.random.default_rng(seed)
        rows = len(vocab) + config.bucket_count
        inp = rng.uniform(-1.0 / dim, 1.0 / dim, size=(rows, dim)).astype(dtype)
        out = np.zeros((len(vocab), dim), dtype=dtype)
        return cls(vocab, config, inp, out, normalize_compose=normalize_compose)

    @property
    def dim(self) -> int:
        return self.input_matrix.shape[1]

    @cached_property
    def id_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(flat, offsets) composed-row table for all vocab words."""
        return build_id_table(self.vocab, self.config)

    def check_finite(self) -> None:
        if not np.isfinite(self.input_matrix).all() or not np.isfinite(self.output_matrix).all():
            raise FloatingPointError("non-finite parameter detected")


def compose_input(model: EmbeddingModel, input_ids: np.ndarray, normalize: bool | None = None) -> np.ndarray:
    """Sum of the referenced input rows, divided by their count when normalizing.

    Empty id sets compose to the zero vector.
    """
    if normalize is None:
        normalize = model.normalize_compose
    if len(input_ids) == 0:
        return np.zeros(model.dim, dtype=model.input_matrix.dtype)
    h = model.input_matrix[np.asarray(input_ids)].sum(axis=0)
    if normalize:
        h /= len(input_ids)
    return h


def score_semantic(model: EmbeddingModel, input_ids: np.ndarray, context_id: int) -> float:
    """Composed input against the context word's output row."""
    h = compose_input(model, input_ids)
    return float(np.dot(h.astype(np.float64), model.output_matrix[context_id].astype(np.float64)))


def score_correction(model: EmbeddingModel, input_ids: np.ndarray, word_id: int) -> float:
    """Composed n-gram input against the expected word's *input* row."""
    if not 0 <= word_id < len(model.vocab):
        raise ValueError(f"expected word id {word_id} is not a vocabulary row")
    h = compose_input(model, input_ids)
    return float(np.dot(h.astype(np.float64), model.input_matrix[word_id].astype(np.float64)))


def _target_rows(model: EmbeddingModel, branch: str) -> np.ndarray:
    if branch == SEMANTIC:
        return model.output_matrix
    if branch == CORRECTION:
        return model.input_matrix
    raise ValueError(f"unknown branch {branch!r}")


def example_loss(example: TrainingExample, model: EmbeddingModel) -> float:
    """Positive-pair loss plus one loss term per negative."""
    score = score_semantic if example.branch == SEMANTIC else score_correction
    total = logistic_loss(score(model, example.input_ids, example.target))
    for neg in example.negatives:
        total += logistic_loss(-score(model, example.input_ids, int(neg)))
    return total


def example_gradients(example: TrainingExample, model: EmbeddingModel) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
    """Exact gradient of ``example_loss`` wrt every touched row.

    Returns (input-matrix grads, output-matrix grads) as id -> vector maps.
    All coefficients are evaluated at the current parameters; repeated ids
    (duplicate buckets, repeated negatives) accumulate.
    """
    ids = np.asarray(example.input_ids)
    targets = _target_rows(model, example.branch)
    h = compose_input(model, ids).astype(np.float64)
    inv = 1.0 / len(ids) if (model.normalize_compose and len(ids)) else 1.0

    input_grads: dict[int, np.ndarray] = {}
    target_grads: dict[int, np.ndarray] = {}
    work = np.zeros(model.dim, dtype=np.float64)
    pairs = [(example.target, 1.0)] + [(int(n), -1.0) for n in example.negatives]
    for tid, label in pairs:
        row = targets[tid].astype(np.float64)
        s = float(np.dot(h, row))
        # d loss / d score: -sigmoid(-s) for the positive, +sigmoid(s) per negative
        coeff = -sigmoid(-s) if label > 0 else sigmoid(s)
        work += coeff * row
        if tid in target_grads:
            target_grads[tid] += coeff * h
        else:
            target_grads[tid] = coeff * h
    for rid in ids:
        rid = int(rid)
        if rid in input_grads:
            input_grads[rid] += inv * work
        else:
            input_grads[rid] = inv * work.copy()

    if example.branch == CORRECTION:
        for tid, grad in target_grads.items():
            if tid in input_grads:
                input_grads[tid] += grad
            else:
                input_grads[tid] = grad
        target_grads = {}
    return input_grads, target_grads


def sgns_update(example: TrainingExample, model: EmbeddingModel, lr: float, weight: float) -> None:
    """One gradient-descent step scaled by ``weight`` (a loss mixing factor).

    ``weight == 0`` leaves the model bit-identical. A non-finite updated row
    aborts with FloatingPointError.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    if weight == 0.0:
        return
    input_grads, output_grads = example_gradients(example, model)
    step = lr * weight
    dtype = model.input_matrix.dtype
    for rid, grad in input_grads.items():
        model.input_matrix[rid] -= (step * grad).astype(dtype)
        if not np.isfinite(model.input_matrix[rid]).all():
            raise FloatingPointError(f"non-finite input row {rid} after update")
    for rid, grad in output_grads.items():
        model.output_matrix[rid] -= (step * grad).astype(dtype)
        if not np.isfinite(model.output_matrix[rid]).all():
            raise FloatingPointError(f"non-finite output row {rid} after update")


class NegativeSampler:
    """Draws word ids with probability proportional to count^0.75."""

    def __init__(self, counts: np.ndarray, power: float = 0.75):
        weights = counts.astype(np.float64) ** power
        self.cum = np.cumsum(weights)
        self.total = float(self.cum[-1])

    def draw(self, count: int, exclude, rng: np.random.Generator) -> np.ndarray:
        """``count`` i.i.d. draws, redrawing anything in ``exclude``."""
        exclude = frozenset(int(e) for e in exclude)
        if len(exclude) >= len(self.cum):
            raise ConfigError("every word is excluded from negative sampling")
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            while True:
                wid = int(np.searchsorted(self.cum, rng.random() * self.total, side="right"))
                if wid not in exclude:
                    out[i] = wid
                    break
        return out

    def draw_batch(self, targets: np.ndarray, extra_exclude: np.ndarray, n_neg: int,
                   rng: np.random.Generator) -> np.ndarray:
        """Vectorized draws: row i excludes targets[i] and extra_exclude[i] (< 0 meaning none)."""
        n = len(targets)
        negs = np.searchsorted(self.cum, rng.random((n, n_neg)) * self.total, side="right")
        for _ in range(10_000):
            bad = (negs == targets[:, None]) | (negs == extra_exclude[:, None])
            count = int(bad.sum())
            if count == 0:
                return negs.astype(np.int64)
            negs[bad] = np.searchsorted(self.cum, rng.random(count) * self.total, side="right")
        raise ConfigError("negative sampling cannot avoid the excluded ids")


def draw_negatives(sampler: NegativeSampler, count: int, exclude, rng: np.random.Generator) -> np.ndarray:
    return sampler.draw(count, exclude, rng)


def composed_word_matrix(model: EmbeddingModel, chunk: int = 4096) -> np.ndarray:
    """Composed input representation of every vocabulary word, row per id."""
    flat, offsets = model.id_table
    n_words = len(model.vocab)
    out = np.empty((n_words, model.dim), dtype=np.float32)
    for start in range(0, n_words, chunk):
        stop = min(start + chunk, n_words)
        lo, hi = offsets[start], offsets[stop]
        gathered = model.input_matrix[flat[lo:hi]].astype(np.float32)
        starts = (offsets[start:stop] - lo).astype(np.intp)
        sums = np.add.reduceat(gathered, starts, axis=0)
        if model.normalize_compose:
            counts = np.diff(offsets[start : stop + 1]).astype(np.float32)
            sums /= counts[:, None]
        out[start:stop] = sums
    return out


def save_binary(model: EmbeddingModel, path) -> None:
    """Header + vocabulary block + both matrices, row-major little-endian float32."""
    flags = (1 if model.normalize_compose else 0) | (2 if model.config.boundary_markers else 0)
    vocab = model.vocab
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, len(vocab), model.config.bucket_count,
                              model.dim, model.config.minn, model.config.maxn, flags,
                              vocab.total_tokens, vocab.min_count))
        for word, count in zip(vocab.words, vocab.counts):
            raw = word.encode("utf-8")
            fh.write(struct.pack("<QI", int(count), len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(model.input_matrix, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.output_matrix, dtype="<f4").tobytes())


def load_binary(path) -> EmbeddingModel:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, version, n_words, buckets, dim, minn, maxn, flags, total, min_count = _HEADER.unpack(header)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"{path}: not a typovec model file")
        words, counts = [], np.empty(n_words, dtype=np.int64)
        for i in range(n_words):
            count, nbytes = struct.unpack("<QI", fh.read(12))
            words.append(fh.read(nbytes).decode("utf-8"))
            counts[i] = count
        vocab = Vocabulary(words=words, counts=counts, total_tokens=total, min_count=min_count)
        config = NgramConfig(minn=minn, maxn=maxn, bucket_count=buckets,
                             boundary_markers=bool(flags & 2))
        inp = np.frombuffer(fh.read((n_words + buckets) * dim * 4), dtype="<f4")
        out = np.frombuffer(fh.read(n_words * dim * 4), dtype="<f4")
    inp = inp.reshape(n_words + buckets, dim).copy()
    out = out.reshape(n_words, dim).copy()
    return EmbeddingModel(vocab, config, inp, out, normalize_compose=bool(flags & 1))


def export_text_vectors(model: EmbeddingModel, path) -> None:
    """``<count> <dim>`` header then one ``word v1 .. vd`` line per vocab word,
    composed representations with 6-decimal fixed formatting."""
    reps = composed_word_matrix(model)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model.vocab)} {model.dim}\n")
        for word, row in zip(model.vocab.words, reps):
            values = " ".join(f"{x:.6f}" for x in row)
            fh.write(f"{word} {values}\n")
