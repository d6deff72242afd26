"""Skipgram word embeddings with negative sampling.

Each word's vector is the mean of its own input row and the hashed rows
of its character n-grams; training performs one SGD step per retained
(center, context) pair against noise words drawn from the unigram^0.75
distribution. Single-worker training is bit-reproducible for a fixed
seed; multi-worker training runs unsynchronized threads over the shared
parameter matrices (last write wins) and therefore is not. Threads only
pay off when per-step work is large (high dim, many subword rows);
small workloads run fastest single-worker.
"""

from __future__ import annotations

import logging
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError, TrainingError
from .vocab import SubwordIndex, Vocabulary, build_vocab, input_ids

logger = logging.getLogger(__name__)

_MAGIC_CHECKPOINT = b"XLEMB1"
_PARAM_LIMIT = 1e8  # divergence guard on parameter magnitude
_SCORE_CLIP = 30.0


@dataclass
class SkipgramConfig:
    dim: int = 100
    epochs: int = 5
    initial_lr: float = 0.05
    window: int = 5
    negatives: int = 5
    subsample_t: float = 1e-4
    min_count: int = 5
    seed: int = 1
    subwords: SubwordIndex | None = field(default_factory=SubwordIndex)
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be > 0, got {self.initial_lr}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.subsample_t <= 0:
            raise ValueError(f"subsample_t must be > 0, got {self.subsample_t}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


class EmbeddingMatrix:
    """Trained (or initialized) embedding parameters.

    input_rows holds |V| word rows followed by B hashed subword bucket
    rows; context_rows holds the |V| output-side rows used only during
    training.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        subwords: SubwordIndex | None,
        input_rows: np.ndarray,
        context_rows: np.ndarray,
    ):
        buckets = subwords.buckets if subwords is not None else 0
        if input_rows.shape[0] != len(vocab) + buckets:
            raise ValueError(
                f"input_rows has {input_rows.shape[0]} rows, "
                f"expected |V|+B = {len(vocab) + buckets}"
            )
        if context_rows.shape != (len(vocab), input_rows.shape[1]):
            raise ValueError("context_rows shape inconsistent with vocab and dim")
        self.vocab = vocab
        self.subwords = subwords
        self.input_rows = input_rows
        self.context_rows = context_rows

    @property
    def dim(self) -> int:
        return self.input_rows.shape[1]

    def to_table(self) -> "VectorTable":
        """Composed per-word vectors, in vocabulary (frequency) order."""
        vectors = np.empty((len(self.vocab), self.dim), dtype=np.float64)
        for i, word in enumerate(self.vocab.words):
            vectors[i] = word_vector(word, self)
        return VectorTable(list(self.vocab.words), vectors)


class VectorTable:
    """Ordered word -> vector mapping (row order is frequency rank)."""

    def __init__(self, words: list[str], vectors: np.ndarray):
        if len(words) != vectors.shape[0]:
            raise ValueError("words/vectors length mismatch")
        if len(set(words)) != len(words):
            raise ValueError("duplicate words in vector table")
        self.words = words
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.word_to_id = {w: i for i, w in enumerate(words)}

    def __len__(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def get(self, word: str) -> np.ndarray | None:
        i = self.word_to_id.get(word)
        return None if i is None else self.vectors[i]


class AliasSampler:
    """Vose alias sampler: O(1) draws from a fixed discrete distribution."""

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or len(w) == 0 or (w < 0).any() or w.sum() <= 0:
            raise ValueError("weights must be a non-empty non-negative vector")
        n = len(w)
        prob = w * (n / w.sum())
        self.accept = np.zeros(n, dtype=np.float64)
        self.alias = np.zeros(n, dtype=np.int64)
        small = [i for i in range(n) if prob[i] < 1.0]
        large = [i for i in range(n) if prob[i] >= 1.0]
        while small and large:
            s = small.pop()
            l = large.pop()
            self.accept[s] = prob[s]
            self.alias[s] = l
            prob[l] = (prob[l] + prob[s]) - 1.0
            (small if prob[l] < 1.0 else large).append(l)
        for i in small + large:
            self.accept[i] = 1.0
            self.alias[i] = i
        self.n = n

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = rng.integers(0, self.n, size=size)
        keep = rng.random(size=size) < self.accept[idx]
        return np.where(keep, idx, self.alias[idx])


def negative_table(vocab: Vocabulary, power: float = 0.75) -> AliasSampler:
    """Noise-word sampler with probabilities proportional to count^power."""
    return AliasSampler(vocab.counts.astype(np.float64) ** power)


def _init_matrices(
    vocab: Vocabulary, subwords: SubwordIndex | None, dim: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    buckets = subwords.buckets if subwords is not None else 0
    rng = np.random.default_rng(seed)
    scale = 1.0 / dim
    input_rows = (rng.random((len(vocab) + buckets, dim), dtype=np.float32) * 2.0 - 1.0)
    input_rows *= np.float32(scale)
    context_rows = np.zeros((len(vocab), dim), dtype=np.float32)
    return input_rows, context_rows


def _row_index(vocab: Vocabulary, subwords: SubwordIndex | None) -> list[np.ndarray]:
    return [
        np.asarray(input_ids(w, vocab, subwords), dtype=np.int64) for w in vocab.words
    ]


def pair_gradients(h: np.ndarray, target_rows: np.ndarray, labels: np.ndarray, ):
    """Loss and gradients of the negative-sampling objective for one center.

    The objective for hidden vector h against target rows U with binary
    labels l is -sum(l*log sigma(U h) + (1-l)*log sigma(-U h)). Returns
    (loss, grad_h, grad_rows) where grad_rows[i] is the gradient for
    target_rows[i].
    """
    scores = target_rows @ h
    scores = np.clip(scores, -_SCORE_CLIP, _SCORE_CLIP)
    p = 1.0 / (1.0 + np.exp(-scores))
    eps = 1e-12
    loss = -(
        np.log(np.maximum(p[labels == 1], eps)).sum()
        + np.log(np.maximum(1.0 - p[labels == 0], eps)).sum()
    )
    g = p - labels
    grad_h = target_rows.T @ g
    grad_rows = np.outer(g, h)
    return loss, grad_h, grad_rows


def train_skipgram(corpus: Iterable[list[str]], config: SkipgramConfig) -> EmbeddingMatrix:
    """Train skipgram embeddings over a tokenized corpus.

    The corpus is materialized, so pass a list for large inputs you
    already hold in memory. Raises TrainingError on divergence.
    """
    sentences_tok = [s for s in corpus]
    vocab = build_vocab(sentences_tok, min_count=config.min_count)
    input_rows, context_rows = _init_matrices(vocab, config.subwords, config.dim, config.seed)
    model = EmbeddingMatrix(vocab, config.subwords, input_rows, context_rows)
    if config.epochs == 0:
        return model

    word_rows = _row_index(vocab, config.subwords)
    sentences = []
    for tokens in sentences_tok:
        ids = [vocab.word_to_id[t] for t in tokens if t in vocab.word_to_id]
        if ids:
            sentences.append(np.asarray(ids, dtype=np.int64))
    if not sentences:
        raise TrainingError("no in-vocabulary tokens to train on")

    freqs = vocab.counts / vocab.total_tokens
    keep_prob = np.where(
        freqs <= config.subsample_t, 1.0, np.sqrt(config.subsample_t / freqs)
    )
    sampler = negative_table(vocab)
    in_vocab_tokens = sum(len(s) for s in sentences)
    total_scheduled = config.epochs * in_vocab_tokens
    logger.info(
        "skipgram: %d words, %d in-vocabulary tokens, %d epochs, %d worker(s)",
        len(vocab), in_vocab_tokens, config.epochs, config.workers,
    )

    state = _TrainState(total_scheduled, config.initial_lr)
    seeds = np.random.SeedSequence(config.seed).spawn(config.workers)
    if config.workers == 1:
        _skipgram_worker(
            model, sentences, word_rows, keep_prob, sampler, config, state, 0,
            np.random.default_rng(seeds[0]),
        )
    else:
        threads = [
            threading.Thread(
                target=_skipgram_worker,
                args=(model, sentences, word_rows, keep_prob, sampler, config, state,
                      w, np.random.default_rng(seeds[w])),
            )
            for w in range(config.workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if state.error is not None:
        raise state.error

    _check_finite(model.input_rows, "input rows")
    _check_finite(model.context_rows, "context rows")
    return model


class _TrainState:
    def __init__(self, total: int, initial_lr: float):
        self.total = total
        self.initial_lr = initial_lr
        self.progress = 0
        self.lock = threading.Lock()
        self.error: TrainingError | None = None


def _skipgram_worker(model, sentences, word_rows, keep_prob, sampler, config, state,
                     worker_id, rng):
    input_rows = model.input_rows
    context_rows = model.context_rows
    negatives = config.negatives
    window = config.window
    single = config.workers == 1
    pending = 0  # locally accumulated progress, flushed in chunks when parallel
    try:
        for epoch in range(config.epochs):
            for si in range(worker_id, len(sentences), config.workers):
                sent = sentences[si]
                if single:
                    state.progress += len(sent)
                else:
                    if state.error is not None:
                        return
                    pending += len(sent)
                    if pending >= 4096:
                        with state.lock:
                            state.progress += pending
                        pending = 0
                lr = state.initial_lr * max(
                    0.0, 1.0 - (state.progress + pending) / state.total
                )
                kept = sent[rng.random(len(sent)) < keep_prob[sent]]
                n = len(kept)
                if n < 2:
                    continue
                radii = rng.integers(1, window + 1, size=n)
                for i in range(n):
                    b = radii[i]
                    ctx = np.concatenate((kept[max(0, i - b) : i], kept[i + 1 : i + b + 1]))
                    if len(ctx) == 0:
                        continue
                    negs = sampler.sample(rng, (len(ctx), negatives))
                    _center_step(
                        input_rows, context_rows, word_rows[kept[i]], ctx, negs, lr
                    )
            _epoch_guard(input_rows, epoch)
        if pending:
            with state.lock:
                state.progress += pending
    except TrainingError as exc:
        with state.lock:
            state.error = exc


def _center_step(input_rows, context_rows, rows, ctx_ids, neg_ids, lr):
    emb = input_rows[rows]
    h = emb.mean(axis=0)
    k = len(ctx_ids)
    targets = np.concatenate((ctx_ids, neg_ids.ravel()))
    u = context_rows[targets]
    scores = u @ h
    np.clip(scores, -_SCORE_CLIP, _SCORE_CLIP, out=scores)
    g = 1.0 / (1.0 + np.exp(-scores))
    g[:k] -= 1.0
    # a noise draw that hits its own positive context contributes nothing
    g[k:][(neg_ids == ctx_ids[:, None]).ravel()] = 0.0
    g *= np.float32(lr)
    grad_h = u.T @ g
    np.add.at(context_rows, targets, -np.outer(g, h))
    np.add.at(input_rows, rows, -(grad_h / np.float32(len(rows))))


def _epoch_guard(matrix: np.ndarray, epoch: int) -> None:
    peak = np.abs(matrix).max()
    if not np.isfinite(peak) or peak > _PARAM_LIMIT:
        raise TrainingError(
            f"training diverged after epoch {epoch}: parameter magnitude {peak!r}"
        )


def _check_finite(matrix: np.ndarray, name: str) -> None:
    if not np.isfinite(matrix).all():
        raise TrainingError(f"non-finite values in {name} after training")


def word_vector(word: str, model: EmbeddingMatrix) -> np.ndarray:
    """Mean of the word's contributing input rows; zeros when it has none."""
    ids = input_ids(word, model.vocab, model.subwords)
    if not ids:
        return np.zeros(model.dim, dtype=np.float32)
    return model.input_rows[np.asarray(ids, dtype=np.int64)].mean(axis=0)


def sampled_objective(model: EmbeddingMatrix, sample: list[tuple[int, int, np.ndarray]]) -> float:
    """Mean negative-sampling log objective over fixed (center, context,
    negatives) triples; used to verify training increases the objective."""
    total = 0.0
    word_rows = _row_index(model.vocab, model.subwords)
    for center, ctx, negs in sample:
        h = model.input_rows[word_rows[center]].mean(axis=0).astype(np.float64)
        pos = float(model.context_rows[ctx].astype(np.float64) @ h)
        neg = model.context_rows[negs].astype(np.float64) @ h
        total += np.log(_sigmoid(pos)) + np.log(_sigmoid(-neg)).sum()
    return total / len(sample)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -_SCORE_CLIP, _SCORE_CLIP)))


# ---------------------------------------------------------------------------
# persistence


def _format_float(x: float) -> str:
    return np.format_float_positional(np.float64(x), unique=True, trim="0")


def save_vectors(table: VectorTable, path: str | Path) -> None:
    """Write the word2vec-style text format: "<count> <dim>" header, then
    one word per line followed by its vector, shortest-round-trip decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for word, vec in zip(table.words, table.vectors):
            fh.write(word)
            for x in vec:
                fh.write(" " + _format_float(x))
            fh.write("\n")


def load_vectors(path: str | Path, expect_dim: int | None = None) -> VectorTable:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty vector file")
    header = lines[0].split()
    if len(header) != 2:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    count, dim = int(header[0]), int(header[1])
    if expect_dim is not None and dim != expect_dim:
        raise FormatError(f"{path}: dimension {dim}, expected {expect_dim}")
    body = [ln for ln in lines[1:] if ln]
    if len(body) != count:
        raise FormatError(f"{path}: header says {count} vectors, found {len(body)}")
    words: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float64)
    seen = set()
    for i, line in enumerate(body):
        fields = line.split(" ")
        if len(fields) != dim + 1:
            raise FormatError(f"{path}: line {i + 2}: expected {dim} values")
        word = fields[0]
        if word in seen:
            raise FormatError(f"{path}: duplicate word {word!r}")
        seen.add(word)
        try:
            vectors[i] = [float(x) for x in fields[1:]]
        except ValueError as exc:
            raise FormatError(f"{path}: line {i + 2}: non-numeric field") from exc
        words.append(word)
    return VectorTable(words, vectors)


def save_checkpoint(model: EmbeddingMatrix, path: str | Path) -> None:
    """Binary checkpoint: raw float32 parameter rows in id order."""
    sub = model.subwords
    with open(path, "wb") as fh:
        fh.write(_MAGIC_CHECKPOINT)
        fh.write(
            struct.pack(
                "<IIQIIIQ",
                model.dim,
                len(model.vocab),
                sub.buckets if sub else 0,
                sub.n_min if sub else 0,
                sub.n_max if sub else 0,
                model.vocab.min_count,
                model.vocab.total_tokens,
            )
        )
        for word, count in zip(model.vocab.words, model.vocab.counts):
            data = word.encode("utf-8")
            fh.write(struct.pack("<HQ", len(data), count))
            fh.write(data)
        fh.write(np.ascontiguousarray(model.input_rows, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.context_rows, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC_CHECKPOINT))
        if magic != _MAGIC_CHECKPOINT:
            raise FormatError(f"{path}: not an embedding checkpoint")
        dim, nwords, buckets, n_min, n_max, min_count, total_tokens = struct.unpack(
            "<IIQIIIQ", fh.read(struct.calcsize("<IIQIIIQ"))
        )
        words, counts = [], []
        for _ in range(nwords):
            wlen, count = struct.unpack("<HQ", fh.read(struct.calcsize("<HQ")))
            words.append(fh.read(wlen).decode("utf-8"))
            counts.append(count)
        vocab = Vocabulary(words, counts, min_count, total_tokens)
        sub = SubwordIndex(n_min, n_max, buckets) if buckets > 0 else None
        n_input = nwords + buckets
        input_rows = np.frombuffer(fh.read(n_input * dim * 4), dtype="<f4").reshape(
            n_input, dim
        ).copy()
        context_rows = np.frombuffer(fh.read(nwords * dim * 4), dtype="<f4").reshape(
            nwords, dim
        ).copy()
    return EmbeddingMatrix(vocab, sub, input_rows, context_rows)
