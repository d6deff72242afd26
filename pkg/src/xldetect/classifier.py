"""Linear softmax text classification over averaged embeddings.

A document's vector is the mean of every input row its tokens contribute
(word rows, hashed subword rows, optional hashed word n-grams). Training
is per-document SGD on softmax cross-entropy; with pretrained vectors the
word rows start from the given table and keep training unless frozen.
"""

from __future__ import annotations

import logging
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import AccountDocument, LABEL_NAMES, tokenize
from .embedding import VectorTable
from .errors import FormatError, TrainingError
from .vocab import SubwordIndex, Vocabulary, build_vocab, fnv1a_32, input_ids

logger = logging.getLogger(__name__)

_MAGIC_MODEL = b"XLCLF1"
_N_CLASSES = 2
_PARAM_LIMIT = 1e8


@dataclass
class SupervisedConfig:
    dim: int = 100
    epochs: int = 100
    initial_lr: float = 1.0
    min_count: int = 1
    word_ngrams: int = 1
    subwords: SubwordIndex | None = field(default_factory=SubwordIndex)
    pretrained: VectorTable | None = None
    freeze_pretrained: bool = False
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be > 0, got {self.initial_lr}")
        if self.word_ngrams < 1:
            raise ValueError(f"word_ngrams must be >= 1, got {self.word_ngrams}")
        if self.word_ngrams > 1 and self.subwords is None:
            raise ValueError("word_ngrams > 1 needs a bucket table (subwords)")
        if self.pretrained is not None and self.pretrained.dim != self.dim:
            raise ValueError(
                f"pretrained vectors have dim {self.pretrained.dim}, config says {self.dim}"
            )
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


class TextClassifier:
    """Input embedding table plus a 2 x d softmax head.

    Label index 1 is always the positive "Suspended" class.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        subwords: SubwordIndex | None,
        word_ngrams: int,
        input_rows: np.ndarray,
        output_weights: np.ndarray,
    ):
        buckets = subwords.buckets if subwords is not None else 0
        if input_rows.shape[0] != len(vocab) + buckets:
            raise ValueError("input table size inconsistent with vocab and buckets")
        if output_weights.shape != (_N_CLASSES, input_rows.shape[1]):
            raise ValueError("output weights must be 2 x dim")
        self.vocab = vocab
        self.subwords = subwords
        self.word_ngrams = word_ngrams
        self.input_rows = input_rows
        self.output_weights = output_weights
        self.label_names = LABEL_NAMES
        self.loss_history: list[float] = []

    @property
    def dim(self) -> int:
        return self.input_rows.shape[1]

    def doc_rows(self, tokens: list[str]) -> tuple[np.ndarray, np.ndarray]:
        """Unique contributing row ids and their multiplicities."""
        ids: list[int] = []
        for tok in tokens:
            ids.extend(input_ids(tok, self.vocab, self.subwords))
        if self.word_ngrams > 1:
            offset = len(self.vocab)
            buckets = self.subwords.buckets
            for n in range(2, self.word_ngrams + 1):
                for i in range(len(tokens) - n + 1):
                    gram = " ".join(tokens[i : i + n])
                    ids.append(offset + fnv1a_32(gram.encode("utf-8")) % buckets)
        if not ids:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float32)
        uniq, counts = np.unique(np.asarray(ids, dtype=np.int64), return_counts=True)
        return uniq, counts.astype(np.float32)


def doc_embedding(tokens: list[str], model: TextClassifier) -> np.ndarray:
    """Mean over all contributing input rows; zero vector when none."""
    ids, counts = model.doc_rows(tokens)
    if len(ids) == 0:
        return np.zeros(model.dim, dtype=np.float32)
    return (counts @ model.input_rows[ids]) / counts.sum()


def _softmax64(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def predict(tokens: list[str], model: TextClassifier) -> tuple[int, np.ndarray]:
    """Predicted label and class distribution; a tie never flags positive."""
    h = doc_embedding(tokens, model).astype(np.float64)
    probs = _softmax64(model.output_weights.astype(np.float64) @ h)
    label = 1 if probs[1] > probs[0] else 0
    return label, probs


@dataclass
class LossGrad:
    loss: float
    output_grad: np.ndarray   # dL/d output_weights, shape (2, d)
    hidden_grad: np.ndarray   # dL/d doc vector, shape (d,)
    row_ids: np.ndarray       # unique contributing input rows
    row_grads: np.ndarray     # dL/d input_rows[row_ids], shape (len(row_ids), d)


def loss_and_grad(tokens: list[str], label: int, model: TextClassifier) -> LossGrad:
    """Cross-entropy loss and exact analytic gradients for one document."""
    ids, counts = model.doc_rows(tokens)
    if len(ids) == 0:
        h = np.zeros(model.dim, dtype=np.float64)
    else:
        h = (counts.astype(np.float64) @ model.input_rows[ids].astype(np.float64)) / counts.sum()
    probs = _softmax64(model.output_weights.astype(np.float64) @ h)
    loss = -float(np.log(max(probs[label], 1e-300)))
    g = probs.copy()
    g[label] -= 1.0
    output_grad = np.outer(g, h)
    hidden_grad = model.output_weights.astype(np.float64).T @ g
    if len(ids) == 0:
        row_grads = np.empty((0, model.dim), dtype=np.float64)
    else:
        row_grads = np.outer(counts.astype(np.float64) / counts.sum(), hidden_grad)
    return LossGrad(loss, output_grad, hidden_grad, ids, row_grads)


def train_supervised(
    train_docs: list[AccountDocument], config: SupervisedConfig
) -> TextClassifier:
    """Train a classifier from scratch or from pretrained word vectors."""
    if not train_docs:
        raise ValueError("empty training set")
    token_docs = [tokenize(d.text) for d in train_docs]
    labels = np.asarray([d.label for d in train_docs], dtype=np.int64)
    for cls in (0, 1):
        if not (labels == cls).any():
            logger.warning("training data has no documents of class %s", LABEL_NAMES[cls])

    vocab = build_vocab(token_docs, min_count=config.min_count)
    rng = np.random.default_rng(config.seed)
    buckets = config.subwords.buckets if config.subwords is not None else 0
    scale = 1.0 / config.dim
    input_rows = rng.random((len(vocab) + buckets, config.dim), dtype=np.float32) * 2.0 - 1.0
    input_rows *= np.float32(scale)
    if config.pretrained is not None:
        input_rows[len(vocab):] = 0.0
        hits = 0
        for i, word in enumerate(vocab.words):
            vec = config.pretrained.get(word)
            if vec is not None:
                input_rows[i] = vec.astype(np.float32)
                hits += 1
        logger.info("pretrained init: %d/%d vocabulary words covered", hits, len(vocab))
    output_weights = np.zeros((_N_CLASSES, config.dim), dtype=np.float32)
    model = TextClassifier(vocab, config.subwords, config.word_ngrams, input_rows, output_weights)

    docs_rows = [model.doc_rows(toks) for toks in token_docs]
    model.loss_history.append(_mean_loss(model, docs_rows, labels))
    if config.epochs == 0:
        return model

    trainable_input = not (config.pretrained is not None and config.freeze_pretrained)
    total_steps = config.epochs * len(train_docs)
    state = _SupervisedState(total_steps, config.initial_lr)
    for epoch in range(config.epochs):
        order = np.random.default_rng((config.seed, epoch)).permutation(len(train_docs))
        if config.workers == 1:
            _supervised_worker(
                model, docs_rows, labels, order, state, config, trainable_input, 0
            )
        else:
            threads = [
                threading.Thread(
                    target=_supervised_worker,
                    args=(model, docs_rows, labels, order, state, config,
                          trainable_input, w),
                )
                for w in range(config.workers)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        if state.error is not None:
            raise state.error
        peak = np.abs(model.output_weights).max()
        if not np.isfinite(peak) or peak > _PARAM_LIMIT:
            raise TrainingError(f"training diverged after epoch {epoch}")
        model.loss_history.append(_mean_loss(model, docs_rows, labels))
    if not np.isfinite(model.input_rows).all() or not np.isfinite(model.output_weights).all():
        raise TrainingError("non-finite parameters after training")
    return model


class _SupervisedState:
    def __init__(self, total: int, initial_lr: float):
        self.total = total
        self.initial_lr = initial_lr
        self.step = 0
        self.lock = threading.Lock()
        self.error: TrainingError | None = None


def _supervised_worker(model, docs_rows, labels, order, state, config,
                       trainable_input, worker_id):
    input_rows = model.input_rows
    output_weights = model.output_weights
    single = config.workers == 1
    pending = 0
    try:
        for pos in range(worker_id, len(order), config.workers):
            di = order[pos]
            if single:
                state.step += 1
            else:
                pending += 1
                if pending >= 64:
                    with state.lock:
                        state.step += pending
                    pending = 0
            step = state.step + pending
            lr = np.float32(state.initial_lr * max(0.0, 1.0 - step / state.total))
            ids, counts = docs_rows[di]
            if len(ids) == 0:
                continue
            total = counts.sum()
            h = (counts @ input_rows[ids]) / total
            z = output_weights @ h
            z = z - z.max()
            e = np.exp(z)
            p = e / e.sum()
            if not np.isfinite(p).all():
                raise TrainingError(f"non-finite loss at step {step}")
            g = p
            g[labels[di]] -= 1.0
            g *= lr
            hidden_grad = output_weights.T @ g
            output_weights -= np.outer(g, h)
            if trainable_input:
                np.add.at(input_rows, ids, np.outer(counts, -hidden_grad / total))
        if pending:
            with state.lock:
                state.step += pending
    except TrainingError as exc:
        with state.lock:
            state.error = exc


def _mean_loss(model, docs_rows, labels) -> float:
    total = 0.0
    weights = model.output_weights.astype(np.float64)
    for (ids, counts), label in zip(docs_rows, labels):
        if len(ids) == 0:
            h = np.zeros(model.dim, dtype=np.float64)
        else:
            h = (counts.astype(np.float64) @ model.input_rows[ids].astype(np.float64)) / counts.sum()
        probs = _softmax64(weights @ h)
        total += -float(np.log(max(probs[label], 1e-300)))
    return total / len(labels)


# ---------------------------------------------------------------------------
# persistence


def save_classifier(model: TextClassifier, path: str | Path) -> None:
    sub = model.subwords
    with open(path, "wb") as fh:
        fh.write(_MAGIC_MODEL)
        fh.write(
            struct.pack(
                "<IIQII",
                model.dim,
                len(model.vocab),
                sub.buckets if sub else 0,
                sub.n_min if sub else 0,
                sub.n_max if sub else 0,
            )
        )
        for name in model.label_names:
            data = name.encode("utf-8")
            fh.write(struct.pack("<H", len(data)))
            fh.write(data)
        fh.write(struct.pack("<IIQ", model.word_ngrams, model.vocab.min_count,
                             model.vocab.total_tokens))
        for word, count in zip(model.vocab.words, model.vocab.counts):
            data = word.encode("utf-8")
            fh.write(struct.pack("<HQ", len(data), count))
            fh.write(data)
        fh.write(np.ascontiguousarray(model.input_rows, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.output_weights, dtype="<f4").tobytes())


def load_classifier(path: str | Path) -> TextClassifier:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC_MODEL))
        if magic != _MAGIC_MODEL:
            raise FormatError(f"{path}: not a classifier model file")
        dim, nwords, buckets, n_min, n_max = struct.unpack(
            "<IIQII", fh.read(struct.calcsize("<IIQII"))
        )
        names = []
        for _ in range(_N_CLASSES):
            (nlen,) = struct.unpack("<H", fh.read(2))
            names.append(fh.read(nlen).decode("utf-8"))
        if tuple(names) != LABEL_NAMES:
            raise FormatError(f"{path}: unexpected label names {names}")
        word_ngrams, min_count, total_tokens = struct.unpack(
            "<IIQ", fh.read(struct.calcsize("<IIQ"))
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
        output_weights = np.frombuffer(fh.read(_N_CLASSES * dim * 4), dtype="<f4").reshape(
            _N_CLASSES, dim
        ).copy()
    return TextClassifier(vocab, sub, word_ngrams, input_rows, output_weights)
