"""Orthogonal alignment of two monolingual embedding spaces.

A seed dictionary anchors a Procrustes fit; refinement alternates
CSLS-based dictionary induction with refitting. Retrieval (induction,
evaluation) runs on L2-normalized vectors; the Procrustes fit itself
uses the raw dictionary vectors.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import VectorTable, _format_float
from .errors import AlignmentError, FormatError
from .linalg import svd_small

logger = logging.getLogger(__name__)

_MAGIC_MAP = "XLMAP1"
_BATCH = 1024


@dataclass
class BilingualDictionary:
    pairs: list[tuple[str, str]]
    role: str = "train"
    scores: list[float] | None = None  # set on induced dictionaries

    def __len__(self) -> int:
        return len(self.pairs)

    def filtered(self, source: VectorTable, target: VectorTable) -> tuple["BilingualDictionary", int]:
        """Drop pairs whose source or target word is missing from the tables."""
        kept = [
            (s, t)
            for s, t in self.pairs
            if s in source.word_to_id and t in target.word_to_id
        ]
        dropped = len(self.pairs) - len(kept)
        if dropped:
            logger.info(
                "dictionary (%s): dropped %d/%d out-of-vocabulary pairs",
                self.role, dropped, len(self.pairs),
            )
        return BilingualDictionary(kept, self.role), dropped


@dataclass
class OrthogonalMap:
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        d = self.w.shape[0]
        if self.w.shape != (d, d):
            raise AlignmentError(f"map must be square, got {self.w.shape}")
        err = np.abs(self.w.T @ self.w - np.eye(d)).max()
        if err > 1e-6:
            raise AlignmentError(f"map is not orthogonal: max |W'W - I| = {err:.3e}")

    @property
    def dim(self) -> int:
        return self.w.shape[0]


def procrustes(x: np.ndarray, y: np.ndarray) -> OrthogonalMap:
    """Orthogonal W minimizing sum ||W x_i - y_i||^2 over paired rows.

    Parameters
    ----------
    x, y : ndarray, shape (n, d)
        Paired vectors, one dictionary entry per row.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise ValueError(f"paired shapes required, got {x.shape} and {y.shape}")
    n, d = x.shape
    if n < d:
        warnings.warn(
            f"procrustes fit with {n} pairs in dimension {d}; n >= d is recommended",
            stacklevel=2,
        )
    m = y.T @ x
    if not m.any():
        raise AlignmentError("degenerate alignment: zero cross-covariance")
    u, _, v = svd_small(m)
    return OrthogonalMap(u @ v.T)


def apply_map(omap: OrthogonalMap, table: VectorTable) -> VectorTable:
    """Map every vector x to W x; the vocabulary is unchanged."""
    if table.dim != omap.dim:
        raise ValueError(f"dimension mismatch: map {omap.dim}, table {table.dim}")
    return VectorTable(list(table.words), table.vectors @ omap.w.T)


def _normalized(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    if (norms == 0).any():
        raise AlignmentError("cannot L2-normalize a zero vector")
    return vectors / norms[:, None]


def csls_score(x_mapped: np.ndarray, y: np.ndarray, r_t: float, r_s: float) -> float:
    """2 cos(x, y) minus the hubness corrections of both endpoints."""
    nx = np.linalg.norm(x_mapped)
    ny = np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise AlignmentError("cannot L2-normalize a zero vector")
    return float(2.0 * (x_mapped @ y) / (nx * ny) - r_t - r_s)


def _mean_topk(sims: np.ndarray, k: int) -> np.ndarray:
    """Row-wise mean of the k largest entries."""
    k = min(k, sims.shape[1])
    part = np.partition(sims, sims.shape[1] - k, axis=1)[:, sims.shape[1] - k :]
    return part.mean(axis=1)


def _knn_means(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """For each row of a, mean cosine to its k nearest rows of b (batched)."""
    out = np.empty(a.shape[0])
    for start in range(0, a.shape[0], _BATCH):
        block = a[start : start + _BATCH] @ b.T
        out[start : start + _BATCH] = _mean_topk(block, k)
    return out


def induce_dictionary(
    mapped_source: VectorTable,
    target: VectorTable,
    top_k_vocab: int = 10000,
    csls_k: int = 10,
) -> BilingualDictionary:
    """Mutual CSLS nearest neighbors among the most frequent words.

    Table row order is taken as frequency rank. Pairs are returned sorted
    by descending CSLS score (ties by source id).
    """
    if mapped_source.dim != target.dim:
        raise ValueError("embedding dimensions differ")
    ns = min(top_k_vocab, len(mapped_source))
    nt = min(top_k_vocab, len(target))
    xs = _normalized(mapped_source.vectors[:ns])
    yt = _normalized(target.vectors[:nt])
    r_src = _knn_means(xs, yt, csls_k)   # per-source mean cosine to k nearest targets
    r_tgt = _knn_means(yt, xs, csls_k)   # per-target mean cosine to k nearest sources

    best_tgt = np.empty(ns, dtype=np.int64)
    for start in range(0, ns, _BATCH):
        block = 2.0 * (xs[start : start + _BATCH] @ yt.T) - r_tgt[None, :]
        best_tgt[start : start + _BATCH] = block.argmax(axis=1)
    best_src = np.empty(nt, dtype=np.int64)
    for start in range(0, nt, _BATCH):
        block = 2.0 * (yt[start : start + _BATCH] @ xs.T) - r_src[None, :]
        best_src[start : start + _BATCH] = block.argmax(axis=1)

    pairs = []
    for i in range(ns):
        j = best_tgt[i]
        if best_src[j] == i:
            score = 2.0 * float(xs[i] @ yt[j]) - r_src[i] - r_tgt[j]
            pairs.append((-score, i, j))
    if not pairs:
        raise AlignmentError("dictionary induction found no mutual nearest neighbors")
    pairs.sort()
    logger.info("induced %d mutual-neighbor pairs", len(pairs))
    return BilingualDictionary(
        [(mapped_source.words[i], target.words[j]) for _, i, j in pairs],
        role="induced",
        scores=[-neg for neg, _, _ in pairs],
    )


def _dictionary_matrices(
    dictionary: BilingualDictionary, source: VectorTable, target: VectorTable
) -> tuple[np.ndarray, np.ndarray]:
    filtered, _ = dictionary.filtered(source, target)
    if not filtered.pairs:
        raise AlignmentError(f"no usable pairs in {dictionary.role} dictionary")
    src_ids = [source.word_to_id[s] for s, _ in filtered.pairs]
    tgt_ids = [target.word_to_id[t] for _, t in filtered.pairs]
    return source.vectors[src_ids], target.vectors[tgt_ids]


def refine(
    source: VectorTable,
    target: VectorTable,
    seed_dict: BilingualDictionary,
    iterations: int = 5,
    eval_dict: BilingualDictionary | None = None,
    top_k_vocab: int = 10000,
    csls_k: int = 10,
) -> OrthogonalMap:
    """Fit on the seed dictionary, then alternate induction and refitting.

    iterations counts the induced refits, so iterations=0 is a plain
    Procrustes fit on the seed dictionary.
    """
    x, y = _dictionary_matrices(seed_dict, source, target)
    omap = procrustes(x, y)
    _log_eval(omap, source, target, eval_dict, 0)
    for it in range(1, iterations + 1):
        try:
            induced = induce_dictionary(
                apply_map(omap, source), target, top_k_vocab, csls_k
            )
            x, y = _dictionary_matrices(induced, source, target)
            omap = procrustes(x, y)
        except AlignmentError as exc:
            raise AlignmentError(f"refinement iteration {it}: {exc}") from exc
        _log_eval(omap, source, target, eval_dict, it)
    return omap


def _log_eval(omap, source, target, eval_dict, iteration):
    if eval_dict is None:
        return
    p1 = evaluate_translation(omap, source, target, eval_dict, k=1)
    logger.info("refinement iteration %d: precision@1 = %.4f", iteration, p1)


def evaluate_translation(
    omap: OrthogonalMap,
    source: VectorTable,
    target: VectorTable,
    eval_dict: BilingualDictionary,
    k: int = 1,
    csls_k: int = 10,
) -> float:
    """Fraction of source words whose CSLS top-k neighbors contain a listed
    translation; a source word with several translations is one query."""
    filtered, _ = eval_dict.filtered(source, target)
    if not filtered.pairs:
        raise AlignmentError("evaluation dictionary has no usable pairs")
    gold: dict[int, set[int]] = {}
    for s, t in filtered.pairs:
        gold.setdefault(source.word_to_id[s], set()).add(target.word_to_id[t])

    xs = _normalized(apply_map(omap, source).vectors)
    yt = _normalized(target.vectors)
    r_tgt = _knn_means(yt, xs, csls_k)

    queries = sorted(gold)
    correct = 0
    for start in range(0, len(queries), _BATCH):
        batch = queries[start : start + _BATCH]
        scores = 2.0 * (xs[batch] @ yt.T) - r_tgt[None, :]
        kk = min(k, scores.shape[1])
        top = np.argpartition(-scores, kk - 1, axis=1)[:, :kk]
        for row, q in enumerate(batch):
            if gold[q].intersection(top[row].tolist()):
                correct += 1
    return correct / len(queries)


def merge_tables(target: VectorTable, mapped_source: VectorTable) -> VectorTable:
    """Union of both vocabularies in the shared space; on a collision the
    target-language vector wins (collision count logged)."""
    if target.dim != mapped_source.dim:
        raise ValueError("embedding dimensions differ")
    words = list(target.words)
    vectors = [target.vectors]
    collisions = 0
    extra_ids = []
    for i, w in enumerate(mapped_source.words):
        if w in target.word_to_id:
            collisions += 1
        else:
            extra_ids.append(i)
            words.append(w)
    if extra_ids:
        vectors.append(mapped_source.vectors[extra_ids])
    if collisions:
        logger.info("merge: %d shared words kept their target-language vector", collisions)
    return VectorTable(words, np.concatenate(vectors, axis=0))


def load_dictionary(path: str | Path, role: str = "train") -> BilingualDictionary:
    """Read "source_word target_word" pairs, one per line, UTF-8.

    Duplicate source words are allowed (a word may have several valid
    translations)."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh.read().splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'source target'")
            pairs.append((fields[0], fields[1]))
    return BilingualDictionary(pairs, role)


def save_dictionary(dictionary: BilingualDictionary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s, t in dictionary.pairs:
            fh.write(f"{s} {t}\n")


def save_map(omap: OrthogonalMap, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_MAGIC_MAP} {omap.dim}\n")
        for row in omap.w:
            fh.write(" ".join(_format_float(x) for x in row))
            fh.write("\n")


def load_map(path: str | Path) -> OrthogonalMap:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty map file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != _MAGIC_MAP:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    d = int(header[1])
    body = [ln for ln in lines[1:] if ln]
    if len(body) != d:
        raise FormatError(f"{path}: expected {d} rows, found {len(body)}")
    w = np.empty((d, d))
    for i, line in enumerate(body):
        fields = line.split()
        if len(fields) != d:
            raise FormatError(f"{path}: row {i} has {len(fields)} values, expected {d}")
        w[i] = [float(x) for x in fields]
    return OrthogonalMap(w)
