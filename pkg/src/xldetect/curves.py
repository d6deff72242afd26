"""Learning-curve sweeps: monolingual vs transfer at varying training size."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .classifier import SupervisedConfig, predict, train_supervised
from .corpus import AccountDocument, subsample_train, tokenize
from .embedding import VectorTable
from .errors import TrainingError
from .metrics import MetricsReport, binary_metrics, confusion

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.5, 0.7, 1.0)
MODEL_KINDS = ("monolingual", "transfer")


@dataclass(frozen=True)
class LearningCurvePoint:
    train_fraction: float
    model_kind: str
    seed: int
    metrics: MetricsReport

    def __post_init__(self):
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError(f"fraction must be in (0,1], got {self.train_fraction}")
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")


def evaluate_classifier(model, test_docs: list[AccountDocument]) -> MetricsReport:
    preds = [predict(tokenize(d.text), model)[0] for d in test_docs]
    return binary_metrics(confusion(preds, [d.label for d in test_docs]))


def learning_curve(
    train_docs: list[AccountDocument],
    test_docs: list[AccountDocument],
    fractions=DEFAULT_FRACTIONS,
    seeds=(1, 2, 3),
    kinds=MODEL_KINDS,
    config: SupervisedConfig = None,
    pretrained: VectorTable | None = None,
) -> list[LearningCurvePoint]:
    """Train and evaluate every (fraction, seed, kind) cell.

    Subsampling uses seeded permutation prefixes, so for one seed the
    smaller fractions are subsets of the larger ones. The transfer kind
    needs a pretrained table built from the fitted alignment.
    """
    if config is None:
        config = SupervisedConfig()
    for kind in kinds:
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
    if "transfer" in kinds and pretrained is None:
        raise ValueError("transfer sweeps need pretrained aligned vectors")
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fractions must be in (0,1], got {f}")

    points = []
    for fraction in fractions:
        for seed in seeds:
            subset = subsample_train(train_docs, fraction, seed)
            for kind in kinds:
                cfg = replace(
                    config,
                    seed=seed,
                    pretrained=pretrained if kind == "transfer" else None,
                )
                try:
                    model = train_supervised(subset, cfg)
                    metrics = evaluate_classifier(model, test_docs)
                except (TrainingError, ValueError) as exc:
                    raise TrainingError(
                        f"sweep point fraction={fraction} seed={seed} kind={kind}: {exc}"
                    ) from exc
                points.append(LearningCurvePoint(fraction, kind, seed, metrics))
                logger.info(
                    "sweep fraction=%.2f kind=%s seed=%d: f1=%.4f (p=%.4f r=%.4f, %d docs)",
                    fraction, kind, seed, metrics.f1, metrics.precision,
                    metrics.recall, len(subset),
                )
    return points


def fraction_means(points: list[LearningCurvePoint]) -> dict[tuple[float, str], dict[str, float]]:
    """Mean precision/recall/f1 per (fraction, kind) cell."""
    cells: dict[tuple[float, str], list[MetricsReport]] = {}
    for p in points:
        cells.setdefault((p.train_fraction, p.model_kind), []).append(p.metrics)
    out = {}
    for key, reports in sorted(cells.items()):
        n = len(reports)
        out[key] = {
            "precision": sum(r.precision for r in reports) / n,
            "recall": sum(r.recall for r in reports) / n,
            "f1": sum(r.f1 for r in reports) / n,
            "n": float(n),
        }
    return out
