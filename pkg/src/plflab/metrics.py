"""Evaluation-only statistics. The one place ground-truth labels are read."""
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .exceptions import EmptyBatchError, ShapeError


@dataclass(frozen=True)
class StepMetrics:
    step: int
    domain_index: int
    error_rate: float
    filter_ratio: float
    quality: Optional[float]
    tau_global: float
    tau_class_mean: float
    tau_class_min: float
    tau_class_max: float
    loss_u: float
    loss_c: float
    total: float

    def as_dict(self):
        return asdict(self)


def filter_ratio(mask):
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        raise EmptyBatchError("filter ratio of an empty batch")
    return float(mask.mean())


def quality(mask, pseudo_labels, true_labels):
    """Fraction of kept rows whose pseudo-label is correct; ``None`` if none kept."""
    mask = np.asarray(mask, dtype=bool)
    pseudo_labels = np.asarray(pseudo_labels)
    true_labels = np.asarray(true_labels)
    if not (mask.shape == pseudo_labels.shape == true_labels.shape):
        raise ShapeError("mask, pseudo labels and true labels must have equal length")
    if not mask.any():
        return None
    return float((pseudo_labels[mask] == true_labels[mask]).mean())


def error_rate(predictions, true_labels):
    predictions = np.asarray(predictions)
    true_labels = np.asarray(true_labels)
    if predictions.shape != true_labels.shape:
        raise ShapeError("predictions and labels must have equal length")
    if predictions.size == 0:
        raise EmptyBatchError("error rate of an empty batch")
    return float((predictions != true_labels).mean())
