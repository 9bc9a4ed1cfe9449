"""Confusion matrices and accuracy for discrete classifier outputs."""

from __future__ import annotations

from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(eq=False)
class ConfusionMatrix:
    """Counts with rows as ground truth and columns as predictions.

    The class order is fixed by the classes tuple. Each normalized row sums
    to 1; rows for classes that never occur in the ground truth stay all
    zero and their labels are listed in zero_support.
    """

    classes: tuple[Hashable, ...]
    counts: np.ndarray
    normalized: np.ndarray
    zero_support: tuple[Hashable, ...]


def confusion(
    predictions: Sequence[Hashable],
    truths: Sequence[Hashable],
    classes: Sequence[Hashable],
) -> ConfusionMatrix:
    """Tally a confusion matrix over a fixed class order."""
    if len(predictions) != len(truths):
        raise InputError(
            f"{len(predictions)} predictions vs {len(truths)} truth labels"
        )
    class_tuple = tuple(classes)
    if len(class_tuple) == 0:
        raise InputError("classes must be non-empty")
    if len(set(class_tuple)) != len(class_tuple):
        raise InputError("classes contain duplicates")
    index = {label: i for i, label in enumerate(class_tuple)}
    n = len(class_tuple)
    counts = np.zeros((n, n), dtype=np.int64)
    for pos, (pred, truth) in enumerate(zip(predictions, truths)):
        if truth not in index:
            raise InputError(f"unknown truth label {truth!r} at position {pos}")
        if pred not in index:
            raise InputError(f"unknown predicted label {pred!r} at position {pos}")
        counts[index[truth], index[pred]] += 1

    row_sums = counts.sum(axis=1)
    normalized = np.zeros((n, n), dtype=np.float64)
    nonzero = row_sums > 0
    normalized[nonzero] = counts[nonzero] / row_sums[nonzero, None]
    zero_support = tuple(label for label, total in zip(class_tuple, row_sums) if total == 0)
    return ConfusionMatrix(class_tuple, counts, normalized, zero_support)


def accuracy(matrix: ConfusionMatrix) -> float:
    """Trace over total count."""
    total = int(matrix.counts.sum())
    if total == 0:
        raise InputError("accuracy is undefined for an empty confusion matrix")
    return float(np.trace(matrix.counts)) / total
