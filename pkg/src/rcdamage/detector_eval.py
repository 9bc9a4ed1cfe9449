"""Precision-recall evaluation of detections against ground truth boxes.

Detections are ranked globally by descending score and greedily matched to
the highest-IoU unmatched ground truth of the same class in the same image.
Average precision integrates the all-points precision envelope over recall.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .errors import InputError
from .geometry import BoundingBox, iou
from .yolo_loss import GroundTruthBox


@dataclass(frozen=True)
class PRCurve:
    """Cumulative precision-recall points in descending-score order."""

    points: tuple[tuple[float, float], ...]  # (recall, precision) per rank
    ap: float
    num_truths: int
    num_detections: int
    flagged: bool = False  # detections scored against an empty truth set


def match_detections(
    detections: Mapping[str, Sequence[BoundingBox]],
    truths: Mapping[str, Sequence[GroundTruthBox]],
    iou_threshold: float = 0.5,
) -> list[bool]:
    """Label every detection TP or FP, in global descending-score order.

    Score ties are broken by image id, then by detection index within the
    image. A detection is a true positive when its IoU with some unmatched
    same-class truth in its image reaches iou_threshold; the highest-IoU
    such truth (lowest index on ties) is consumed by the match.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise InputError(f"iou_threshold must lie in (0, 1], got {iou_threshold}")
    ranked = []
    for image_id in detections:
        for det_idx, det in enumerate(detections[image_id]):
            if det.score is None:
                raise InputError(
                    f"detection {det_idx} in image '{image_id}' has no score"
                )
            ranked.append((-det.score, image_id, det_idx, det))
    ranked.sort(key=lambda item: item[:3])

    consumed: dict[str, set[int]] = {image_id: set() for image_id in truths}
    labels: list[bool] = []
    for _, image_id, _, det in ranked:
        candidates = truths.get(image_id, ())
        best_iou = 0.0
        best_idx = None
        for t_idx, truth in enumerate(candidates):
            if t_idx in consumed.get(image_id, set()):
                continue
            if truth.class_id != det.class_id:
                continue
            overlap = iou(det, truth.box)
            if overlap > best_iou:
                best_iou = overlap
                best_idx = t_idx
        if best_idx is not None and best_iou >= iou_threshold:
            consumed[image_id].add(best_idx)
            labels.append(True)
        else:
            labels.append(False)
    return labels


def average_precision(labels: Sequence[bool], num_truths: int) -> PRCurve:
    """All-points interpolated AP from ranked TP/FP labels.

    The precision envelope at a recall level is the maximum precision at
    that recall or beyond; AP sums envelope precision over recall
    increments. With no ground truth the AP is defined as 0 and the curve
    is flagged when detections are present.
    """
    if num_truths < 0:
        raise InputError(f"num_truths must be >= 0, got {num_truths}")
    n = len(labels)
    flagged = num_truths == 0 and n > 0

    points: list[tuple[float, float]] = []
    tp = 0
    for rank, is_tp in enumerate(labels, start=1):
        tp += 1 if is_tp else 0
        recall = tp / num_truths if num_truths > 0 else 0.0
        points.append((recall, tp / rank))

    if num_truths == 0 or n == 0:
        return PRCurve(tuple(points), 0.0, num_truths, n, flagged)

    envelope = [0.0] * n
    running = 0.0
    for i in range(n - 1, -1, -1):
        running = max(running, points[i][1])
        envelope[i] = running
    ap = 0.0
    prev_recall = 0.0
    for i in range(n):
        ap += (points[i][0] - prev_recall) * envelope[i]
        prev_recall = points[i][0]
    return PRCurve(tuple(points), ap, num_truths, n, False)


def mean_average_precision(curves: Sequence[PRCurve] | Mapping[object, PRCurve]) -> float:
    """Arithmetic mean of per-class AP values."""
    values = list(curves.values()) if isinstance(curves, Mapping) else list(curves)
    if not values:
        raise InputError("mean average precision needs at least one class")
    return sum(curve.ap for curve in values) / len(values)


def evaluate_detections(
    detections: Mapping[str, Sequence[BoundingBox]],
    truths: Mapping[str, Sequence[GroundTruthBox]],
    iou_threshold: float = 0.5,
) -> tuple[dict[int, PRCurve], float]:
    """Per-class PR curves plus their mean AP.

    Classes are the union of detection and truth class ids; a class with
    detections but no truths contributes a flagged zero AP.
    """
    class_ids = sorted(
        {det.class_id for boxes in detections.values() for det in boxes}
        | {t.class_id for items in truths.values() for t in items},
        key=lambda c: (c is None, c),
    )
    if not class_ids:
        raise InputError("no classes present in detections or ground truth")
    curves: dict[int, PRCurve] = {}
    for class_id in class_ids:
        class_dets = {
            image_id: [b for b in boxes if b.class_id == class_id]
            for image_id, boxes in detections.items()
        }
        class_truths = {
            image_id: [t for t in items if t.class_id == class_id]
            for image_id, items in truths.items()
        }
        labels = match_detections(class_dets, class_truths, iou_threshold)
        num_truths = sum(len(items) for items in class_truths.values())
        curves[class_id] = average_precision(labels, num_truths)
    return curves, mean_average_precision(curves)
