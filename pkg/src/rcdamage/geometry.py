"""Axis-aligned bounding boxes, IoU, and non-maximum suppression.

Pixel coordinates with the origin at the top-left corner and y growing
downward. Corner-plus-size form is the canonical box representation
everywhere in this package.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .errors import InputError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in pixels.

    Decoded boxes may extend past image borders, so corner coordinates are
    unconstrained; only a strictly positive size and a score in [0, 1] are
    enforced here. Annotation loaders additionally reject boxes that leave
    the image.
    """

    x_min: float
    y_min: float
    width: float
    height: float
    score: float | None = None  # detector confidence, absent on ground truth
    class_id: int | None = None

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise InputError(
                f"box size must be positive, got {self.width} x {self.height}"
            )
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise InputError(f"box score must lie in [0, 1], got {self.score}")

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return self.x_min + self.width / 2.0, self.y_min + self.height / 2.0


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, 0 when they do not overlap.

    All terms are computed from corner coordinates so that iou(a, a) is
    exactly 1.0 regardless of rounding in x_min + width.
    """
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min)
    return inter / (area_a + area_b - inter)


def dimension_iou(width_a: float, height_a: float, width_b: float, height_b: float) -> float:
    """IoU of two boxes sharing a center, determined by their sizes alone."""
    if min(width_a, height_a, width_b, height_b) <= 0:
        raise InputError("dimension_iou requires positive sizes")
    inter = min(width_a, width_b) * min(height_a, height_b)
    return inter / (width_a * height_a + width_b * height_b - inter)


def nms(boxes: Sequence[BoundingBox], iou_threshold: float) -> list[BoundingBox]:
    """Greedy per-class non-maximum suppression.

    Boxes are visited in descending score order (ties broken by earlier
    input position); a box is dropped when it overlaps an already-kept box
    of the same class_id with IoU strictly above iou_threshold. Survivors
    come back sorted by descending score.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise InputError(f"iou_threshold must lie in (0, 1], got {iou_threshold}")
    for i, box in enumerate(boxes):
        if box.score is None:
            raise InputError(f"nms requires scored boxes, box {i} has no score")
    order = sorted(range(len(boxes)), key=lambda i: (-boxes[i].score, i))
    if iou_threshold >= 1.0:
        # IoU never exceeds 1, so nothing can be suppressed.
        return [boxes[i] for i in order]
    kept: list[int] = []
    for i in order:
        candidate = boxes[i]
        suppressed = any(
            boxes[j].class_id == candidate.class_id
            and iou(boxes[j], candidate) > iou_threshold
            for j in kept
        )
        if not suppressed:
            kept.append(i)
    return [boxes[i] for i in kept]
