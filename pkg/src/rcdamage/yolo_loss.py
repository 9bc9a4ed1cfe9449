"""Multi-part detection loss for one prediction grid against ground truth.

The loss has five parts: center offsets (grid-cell units), square-rooted
sizes (image fractions), objectness confidence against a live IoU target,
no-object confidence against zero, and class probabilities. Coordinate
parts are scaled by lambda_coord and the no-object part by lambda_noobj,
with the scaling included in the reported components.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import BoundingBox, dimension_iou, iou
from .yolo_decode import AnchorPrior, DetectionTensor, _sigmoid_scalar, sigmoid, softmax


@dataclass(frozen=True)
class GroundTruthBox:
    box: BoundingBox
    class_id: int

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise InputError(f"class_id must be >= 0, got {self.class_id}")


@dataclass(frozen=True)
class LossWeights:
    lambda_coord: float = 5.0
    lambda_noobj: float = 0.5

    def __post_init__(self) -> None:
        if self.lambda_coord < 0 or self.lambda_noobj < 0:
            raise InputError("loss weights must be non-negative")


@dataclass(frozen=True)
class LossBreakdown:
    coord_xy: float
    coord_wh: float
    obj_conf: float
    noobj_conf: float
    class_prob: float
    total: float

    @classmethod
    def from_parts(
        cls,
        coord_xy: float,
        coord_wh: float,
        obj_conf: float,
        noobj_conf: float,
        class_prob: float,
    ) -> "LossBreakdown":
        total = coord_xy + coord_wh + obj_conf + noobj_conf + class_prob
        return cls(coord_xy, coord_wh, obj_conf, noobj_conf, class_prob, total)


def assign_responsibility(
    truths: Sequence[GroundTruthBox],
    grid_size: tuple[int, int],
    anchors: Sequence[AnchorPrior],
    image_size: tuple[float, float],
) -> dict[int, tuple[tuple[int, int], int]]:
    """Map each truth index to its responsible ((cell_x, cell_y), anchor) slot.

    A truth belongs to the cell containing its center and to the anchor
    whose shape has the highest co-centered IoU with it (ties going to the
    lowest anchor index). When two truths claim the same slot the larger
    box wins and the other is dropped with a warning.
    """
    grid_w, grid_h = grid_size
    image_w, image_h = image_size
    if len(anchors) == 0:
        raise InputError("assignment needs at least one anchor")
    cell_w = image_w / grid_w
    cell_h = image_h / grid_h

    assignment: dict[int, tuple[tuple[int, int], int]] = {}
    claimed: dict[tuple[tuple[int, int], int], int] = {}
    for idx, truth in enumerate(truths):
        cx, cy = truth.box.center
        if not (0 <= cx < image_w and 0 <= cy < image_h):
            raise InputError(
                f"truth {idx} center ({cx}, {cy}) lies outside the "
                f"{image_w} x {image_h} image"
            )
        cell = (min(int(cx // cell_w), grid_w - 1), min(int(cy // cell_h), grid_h - 1))
        ious = [
            dimension_iou(truth.box.width, truth.box.height, a.width, a.height)
            for a in anchors
        ]
        anchor_idx = max(range(len(anchors)), key=lambda j: (ious[j], -j))
        slot = (cell, anchor_idx)
        holder = claimed.get(slot)
        if holder is None:
            claimed[slot] = idx
            assignment[idx] = slot
        elif truth.box.area > truths[holder].box.area:
            warnings.warn(
                f"truths {holder} and {idx} share cell {cell} anchor {anchor_idx}; "
                f"dropping the smaller truth {holder}"
            )
            del assignment[holder]
            claimed[slot] = idx
            assignment[idx] = slot
        else:
            warnings.warn(
                f"truths {holder} and {idx} share cell {cell} anchor {anchor_idx}; "
                f"dropping the smaller truth {idx}"
            )
    return assignment


def compute_loss(
    tensor: DetectionTensor,
    truths: Sequence[GroundTruthBox],
    anchors: Sequence[AnchorPrior],
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Evaluate the five-part loss of a prediction grid against ground truth.

    Center offsets are compared in grid-cell units, sizes as square roots of
    image fractions, and the confidence target of a responsible slot is the
    IoU between its decoded box and the truth. Every slot with no assigned
    truth contributes its squared confidence to the no-object part. The
    class part compares the responsible slot's softmax against a one-hot
    target, summed once per assigned truth.
    """
    if len(anchors) != tensor.num_anchors:
        raise InputError(
            f"{len(anchors)} anchors supplied, tensor expects {tensor.num_anchors}"
        )
    for idx, truth in enumerate(truths):
        if truth.class_id >= tensor.num_classes:
            raise InputError(
                f"truth {idx} class {truth.class_id} outside "
                f"{tensor.num_classes} classes"
            )

    grid = tensor.grid()
    if not np.all(np.isfinite(grid)):
        bad = np.argwhere(~np.isfinite(grid))[0]
        raise InputError(
            f"non-finite prediction value at cell ({bad[1]}, {bad[0]})"
        )
    assignment = assign_responsibility(
        truths, (tensor.grid_w, tensor.grid_h), anchors, (tensor.image_w, tensor.image_h)
    )

    cell_w = tensor.image_w / tensor.grid_w
    cell_h = tensor.image_h / tensor.grid_h
    coord_xy = 0.0
    coord_wh = 0.0
    obj_conf = 0.0
    class_prob = 0.0
    responsible = np.zeros((tensor.grid_h, tensor.grid_w, tensor.num_anchors), dtype=bool)

    for idx, ((c_x, c_y), a_idx) in sorted(assignment.items()):
        truth = truths[idx]
        responsible[c_y, c_x, a_idx] = True
        vals = grid[c_y, c_x, a_idx]
        anchor = anchors[a_idx]

        sx = _sigmoid_scalar(float(vals[0]))
        sy = _sigmoid_scalar(float(vals[1]))
        tx_truth = truth.box.center[0] / cell_w - c_x
        ty_truth = truth.box.center[1] / cell_h - c_y
        coord_xy += (sx - tx_truth) ** 2 + (sy - ty_truth) ** 2

        pred_w = anchor.width * math.exp(float(vals[2]))
        pred_h = anchor.height * math.exp(float(vals[3]))
        coord_wh += (
            math.sqrt(pred_w / tensor.image_w) - math.sqrt(truth.box.width / tensor.image_w)
        ) ** 2 + (
            math.sqrt(pred_h / tensor.image_h) - math.sqrt(truth.box.height / tensor.image_h)
        ) ** 2

        pred_box = BoundingBox(
            x_min=(sx + c_x) * cell_w - pred_w / 2.0,
            y_min=(sy + c_y) * cell_h - pred_h / 2.0,
            width=pred_w,
            height=pred_h,
        )
        conf_target = iou(pred_box, truth.box)
        obj_conf += (_sigmoid_scalar(float(vals[4])) - conf_target) ** 2

        probs = softmax(vals[5:])
        one_hot = np.zeros(tensor.num_classes)
        one_hot[truth.class_id] = 1.0
        class_prob += float(np.sum((probs - one_hot) ** 2))

    conf = sigmoid(grid[..., 4])
    noobj_conf = float(np.sum(np.where(responsible, 0.0, conf**2)))

    return LossBreakdown.from_parts(
        coord_xy=weights.lambda_coord * coord_xy,
        coord_wh=weights.lambda_coord * coord_wh,
        obj_conf=obj_conf,
        noobj_conf=weights.lambda_noobj * noobj_conf,
        class_prob=class_prob,
    )
