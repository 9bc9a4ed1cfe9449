"""Decoding of detection-grid prediction tensors into scored pixel boxes.

A prediction tensor covers a grid of grid_h x grid_w cells, each holding
num_anchors anchor slots of 5 + num_classes channels in the order
(t_x, t_y, t_w, t_h, t_0, class logits...). The center offset passes
through the logistic function so a slot's box center stays inside its own
cell, sizes scale the anchor prior exponentially, and the detection score
is the objectness sigmoid times the best class softmax probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import InputError
from .geometry import BoundingBox, nms


def sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable logistic function, elementwise."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along the given axis."""
    arr = np.asarray(x, dtype=np.float64)
    shifted = arr - np.max(arr, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _sigmoid_scalar(t: float) -> float:
    # exp is only ever called on non-positive arguments, so it cannot overflow
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@dataclass(frozen=True)
class AnchorPrior:
    """One anchor box prior, sizes in pixels."""

    width: float
    height: float

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise InputError(
                f"anchor size must be positive, got {self.width} x {self.height}"
            )


# Anchor priors (pixels) shipped with the reference steel-exposure detector
# configuration: ten priors for a 26 x 26 grid over 416 x 416 inputs.
STEEL_EXPOSURE_ANCHORS: tuple[AnchorPrior, ...] = tuple(
    AnchorPrior(float(w), float(h))
    for w, h in [
        (104, 98),
        (174, 309),
        (174, 132),
        (107, 285),
        (105, 167),
        (67, 206),
        (274, 338),
        (208, 213),
        (138, 199),
        (54, 77),
    ]
)


@dataclass(eq=False)
class DetectionTensor:
    """Raw prediction grid for one image, stored as a flat float array.

    The flat index of channel c of anchor a in cell (row, col) is
    ((row * grid_w + col) * num_anchors + a) * (5 + num_classes) + c.
    """

    grid_h: int
    grid_w: int
    num_anchors: int
    num_classes: int
    values: np.ndarray
    image_w: float
    image_h: float

    def __post_init__(self) -> None:
        for name in ("grid_h", "grid_w", "num_anchors", "num_classes"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not (self.image_w > 0 and self.image_h > 0):
            raise InputError(
                f"image size must be positive, got {self.image_w} x {self.image_h}"
            )
        self.values = np.array(self.values, dtype=np.float64).ravel()
        expected = self.grid_h * self.grid_w * self.num_anchors * (5 + self.num_classes)
        if self.values.size != expected:
            raise InputError(
                f"tensor has {self.values.size} values, expected {expected}"
            )

    def grid(self) -> np.ndarray:
        """View shaped (grid_h, grid_w, num_anchors, 5 + num_classes)."""
        return self.values.reshape(
            self.grid_h, self.grid_w, self.num_anchors, 5 + self.num_classes
        )


@dataclass(frozen=True)
class DecodeConfig:
    anchors: tuple[AnchorPrior, ...]
    score_threshold: float = 0.5
    nms_iou: float = 0.5

    def __post_init__(self) -> None:
        if len(self.anchors) == 0:
            raise InputError("decode config needs at least one anchor")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise InputError(
                f"score_threshold must lie in [0, 1], got {self.score_threshold}"
            )
        if not 0.0 < self.nms_iou <= 1.0:
            raise InputError(f"nms_iou must lie in (0, 1], got {self.nms_iou}")


def decode_cell(
    values: Sequence[float],
    cell: tuple[int, int],
    anchor: AnchorPrior,
    grid_size: tuple[int, int],
    image_size: tuple[float, float],
) -> BoundingBox:
    """Decode one anchor slot of one grid cell into a scored corner-form box.

    values holds (t_x, t_y, t_w, t_h, t_0, class logits...); cell is
    (col, row), grid_size is (grid_w, grid_h), image_size is (width, height)
    in pixels. The returned box may extend past the image border; no
    clipping is applied.
    """
    c_x, c_y = cell
    grid_w, grid_h = grid_size
    image_w, image_h = image_size
    if len(values) < 6:
        raise InputError(
            f"cell ({c_x}, {c_y}): expected at least 6 channels, got {len(values)}"
        )
    if not (0 <= c_x < grid_w and 0 <= c_y < grid_h):
        raise InputError(f"cell ({c_x}, {c_y}) outside {grid_w} x {grid_h} grid")
    vals = [float(v) for v in values]
    if not all(math.isfinite(v) for v in vals):
        raise InputError(f"non-finite prediction value at cell ({c_x}, {c_y})")

    cell_w = image_w / grid_w
    cell_h = image_h / grid_h
    center_x = (_sigmoid_scalar(vals[0]) + c_x) * cell_w
    center_y = (_sigmoid_scalar(vals[1]) + c_y) * cell_h
    try:
        width = anchor.width * math.exp(vals[2])
        height = anchor.height * math.exp(vals[3])
    except OverflowError:
        raise InputError(f"decoded size overflows at cell ({c_x}, {c_y})") from None

    logits = vals[5:]
    peak = max(logits)
    exps = [math.exp(v - peak) for v in logits]
    total = sum(exps)
    class_id = logits.index(peak)  # ties resolve to the lowest class index
    score = _sigmoid_scalar(vals[4]) * (exps[class_id] / total)
    return BoundingBox(
        x_min=center_x - width / 2.0,
        y_min=center_y - height / 2.0,
        width=width,
        height=height,
        score=score,
        class_id=class_id,
    )


def decode_tensor(tensor: DetectionTensor, config: DecodeConfig) -> list[BoundingBox]:
    """Decode a full grid, drop scores below the threshold, then run NMS.

    Candidates are enumerated cell-major (row, then column, then anchor), so
    the final descending-score ordering breaks ties by cell index. The same
    tensor always decodes to a bitwise-identical box list.
    """
    if len(config.anchors) != tensor.num_anchors:
        raise InputError(
            f"config has {len(config.anchors)} anchors, tensor expects {tensor.num_anchors}"
        )
    grid = tensor.grid()
    grid_size = (tensor.grid_w, tensor.grid_h)
    image_size = (tensor.image_w, tensor.image_h)
    kept: list[BoundingBox] = []
    for row in range(tensor.grid_h):
        for col in range(tensor.grid_w):
            for a_idx, anchor in enumerate(config.anchors):
                box = decode_cell(
                    grid[row, col, a_idx], (col, row), anchor, grid_size, image_size
                )
                if box.score >= config.score_threshold:
                    kept.append(box)
    return nms(kept, config.nms_iou)
