"""Shared test helpers: fixture paths, tensor builders, and an AP oracle."""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np
import pytest

from rcdamage import DetectionTensor

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
CASE_DIR = FIXTURES / "case_study"
EVAL_DIR = FIXTURES / "eval"
FORMATS_DIR = FIXTURES / "formats"


def make_tensor(
    grid_h: int = 4,
    grid_w: int = 4,
    num_anchors: int = 1,
    num_classes: int = 1,
    image_w: float = 128.0,
    image_h: float = 128.0,
    fill: float = 0.0,
) -> DetectionTensor:
    """Uniform prediction grid; mutate tensor.values to shape test cases."""
    size = grid_h * grid_w * num_anchors * (5 + num_classes)
    return DetectionTensor(
        grid_h=grid_h,
        grid_w=grid_w,
        num_anchors=num_anchors,
        num_classes=num_classes,
        values=np.full(size, fill, dtype=np.float64),
        image_w=image_w,
        image_h=image_h,
    )


def slot_base(tensor: DetectionTensor, row: int, col: int, anchor: int) -> int:
    """Flat index of channel 0 for one anchor slot of one cell."""
    channels = 5 + tensor.num_classes
    return ((row * tensor.grid_w + col) * tensor.num_anchors + anchor) * channels


def brute_force_ap(labels: list[bool], num_truths: int) -> float:
    """Independent average precision by threshold sweep, O(n^2).

    Every rank prefix of the label sequence is one score threshold. For each
    recall level reached, the best precision at that recall or beyond is
    found by rescanning all prefixes, then precision is integrated over
    recall increments.
    """
    if num_truths == 0 or not labels:
        return 0.0
    points = []
    tp = 0
    for rank, is_tp in enumerate(labels, start=1):
        tp += 1 if is_tp else 0
        points.append((tp / num_truths, tp / rank))
    ap = 0.0
    prev_recall = 0.0
    for recall, _ in points:
        if recall > prev_recall:
            best = max(p for r, p in points if r >= recall)
            ap += (recall - prev_recall) * best
        prev_recall = recall
    return ap


def random_label_instances(
    count: int, max_detections: int = 8, seed: int = 0
) -> list[tuple[list[bool], int]]:
    """Random (TP/FP labels, num_truths) pairs with #TP <= num_truths."""
    rng = np.random.default_rng(seed)
    instances = []
    for _ in range(count):
        num_truths = int(rng.integers(1, 9))
        n = int(rng.integers(0, max_detections + 1))
        remaining = num_truths
        labels = []
        for _ in range(n):
            is_tp = bool(rng.integers(0, 2)) and remaining > 0
            if is_tp:
                remaining -= 1
            labels.append(is_tp)
        instances.append((labels, num_truths))
    return instances


@pytest.fixture
def case_copy(tmp_path: Path) -> Path:
    """Writable copy of the shipped case-study fixture directory."""
    target = tmp_path / "case_study"
    shutil.copytree(CASE_DIR, target)
    return target
