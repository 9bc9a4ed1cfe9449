"""Regenerate the canonical fixture files under fixtures/.

Every file is written through the package's own savers so the canonical
serialization stays the single source of truth. The script is fully
deterministic; running it twice produces identical bytes.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from rcdamage import (  # noqa: E402
    STEEL_EXPOSURE_ANCHORS,
    BoundingBox,
    ClassificationOutput,
    DamageConsequence,
    DamageState,
    DecodeConfig,
    DetectionTensor,
    FragilityEntry,
    GroundTruthBox,
    decode_tensor,
)
from rcdamage.io_formats import (  # noqa: E402
    BuildingInventory,
    FragilityDatabase,
    ImageAnnotation,
    ImageDetections,
    InventoryComponent,
    InventoryGroup,
    save_anchor_csv,
    save_annotations,
    save_detections,
    save_fragility,
    save_inventory,
    save_labels,
    save_tensor,
)

FIXTURES = REPO / "fixtures"

# Published mean repair costs and dispersions for one RC column type; the
# quantity thresholds q_min/q_max are illustrative placeholders only.
COLUMN_FRAGILITY_ID = "B1041.031a"
COLUMN_COSTS = {
    DamageState.DS0: (0.0, 0.0, 0.0),
    DamageState.DS1: (25704.0, 20910.0, 0.39),
    DamageState.DS2: (38978.0, 25986.0, 0.32),
    DamageState.DS3: (47978.0, 31986.0, 0.3),
}
Q_MIN, Q_MAX = 20.0, 60.0
FRAGILITY_NOTES = (
    "Quantity thresholds q_min/q_max are illustrative placeholders, not part "
    "of the published unit-cost data for this component type."
)

DS1_PROBS = (0.05, 0.8, 0.1, 0.05)
DS2_PROBS = (0.02, 0.08, 0.75, 0.15)
DS3_PROBS = (0.01, 0.04, 0.25, 0.7)

STEEL_BOX = BoundingBox(100.0, 80.0, 45.0, 120.0, score=0.9, class_id=0)
WEAK_BOX = BoundingBox(210.0, 150.0, 30.0, 90.0, score=0.3, class_id=0)


def column_fragility(zero_dispersion: bool = False) -> FragilityDatabase:
    consequences = {
        ds: DamageConsequence(
            cost_at_min_qty=c_min,
            cost_at_max_qty=c_max,
            dispersion=0.0 if zero_dispersion else beta,
            distribution="lognormal",
        )
        for ds, (c_min, c_max, beta) in COLUMN_COSTS.items()
    }
    entry = FragilityEntry(
        component_id=COLUMN_FRAGILITY_ID, q_min=Q_MIN, q_max=Q_MAX, consequences=consequences
    )
    return FragilityDatabase(entries={COLUMN_FRAGILITY_ID: entry}, notes=FRAGILITY_NOTES)


def case_tensor() -> DetectionTensor:
    """A 26 x 26 x 10 grid that decodes to exactly one confident detection."""
    grid_h = grid_w = 26
    num_anchors, num_classes = 10, 1
    values = np.zeros((grid_h, grid_w, num_anchors, 5 + num_classes))
    values[..., 4] = -12.0  # objectness far below any usable threshold
    values[11, 7, 0, 4] = 4.0  # one confident slot, centered box, anchor shape
    return DetectionTensor(
        grid_h=grid_h,
        grid_w=grid_w,
        num_anchors=num_anchors,
        num_classes=num_classes,
        values=values,
        image_w=416.0,
        image_h=416.0,
    )


def case_components() -> list[InventoryComponent]:
    """57 columns: 17 end at DS1, 26 at DS2, 14 at DS3 after fusion.

    Of the DS3 group, ten are classified DS3 outright, three are DS2 with an
    inline steel detection, and one (c57) references the detections file
    decoded from the shipped tensor.
    """
    components: list[InventoryComponent] = []

    def add(index: int, probs: tuple, detections=None, detections_path=None):
        components.append(
            InventoryComponent(
                component_id=f"c{index:02d}",
                classifier_probabilities=ClassificationOutput(probs),
                detections=detections,
                detections_path=detections_path,
            )
        )

    for i in range(1, 18):
        add(i, DS1_PROBS, detections=[])
    for i in range(18, 44):
        # c19 carries a sub-threshold detection that must not upgrade it
        add(i, DS2_PROBS, detections=[WEAK_BOX] if i == 19 else [])
    for i in range(44, 54):
        add(i, DS3_PROBS, detections=[])
    for i in range(54, 57):
        add(i, DS2_PROBS, detections=[STEEL_BOX])
    add(57, DS2_PROBS, detections_path="detections_c57.json")
    return components


def write_case_study() -> None:
    out = FIXTURES / "case_study"
    out.mkdir(parents=True, exist_ok=True)

    save_anchor_csv(STEEL_EXPOSURE_ANCHORS, out / "anchors.csv")

    tensor = case_tensor()
    save_tensor(tensor, out / "tensor_c57.json")
    boxes = decode_tensor(tensor, DecodeConfig(anchors=STEEL_EXPOSURE_ANCHORS))
    assert len(boxes) == 1, f"case tensor must decode to one box, got {len(boxes)}"
    save_detections([ImageDetections("tensor_c57", boxes)], out / "detections_c57.json")

    components = case_components()
    groups = [
        InventoryGroup(COLUMN_FRAGILITY_ID, 19.0, components[0:19]),
        InventoryGroup(COLUMN_FRAGILITY_ID, 19.0, components[19:38]),
        InventoryGroup(COLUMN_FRAGILITY_ID, 19.0, components[38:57]),
    ]
    inventory = BuildingInventory(
        replacement_cost=15_000_000.0, collapse_probability=0.02, groups=groups
    )
    save_inventory(inventory, out / "inventory.json")

    save_fragility(column_fragility(), out / "fragility.json")
    save_fragility(column_fragility(zero_dispersion=True), out / "fragility_zero_dispersion.json")

    collapsed = BuildingInventory(
        replacement_cost=15_000_000.0,
        collapse_probability=0.97,
        groups=[InventoryGroup(COLUMN_FRAGILITY_ID, 19.0, case_components()[:3])],
    )
    save_inventory(collapsed, out / "inventory_collapsed.json")


def write_eval_fixtures() -> None:
    out = FIXTURES / "eval"
    out.mkdir(parents=True, exist_ok=True)

    truths = [
        ImageAnnotation(
            "scene_a",
            416.0,
            416.0,
            [
                GroundTruthBox(BoundingBox(0.0, 0.0, 10.0, 10.0), 0),
                GroundTruthBox(BoundingBox(100.0, 100.0, 20.0, 20.0), 0),
            ],
        )
    ]
    save_annotations(truths, out / "annotations_eval.json")
    detections = [
        ImageDetections(
            "scene_a",
            [
                BoundingBox(1.0, 1.0, 10.0, 10.0, score=0.9, class_id=0),
                BoundingBox(50.0, 50.0, 5.0, 5.0, score=0.8, class_id=0),
                BoundingBox(101.0, 101.0, 20.0, 20.0, score=0.7, class_id=0),
            ],
        )
    ]
    save_detections(detections, out / "detections_eval.json")

    # Hand-tallied 4-class confusion: diag (4, 3, 3, 3), accuracy 13/16.
    truth_labels = (
        [("s%02d" % i, "DS0") for i in range(1, 5)]
        + [("s%02d" % i, "DS1") for i in range(5, 9)]
        + [("s%02d" % i, "DS2") for i in range(9, 13)]
        + [("s%02d" % i, "DS3") for i in range(13, 17)]
    )
    predicted = dict(truth_labels)
    predicted["s05"] = "DS0"
    predicted["s12"] = "DS3"
    predicted["s16"] = "DS2"
    save_labels(truth_labels, out / "labels.csv")
    save_labels([(i, predicted[i]) for i, _ in truth_labels], out / "predictions.csv")


def write_format_samples() -> None:
    out = FIXTURES / "formats"
    out.mkdir(parents=True, exist_ok=True)
    save_annotations(
        [
            ImageAnnotation(
                "col_012_north",
                416.0,
                416.0,
                [GroundTruthBox(BoundingBox(32.0, 48.0, 104.0, 98.0), 0)],
            ),
            ImageAnnotation("col_012_south", 416.0, 416.0, []),
        ],
        out / "annotations_sample.json",
    )
    save_detections(
        [
            ImageDetections(
                "col_012_north",
                [
                    BoundingBox(30.0, 50.0, 100.0, 95.0, score=0.88, class_id=0),
                    BoundingBox(300.0, 210.0, 40.0, 80.0, score=0.52, class_id=0),
                ],
            )
        ],
        out / "detections_sample.json",
    )


def main() -> None:
    write_case_study()
    write_eval_fixtures()
    write_format_samples()
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
