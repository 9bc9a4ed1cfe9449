"""File formats: byte-exact round trips and strict, located rejection."""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import CASE_DIR, FIXTURES
from rcdamage import (
    BoundingBox,
    ClassificationOutput,
    ComponentAssessment,
    DamageState,
    InputError,
    InventoryComponent,
    component_detections,
    load_anchor_csv,
    load_annotations,
    load_detections,
    load_fragility,
    load_inventory,
    load_labels,
    load_tensor,
    reduce_multiview,
    save_anchor_csv,
    save_annotations,
    save_detections,
    save_fragility,
    save_inventory,
    save_labels,
    save_tensor,
)
from rcdamage.io_formats import ImageDetections, canonical_json

ROUND_TRIPS = [
    ("formats/annotations_sample.json", load_annotations, save_annotations),
    ("eval/annotations_eval.json", load_annotations, save_annotations),
    ("formats/detections_sample.json", load_detections, save_detections),
    ("eval/detections_eval.json", load_detections, save_detections),
    ("case_study/detections_c57.json", load_detections, save_detections),
    ("case_study/inventory.json", load_inventory, save_inventory),
    ("case_study/inventory_collapsed.json", load_inventory, save_inventory),
    ("case_study/fragility.json", load_fragility, save_fragility),
    ("case_study/fragility_zero_dispersion.json", load_fragility, save_fragility),
    ("eval/labels.csv", load_labels, save_labels),
    ("eval/predictions.csv", load_labels, save_labels),
    ("case_study/anchors.csv", load_anchor_csv, save_anchor_csv),
]


def write_json(tmp_path, name: str, obj) -> str:
    target = tmp_path / name
    target.write_text(json.dumps(obj), encoding="utf-8")
    return str(target)


def annotation_doc(**box_overrides) -> dict:
    box = {"x_min": 10.0, "y_min": 10.0, "width": 30.0, "height": 40.0, "class_id": 0}
    box.update(box_overrides)
    return {"images": [{"id": "img", "width": 100.0, "height": 100.0, "boxes": [box]}]}


def detection_doc(**box_overrides) -> dict:
    box = {
        "x_min": 10.0, "y_min": 10.0, "width": 30.0, "height": 40.0,
        "score": 0.5, "class_id": 0,
    }
    box.update(box_overrides)
    for key, value in list(box.items()):
        if value is None:
            del box[key]
    return {"images": [{"id": "img", "boxes": [box]}]}


class TestRoundTrips:
    @pytest.mark.parametrize(
        "relative,load,save", ROUND_TRIPS, ids=[r[0] for r in ROUND_TRIPS]
    )
    def test_load_save_is_byte_identical(self, relative, load, save, tmp_path):
        source = FIXTURES / relative
        target = tmp_path / source.name
        save(load(source), target)
        assert target.read_bytes() == source.read_bytes()

    def test_tensor_round_trip_preserves_header_and_payload(self, tmp_path):
        tensor = load_tensor(CASE_DIR / "tensor_c57.json")
        target = tmp_path / "tensor_c57.json"
        save_tensor(tensor, target)
        assert target.read_bytes() == (CASE_DIR / "tensor_c57.json").read_bytes()
        assert (tmp_path / "tensor_c57.bin").read_bytes() == (
            CASE_DIR / "tensor_c57.bin"
        ).read_bytes()

    def test_tensor_payload_name_defaults_to_header_stem(self, tmp_path):
        tensor = load_tensor(CASE_DIR / "tensor_c57.json")
        save_tensor(tensor, tmp_path / "renamed.json")
        header = json.loads((tmp_path / "renamed.json").read_text())
        assert header["data"] == "renamed.bin"
        assert (tmp_path / "renamed.bin").exists()

    def test_tensor_payload_name_can_be_overridden(self, tmp_path):
        tensor = load_tensor(CASE_DIR / "tensor_c57.json")
        save_tensor(tensor, tmp_path / "t.json", data_name="blob.dat")
        header = json.loads((tmp_path / "t.json").read_text())
        assert header["data"] == "blob.dat"
        reloaded = load_tensor(tmp_path / "t.json")
        assert np.array_equal(reloaded.values, tensor.values)

    def test_canonical_json_is_sorted_indented_and_utf8(self):
        text = canonical_json({"b": 1, "a": "é"})
        assert text == '{\n  "a": "é",\n  "b": 1\n}\n'


class TestAnnotationsLoader:
    def test_box_outside_the_image_is_located(self, tmp_path):
        path = write_json(tmp_path, "a.json", annotation_doc(x_min=80.0))
        with pytest.raises(InputError, match=r"boxes\[0\].*leaves the image bounds"):
            load_annotations(path)

    def test_duplicate_image_ids_rejected(self, tmp_path):
        doc = annotation_doc()
        doc["images"].append({"id": "img", "width": 50.0, "height": 50.0, "boxes": []})
        path = write_json(tmp_path, "a.json", doc)
        with pytest.raises(InputError, match="duplicate image id 'img'"):
            load_annotations(path)

    def test_zero_width_box_rejected(self, tmp_path):
        path = write_json(tmp_path, "a.json", annotation_doc(width=0.0))
        with pytest.raises(InputError, match=r"boxes\[0\].width: must be > 0"):
            load_annotations(path)

    def test_negative_class_id_rejected(self, tmp_path):
        path = write_json(tmp_path, "a.json", annotation_doc(class_id=-1))
        with pytest.raises(InputError, match="class_id: must be >= 0"):
            load_annotations(path)

    def test_unknown_box_key_rejected(self, tmp_path):
        path = write_json(tmp_path, "a.json", annotation_doc(score=0.5))
        with pytest.raises(InputError, match="unexpected key 'score'"):
            load_annotations(path)

    def test_non_object_root_rejected(self, tmp_path):
        path = write_json(tmp_path, "a.json", [1, 2, 3])
        with pytest.raises(InputError, match="expected an object"):
            load_annotations(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "a.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(InputError, match="invalid JSON"):
            load_annotations(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(InputError, match="cannot read file"):
            load_annotations(tmp_path / "absent.json")


class TestDetectionsLoader:
    def test_score_above_one_rejected(self, tmp_path):
        path = write_json(tmp_path, "d.json", detection_doc(score=1.5))
        with pytest.raises(InputError, match=r"score: must lie in \[0, 1\]"):
            load_detections(path)

    def test_missing_score_rejected(self, tmp_path):
        path = write_json(tmp_path, "d.json", detection_doc(score=None))
        with pytest.raises(InputError, match="missing key 'score'"):
            load_detections(path)

    def test_unscored_box_cannot_be_saved(self, tmp_path):
        unscored = ImageDetections("img", [BoundingBox(0.0, 0.0, 1.0, 1.0)])
        with pytest.raises(InputError, match="score and a class id"):
            save_detections([unscored], tmp_path / "d.json")


class TestTensorLoader:
    def header(self, tmp_path, **overrides):
        doc = {
            "data": "t.bin", "grid_h": 2, "grid_w": 2, "num_anchors": 1,
            "num_classes": 1, "image_w": 64.0, "image_h": 64.0,
        }
        doc.update(overrides)
        for key, value in list(doc.items()):
            if value is None:
                del doc[key]
        return write_json(tmp_path, "t.json", doc)

    def test_short_payload_reports_both_counts(self, tmp_path):
        path = self.header(tmp_path)
        (tmp_path / "t.bin").write_bytes(np.zeros(23, dtype="<f4").tobytes())
        expected = r"payload holds 23 float32 values \(92 bytes\), expected 24"
        with pytest.raises(InputError, match=expected):
            load_tensor(path)

    def test_missing_header_key_rejected(self, tmp_path):
        path = self.header(tmp_path, image_w=None)
        with pytest.raises(InputError, match="missing key 'image_w'"):
            load_tensor(path)

    def test_unknown_header_key_rejected(self, tmp_path):
        path = self.header(tmp_path, layout="NCHW")
        with pytest.raises(InputError, match="unexpected key 'layout'"):
            load_tensor(path)

    def test_zero_grid_dimension_rejected(self, tmp_path):
        path = self.header(tmp_path, grid_h=0)
        with pytest.raises(InputError, match="grid_h: must be >= 1"):
            load_tensor(path)

    def test_missing_payload_file_rejected(self, tmp_path):
        path = self.header(tmp_path)
        with pytest.raises(InputError, match="cannot read payload"):
            load_tensor(path)


class TestInventoryLoader:
    def doc(self, **component_overrides) -> dict:
        component = {
            "component_id": "c1",
            "classifier_probabilities": [0.7, 0.2, 0.05, 0.05],
            "detections": [],
        }
        component.update(component_overrides)
        return {
            "building": {"replacement_cost": 1000.0, "collapse_probability": 0.1},
            "groups": [
                {"fragility_id": "F1", "quantity": 2.0, "components": [component]}
            ],
        }

    def test_probabilities_must_sum_to_one(self, tmp_path):
        doc = self.doc(classifier_probabilities=[0.5, 0.2, 0.1, 0.1])
        path = write_json(tmp_path, "inv.json", doc)
        with pytest.raises(InputError, match=r"classifier_probabilities.*sum"):
            load_inventory(path)

    def test_duplicate_component_ids_rejected(self, tmp_path):
        doc = self.doc()
        doc["groups"].append(
            {
                "fragility_id": "F2",
                "quantity": 1.0,
                "components": [
                    {
                        "component_id": "c1",
                        "classifier_probabilities": [1.0, 0.0, 0.0, 0.0],
                        "detections": [],
                    }
                ],
            }
        )
        path = write_json(tmp_path, "inv.json", doc)
        with pytest.raises(InputError, match="duplicate component id 'c1'"):
            load_inventory(path)

    def test_nonpositive_quantity_rejected(self, tmp_path):
        doc = self.doc()
        doc["groups"][0]["quantity"] = 0.0
        path = write_json(tmp_path, "inv.json", doc)
        with pytest.raises(InputError, match="quantity: must be > 0"):
            load_inventory(path)

    def test_collapse_probability_outside_unit_interval_rejected(self, tmp_path):
        doc = self.doc()
        doc["building"]["collapse_probability"] = 1.5
        path = write_json(tmp_path, "inv.json", doc)
        with pytest.raises(InputError, match=r"must lie in \[0, 1\]"):
            load_inventory(path)

    def test_detections_must_be_a_path_or_an_array(self, tmp_path):
        path = write_json(tmp_path, "inv.json", self.doc(detections=5))
        with pytest.raises(InputError, match="detections: expected an array"):
            load_inventory(path)


class TestFragilityLoader:
    def doc(self, **record_overrides) -> dict:
        record = {
            "cost_at_min_qty": 200.0, "cost_at_max_qty": 100.0,
            "dispersion": 0.3, "distribution": "lognormal",
        }
        record.update(record_overrides)
        return {
            "entries": {
                "F1": {"q_min": 5.0, "q_max": 10.0, "consequences": {"DS1": record}}
            }
        }

    def test_increasing_costs_rejected_with_location(self, tmp_path):
        doc = self.doc(cost_at_min_qty=50.0)
        path = write_json(tmp_path, "f.json", doc)
        with pytest.raises(InputError, match=r"consequences\['DS1'\].*cost_at_min_qty"):
            load_fragility(path)

    def test_quantity_knees_must_be_strictly_ordered(self, tmp_path):
        doc = self.doc()
        doc["entries"]["F1"]["q_max"] = 5.0
        path = write_json(tmp_path, "f.json", doc)
        with pytest.raises(InputError, match="strictly below"):
            load_fragility(path)

    def test_nonzero_ds0_cost_rejected(self, tmp_path):
        doc = self.doc()
        doc["entries"]["F1"]["consequences"]["DS0"] = {
            "cost_at_min_qty": 5.0, "cost_at_max_qty": 5.0,
            "dispersion": 0.0, "distribution": "lognormal",
        }
        path = write_json(tmp_path, "f.json", doc)
        with pytest.raises(InputError, match="DS0"):
            load_fragility(path)

    def test_unknown_damage_state_rejected(self, tmp_path):
        doc = self.doc()
        doc["entries"]["F1"]["consequences"]["DS9"] = doc["entries"]["F1"][
            "consequences"
        ]["DS1"]
        path = write_json(tmp_path, "f.json", doc)
        with pytest.raises(InputError, match="unknown damage state"):
            load_fragility(path)

    def test_unknown_distribution_rejected(self, tmp_path):
        path = write_json(tmp_path, "f.json", self.doc(distribution="uniform"))
        with pytest.raises(InputError, match="distribution"):
            load_fragility(path)

    def test_unknown_record_key_rejected(self, tmp_path):
        path = write_json(tmp_path, "f.json", self.doc(units="USD"))
        with pytest.raises(InputError, match="unexpected key 'units'"):
            load_fragility(path)


class TestLabelCsv:
    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("identifier,label\nc1,DS0\n", encoding="utf-8")
        with pytest.raises(InputError, match="line 1: expected header 'id,label'"):
            load_labels(path)

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("id,label\nc1,DS0\nc1,DS1\n", encoding="utf-8")
        with pytest.raises(InputError, match="line 3: duplicate id 'c1'"):
            load_labels(path)

    def test_blank_line_rejected(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("id,label\nc1,DS0\n\nc2,DS1\n", encoding="utf-8")
        with pytest.raises(InputError, match="line 3: blank line"):
            load_labels(path)

    def test_extra_field_rejected(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("id,label\nc1,DS0,extra\n", encoding="utf-8")
        with pytest.raises(InputError, match="line 2: expected 'id,label'"):
            load_labels(path)

    def test_fields_with_commas_cannot_be_saved(self, tmp_path):
        with pytest.raises(InputError, match="cannot be written as plain CSV"):
            save_labels([("c1", "DS0,DS1")], tmp_path / "l.csv")


class TestAnchorCsv:
    def test_non_numeric_line_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("10.0,banana\n", encoding="utf-8")
        with pytest.raises(InputError, match="expected two numbers"):
            load_anchor_csv(path)

    def test_nonpositive_anchor_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("0.0,5.0\n", encoding="utf-8")
        with pytest.raises(InputError, match="line 1"):
            load_anchor_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(InputError, match="no anchors found"):
            load_anchor_csv(path)

    def test_three_fields_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1.0,2.0,3.0\n", encoding="utf-8")
        with pytest.raises(InputError, match="expected 'width,height'"):
            load_anchor_csv(path)

    def test_empty_anchor_list_cannot_be_saved(self, tmp_path):
        with pytest.raises(InputError, match="empty anchor list"):
            save_anchor_csv([], tmp_path / "a.csv")


class TestComponentDetections:
    def probs(self) -> ClassificationOutput:
        return ClassificationOutput((0.7, 0.2, 0.05, 0.05))

    def test_inline_boxes_returned_directly(self, tmp_path):
        boxes = [BoundingBox(0.0, 0.0, 5.0, 5.0, score=0.9, class_id=0)]
        comp = InventoryComponent("c1", self.probs(), detections=boxes)
        assert component_detections(comp, tmp_path) == boxes

    def test_referenced_file_concatenates_all_views(self, tmp_path):
        first = BoundingBox(0.0, 0.0, 5.0, 5.0, score=0.9, class_id=0)
        second = BoundingBox(1.0, 1.0, 5.0, 5.0, score=0.8, class_id=0)
        third = BoundingBox(2.0, 2.0, 5.0, 5.0, score=0.7, class_id=0)
        save_detections(
            [
                ImageDetections("view_north", [first]),
                ImageDetections("view_south", [second, third]),
            ],
            tmp_path / "views.json",
        )
        comp = InventoryComponent("c1", self.probs(), detections_path="views.json")
        assert component_detections(comp, tmp_path) == [first, second, third]


class TestReduceMultiview:
    def view(self, state, steel=False, boxes=()) -> ComponentAssessment:
        final = DamageState.DS3 if steel else state
        return ComponentAssessment(
            component_id="c1",
            classifier_state=state,
            steel_detected=steel,
            detections=tuple(boxes),
            final_state=final,
        )

    def test_most_severe_view_wins(self):
        merged = reduce_multiview(
            [self.view(DamageState.DS1), self.view(DamageState.DS3),
             self.view(DamageState.DS2)]
        )
        assert merged.classifier_state is DamageState.DS3
        assert merged.final_state is DamageState.DS3

    def test_single_view_is_identity(self):
        only = self.view(DamageState.DS2)
        merged = reduce_multiview([only])
        assert merged == only

    def test_undamaged_views_merge_to_undamaged(self):
        merged = reduce_multiview([self.view(DamageState.DS0), self.view(DamageState.DS0)])
        assert merged.final_state is DamageState.DS0

    def test_any_steel_view_forces_severe(self):
        merged = reduce_multiview(
            [self.view(DamageState.DS1), self.view(DamageState.DS0, steel=True)]
        )
        assert merged.steel_detected
        assert merged.final_state is DamageState.DS3
        assert merged.classifier_state is DamageState.DS1

    def test_detections_concatenate_in_view_order(self):
        a = BoundingBox(0.0, 0.0, 1.0, 1.0, score=0.9, class_id=0)
        b = BoundingBox(1.0, 0.0, 1.0, 1.0, score=0.8, class_id=0)
        merged = reduce_multiview(
            [self.view(DamageState.DS1, boxes=[a]), self.view(DamageState.DS1, boxes=[b])]
        )
        assert merged.detections == (a, b)

    def test_empty_sequence_rejected(self):
        with pytest.raises(InputError, match="at least one view"):
            reduce_multiview([])

    def test_mixed_component_ids_rejected(self):
        other = ComponentAssessment(
            component_id="c2",
            classifier_state=DamageState.DS0,
            steel_detected=False,
            detections=(),
            final_state=DamageState.DS0,
        )
        with pytest.raises(InputError, match="different components"):
            reduce_multiview([self.view(DamageState.DS0), other])
