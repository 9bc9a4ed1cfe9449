"""File formats: annotations, detections, tensors, labels, fragility data, inventories.

The canonical on-disk forms are documented in formats.md at the repository
root. JSON files are saved with sorted keys, two-space indentation, and a
trailing newline; binary tensor payloads are little-endian float32. Loaders
validate every structural invariant and report the offending key path, and
save(load(path)) reproduces a canonical file byte for byte.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .fusion import ClassificationOutput, ComponentAssessment, DamageState
from .cost_model import DamageConsequence, FragilityEntry
from .geometry import BoundingBox
from .yolo_decode import AnchorPrior, DetectionTensor
from .yolo_loss import GroundTruthBox


# ---------------------------------------------------------------------------
# canonical serialization and validation plumbing

def canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _write_text(path: str | Path, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(text.encode("utf-8"))


def _parse_json(path: str | Path):
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc})") from None
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise InputError(f"{path}: {message}")


def _object(value, path: str) -> dict:
    _require(isinstance(value, dict), path, "expected an object")
    return value


def _array(value, path: str) -> list:
    _require(isinstance(value, list), path, "expected an array")
    return value


def _field(obj: dict, key: str, path: str):
    if key not in obj:
        raise InputError(f"{path}: missing key '{key}'")
    return obj[key]


def _only_keys(obj: dict, allowed: Sequence[str], path: str) -> None:
    extra = set(obj) - set(allowed)
    if extra:
        raise InputError(f"{path}: unexpected key '{sorted(extra)[0]}'")


def _number(value, path: str) -> float:
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        path,
        "expected a number",
    )
    result = float(value)
    _require(math.isfinite(result), path, "must be finite")
    return result


def _integer(value, path: str) -> int:
    _require(
        isinstance(value, int) and not isinstance(value, bool), path, "expected an integer"
    )
    return value


def _string(value, path: str) -> str:
    _require(isinstance(value, str), path, "expected a string")
    return value


# ---------------------------------------------------------------------------
# annotations

@dataclass
class ImageAnnotation:
    image_id: str
    width: float
    height: float
    boxes: list[GroundTruthBox]


def _load_box_common(obj: dict, path: str) -> tuple[float, float, float, float]:
    x_min = _number(_field(obj, "x_min", path), f"{path}.x_min")
    y_min = _number(_field(obj, "y_min", path), f"{path}.y_min")
    width = _number(_field(obj, "width", path), f"{path}.width")
    height = _number(_field(obj, "height", path), f"{path}.height")
    _require(width > 0, f"{path}.width", "must be > 0")
    _require(height > 0, f"{path}.height", "must be > 0")
    return x_min, y_min, width, height


def load_annotations(path: str | Path) -> list[ImageAnnotation]:
    """Ground-truth boxes per image; boxes must lie inside their image."""
    root = _object(_parse_json(path), str(path))
    _only_keys(root, ["images"], str(path))
    images = _array(_field(root, "images", str(path)), f"{path}.images")
    result: list[ImageAnnotation] = []
    seen_ids: set[str] = set()
    for i, image_obj in enumerate(images):
        ipath = f"{path}.images[{i}]"
        obj = _object(image_obj, ipath)
        _only_keys(obj, ["id", "width", "height", "boxes"], ipath)
        image_id = _string(_field(obj, "id", ipath), f"{ipath}.id")
        _require(image_id not in seen_ids, f"{ipath}.id", f"duplicate image id '{image_id}'")
        seen_ids.add(image_id)
        width = _number(_field(obj, "width", ipath), f"{ipath}.width")
        height = _number(_field(obj, "height", ipath), f"{ipath}.height")
        _require(width > 0, f"{ipath}.width", "must be > 0")
        _require(height > 0, f"{ipath}.height", "must be > 0")
        boxes: list[GroundTruthBox] = []
        for j, box_obj in enumerate(_array(_field(obj, "boxes", ipath), f"{ipath}.boxes")):
            bpath = f"{ipath}.boxes[{j}]"
            box = _object(box_obj, bpath)
            _only_keys(box, ["x_min", "y_min", "width", "height", "class_id"], bpath)
            x_min, y_min, bw, bh = _load_box_common(box, bpath)
            class_id = _integer(_field(box, "class_id", bpath), f"{bpath}.class_id")
            _require(class_id >= 0, f"{bpath}.class_id", "must be >= 0")
            _require(x_min >= 0 and y_min >= 0, bpath, "box leaves the image bounds")
            _require(
                x_min + bw <= width and y_min + bh <= height,
                bpath,
                "box leaves the image bounds",
            )
            boxes.append(GroundTruthBox(BoundingBox(x_min, y_min, bw, bh), class_id))
        result.append(ImageAnnotation(image_id, width, height, boxes))
    return result


def save_annotations(images: Sequence[ImageAnnotation], path: str | Path) -> None:
    payload = {
        "images": [
            {
                "boxes": [
                    {
                        "class_id": int(t.class_id),
                        "height": float(t.box.height),
                        "width": float(t.box.width),
                        "x_min": float(t.box.x_min),
                        "y_min": float(t.box.y_min),
                    }
                    for t in image.boxes
                ],
                "height": float(image.height),
                "id": image.image_id,
                "width": float(image.width),
            }
            for image in images
        ]
    }
    _write_text(path, canonical_json(payload))


# ---------------------------------------------------------------------------
# detections

@dataclass
class ImageDetections:
    image_id: str
    boxes: list[BoundingBox]  # every box scored, with a class id


def _load_detection_box(box_obj, bpath: str) -> BoundingBox:
    box = _object(box_obj, bpath)
    _only_keys(box, ["x_min", "y_min", "width", "height", "score", "class_id"], bpath)
    x_min, y_min, bw, bh = _load_box_common(box, bpath)
    score = _number(_field(box, "score", bpath), f"{bpath}.score")
    _require(0.0 <= score <= 1.0, f"{bpath}.score", "must lie in [0, 1]")
    class_id = _integer(_field(box, "class_id", bpath), f"{bpath}.class_id")
    _require(class_id >= 0, f"{bpath}.class_id", "must be >= 0")
    return BoundingBox(x_min, y_min, bw, bh, score=score, class_id=class_id)


def load_detections(path: str | Path) -> list[ImageDetections]:
    """Scored detector outputs per image."""
    root = _object(_parse_json(path), str(path))
    _only_keys(root, ["images"], str(path))
    images = _array(_field(root, "images", str(path)), f"{path}.images")
    result: list[ImageDetections] = []
    seen_ids: set[str] = set()
    for i, image_obj in enumerate(images):
        ipath = f"{path}.images[{i}]"
        obj = _object(image_obj, ipath)
        _only_keys(obj, ["id", "boxes"], ipath)
        image_id = _string(_field(obj, "id", ipath), f"{ipath}.id")
        _require(image_id not in seen_ids, f"{ipath}.id", f"duplicate image id '{image_id}'")
        seen_ids.add(image_id)
        boxes = [
            _load_detection_box(box_obj, f"{ipath}.boxes[{j}]")
            for j, box_obj in enumerate(_array(_field(obj, "boxes", ipath), f"{ipath}.boxes"))
        ]
        result.append(ImageDetections(image_id, boxes))
    return result


def _detection_box_payload(box: BoundingBox) -> dict:
    if box.score is None or box.class_id is None:
        raise InputError("detection boxes need both a score and a class id to be saved")
    return {
        "class_id": int(box.class_id),
        "height": float(box.height),
        "score": float(box.score),
        "width": float(box.width),
        "x_min": float(box.x_min),
        "y_min": float(box.y_min),
    }


def render_detections(images: Sequence[ImageDetections]) -> str:
    """Canonical detections-file text, for saving or streaming to stdout."""
    payload = {
        "images": [
            {
                "boxes": [_detection_box_payload(b) for b in image.boxes],
                "id": image.image_id,
            }
            for image in images
        ]
    }
    return canonical_json(payload)


def save_detections(images: Sequence[ImageDetections], path: str | Path) -> None:
    _write_text(path, render_detections(images))


# ---------------------------------------------------------------------------
# prediction tensors (JSON header plus little-endian float32 payload)

def load_tensor(path: str | Path) -> DetectionTensor:
    """Load a prediction grid from its header file.

    The header names the binary payload by a path relative to the header's
    directory; the payload must hold exactly grid_h * grid_w * num_anchors
    * (5 + num_classes) little-endian float32 values.
    """
    header_path = Path(path)
    root = _object(_parse_json(header_path), str(path))
    keys = ["data", "grid_h", "grid_w", "image_h", "image_w", "num_anchors", "num_classes"]
    _only_keys(root, keys, str(path))
    data_name = _string(_field(root, "data", str(path)), f"{path}.data")
    dims = {}
    for key in ("grid_h", "grid_w", "num_anchors", "num_classes"):
        dims[key] = _integer(_field(root, key, str(path)), f"{path}.{key}")
        _require(dims[key] >= 1, f"{path}.{key}", "must be >= 1")
    image_w = _number(_field(root, "image_w", str(path)), f"{path}.image_w")
    image_h = _number(_field(root, "image_h", str(path)), f"{path}.image_h")
    _require(image_w > 0 and image_h > 0, str(path), "image size must be positive")

    payload_path = header_path.parent / data_name
    try:
        raw = payload_path.read_bytes()
    except OSError as exc:
        raise InputError(f"{payload_path}: cannot read payload ({exc})") from None
    expected = dims["grid_h"] * dims["grid_w"] * dims["num_anchors"] * (
        5 + dims["num_classes"]
    )
    if len(raw) != expected * 4:
        raise InputError(
            f"{payload_path}: payload holds {len(raw) // 4} float32 values "
            f"({len(raw)} bytes), expected {expected}"
        )
    values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return DetectionTensor(
        grid_h=dims["grid_h"],
        grid_w=dims["grid_w"],
        num_anchors=dims["num_anchors"],
        num_classes=dims["num_classes"],
        values=values,
        image_w=image_w,
        image_h=image_h,
    )


def save_tensor(
    tensor: DetectionTensor, path: str | Path, data_name: str | None = None
) -> None:
    """Write header and payload; canonical headers use '<stem>.bin' payloads."""
    header_path = Path(path)
    if data_name is None:
        data_name = header_path.stem + ".bin"
    header_path.parent.mkdir(parents=True, exist_ok=True)
    (header_path.parent / data_name).write_bytes(
        tensor.values.astype("<f4").tobytes()
    )
    header = {
        "data": data_name,
        "grid_h": tensor.grid_h,
        "grid_w": tensor.grid_w,
        "image_h": float(tensor.image_h),
        "image_w": float(tensor.image_w),
        "num_anchors": tensor.num_anchors,
        "num_classes": tensor.num_classes,
    }
    _write_text(header_path, canonical_json(header))


# ---------------------------------------------------------------------------
# building inventories

@dataclass
class InventoryComponent:
    """One assessed component: classifier probabilities plus detections.

    Detections are either inline boxes or a path (relative to the inventory
    file) to a detections file; exactly one of the two is set.
    """

    component_id: str
    classifier_probabilities: ClassificationOutput
    detections: list[BoundingBox] | None = None
    detections_path: str | None = None

    def __post_init__(self) -> None:
        if (self.detections is None) == (self.detections_path is None):
            raise InputError(
                f"component '{self.component_id}' needs either inline detections "
                "or a detections path, not both"
            )


@dataclass
class InventoryGroup:
    fragility_id: str
    quantity: float
    components: list[InventoryComponent]


@dataclass
class BuildingInventory:
    replacement_cost: float
    collapse_probability: float
    groups: list[InventoryGroup]


def load_inventory(path: str | Path) -> BuildingInventory:
    """Building description: collapse probability, replacement cost, groups."""
    root = _object(_parse_json(path), str(path))
    _only_keys(root, ["building", "groups"], str(path))
    building = _object(_field(root, "building", str(path)), f"{path}.building")
    _only_keys(building, ["collapse_probability", "replacement_cost"], f"{path}.building")
    replacement = _number(
        _field(building, "replacement_cost", f"{path}.building"),
        f"{path}.building.replacement_cost",
    )
    _require(replacement >= 0, f"{path}.building.replacement_cost", "must be >= 0")
    collapse_probability = _number(
        _field(building, "collapse_probability", f"{path}.building"),
        f"{path}.building.collapse_probability",
    )
    _require(
        0.0 <= collapse_probability <= 1.0,
        f"{path}.building.collapse_probability",
        "must lie in [0, 1]",
    )

    groups: list[InventoryGroup] = []
    seen_components: set[str] = set()
    for gi, group_obj in enumerate(_array(_field(root, "groups", str(path)), f"{path}.groups")):
        gpath = f"{path}.groups[{gi}]"
        group = _object(group_obj, gpath)
        _only_keys(group, ["fragility_id", "quantity", "components"], gpath)
        fragility_id = _string(_field(group, "fragility_id", gpath), f"{gpath}.fragility_id")
        quantity = _number(_field(group, "quantity", gpath), f"{gpath}.quantity")
        _require(quantity > 0, f"{gpath}.quantity", "must be > 0")
        components: list[InventoryComponent] = []
        comps = _array(_field(group, "components", gpath), f"{gpath}.components")
        for ci, comp_obj in enumerate(comps):
            cpath = f"{gpath}.components[{ci}]"
            comp = _object(comp_obj, cpath)
            _only_keys(
                comp, ["component_id", "classifier_probabilities", "detections"], cpath
            )
            component_id = _string(
                _field(comp, "component_id", cpath), f"{cpath}.component_id"
            )
            _require(
                component_id not in seen_components,
                f"{cpath}.component_id",
                f"duplicate component id '{component_id}'",
            )
            seen_components.add(component_id)
            probs_raw = _array(
                _field(comp, "classifier_probabilities", cpath),
                f"{cpath}.classifier_probabilities",
            )
            probs = tuple(
                _number(p, f"{cpath}.classifier_probabilities[{pi}]")
                for pi, p in enumerate(probs_raw)
            )
            try:
                classification = ClassificationOutput(probs)
            except InputError as exc:
                raise InputError(f"{cpath}.classifier_probabilities: {exc}") from None
            det_value = _field(comp, "detections", cpath)
            if isinstance(det_value, str):
                component = InventoryComponent(
                    component_id, classification, detections_path=det_value
                )
            else:
                boxes = [
                    _load_detection_box(b, f"{cpath}.detections[{bi}]")
                    for bi, b in enumerate(_array(det_value, f"{cpath}.detections"))
                ]
                component = InventoryComponent(
                    component_id, classification, detections=boxes
                )
            components.append(component)
        groups.append(InventoryGroup(fragility_id, quantity, components))
    return BuildingInventory(replacement, collapse_probability, groups)


def save_inventory(inventory: BuildingInventory, path: str | Path) -> None:
    def component_payload(comp: InventoryComponent) -> dict:
        payload = {
            "classifier_probabilities": [
                float(p) for p in comp.classifier_probabilities.probabilities
            ],
            "component_id": comp.component_id,
        }
        if comp.detections_path is not None:
            payload["detections"] = comp.detections_path
        else:
            payload["detections"] = [_detection_box_payload(b) for b in comp.detections]
        return payload

    payload = {
        "building": {
            "collapse_probability": float(inventory.collapse_probability),
            "replacement_cost": float(inventory.replacement_cost),
        },
        "groups": [
            {
                "components": [component_payload(c) for c in group.components],
                "fragility_id": group.fragility_id,
                "quantity": float(group.quantity),
            }
            for group in inventory.groups
        ],
    }
    _write_text(path, canonical_json(payload))


def component_detections(
    component: InventoryComponent, base_dir: str | Path
) -> list[BoundingBox]:
    """Resolve a component's detections, reading referenced files if needed.

    A referenced detections file may hold several views of the component;
    all their boxes are concatenated in file order.
    """
    if component.detections is not None:
        return list(component.detections)
    referenced = Path(base_dir) / component.detections_path
    return [box for image in load_detections(referenced) for box in image.boxes]


# ---------------------------------------------------------------------------
# fragility databases

@dataclass
class FragilityDatabase:
    entries: dict[str, FragilityEntry]
    notes: str | None = None


def load_fragility(path: str | Path) -> FragilityDatabase:
    """Per-component repair consequence functions keyed by fragility id."""
    root = _object(_parse_json(path), str(path))
    _only_keys(root, ["entries", "notes"], str(path))
    entries_obj = _object(_field(root, "entries", str(path)), f"{path}.entries")
    notes = None
    if "notes" in root:
        notes = _string(root["notes"], f"{path}.notes")

    entries: dict[str, FragilityEntry] = {}
    for fragility_id, entry_obj in entries_obj.items():
        epath = f"{path}.entries['{fragility_id}']"
        entry = _object(entry_obj, epath)
        _only_keys(entry, ["consequences", "q_min", "q_max"], epath)
        q_min = _number(_field(entry, "q_min", epath), f"{epath}.q_min")
        q_max = _number(_field(entry, "q_max", epath), f"{epath}.q_max")
        _require(q_min < q_max, epath, f"q_min {q_min} must be strictly below q_max {q_max}")
        consequences_obj = _object(
            _field(entry, "consequences", epath), f"{epath}.consequences"
        )
        consequences: dict[DamageState, DamageConsequence] = {}
        for ds_name, record_obj in consequences_obj.items():
            rpath = f"{epath}.consequences['{ds_name}']"
            _require(
                ds_name in DamageState.__members__, rpath, "unknown damage state"
            )
            record = _object(record_obj, rpath)
            _only_keys(
                record,
                ["cost_at_min_qty", "cost_at_max_qty", "dispersion", "distribution"],
                rpath,
            )
            cost_min = _number(
                _field(record, "cost_at_min_qty", rpath), f"{rpath}.cost_at_min_qty"
            )
            cost_max = _number(
                _field(record, "cost_at_max_qty", rpath), f"{rpath}.cost_at_max_qty"
            )
            dispersion = _number(
                _field(record, "dispersion", rpath), f"{rpath}.dispersion"
            )
            distribution = _string(
                _field(record, "distribution", rpath), f"{rpath}.distribution"
            )
            try:
                consequences[DamageState[ds_name]] = DamageConsequence(
                    cost_at_min_qty=cost_min,
                    cost_at_max_qty=cost_max,
                    dispersion=dispersion,
                    distribution=distribution,
                )
            except InputError as exc:
                raise InputError(f"{rpath}: {exc}") from None
        try:
            entries[fragility_id] = FragilityEntry(
                component_id=fragility_id,
                q_min=q_min,
                q_max=q_max,
                consequences=consequences,
            )
        except InputError as exc:
            raise InputError(f"{epath}: {exc}") from None
    return FragilityDatabase(entries=entries, notes=notes)


def save_fragility(db: FragilityDatabase, path: str | Path) -> None:
    payload: dict = {
        "entries": {
            fragility_id: {
                "consequences": {
                    ds.name: {
                        "cost_at_max_qty": float(rec.cost_at_max_qty),
                        "cost_at_min_qty": float(rec.cost_at_min_qty),
                        "dispersion": float(rec.dispersion),
                        "distribution": rec.distribution,
                    }
                    for ds, rec in sorted(entry.consequences.items())
                },
                "q_max": float(entry.q_max),
                "q_min": float(entry.q_min),
            }
            for fragility_id, entry in db.entries.items()
        }
    }
    if db.notes is not None:
        payload["notes"] = db.notes
    _write_text(path, canonical_json(payload))


# ---------------------------------------------------------------------------
# label CSV files (classifier outputs and ground-truth labels)

def load_labels(path: str | Path) -> list[tuple[str, str]]:
    """CSV of (id, label) rows with the exact header 'id,label'."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc})") from None
    lines = text.splitlines()
    if not lines or lines[0] != "id,label":
        raise InputError(f"{path}: line 1: expected header 'id,label'")
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            raise InputError(f"{path}: line {lineno}: blank line")
        parts = line.split(",")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise InputError(f"{path}: line {lineno}: expected 'id,label'")
        item_id, label = parts
        if item_id in seen:
            raise InputError(f"{path}: line {lineno}: duplicate id '{item_id}'")
        seen.add(item_id)
        rows.append((item_id, label))
    return rows


def save_labels(rows: Sequence[tuple[str, str]], path: str | Path) -> None:
    for item_id, label in rows:
        for value in (item_id, label):
            if any(ch in value for ch in ",\r\n\"") or value == "":
                raise InputError(f"label field {value!r} cannot be written as plain CSV")
    text = "id,label\n" + "".join(f"{i},{l}\n" for i, l in rows)
    _write_text(path, text)


# ---------------------------------------------------------------------------
# anchor CSV files

def load_anchor_csv(path: str | Path) -> list[AnchorPrior]:
    """Headerless CSV with one 'width,height' pair per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc})") from None
    anchors: list[AnchorPrior] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip() == "":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise InputError(f"{path}: line {lineno}: expected 'width,height'")
        try:
            width, height = float(parts[0]), float(parts[1])
        except ValueError:
            raise InputError(
                f"{path}: line {lineno}: expected two numbers, got {line!r}"
            ) from None
        if not (math.isfinite(width) and math.isfinite(height)):
            raise InputError(f"{path}: line {lineno}: anchor sizes must be finite")
        try:
            anchors.append(AnchorPrior(width, height))
        except InputError as exc:
            raise InputError(f"{path}: line {lineno}: {exc}") from None
    if not anchors:
        raise InputError(f"{path}: no anchors found")
    return anchors


def save_anchor_csv(anchors: Sequence[AnchorPrior], path: str | Path) -> None:
    if not anchors:
        raise InputError("cannot save an empty anchor list")
    _write_text(path, "".join(f"{a.width!r},{a.height!r}\n" for a in anchors))


# ---------------------------------------------------------------------------
# multi-view reduction

def reduce_multiview(assessments: Sequence[ComponentAssessment]) -> ComponentAssessment:
    """Merge several views of one component into a single assessment.

    Steel counts as detected if any view detected it, the classifier state
    is the most severe across views, detections are concatenated in view
    order, and the fused final state is therefore the most severe view's.
    """
    if not assessments:
        raise InputError("reduce_multiview needs at least one view")
    ids = {a.component_id for a in assessments}
    if len(ids) != 1:
        raise InputError(f"views belong to different components: {sorted(ids)}")
    steel_detected = any(a.steel_detected for a in assessments)
    classifier_state = max(a.classifier_state for a in assessments)
    detections = tuple(box for a in assessments for box in a.detections)
    final_state = DamageState.DS3 if steel_detected else classifier_state
    return ComponentAssessment(
        component_id=assessments[0].component_id,
        classifier_state=DamageState(classifier_state),
        steel_detected=steel_detected,
        detections=detections,
        final_state=final_state,
    )
