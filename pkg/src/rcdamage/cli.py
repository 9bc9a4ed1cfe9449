"""Command-line interface for the assessment pipeline.

Subcommands: decode, evaluate-loss, cluster-anchors, evaluate-detector,
evaluate-classifier, fuse, estimate-cost. Exit codes: 0 on success, 2 on
input or validation errors, 3 on internal errors. Every file-producing run
also writes a manifest recording the resolved options and input digests;
with --out - the data goes to stdout and nothing else is written.
"""

from __future__ import annotations

import hashlib
import sys
from pathlib import Path

import click

from . import __version__
from .anchor_clustering import kmeans_iou, sweep_k
from .classifier_eval import accuracy, confusion
from .cost_model import PerformanceGroup, quantile, simulate_total
from .detector_eval import evaluate_detections
from .errors import InputError
from .fusion import DamageState, assess_building
from .io_formats import (
    ImageDetections,
    canonical_json,
    component_detections,
    load_anchor_csv,
    load_annotations,
    load_detections,
    load_fragility,
    load_inventory,
    load_labels,
    load_tensor,
    render_detections,
    save_anchor_csv,
)
from .svgplot import line_plot
from .yolo_decode import DecodeConfig, decode_tensor
from .yolo_loss import LossWeights, compute_loss


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_output(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        target = Path(out)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(text.encode("utf-8"))


def _write_manifest(
    manifest_path: str,
    subcommand: str,
    options: dict,
    inputs: list[str],
    seed: int | None,
) -> None:
    payload = {
        "inputs": {path: _sha256(path) for path in inputs},
        "options": options,
        "seed": seed,
        "subcommand": subcommand,
        "version": __version__,
    }
    _write_output(canonical_json(payload), manifest_path)


def _emit(text: str, out: str, subcommand: str, options: dict, inputs: list[str], seed=None):
    """Write the data file plus its manifest; stdout mode writes data only."""
    _write_output(text, out)
    if out != "-":
        _write_manifest(f"{out}.manifest.json", subcommand, options, inputs, seed)


@click.group()
@click.version_option(version=__version__, prog_name="rcdamage")
def cli() -> None:
    """Damage-assessment post-processing pipeline."""


@cli.command()
@click.option("--tensor", "tensor_path", required=True, help="Prediction tensor header file.")
@click.option("--anchors", "anchors_path", required=True, help="Anchor CSV (width,height per line).")
@click.option("--score-threshold", default=0.5, show_default=True, type=float)
@click.option("--nms-iou", default=0.5, show_default=True, type=float)
@click.option("--out", required=True, help="Output detections file, or - for stdout.")
def decode(tensor_path: str, anchors_path: str, score_threshold: float, nms_iou: float, out: str) -> None:
    """Decode a prediction tensor into a detections file."""
    tensor = load_tensor(tensor_path)
    anchors = load_anchor_csv(anchors_path)
    config = DecodeConfig(
        anchors=tuple(anchors), score_threshold=score_threshold, nms_iou=nms_iou
    )
    boxes = decode_tensor(tensor, config)
    image_id = Path(tensor_path).stem
    text = render_detections([ImageDetections(image_id, boxes)])
    options = {
        "anchors": anchors_path,
        "nms_iou": nms_iou,
        "out": out,
        "score_threshold": score_threshold,
        "tensor": tensor_path,
    }
    _emit(text, out, "decode", options, [tensor_path, anchors_path])
    if out != "-":
        click.echo(f"decoded {len(boxes)} detections into {out}")


@cli.command("evaluate-loss")
@click.option("--tensor", "tensor_path", required=True)
@click.option("--anchors", "anchors_path", required=True)
@click.option("--ground-truth", "truth_path", required=True, help="Annotation file.")
@click.option("--image-id", default=None, help="Image to evaluate when the file has several.")
@click.option("--lambda-coord", default=5.0, show_default=True, type=float)
@click.option("--lambda-noobj", default=0.5, show_default=True, type=float)
@click.option("--out", required=True)
def evaluate_loss(
    tensor_path: str,
    anchors_path: str,
    truth_path: str,
    image_id: str | None,
    lambda_coord: float,
    lambda_noobj: float,
    out: str,
) -> None:
    """Evaluate the multi-part detection loss of a tensor against ground truth."""
    tensor = load_tensor(tensor_path)
    anchors = load_anchor_csv(anchors_path)
    annotations = load_annotations(truth_path)
    if image_id is None:
        if len(annotations) != 1:
            raise InputError(
                f"{truth_path} holds {len(annotations)} images; pass --image-id"
            )
        selected = annotations[0]
    else:
        matches = [a for a in annotations if a.image_id == image_id]
        if not matches:
            raise InputError(f"image id '{image_id}' not found in {truth_path}")
        selected = matches[0]
    if (selected.width, selected.height) != (tensor.image_w, tensor.image_h):
        raise InputError(
            f"annotation image size {selected.width} x {selected.height} does not "
            f"match tensor image size {tensor.image_w} x {tensor.image_h}"
        )
    weights = LossWeights(lambda_coord=lambda_coord, lambda_noobj=lambda_noobj)
    breakdown = compute_loss(tensor, selected.boxes, anchors, weights)
    payload = {
        "class_prob": breakdown.class_prob,
        "coord_wh": breakdown.coord_wh,
        "coord_xy": breakdown.coord_xy,
        "noobj_conf": breakdown.noobj_conf,
        "obj_conf": breakdown.obj_conf,
        "total": breakdown.total,
    }
    options = {
        "anchors": anchors_path,
        "ground_truth": truth_path,
        "image_id": image_id,
        "lambda_coord": lambda_coord,
        "lambda_noobj": lambda_noobj,
        "out": out,
        "tensor": tensor_path,
    }
    _emit(canonical_json(payload), out, "evaluate-loss", options,
          [tensor_path, anchors_path, truth_path])
    if out != "-":
        click.echo(f"total loss {breakdown.total!r}")


@cli.command("cluster-anchors")
@click.option("--annotations", "annotations_path", required=True)
@click.option("--k", "k", type=int, default=None, help="Number of anchors to fit.")
@click.option("--sweep", default=None, help="Inclusive k range A..B; writes (k, mean IoU) rows.")
@click.option("--restarts", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True)
def cluster_anchors(
    annotations_path: str,
    k: int | None,
    sweep: str | None,
    restarts: int,
    seed: int,
    out: str,
) -> None:
    """Cluster ground-truth box shapes into anchor priors."""
    if (k is None) == (sweep is None):
        raise InputError("pass exactly one of --k or --sweep")
    annotations = load_annotations(annotations_path)
    dims = [
        (truth.box.width, truth.box.height)
        for image in annotations
        for truth in image.boxes
    ]
    if not dims:
        raise InputError(f"{annotations_path} holds no boxes to cluster")
    options = {
        "annotations": annotations_path,
        "k": k,
        "out": out,
        "restarts": restarts,
        "seed": seed,
        "sweep": sweep,
    }
    if sweep is not None:
        try:
            lo_text, hi_text = sweep.split("..")
            lo, hi = int(lo_text), int(hi_text)
        except ValueError:
            raise InputError(f"--sweep expects A..B with integers, got {sweep!r}") from None
        if lo < 1 or hi < lo:
            raise InputError(f"--sweep range {sweep!r} is not an increasing range from >= 1")
        results = sweep_k(dims, range(lo, hi + 1), seed=seed, restarts=restarts)
        text = "".join(f"{kk},{miou!r}\n" for kk, miou in results)
        _emit(text, out, "cluster-anchors", options, [annotations_path], seed)
        if out != "-":
            click.echo(f"swept k={lo}..{hi} over {len(dims)} boxes")
    else:
        result = kmeans_iou(dims, k, seed=seed, restarts=restarts)
        if out == "-":
            sys.stdout.write(
                "".join(f"{a.width!r},{a.height!r}\n" for a in result.anchors)
            )
        else:
            save_anchor_csv(result.anchors, out)
            _write_manifest(f"{out}.manifest.json", "cluster-anchors", options,
                            [annotations_path], seed)
            click.echo(
                f"fit {k} anchors over {len(dims)} boxes, mean IoU {result.mean_iou:.4f}"
            )


@cli.command("evaluate-detector")
@click.option("--detections", "detections_path", required=True)
@click.option("--ground-truth", "truth_path", required=True)
@click.option("--iou", "iou_threshold", default=0.5, show_default=True, type=float)
@click.option("--out-prefix", required=True)
@click.option("--svg", is_flag=True, help="Also write a precision-recall SVG plot.")
def evaluate_detector(
    detections_path: str, truth_path: str, iou_threshold: float, out_prefix: str, svg: bool
) -> None:
    """Score detections against ground truth: per-class AP and mean AP."""
    detections = {
        image.image_id: image.boxes for image in load_detections(detections_path)
    }
    truths = {
        image.image_id: image.boxes for image in load_annotations(truth_path)
    }
    curves, mean_ap = evaluate_detections(detections, truths, iou_threshold)

    lines = ["class_id,recall,precision"]
    for class_id, curve in curves.items():
        lines.extend(
            f"{class_id},{recall!r},{precision!r}" for recall, precision in curve.points
        )
    summary = {
        "iou_threshold": iou_threshold,
        "map": mean_ap,
        "per_class": {
            str(class_id): {
                "ap": curve.ap,
                "flagged": curve.flagged,
                "num_detections": curve.num_detections,
                "num_truths": curve.num_truths,
            }
            for class_id, curve in curves.items()
        },
    }
    options = {
        "detections": detections_path,
        "ground_truth": truth_path,
        "iou": iou_threshold,
        "out_prefix": out_prefix,
        "svg": svg,
    }
    _write_output("\n".join(lines) + "\n", f"{out_prefix}pr_curve.csv")
    _write_output(canonical_json(summary), f"{out_prefix}summary.json")
    if svg:
        series = [
            (f"class {class_id}", [(r, p) for r, p in curve.points] or [(0.0, 0.0)])
            for class_id, curve in curves.items()
        ]
        _write_output(
            line_plot(series, "Precision-recall", "recall", "precision"),
            f"{out_prefix}pr_curve.svg",
        )
    _write_manifest(f"{out_prefix}manifest.json", "evaluate-detector", options,
                    [detections_path, truth_path], None)
    click.echo(f"mAP {mean_ap!r}")


@cli.command("evaluate-classifier")
@click.option("--predictions", "predictions_path", required=True, help="CSV of id,label rows.")
@click.option("--labels", "labels_path", required=True, help="Ground-truth CSV of id,label rows.")
@click.option("--classes", default=None, help="Comma-separated class order override.")
@click.option("--out", required=True)
def evaluate_classifier(
    predictions_path: str, labels_path: str, classes: str | None, out: str
) -> None:
    """Confusion matrix (counts and row-normalized) for predicted labels."""
    predictions = dict(load_labels(predictions_path))
    truth_rows = load_labels(labels_path)
    missing = [item_id for item_id, _ in truth_rows if item_id not in predictions]
    if missing:
        raise InputError(f"{predictions_path}: no prediction for id '{missing[0]}'")
    extra = [item_id for item_id in predictions if item_id not in {i for i, _ in truth_rows}]
    if extra:
        raise InputError(f"{labels_path}: no ground-truth label for id '{extra[0]}'")

    truth_labels = [label for _, label in truth_rows]
    predicted_labels = [predictions[item_id] for item_id, _ in truth_rows]
    if classes is not None:
        class_order = classes.split(",")
    else:
        observed = set(truth_labels) | set(predicted_labels)
        damage_names = [state.name for state in DamageState]
        if observed <= set(damage_names):
            class_order = damage_names
        elif observed <= {"collapse", "no-collapse"}:
            class_order = ["collapse", "no-collapse"]
        else:
            class_order = sorted(observed)
    matrix = confusion(predicted_labels, truth_labels, class_order)
    overall = accuracy(matrix)

    header = "section,truth," + ",".join(str(c) for c in matrix.classes)
    lines = [header]
    for i, label in enumerate(matrix.classes):
        lines.append(
            f"counts,{label}," + ",".join(str(int(v)) for v in matrix.counts[i])
        )
    for i, label in enumerate(matrix.classes):
        lines.append(
            f"normalized,{label}," + ",".join(repr(float(v)) for v in matrix.normalized[i])
        )
    options = {
        "classes": classes,
        "labels": labels_path,
        "out": out,
        "predictions": predictions_path,
    }
    _emit("\n".join(lines) + "\n", out, "evaluate-classifier", options,
          [predictions_path, labels_path])
    if out != "-":
        click.echo(f"accuracy {overall!r}")


@cli.command()
@click.option("--inventory", "inventory_path", required=True)
@click.option("--det-threshold", default=0.5, show_default=True, type=float)
@click.option("--collapse-threshold", default=0.5, show_default=True, type=float)
@click.option("--out", required=True)
def fuse(
    inventory_path: str, det_threshold: float, collapse_threshold: float, out: str
) -> None:
    """Fuse classifier and detector evidence into per-component damage states."""
    inventory = load_inventory(inventory_path)
    base_dir = Path(inventory_path).parent
    component_inputs = [
        (
            comp.component_id,
            comp.classifier_probabilities,
            component_detections(comp, base_dir),
        )
        for group in inventory.groups
        for comp in group.components
    ]
    assessment = assess_building(
        inventory.collapse_probability, collapse_threshold, component_inputs, det_threshold
    )
    lines = ["component_id,classifier_state,steel_detected,final_state"]
    if assessment.collapsed:
        lines.append("<building>,,,COLLAPSED")
    else:
        lines.extend(
            f"{a.component_id},{a.classifier_state.name},"
            f"{'true' if a.steel_detected else 'false'},{a.final_state.name}"
            for a in assessment.components
        )
    options = {
        "collapse_threshold": collapse_threshold,
        "det_threshold": det_threshold,
        "inventory": inventory_path,
        "out": out,
    }
    _emit("\n".join(lines) + "\n", out, "fuse", options, [inventory_path])
    if out != "-":
        if assessment.collapsed:
            click.echo("building collapsed")
        else:
            counts = {state.name: 0 for state in DamageState}
            for a in assessment.components:
                counts[a.final_state.name] += 1
            click.echo(" ".join(f"{name}={n}" for name, n in counts.items()))


@cli.command("estimate-cost")
@click.option("--inventory", "inventory_path", required=True)
@click.option("--fragility", "fragility_path", required=True)
@click.option("--realizations", default=10000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--det-threshold", default=0.5, show_default=True, type=float)
@click.option("--collapse-threshold", default=0.5, show_default=True, type=float)
@click.option("--costs-are-means", is_flag=True,
              help="Treat lognormal central costs as means rather than medians.")
@click.option("--out-prefix", required=True)
@click.option("--svg", is_flag=True, help="Also write a loss-curve SVG plot.")
def estimate_cost(
    inventory_path: str,
    fragility_path: str,
    realizations: int,
    seed: int,
    det_threshold: float,
    collapse_threshold: float,
    costs_are_means: bool,
    out_prefix: str,
    svg: bool,
) -> None:
    """Simulate the building repair-cost curve from fused damage states."""
    inventory = load_inventory(inventory_path)
    database = load_fragility(fragility_path)
    base_dir = Path(inventory_path).parent

    component_inputs = [
        (
            comp.component_id,
            comp.classifier_probabilities,
            component_detections(comp, base_dir),
        )
        for group in inventory.groups
        for comp in group.components
    ]
    assessment = assess_building(
        inventory.collapse_probability, collapse_threshold, component_inputs, det_threshold
    )
    if assessment.collapsed:
        groups: list[PerformanceGroup] = []
        replacement = inventory.replacement_cost
    else:
        states = {a.component_id: a.final_state for a in assessment.components}
        groups = [
            PerformanceGroup(
                fragility_id=group.fragility_id,
                quantity=group.quantity,
                component_states=tuple(
                    states[comp.component_id] for comp in group.components
                ),
            )
            for group in inventory.groups
        ]
        replacement = None
    curve = simulate_total(
        groups,
        database.entries,
        realizations=realizations,
        seed=seed,
        replacement=replacement,
        costs_are_means=costs_are_means,
    )

    n = curve.realizations.size
    cdf_lines = ["cost,cumulative_probability"]
    cdf_lines.extend(
        f"{float(cost)!r},{(i + 1) / n!r}" for i, cost in enumerate(curve.realizations)
    )
    summary = {
        "collapsed": assessment.collapsed,
        "fitted_dispersion": curve.fitted_dispersion,
        "fitted_median": curve.fitted_median,
        "mean": float(curve.realizations.mean()),
        "num_realizations": n,
        "quantile_10": quantile(curve, 0.1),
        "quantile_50": quantile(curve, 0.5),
        "quantile_90": quantile(curve, 0.9),
        "seed": seed,
    }
    options = {
        "collapse_threshold": collapse_threshold,
        "costs_are_means": costs_are_means,
        "det_threshold": det_threshold,
        "fragility": fragility_path,
        "inventory": inventory_path,
        "out_prefix": out_prefix,
        "realizations": realizations,
        "seed": seed,
        "svg": svg,
    }
    _write_output("\n".join(cdf_lines) + "\n", f"{out_prefix}cdf.csv")
    _write_output(canonical_json(summary), f"{out_prefix}summary.json")
    if svg:
        step = max(1, n // 512)
        points = [
            (float(curve.realizations[i]), (i + 1) / n) for i in range(0, n, step)
        ]
        if points[-1][1] != 1.0:
            points.append((float(curve.realizations[-1]), 1.0))
        _write_output(
            line_plot([("", points)], "Repair-cost curve", "total repair cost",
                      "cumulative probability"),
            f"{out_prefix}loss_curve.svg",
        )
    _write_manifest(f"{out_prefix}manifest.json", "estimate-cost", options,
                    [inventory_path, fragility_path], seed)
    click.echo(f"median {quantile(curve, 0.5)!r} over {n} realizations")


def main(argv: list[str] | None = None) -> int:
    """Run the CLI, mapping errors to exit codes without raising SystemExit."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # internal faults map to a distinct exit code
        click.echo(f"internal error: {exc}", err=True)
        return 3
    return 0


def entry() -> None:
    sys.exit(main())
