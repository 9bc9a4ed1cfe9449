"""Post-earthquake damage-assessment post-processing.

The package turns raw dual-network outputs into decisions and dollar
figures: it decodes detection grids into boxes, evaluates detectors and
classifiers, fuses component classification with steel-exposure detections
into damage states, and simulates building repair-cost curves from
consequence functions.
"""

__version__ = "0.1.0"

from .errors import InputError
from .geometry import BoundingBox, dimension_iou, iou, nms
from .yolo_decode import (
    STEEL_EXPOSURE_ANCHORS,
    AnchorPrior,
    DecodeConfig,
    DetectionTensor,
    decode_cell,
    decode_tensor,
    sigmoid,
    softmax,
)
from .yolo_loss import (
    GroundTruthBox,
    LossBreakdown,
    LossWeights,
    assign_responsibility,
    compute_loss,
)
from .anchor_clustering import ClusterResult, kmeans_iou, sweep_k
from .detector_eval import (
    PRCurve,
    average_precision,
    evaluate_detections,
    match_detections,
    mean_average_precision,
)
from .classifier_eval import ConfusionMatrix, accuracy, confusion
from .fusion import (
    BuildingAssessment,
    ClassificationOutput,
    ComponentAssessment,
    DamageState,
    assess_building,
    determine_damage_state,
)
from .cost_model import (
    DamageConsequence,
    FragilityEntry,
    LossCurve,
    PerformanceGroup,
    quantile,
    realization_stream,
    sample_cost,
    simulate_total,
    unit_cost,
)
from .io_formats import (
    BuildingInventory,
    FragilityDatabase,
    ImageAnnotation,
    ImageDetections,
    InventoryComponent,
    InventoryGroup,
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

__all__ = [
    "__version__",
    "InputError",
    "BoundingBox",
    "iou",
    "dimension_iou",
    "nms",
    "AnchorPrior",
    "DetectionTensor",
    "DecodeConfig",
    "STEEL_EXPOSURE_ANCHORS",
    "decode_cell",
    "decode_tensor",
    "sigmoid",
    "softmax",
    "GroundTruthBox",
    "LossWeights",
    "LossBreakdown",
    "assign_responsibility",
    "compute_loss",
    "ClusterResult",
    "kmeans_iou",
    "sweep_k",
    "PRCurve",
    "match_detections",
    "average_precision",
    "mean_average_precision",
    "evaluate_detections",
    "ConfusionMatrix",
    "confusion",
    "accuracy",
    "DamageState",
    "ClassificationOutput",
    "ComponentAssessment",
    "BuildingAssessment",
    "determine_damage_state",
    "assess_building",
    "DamageConsequence",
    "FragilityEntry",
    "PerformanceGroup",
    "LossCurve",
    "unit_cost",
    "sample_cost",
    "simulate_total",
    "quantile",
    "realization_stream",
    "ImageAnnotation",
    "ImageDetections",
    "InventoryComponent",
    "InventoryGroup",
    "BuildingInventory",
    "FragilityDatabase",
    "load_annotations",
    "save_annotations",
    "load_detections",
    "save_detections",
    "load_tensor",
    "save_tensor",
    "load_inventory",
    "save_inventory",
    "load_fragility",
    "save_fragility",
    "load_labels",
    "save_labels",
    "load_anchor_csv",
    "save_anchor_csv",
    "component_detections",
    "reduce_multiview",
]
