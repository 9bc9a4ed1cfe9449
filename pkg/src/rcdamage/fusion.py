"""Damage-state decisions combining a component classifier with a steel-exposure detector.

A component's classifier emits probabilities over four ordered damage
states. Exposed or buckled reinforcement visible to the detector overrides
the classifier: any detection at or above the score threshold forces the
most severe state. Fusion therefore never downgrades the classifier's
verdict. At the building level, a collapse probability at or above its
threshold replaces component assessment entirely.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import IntEnum

from .errors import InputError
from .geometry import BoundingBox

PROBABILITY_SUM_TOLERANCE = 1e-6


class DamageState(IntEnum):
    """Ordered damage severity, DS0 (none) through DS3 (severe)."""

    DS0 = 0
    DS1 = 1
    DS2 = 2
    DS3 = 3


@dataclass(frozen=True)
class ClassificationOutput:
    """Classifier probabilities over (DS0, DS1, DS2, DS3)."""

    probabilities: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if len(probs) != len(DamageState):
            raise InputError(
                f"expected {len(DamageState)} probabilities, got {len(probs)}"
            )
        for state, p in zip(DamageState, probs):
            if not 0.0 <= p <= 1.0:
                raise InputError(f"probability for {state.name} is {p}, outside [0, 1]")
        total = sum(probs)
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise InputError(f"probabilities sum to {total}, expected 1")

    def argmax_state(self) -> DamageState:
        """Most probable state; exact ties resolve to the more severe state."""
        peak = max(self.probabilities)
        return max(state for state in DamageState if self.probabilities[state] == peak)


@dataclass(frozen=True)
class ComponentAssessment:
    component_id: str
    classifier_state: DamageState
    steel_detected: bool
    detections: tuple[BoundingBox, ...]
    final_state: DamageState

    def __post_init__(self) -> None:
        expected = DamageState.DS3 if self.steel_detected else self.classifier_state
        if self.final_state != expected:
            raise InputError(
                f"final state {self.final_state.name} contradicts the fusion rule "
                f"(expected {expected.name})"
            )


@dataclass(frozen=True)
class BuildingAssessment:
    collapsed: bool
    components: tuple[ComponentAssessment, ...]

    def __post_init__(self) -> None:
        if self.collapsed and self.components:
            raise InputError("a collapsed building carries no component assessments")


def determine_damage_state(
    classification: ClassificationOutput,
    detections: Sequence[BoundingBox],
    det_threshold: float = 0.5,
    component_id: str = "",
) -> ComponentAssessment:
    """Fuse one component's classifier output with its steel detections."""
    if not 0.0 <= det_threshold <= 1.0:
        raise InputError(f"det_threshold must lie in [0, 1], got {det_threshold}")
    for i, det in enumerate(detections):
        if det.score is None:
            raise InputError(f"detection {i} has no score")
    steel_detected = any(det.score >= det_threshold for det in detections)
    classifier_state = classification.argmax_state()
    final_state = DamageState.DS3 if steel_detected else classifier_state
    return ComponentAssessment(
        component_id=component_id,
        classifier_state=classifier_state,
        steel_detected=steel_detected,
        detections=tuple(detections),
        final_state=final_state,
    )


def assess_building(
    collapse_probability: float,
    collapse_threshold: float,
    components: Sequence[tuple[str, ClassificationOutput, Sequence[BoundingBox]]],
    det_threshold: float = 0.5,
) -> BuildingAssessment:
    """Assess a building: collapse check first, then per-component fusion.

    components is a sequence of (component_id, classifier output, detections)
    triples. A collapse probability at or above collapse_threshold marks the
    whole building collapsed and skips component assessment.
    """
    if not 0.0 <= collapse_probability <= 1.0:
        raise InputError(
            f"collapse probability must lie in [0, 1], got {collapse_probability}"
        )
    if not 0.0 <= collapse_threshold <= 1.0:
        raise InputError(
            f"collapse threshold must lie in [0, 1], got {collapse_threshold}"
        )
    if collapse_probability >= collapse_threshold:
        return BuildingAssessment(collapsed=True, components=())
    assessed = tuple(
        determine_damage_state(classification, detections, det_threshold, component_id)
        for component_id, classification, detections in components
    )
    return BuildingAssessment(collapsed=False, components=assessed)
