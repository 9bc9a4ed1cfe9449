"""Classifier-detector fusion and building-level collapse decisions."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcdamage import (
    BoundingBox,
    BuildingAssessment,
    ClassificationOutput,
    ComponentAssessment,
    DamageState,
    InputError,
    assess_building,
    determine_damage_state,
)


def detection(score: float) -> BoundingBox:
    return BoundingBox(10.0, 10.0, 40.0, 80.0, score=score, class_id=0)


def probabilities_for(state: DamageState) -> ClassificationOutput:
    probs = [0.1, 0.1, 0.1, 0.1]
    probs[state] = 0.7
    return ClassificationOutput(tuple(probs))


unit_probs = st.tuples(
    st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0)
).map(lambda raw: ClassificationOutput(tuple(v / sum(raw) for v in raw)))


class TestClassificationOutput:
    def test_requires_four_probabilities(self):
        with pytest.raises(InputError, match="4 probabilities"):
            ClassificationOutput((0.5, 0.5))

    def test_requires_unit_sum(self):
        with pytest.raises(InputError, match="sum to"):
            ClassificationOutput((0.4, 0.3, 0.1, 0.1))

    def test_requires_probabilities_in_range(self):
        with pytest.raises(InputError, match="outside"):
            ClassificationOutput((1.2, -0.2, 0.0, 0.0))

    def test_argmax_state(self):
        assert probabilities_for(DamageState.DS2).argmax_state() == DamageState.DS2

    def test_argmax_tie_resolves_to_the_more_severe_state(self):
        tied = ClassificationOutput((0.4, 0.1, 0.1, 0.4))
        assert tied.argmax_state() == DamageState.DS3
        low_tie = ClassificationOutput((0.45, 0.45, 0.05, 0.05))
        assert low_tie.argmax_state() == DamageState.DS1


class TestDetermineDamageState:
    def test_no_detections_keeps_the_classifier_state(self):
        result = determine_damage_state(probabilities_for(DamageState.DS1), [])
        assert result.final_state == DamageState.DS1
        assert not result.steel_detected

    def test_strong_detection_forces_most_severe_state(self):
        result = determine_damage_state(
            probabilities_for(DamageState.DS1), [detection(0.9)]
        )
        assert result.steel_detected
        assert result.final_state == DamageState.DS3
        assert result.classifier_state == DamageState.DS1

    def test_weak_detection_is_ignored(self):
        result = determine_damage_state(
            probabilities_for(DamageState.DS2), [detection(0.3)]
        )
        assert not result.steel_detected
        assert result.final_state == DamageState.DS2

    def test_score_exactly_at_threshold_counts(self):
        result = determine_damage_state(
            probabilities_for(DamageState.DS0), [detection(0.5)], det_threshold=0.5
        )
        assert result.steel_detected

    def test_unscored_detection_rejected(self):
        bare = BoundingBox(0.0, 0.0, 10.0, 10.0)
        with pytest.raises(InputError, match="no score"):
            determine_damage_state(probabilities_for(DamageState.DS0), [bare])

    def test_threshold_validated(self):
        with pytest.raises(InputError, match="det_threshold"):
            determine_damage_state(probabilities_for(DamageState.DS0), [], 1.5)

    @given(unit_probs, st.lists(st.floats(0, 1), max_size=4), st.floats(0, 1))
    def test_fusion_never_downgrades(self, classification, scores, threshold):
        detections = [detection(s) for s in scores]
        result = determine_damage_state(classification, detections, threshold)
        assert result.final_state >= result.classifier_state
        assert result.classifier_state == classification.argmax_state()

    @given(unit_probs, st.lists(st.floats(0, 1), max_size=4), st.floats(0, 1))
    def test_every_classifier_ds3_stays_ds3(self, classification, scores, threshold):
        # fused DS3 components are a superset of classifier DS3 components
        detections = [detection(s) for s in scores]
        result = determine_damage_state(classification, detections, threshold)
        if classification.argmax_state() == DamageState.DS3:
            assert result.final_state == DamageState.DS3


class TestAssessmentInvariants:
    def test_component_final_state_must_follow_the_rule(self):
        with pytest.raises(InputError, match="contradicts"):
            ComponentAssessment(
                component_id="c",
                classifier_state=DamageState.DS1,
                steel_detected=False,
                detections=(),
                final_state=DamageState.DS3,
            )

    def test_steel_forces_ds3_in_the_constructor(self):
        with pytest.raises(InputError, match="contradicts"):
            ComponentAssessment(
                component_id="c",
                classifier_state=DamageState.DS1,
                steel_detected=True,
                detections=(detection(0.9),),
                final_state=DamageState.DS1,
            )

    def test_collapsed_building_carries_no_components(self):
        component = determine_damage_state(probabilities_for(DamageState.DS1), [])
        with pytest.raises(InputError, match="collapsed"):
            BuildingAssessment(collapsed=True, components=(component,))


class TestAssessBuilding:
    def components(self):
        return [
            ("c1", probabilities_for(DamageState.DS1), []),
            ("c2", probabilities_for(DamageState.DS2), [detection(0.9)]),
        ]

    def test_below_collapse_threshold_assesses_components(self):
        result = assess_building(0.2, 0.5, self.components())
        assert not result.collapsed
        assert [c.final_state for c in result.components] == [
            DamageState.DS1,
            DamageState.DS3,
        ]
        assert [c.component_id for c in result.components] == ["c1", "c2"]

    def test_collapse_probability_at_threshold_collapses(self):
        result = assess_building(0.5, 0.5, self.components())
        assert result.collapsed
        assert result.components == ()

    def test_collapse_probability_validated(self):
        with pytest.raises(InputError, match="collapse probability"):
            assess_building(1.5, 0.5, [])

    def test_collapse_threshold_validated(self):
        with pytest.raises(InputError, match="collapse threshold"):
            assess_building(0.5, -0.1, [])

    def test_detection_threshold_is_passed_through(self):
        weak = [("c1", probabilities_for(DamageState.DS0), [detection(0.4)])]
        lenient = assess_building(0.0, 0.5, weak, det_threshold=0.3)
        strict = assess_building(0.0, 0.5, weak, det_threshold=0.5)
        assert lenient.components[0].final_state == DamageState.DS3
        assert strict.components[0].final_state == DamageState.DS0
