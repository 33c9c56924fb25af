import numpy as np
import pytest

from mgpf.benchmark import (ABLATION_ROWS, AblationResult, check_directional_trends, format_table, paired_sign_test,
                            run_ablation)
from mgpf.benchmark.ablation import BASELINE, FULL, summarize
from mgpf.config import GuidanceConfig, OracleConfig
from mgpf.data_model import BenchmarkCase
from mgpf.grammar import parse_prompt
from mgpf.models.bundle import ModelBundle
from mgpf.models.shape_classifier import ShapeClassifier

from .conftest import TOY_SIZE

CASES = 12


def _per_case(attribute, objects):
    return {"attribute_match": list(attribute), "object_generation": list(objects)}


def _result(per_case):
    return AblationResult(rows=summarize(per_case), per_case=per_case, case_ids=[str(i) for i in range(CASES)],
                          seeds=[0])


@pytest.fixture
def expected_trends():
    low, high = [0.2] * CASES, [0.8] * CASES
    per_case = {row.name: _per_case(low, low) for row in ABLATION_ROWS}
    per_case["+MC"] = _per_case(low, high)
    per_case["+LL+ML"] = _per_case(high, low)
    per_case[FULL] = _per_case(high, high)

    return _result(per_case)


class TestSignTest:

    def test_all_improved(self):
        result = paired_sign_test([0.0] * 10, [1.0] * 10)

        assert (result.improved, result.worsened) == (10, 0)
        assert result.p_value == pytest.approx(0.5 ** 10)

    def test_ties_are_dropped(self):
        result = paired_sign_test([0.5, 0.5, 0.2, 0.7], [0.5, 0.5, 0.3, 0.6])

        assert (result.improved, result.worsened) == (1, 1)
        assert result.p_value == pytest.approx(0.75)

    def test_only_ties(self):
        assert paired_sign_test([0.3, 0.4], [0.3, 0.4]).p_value == 1.0

    def test_unpaired_samples(self):
        with pytest.raises(ValueError):
            paired_sign_test([0.1], [0.1, 0.2])


def test_summarize_orders_rows_and_computes_deltas():
    per_case = {"+MC": _per_case([1.0, 0.5], [0.5, 0.5]), BASELINE: _per_case([0.5, 0.5], [0.0, 1.0])}

    rows = summarize(per_case)

    assert [row["name"] for row in rows] == [BASELINE, "+MC"]
    assert rows[1]["attribute_match"] == pytest.approx(0.75)
    assert rows[1]["delta_attribute_match"] == pytest.approx(0.25)
    assert rows[1]["delta_object_generation"] == pytest.approx(0.0)
    assert (rows[1]["mc"], rows[1]["ll"], rows[1]["ml"]) == (True, False, False)


def test_format_table(expected_trends):
    lines = format_table(expected_trends).splitlines()

    assert len(lines) == len(ABLATION_ROWS) + 1
    assert lines[1].startswith(BASELINE)
    assert "+300.0%" in lines[2]
    assert lines[-1].startswith(FULL)


def test_expected_trends_pass(expected_trends):
    checks = check_directional_trends(expected_trends)

    assert checks["mc_improves_object_generation"]
    assert checks["losses_improve_attribute_match"]
    assert checks["full_is_balanced"]
    assert checks["passed"]
    assert checks["sign_tests"]["mc_object_generation"]["improved"] == CASES


def test_flat_ablation_fails_the_trends():
    flat = [0.5] * CASES
    result = _result({row.name: _per_case(flat, flat) for row in ABLATION_ROWS})

    checks = check_directional_trends(result)

    assert not checks["mc_improves_object_generation"]
    assert not checks["losses_improve_attribute_match"]
    assert checks["full_is_balanced"]
    assert not checks["passed"]


def test_unbalanced_full_method_fails(expected_trends):
    expected_trends.per_case[FULL] = _per_case([0.2] * CASES, [0.8] * CASES)
    expected_trends.rows = summarize(expected_trends.per_case)

    assert not check_directional_trends(expected_trends)["full_is_balanced"]


class TestRunAblation:

    @pytest.fixture
    def toy_case(self, toy_vocabulary, toy_masks, toy_condition):
        prompt = "a red circle and a blue square , a star in the park"
        image = np.zeros((TOY_SIZE, TOY_SIZE, 3))
        return BenchmarkCase(
            case_id="toy", split="eval", image=image, condition=toy_condition, masks=toy_masks, prompt=prompt,
            parsed_prompt=parse_prompt(prompt, [mask.name for mask in toy_masks], toy_vocabulary),
            expected_pairs=[("red", "circle"), ("blue", "square")], expected_extra=["star"]
        )

    @pytest.fixture
    def models(self, toy_denoiser, toy_branch, toy_schedule, toy_vocabulary):
        classifier = ShapeClassifier(toy_vocabulary.objects, crop_size=8, channels=[4]).double()
        return ModelBundle(denoiser=toy_denoiser, control_branch=toy_branch, schedule=toy_schedule,
                           vocabulary=toy_vocabulary, classifier=classifier)

    def test_scores_every_row(self, toy_case, models):
        oracle = OracleConfig(min_blob_size=1, crop_size=8, erosion_radius=0)
        result = run_ablation([toy_case, toy_case], models, GuidanceConfig(alpha=1.0), seeds=(0, 1), num_steps=3,
                              oracle_config=oracle, rows=ABLATION_ROWS[:3])

        assert [row["name"] for row in result.rows] == [row.name for row in ABLATION_ROWS[:3]]
        assert result.case_ids == ["toy", "toy"]
        for scores in result.per_case.values():
            assert len(scores["attribute_match"]) == 2
            assert scores["attribute_match"][0] == scores["attribute_match"][1]
            assert all(0.0 <= score <= 1.0 for score in scores["attribute_match"] + scores["object_generation"])
        assert set(result.to_dict()) == {"rows", "per_case", "case_ids", "seeds"}

    def test_threads_do_not_change_the_scores(self, toy_case, models):
        oracle = OracleConfig(min_blob_size=1, crop_size=8, erosion_radius=0)
        kwargs = dict(seeds=(0,), num_steps=3, oracle_config=oracle, rows=ABLATION_ROWS[:2])

        sequential = run_ablation([toy_case] * 3, models, GuidanceConfig(alpha=1.0), workers=1, **kwargs)
        threaded = run_ablation([toy_case] * 3, models, GuidanceConfig(alpha=1.0), workers=3, **kwargs)

        assert sequential.per_case == threaded.per_case
