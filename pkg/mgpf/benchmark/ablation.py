"""
    @file:              ablation.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the ablation harness. Every combination of the masked control (MC), the
                        language-guided loss (LL) and the mask-guided loss (ML) samples the evaluation cases over
                        several seeds and is scored by the oracles. The module also holds the paired sign test and the
                        check of the expected directional trends.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.stats import binomtest
from tqdm import tqdm

from mgpf.benchmark.oracles import CaseScores, score_image
from mgpf.benchmark.scenes import Palette
from mgpf.config import GuidanceConfig, OracleConfig
from mgpf.data_model import BenchmarkCase
from mgpf.models.bundle import ModelBundle
from mgpf.processing.masks import build_mask_set
from mgpf.sampling.sampler import MGPFSampler, SampleRequest

_logger = logging.getLogger(__name__)


class AblationRow(NamedTuple):
    name: str
    enable_mc: bool
    enable_ll: bool
    enable_ml: bool


ABLATION_ROWS = [
    AblationRow("baseline", False, False, False),
    AblationRow("+MC", True, False, False),
    AblationRow("+LL", False, True, False),
    AblationRow("+ML", False, False, True),
    AblationRow("+MC+LL", True, True, False),
    AblationRow("+MC+ML", True, False, True),
    AblationRow("+LL+ML", False, True, True),
    AblationRow("+MC+LL+ML", True, True, True)
]

BASELINE, FULL = ABLATION_ROWS[0].name, ABLATION_ROWS[-1].name


@dataclass
class AblationResult:
    """
    Scores of every ablation row.

    Elements
    --------
    rows : List[Dict[str, Any]]
        One entry per row with the flags, the mean scores and their deltas with respect to the baseline row.
    per_case : Dict[str, Dict[str, List[float]]]
        For each row name, the per-case scores (mean over seeds) under the keys attribute_match and
        object_generation.
    case_ids : List[str]
        Evaluated cases, in the order of the per-case scores.
    seeds : List[int]
        Sampling seeds.
    """
    rows: List[Dict[str, Any]] = field(default_factory=list)
    per_case: Dict[str, Dict[str, List[float]]] = field(default_factory=dict)
    case_ids: List[str] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)

    def row(self, name: str) -> Dict[str, Any]:
        for row in self.rows:
            if row["name"] == name:
                return row
        raise KeyError(f"No ablation row named {name}.")

    def to_dict(self) -> Dict[str, Any]:
        return {"rows": self.rows, "per_case": self.per_case, "case_ids": self.case_ids, "seeds": self.seeds}


def summarize(per_case: Dict[str, Dict[str, List[float]]]) -> List[Dict[str, Any]]:
    """
    Mean scores per row and deltas with respect to the baseline row, in the order of ABLATION_ROWS.
    """
    means = {
        name: {metric: float(np.mean(scores)) if scores else 0.0 for metric, scores in metrics.items()}
        for name, metrics in per_case.items()
    }
    baseline = means.get(BASELINE, {"attribute_match": 0.0, "object_generation": 0.0})

    rows = []
    for ablation_row in ABLATION_ROWS:
        if ablation_row.name not in means:
            continue
        mean = means[ablation_row.name]
        rows.append({
            "name": ablation_row.name,
            "mc": ablation_row.enable_mc,
            "ll": ablation_row.enable_ll,
            "ml": ablation_row.enable_ml,
            "attribute_match": mean["attribute_match"],
            "object_generation": mean["object_generation"],
            "delta_attribute_match": mean["attribute_match"] - baseline["attribute_match"],
            "delta_object_generation": mean["object_generation"] - baseline["object_generation"]
        })

    return rows


def _score_case(
        sampler: MGPFSampler,
        case: BenchmarkCase,
        guidance: GuidanceConfig,
        seeds: Sequence[int],
        palette: Palette,
        oracle_config: OracleConfig
) -> CaseScores:
    mask_set = build_mask_set(case.masks, set(), shape=case.image.shape[:2])
    scores = []
    for seed in seeds:
        request = SampleRequest(prompt=case.prompt, condition=case.condition, masks=case.masks, seed=seed,
                                config=guidance, case_id=case.case_id)
        image = sampler.sample(request).guided_image
        scores.append(score_image(image, case.expected_pairs, case.expected_extra, mask_set,
                                  sampler.models.classifier, palette, oracle_config))

    return CaseScores(
        attribute_match=float(np.mean([score.attribute_match for score in scores])),
        object_generation=float(np.mean([score.object_generation for score in scores]))
    )


def run_ablation(
        cases: Sequence[BenchmarkCase],
        models: ModelBundle,
        guidance: GuidanceConfig,
        seeds: Sequence[int] = (0, 1, 2),
        num_steps: int = 50,
        workers: int = 1,
        palette: Optional[Palette] = None,
        oracle_config: Optional[OracleConfig] = None,
        rows: Sequence[AblationRow] = tuple(ABLATION_ROWS)
) -> AblationResult:
    """
    Sample and score every case for every flag combination.

    Parameters
    ----------
    cases : Sequence[BenchmarkCase]
        Evaluation cases.
    models : ModelBundle
        Trained networks. The shape classifier is required.
    guidance : GuidanceConfig
        Guidance configuration. The flags are overridden by each row.
    seeds : Sequence[int]
        Sampling seeds. Per-case scores are averaged over seeds.
    num_steps : int, default = 50.
        Number of inference steps.
    workers : int, default = 1.
        Number of threads sampling independent cases.
    palette : Optional[Palette]
        Color palette.
    oracle_config : Optional[OracleConfig]
        Oracle configuration.
    rows : Sequence[AblationRow]
        Flag combinations.

    Returns
    -------
    result : AblationResult
        Ablation table with per-case scores.
    """
    palette = Palette() if palette is None else palette
    oracle_config = OracleConfig() if oracle_config is None else oracle_config
    sampler = MGPFSampler(models.eval(), num_steps=num_steps)

    result = AblationResult(case_ids=[case.case_id for case in cases], seeds=list(seeds))
    for ablation_row in rows:
        row_guidance = replace(guidance, enable_mc=ablation_row.enable_mc, enable_ll=ablation_row.enable_ll,
                               enable_ml=ablation_row.enable_ml)
        _logger.info(f"Ablation row {ablation_row.name} on {len(cases)} cases x {len(seeds)} seeds.")

        def score(case: BenchmarkCase) -> CaseScores:
            return _score_case(sampler, case, row_guidance, seeds, palette, oracle_config)

        progress = dict(total=len(cases), desc=ablation_row.name, disable=not _logger.isEnabledFor(logging.INFO))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                case_scores = list(tqdm(executor.map(score, cases), **progress))
        else:
            case_scores = [score(case) for case in tqdm(cases, **progress)]

        result.per_case[ablation_row.name] = {
            "attribute_match": [scores.attribute_match for scores in case_scores],
            "object_generation": [scores.object_generation for scores in case_scores]
        }

    result.rows = summarize(result.per_case)

    return result


def _relative(delta: float, baseline: float) -> str:
    return f"{100.0 * delta / baseline:+.1f}%" if baseline > 0 else f"{delta:+.4f}"


def format_table(result: AblationResult) -> str:
    """
    Text table of the ablation, one line per row, deltas relative to the baseline row.
    """
    baseline = result.row(BASELINE) if any(row["name"] == BASELINE for row in result.rows) else None
    lines = [f"{'Method':<12}{'MC':>4}{'LL':>4}{'ML':>4}  {'Attribute match':<22}{'Object generation':<22}"]
    for row in result.rows:
        flags = "".join(f"{'x' if row[flag] else '-':>4}" for flag in ("mc", "ll", "ml"))
        attribute, objects = f"{row['attribute_match']:.4f}", f"{row['object_generation']:.4f}"
        if baseline is not None and row["name"] != BASELINE:
            attribute += f" ({_relative(row['delta_attribute_match'], baseline['attribute_match'])})"
            objects += f" ({_relative(row['delta_object_generation'], baseline['object_generation'])})"
        lines.append(f"{row['name']:<12}{flags}  {attribute:<22}{objects:<22}")

    return "\n".join(lines)


class SignTestResult(NamedTuple):
    improved: int
    worsened: int
    p_value: float


def paired_sign_test(reference: Sequence[float], candidate: Sequence[float]) -> SignTestResult:
    """
    One-sided paired sign test of candidate > reference. Ties are dropped.

    Parameters
    ----------
    reference : Sequence[float]
        Per-case scores of the reference.
    candidate : Sequence[float]
        Per-case scores of the candidate, same cases and order.

    Returns
    -------
    result : SignTestResult
        Number of improved and worsened cases, and the p-value (1.0 without any untied case).
    """
    if len(reference) != len(candidate):
        raise ValueError(f"Paired samples must have the same length, got {len(reference)} and {len(candidate)}.")

    differences = np.asarray(candidate, dtype=np.float64) - np.asarray(reference, dtype=np.float64)
    improved, worsened = int((differences > 0).sum()), int((differences < 0).sum())
    if improved + worsened == 0:
        return SignTestResult(improved, worsened, 1.0)

    p_value = binomtest(improved, improved + worsened, 0.5, alternative="greater").pvalue

    return SignTestResult(improved, worsened, float(p_value))


def check_directional_trends(
        result: AblationResult,
        significance: float = 0.05,
        tolerance: float = 0.05
) -> Dict[str, Any]:
    """
    Check the expected trends of the ablation : masked control improves object generation, the guidance losses improve
    attribute matching, and the full method is within tolerance of the best row on both scores.

    Parameters
    ----------
    result : AblationResult
        Full 8-row ablation.
    significance : float, default = 0.05.
        Significance level of the paired sign tests.
    tolerance : float, default = 0.05.
        Maximal gap between the full method and the best row.

    Returns
    -------
    checks : Dict[str, Any]
        Boolean checks, sign tests and the overall verdict under "passed".
    """
    baseline = result.per_case[BASELINE]
    mc = paired_sign_test(baseline["object_generation"], result.per_case["+MC"]["object_generation"])
    losses = paired_sign_test(baseline["attribute_match"], result.per_case["+LL+ML"]["attribute_match"])

    full = result.row(FULL)
    best_attribute = max(row["attribute_match"] for row in result.rows)
    best_object = max(row["object_generation"] for row in result.rows)

    checks = {
        "mc_improves_object_generation": bool(
            result.row("+MC")["delta_object_generation"] > 0 and mc.p_value < significance
        ),
        "losses_improve_attribute_match": bool(
            result.row("+LL+ML")["delta_attribute_match"] > 0 and losses.p_value < significance
        ),
        "full_is_balanced": bool(
            best_attribute - full["attribute_match"] <= tolerance
            and best_object - full["object_generation"] <= tolerance
        ),
        "sign_tests": {"mc_object_generation": mc._asdict(), "losses_attribute_match": losses._asdict()}
    }
    checks["passed"] = all(checks[key] for key in ("mc_improves_object_generation", "losses_improve_attribute_match",
                                                    "full_is_balanced"))

    return checks
