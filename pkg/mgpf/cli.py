"""
    @file:              cli.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the command-line interface of the mgpf package. Subcommands generate the
                        benchmark, train the networks, sample, evaluate samples and run the ablation. Every command
                        writes its outputs and a run.json snapshot of its arguments and configuration in its run
                        directory, from which `mgpf rerun` repeats it.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mgpf.benchmark.ablation import check_directional_trends, format_table, run_ablation
from mgpf.benchmark.generator import EVAL, TRAIN, generate_dataset
from mgpf.benchmark.oracles import score_image
from mgpf.config import RunConfig
from mgpf.data_generators.benchmark_cases_generator import BenchmarkCasesGenerator
from mgpf.data_model import BenchmarkCase, ConditionImage
from mgpf.data_readers.image_reader import ImageReader
from mgpf.data_readers.manifest_reader import MANIFEST_FILENAME, read_manifest, write_manifest
from mgpf.data_readers.mask_reader import MaskReader
from mgpf.errors import ConfigInvalid, MGPFError, MissingCheckpoint, UntrustedCheckpoint
from mgpf.grammar.vocabulary import Vocabulary
from mgpf.models.bundle import (ModelBundle, checkpoint_is_trusted, load_classifier, load_control_branch,
                                load_denoiser, save_classifier, save_control_branch, save_denoiser)
from mgpf.models.diffusion import NoiseSchedule
from mgpf.processing.masks import build_mask_set
from mgpf.sampling.sampler import MGPFSampler, SampleRequest, write_sample_outputs
from mgpf.training.datasets import BenchmarkImageDataset
from mgpf.training.trainers import train_control_branch, train_denoiser, train_shape_classifier

_logger = logging.getLogger(__name__)

RUN_SNAPSHOT = "run.json"
SAMPLES_INDEX = "samples.jsonl"
METRICS = "metrics.json"
CONTROLNET_BASELINE = "controlnet-baseline"
CHECKPOINTS = {"denoiser": "denoiser.h5", "control": "control.h5", "classifier": "classifier.h5"}
# Arguments recorded in run.json. The configuration is recorded separately.
COMMAND_ARGUMENTS = {
    "gen-data": ("split", "count"),
    "train": ("target", "overwrite"),
    "sample": ("case_id", "limit", "prompt", "condition", "masks", "preset"),
    "eval": ("results",),
    "ablate": ()
}


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="Path to a JSON run configuration.")
    parser.add_argument("--seed", type=int, default=None, help="Global seed, also the sampling seed.")
    parser.add_argument("--alpha", type=float, default=None, help="Guidance step size.")
    parser.add_argument("--no-mc", action="store_true", help="Disable the masked control.")
    parser.add_argument("--no-ll", action="store_true", help="Disable the language-guided loss.")
    parser.add_argument("--no-ml", action="store_true", help="Disable the mask-guided loss.")
    parser.add_argument("--preset", choices=[CONTROLNET_BASELINE], default=None,
                        help="Sample with the plain ControlNet-style loop (alpha 0, MC, LL and ML off).")
    parser.add_argument("--workers", type=int, default=None, help="Threads used for independent cases.")
    parser.add_argument("--out", type=str, default=None, help="Run directory. Defaults to <runs>/<command>.")
    parser.add_argument("--overwrite", action="store_true", help="Overwrite existing checkpoints.")
    _add_run_arguments(parser)


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--allow-untrusted", action="store_true",
                        help="Score with checkpoints that failed their held-out gate.")
    parser.add_argument("--verbose", action="store_true", help="Debug logging.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgpf", description="Mask-guided prompt following at desk scale.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen_data = subparsers.add_parser("gen-data", help="Generate the training and evaluation splits.")
    gen_data.add_argument("--split", choices=[TRAIN, EVAL, "both"], default="both")
    gen_data.add_argument("--count", type=int, default=None, help="Number of cases of each generated split.")

    train = subparsers.add_parser("train", help="Train a network.")
    train.add_argument("target", choices=list(CHECKPOINTS))

    sample = subparsers.add_parser("sample", help="Sample evaluation cases or an explicit request.")
    sample.add_argument("--case-id", action="append", default=None, help="Evaluation case id, repeatable.")
    sample.add_argument("--limit", type=int, default=None, help="Number of evaluation cases without --case-id.")
    sample.add_argument("--prompt", type=str, default=None)
    sample.add_argument("--condition", type=str, default=None, help="Path to the condition PNG.")
    sample.add_argument("--masks", type=str, default=None, help="Folder of <object-name>.png masks.")

    evaluate = subparsers.add_parser("eval", help="Score sampled images with the oracles.")
    evaluate.add_argument("--results", type=str, default=None, help="Run directory of a sample command.")

    subparsers.add_parser("ablate", help="Run the 8-row ablation over MC, LL and ML.")

    for subparser in subparsers.choices.values():
        _add_common_arguments(subparser)

    rerun = subparsers.add_parser("rerun", help="Repeat a run from its run.json snapshot.")
    rerun.add_argument("snapshot", help="Run directory, or path to its run.json.")
    rerun.add_argument("--out", type=str, default=None, help="Run directory. Defaults to <runs>/<command>_rerun.")
    rerun.add_argument("--overwrite", action="store_true", help="Overwrite existing checkpoints.")
    _add_run_arguments(rerun)

    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Configuration file, then command-line overrides.
    """
    config = RunConfig.load(args.config) if args.config else RunConfig()

    if args.seed is not None:
        config = replace(config, seed=args.seed, sample_seeds=[args.seed])
    if args.workers is not None:
        config = replace(config, workers=args.workers)

    changes: Dict[str, Any] = {}
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.no_mc:
        changes["enable_mc"] = False
    if args.no_ll:
        changes["enable_ll"] = False
    if args.no_ml:
        changes["enable_ml"] = False
    if args.preset == CONTROLNET_BASELINE:
        changes.update(alpha=0.0, enable_mc=False, enable_ll=False, enable_ml=False)
    if changes:
        config = config.replace_guidance(**changes)

    config.validate()

    return config


def command_arguments(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    """
    Effective arguments of the command, with paths made absolute and the default sample run resolved.
    """
    arguments = {name: getattr(args, name) for name in COMMAND_ARGUMENTS[args.command]}

    for name in ("condition", "masks", "results"):
        if arguments.get(name) is not None:
            arguments[name] = os.path.abspath(arguments[name])
    if args.command == "eval" and arguments["results"] is None:
        arguments["results"] = os.path.join(config.paths.runs_dir, "sample")

    return arguments


def prepare_run_dir(config: RunConfig, command: str, arguments: Dict[str, Any], out: Optional[str]) -> str:
    """
    Create the run directory and write run.json, the snapshot from which `mgpf rerun` repeats the command.
    """
    run_dir = out if out else os.path.join(config.paths.runs_dir, command)
    os.makedirs(run_dir, exist_ok=True)

    snapshot = {"command": command, "arguments": arguments, "config": config.to_dict()}
    with open(os.path.join(run_dir, RUN_SNAPSHOT), "w", encoding="utf-8") as snapshot_file:
        json.dump(snapshot, snapshot_file, ensure_ascii=False, indent=4, sort_keys=True)
    _logger.info(f"Run directory : {run_dir}")

    return run_dir


def load_run_snapshot(path: str) -> Tuple[str, Dict[str, Any], RunConfig]:
    """
    Read a run snapshot, given as a run directory or as the path to its run.json.

    Parameters
    ----------
    path : str
        Run directory or snapshot file.

    Returns
    -------
    command, arguments, config : Tuple[str, Dict[str, Any], RunConfig]
        Command name, effective command arguments and validated configuration of the run.
    """
    path = os.path.join(path, RUN_SNAPSHOT) if os.path.isdir(path) else path
    with open(path, "r", encoding="utf-8") as snapshot_file:
        try:
            snapshot = json.load(snapshot_file)
        except json.JSONDecodeError as error:
            raise ConfigInvalid(f"Run snapshot {path} is not valid JSON : {error}", path=path) from error

    command = snapshot.get("command") if isinstance(snapshot, dict) else None
    if command not in COMMAND_ARGUMENTS:
        raise ConfigInvalid(f"Run snapshot {path} does not name a known command.", key="command", path=path)

    arguments = snapshot.get("arguments") or {}
    unknown = sorted(set(arguments) - set(COMMAND_ARGUMENTS[command]))
    if unknown:
        raise ConfigInvalid(f"Run snapshot {path} has unknown arguments {unknown}.", key=f"arguments.{unknown[0]}",
                            path=path)

    config = RunConfig.from_dict(snapshot.get("config") or {})

    return command, {**dict.fromkeys(COMMAND_ARGUMENTS[command]), **arguments}, config


def checkpoint_path(config: RunConfig, kind: str) -> str:
    return os.path.join(config.paths.checkpoints_dir, CHECKPOINTS[kind])


def manifest_path(config: RunConfig, split: str) -> str:
    return os.path.join(config.paths.dataset_dir, split, MANIFEST_FILENAME)


def training_schedule(config: RunConfig) -> NoiseSchedule:
    return NoiseSchedule.linear(config.schedule.num_train_timesteps, config.schedule.beta_start,
                                config.schedule.beta_end)


def load_models(config: RunConfig, with_control: bool = True, with_classifier: bool = False) -> ModelBundle:
    """
    Load the trained networks from the checkpoint folder.
    """
    schedule, vocabulary = training_schedule(config), Vocabulary.default()
    denoiser = load_denoiser(checkpoint_path(config, "denoiser"), schedule, vocabulary)
    branch = load_control_branch(checkpoint_path(config, "control"), denoiser) if with_control else None
    classifier = load_classifier(checkpoint_path(config, "classifier")) if with_classifier else None

    return ModelBundle(denoiser=denoiser, control_branch=branch, schedule=schedule, vocabulary=vocabulary,
                       classifier=classifier).eval()


def check_trusted(config: RunConfig, kinds: Sequence[str], allow_untrusted: bool = False) -> None:
    """
    Refuse to score with checkpoints whose training report is not trusted, unless allow_untrusted is set.
    """
    untrusted = [kind for kind in kinds if not checkpoint_is_trusted(checkpoint_path(config, kind))]
    if not untrusted:
        return

    message = f"Checkpoints {untrusted} failed their held-out gate."
    if not allow_untrusted:
        raise UntrustedCheckpoint(f"{message} Retrain them or pass --allow-untrusted.", checkpoints=untrusted)
    _logger.warning(f"{message} Scores are not trustworthy.")


def load_cases(
        config: RunConfig,
        split: str,
        case_ids: Optional[Sequence[str]] = None,
        limit: Optional[int] = None
) -> List[BenchmarkCase]:
    generator = BenchmarkCasesGenerator(manifest_path(config, split), case_ids=case_ids, limit=limit)
    cases = list(generator)
    for case_who_failed in generator.cases_who_failed:
        _logger.warning(f"Skipped case {case_who_failed.id} : {case_who_failed.message}")

    return cases


def cmd_gen_data(config: RunConfig, split: str = "both", count: Optional[int] = None) -> List[str]:
    """
    Generate the benchmark splits in the dataset folder.
    """
    splits = [TRAIN, EVAL] if split == "both" else [split]
    counts = {TRAIN: config.benchmark.train_count, EVAL: config.benchmark.eval_count}

    return [
        generate_dataset(config.paths.dataset_dir, config.seed, count or counts[name], name, config.benchmark)
        for name in splits
    ]


def cmd_train(config: RunConfig, target: str, run_dir: str, overwrite: bool = False) -> str:
    """
    Train a network and save its checkpoint. The control branch needs a trained denoiser.
    """
    vocabulary, schedule = Vocabulary.default(), training_schedule(config)
    path = checkpoint_path(config, target)
    os.makedirs(config.paths.checkpoints_dir, exist_ok=True)

    if target == "classifier":
        classifier, report = train_shape_classifier(vocabulary, config)
        path = save_classifier(path, classifier, extra={"report": report.to_dict()}, overwrite=overwrite)
    else:
        dataset = BenchmarkImageDataset.from_manifest(manifest_path(config, TRAIN), vocabulary=vocabulary)
        if target == "denoiser":
            denoiser, report = train_denoiser(dataset, vocabulary, schedule, config)
            path = save_denoiser(path, denoiser, schedule, vocabulary, extra={"report": report.to_dict()},
                                 overwrite=overwrite)
        else:
            denoiser_path = checkpoint_path(config, "denoiser")
            if not os.path.exists(denoiser_path):
                raise MissingCheckpoint(f"Training the control branch needs a denoiser checkpoint at "
                                        f"{denoiser_path}. Run `mgpf train denoiser` first.", path=denoiser_path)
            denoiser = load_denoiser(denoiser_path, schedule, vocabulary)
            branch, report = train_control_branch(dataset, denoiser, schedule, config)
            path = save_control_branch(path, branch, denoiser, extra={"report": report.to_dict()},
                                       overwrite=overwrite)

    with open(os.path.join(run_dir, f"{target}_report.json"), "w", encoding="utf-8") as report_file:
        json.dump(report.to_dict(), report_file, indent=4, sort_keys=True)

    return path


def _explicit_request(config: RunConfig, prompt: str, condition: str, masks: Optional[str]) -> BenchmarkCase:
    if condition is None:
        raise ConfigInvalid("An explicit sampling request needs --prompt and --condition.", key="condition")

    grid = ImageReader(condition).get_array()
    grid = grid[None] if grid.ndim == 2 else np.moveaxis(grid, -1, 0)
    object_masks = MaskReader.from_folder(masks).get_object_masks() if masks else []

    return BenchmarkCase(case_id="request", split="", image=np.zeros(grid.shape[1:] + (3,)),
                         condition=ConditionImage(grid=grid, kind=config.benchmark.condition_kind),
                         masks=object_masks, prompt=prompt, parsed_prompt=None, expected_pairs=[],
                         expected_extra=[])


def cmd_sample(
        config: RunConfig,
        run_dir: str,
        cases: Sequence[BenchmarkCase],
        preset: Optional[str] = None
) -> List[Dict[str, Any]]:
    """
    Sample every case for every sampling seed. Outputs go to <run_dir>/<case id>/seed_<seed>/ and are listed in
    samples.jsonl.
    """
    sampler = MGPFSampler(load_models(config), num_steps=config.schedule.num_inference_steps)
    jobs = [(case, seed) for case in cases for seed in config.sample_seeds]

    def sample(job) -> Dict[str, Any]:
        case, seed = job
        request = SampleRequest(prompt=case.prompt, condition=case.condition, masks=case.masks, seed=seed,
                                config=config.guidance, case_id=case.case_id)
        result = sampler.sample_controlnet(request) if preset == CONTROLNET_BASELINE else sampler.sample(request)
        paths = write_sample_outputs(result, os.path.join(run_dir, case.case_id, f"seed_{seed}"))
        _logger.info(f"Sampled case {case.case_id} with seed {seed}.")

        return {"case_id": case.case_id, "seed": seed, **{key: os.path.relpath(path, run_dir)
                                                          for key, path in paths.items()}}

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            entries = list(executor.map(sample, jobs))
    else:
        entries = [sample(job) for job in jobs]

    write_manifest(entries, os.path.join(run_dir, SAMPLES_INDEX))

    return entries


def cmd_eval(config: RunConfig, results_dir: str, run_dir: str, allow_untrusted: bool = False) -> str:
    """
    Score the guided images of a sample run with both oracles and write metrics.json. The shape classifier must be
    trusted unless allow_untrusted is set.
    """
    check_trusted(config, ["classifier"], allow_untrusted)
    entries = read_manifest(os.path.join(results_dir, SAMPLES_INDEX))
    cases = {case.case_id: case for case in load_cases(config, EVAL, case_ids=[entry["case_id"] for entry in entries])}
    classifier = load_models(config, with_control=False, with_classifier=True).classifier

    def score(entry: Dict[str, Any]) -> Optional[Dict[str, Any]]:
        case = cases.get(entry["case_id"])
        if case is None:
            _logger.warning(f"Sample {entry['case_id']} is not an evaluation case and is not scored.")
            return None
        image = ImageReader(os.path.join(results_dir, entry["guided"])).get_array()
        mask_set = build_mask_set(case.masks, [], shape=image.shape[:2])
        scores = score_image(image, case.expected_pairs, case.expected_extra, mask_set, classifier,
                             config=config.oracle)

        return {"case_id": case.case_id, "seed": entry["seed"], **scores._asdict()}

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            rows = list(executor.map(score, entries))
    else:
        rows = [score(entry) for entry in entries]
    rows = [row for row in rows if row is not None]

    metrics = {
        "count": len(rows),
        "attribute_match": float(np.mean([row["attribute_match"] for row in rows])) if rows else None,
        "object_generation": float(np.mean([row["object_generation"] for row in rows])) if rows else None,
        "cases": rows
    }
    path = os.path.join(run_dir, METRICS)
    with open(path, "w", encoding="utf-8") as metrics_file:
        json.dump(metrics, metrics_file, indent=4, sort_keys=True)

    return path


def cmd_ablate(config: RunConfig, run_dir: str, allow_untrusted: bool = False) -> str:
    """
    Run the ablation on the first ablation_cases evaluation cases and write ablation.json and ablation.txt. Every
    checkpoint must be trusted unless allow_untrusted is set.
    """
    check_trusted(config, list(CHECKPOINTS), allow_untrusted)
    cases = load_cases(config, EVAL, limit=config.ablation_cases)
    result = run_ablation(cases, load_models(config, with_classifier=True), config.guidance,
                          seeds=config.ablation_seeds, num_steps=config.schedule.num_inference_steps,
                          workers=config.workers, oracle_config=config.oracle)

    table = format_table(result)
    with open(os.path.join(run_dir, "ablation.txt"), "w", encoding="utf-8") as table_file:
        table_file.write(table + "\n")
    with open(os.path.join(run_dir, "ablation.json"), "w", encoding="utf-8") as json_file:
        json.dump({**result.to_dict(), "trends": check_directional_trends(result)}, json_file, indent=4,
                  sort_keys=True)
    print(table)

    return os.path.join(run_dir, "ablation.json")


def _set_verbosity(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    package_logger = logging.getLogger("mgpf")
    package_logger.setLevel(level)
    for handler in package_logger.handlers:
        handler.setLevel(level)


def _emit_error(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)


def execute(
        config: RunConfig,
        command: str,
        arguments: Dict[str, Any],
        run_dir: str,
        allow_untrusted: bool = False
) -> Dict[str, Any]:
    """
    Execute a command with its effective arguments, as recorded in run.json.
    """
    if command == "gen-data":
        return {"manifests": cmd_gen_data(config, arguments["split"] or "both", arguments["count"])}
    if command == "train":
        return {"checkpoint": cmd_train(config, arguments["target"], run_dir, overwrite=bool(arguments["overwrite"]))}
    if command == "sample":
        if arguments["prompt"] is not None:
            cases = [_explicit_request(config, arguments["prompt"], arguments["condition"], arguments["masks"])]
        else:
            cases = load_cases(config, EVAL, case_ids=arguments["case_id"], limit=arguments["limit"])
        return {"samples": cmd_sample(config, run_dir, cases, preset=arguments["preset"])}
    if command == "eval":
        return {"metrics": cmd_eval(config, arguments["results"], run_dir, allow_untrusted=allow_untrusted)}

    return {"ablation": cmd_ablate(config, run_dir, allow_untrusted=allow_untrusted)}


def run(args: argparse.Namespace) -> Dict[str, Any]:
    if args.command == "rerun":
        command, arguments, config = load_run_snapshot(args.snapshot)
        if command == "train" and args.overwrite:
            arguments["overwrite"] = True
        out = args.out or os.path.join(config.paths.runs_dir, f"{command}_rerun")
        _logger.info(f"Repeating {command} from {args.snapshot}.")
    else:
        command, config = args.command, load_config(args)
        arguments, out = command_arguments(args, config), args.out

    run_dir = prepare_run_dir(config, command, arguments, out)

    return execute(config, command, arguments, run_dir, allow_untrusted=args.allow_untrusted)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the mgpf command. Returns 0 on success, 2 for configuration errors and 1 for other errors, which
    are written as JSON on stderr.
    """
    args = build_parser().parse_args(argv)
    _set_verbosity(args.verbose)

    try:
        outputs = run(args)
    except MGPFError as error:
        _logger.error(f"{args.command} failed : {error}")
        _emit_error(error.to_dict())
        return 2 if isinstance(error, ConfigInvalid) else 1
    except (FileExistsError, FileNotFoundError) as error:
        _logger.error(f"{args.command} failed : {error}")
        _emit_error({"error": type(error).__name__, "message": str(error), "details": {}})
        return 1

    print(json.dumps(outputs, indent=4, sort_keys=True, default=str))

    return 0
