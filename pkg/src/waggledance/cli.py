"""Command-line interface: ``waggle <subcommand>``.

Subcommands mirror the pipeline stages and exchange JSON-lines run files::

    waggle simulate --scene benchmark20 --out sim/
    waggle detect   --source sim/video.raw --out det/
    waggle filter   --runs det/runs.jsonl --out filt/
    waggle orient   --runs filt/runs.jsonl --out orient/
    waggle map      --runs orient/runs.jsonl --config cfg.json --out map/
    waggle pipeline --source sim/video.raw --config cfg.json --out all/

Exit status: 0 success, 2 configuration or usage error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, PipelineConfig, default_config, load_config

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3
DEFAULT_MODEL = Path(__file__).parent / "models" / "filternet.wdfn"


class StageError(RuntimeError):
    def __init__(self, stage: str, error: BaseException):
        self.stage = stage
        super().__init__(f"{stage} failed: {error}")


def _floats(text: str, n: int, flag: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        vals = []
    if len(vals) != n:
        raise ConfigError(flag, f"expected {n} comma-separated numbers")
    return vals


def _load(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else default_config(args.seed or 0)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _need_hive(cfg: PipelineConfig):
    if cfg.hive is None:
        raise ConfigError("hive", "missing required field (pass --config)")
    return cfg.hive


# --- stages ------------------------------------------------------------------------

def stage_detect(cfg: PipelineConfig, source: str, corners: str | None = None):
    from .attention import WaggleDetector
    from .frames import RectifiedStream, corners_to_homography, open_source

    stream = open_source(source, None)
    if corners:
        h = corners_to_homography(_floats(corners, 8, "--corners"), stream.shape)
        stream = RectifiedStream(stream, h)
    return WaggleDetector.from_config(cfg.attention).detect(stream)


def _model_path(cfg: PipelineConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.filter.model:
        return Path(cfg.filter.model)
    return DEFAULT_MODEL


def stage_filter(cfg: PipelineConfig, runs, model: str | None = None,
                 threshold: float | None = None):
    from .filternet import FilterNetworkModel, filter_runs

    net = FilterNetworkModel.load(_model_path(cfg, model))
    thr = threshold if threshold is not None else cfg.filter.threshold
    return filter_runs(runs, net, thr)


def stage_orient(cfg: PipelineConfig, runs):
    from .orientation import decode_run

    for run in runs:
        decode_run(run, cfg.bandpass)
    return runs


def stage_map(cfg: PipelineConfig, runs):
    from .mapping import map_dances

    return map_dances(runs, cfg.mapping, _need_hive(cfg))


def _write_dances(path: Path, vectors, dances) -> None:
    lines = []
    for v, d in zip(vectors, dances):
        rec = v.to_json()
        rec["inlier_run_ids"] = [r.id for r, keep in zip(d.runs, d.inliers) if keep]
        lines.append(json.dumps(rec))
    path.write_text("".join(line + "\n" for line in lines))


def _write_map_outputs(cfg, out: Path, vectors, dances, feeder: str | None) -> None:
    from .mapexport import export_map

    out.mkdir(parents=True, exist_ok=True)
    _write_dances(out / "dances.jsonl", vectors, dances)
    fd = tuple(_floats(feeder, 2, "--feeder")) if feeder else None
    export_map(vectors, cfg.hive, out, fd)


# --- subcommand handlers -------------------------------------------------------

def _run_stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001 - every stage error maps to one exit code
        raise StageError(name, exc) from exc


def cmd_detect(args, cfg):
    from .records import write_runs

    t0 = time.perf_counter()
    runs = _run_stage("detect", stage_detect, cfg, args.source, args.corners)
    write_runs(Path(args.out) / "runs.jsonl", runs)
    _info(f"detect: {len(runs)} runs in {time.perf_counter() - t0:.1f} s")


def _read(path, stage, load_snippets=True):
    from .records import read_runs

    return _run_stage(stage, read_runs, path, load_snippets)


def cmd_filter(args, cfg):
    from .records import write_runs

    runs = _read(args.runs, "filter")
    kept = _run_stage("filter", stage_filter, cfg, runs, args.model, args.threshold)
    write_runs(Path(args.out) / "runs.jsonl", kept)
    _info(f"filter: kept {len(kept)} of {len(runs)} runs")


def cmd_orient(args, cfg):
    from .records import write_runs

    runs = _read(args.runs, "orient")
    _run_stage("orient", stage_orient, cfg, runs)
    write_runs(Path(args.out) / "runs.jsonl", runs)
    _info(f"orient: decoded {sum(r.direction_deg is not None for r in runs)} of {len(runs)} runs")


def cmd_map(args, cfg):
    _need_hive(cfg)
    runs = _read(args.runs, "map", load_snippets=False)
    vectors, dances, rejected = _run_stage("map", stage_map, cfg, runs)
    _run_stage("map", _write_map_outputs, cfg, Path(args.out), vectors, dances, args.feeder)
    _info(f"map: {len(vectors)} dances decoded, {len(rejected)} without a strong mode")


def cmd_pipeline(args, cfg):
    from .records import write_runs

    _need_hive(cfg)
    out = Path(args.out)
    runs = _run_stage("detect", stage_detect, cfg, args.source, args.corners)
    n_detected = len(runs)
    runs = _run_stage("filter", stage_filter, cfg, runs, args.model, args.threshold)
    _run_stage("orient", stage_orient, cfg, runs)
    write_runs(out / "runs.jsonl", runs)
    vectors, dances, rejected = _run_stage("map", stage_map, cfg, runs)
    _run_stage("map", _write_map_outputs, cfg, out, vectors, dances, args.feeder)
    _info(f"pipeline: {n_detected} detected, {len(runs)} kept, {len(vectors)} dances")


def cmd_simulate(args, cfg):
    from .frames import write_raw
    from .synth import SCENE_DIR, load_scene, render_video, save_scene

    def run():
        scene_path = Path(args.scene)
        if not scene_path.exists():
            scene_path = SCENE_DIR / f"{args.scene}.json"
        scene = load_scene(scene_path)
        if args.seed is not None:
            scene.seed = args.seed
        stream, gt = render_video(scene)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_raw(out / "video.raw", iter(stream), int(scene.sample_rate), scene.start_utc)
        (out / "ground_truth.json").write_text(json.dumps(gt.to_json()) + "\n")
        save_scene(scene, out / "scene.json")
        return len(stream), len(gt.runs)

    n, k = _run_stage("simulate", run)
    _info(f"simulate: {n} frames, {k} scripted waggle runs")


def cmd_score(args, cfg):
    from .records import read_runs, run_to_record
    from .synth import GroundTruth, score_detections

    def run():
        gt = GroundTruth.from_json(json.loads(Path(args.gt).read_text()))
        runs = read_runs(args.runs, load_snippets=False)
        report = score_detections(gt, runs)
        matched = {id(d) for d, _ in report.pop("matches")}
        if args.labelled:
            target = Path(args.labelled)
            target.parent.mkdir(parents=True, exist_ok=True)
            src_dir = Path(args.runs).parent
            lines = []
            for line, run in zip(_nonblank(Path(args.runs)), runs):
                rec = json.loads(line)
                if rec.get("snippets"):
                    rec["snippets"] = os.path.relpath(
                        (src_dir / rec["snippets"]).resolve(), target.parent.resolve())
                rec["label"] = int(id(run) in matched)
                lines.append(json.dumps(rec))
            target.write_text("".join(line + "\n" for line in lines))
        return report

    report = _run_stage("score", run)
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def _nonblank(path: Path):
    return [line for line in path.read_text().splitlines() if line.strip()]


def cmd_train_filter(args, cfg):
    import dataclasses

    from .filternet import DEEP_CONV, DEEP_DENSE, DEFAULT_CONV, train
    from .records import read_snippets

    def run():
        stacks, labels = [], []
        files = sorted(Path(args.data).rglob("*.jsonl"))
        if not files:
            raise FileNotFoundError(f"no .jsonl files under {args.data}")
        for path in files:
            for line in _nonblank(path):
                rec = json.loads(line)
                if "label" not in rec:
                    raise ValueError(f"{path}: record {rec.get('id')} has no label")
                stacks.append(read_snippets(path.parent / rec["snippets"]))
                labels.append(int(rec["label"]))
        tcfg = cfg.train
        if args.epochs is not None:
            tcfg = dataclasses.replace(tcfg, epochs=args.epochs)
        conv, dense = (DEEP_CONV, DEEP_DENSE) if args.deep else (DEFAULT_CONV, ())
        result = train(stacks, np.array(labels), tcfg, conv_layers=conv, dense_layers=dense)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        result.model.save(out)
        return result, len(stacks)

    result, n = _run_stage("train-filter", run)
    for rec in result.history:
        _info(json.dumps(rec))
    _info(f"train-filter: {n} samples, threshold {result.model.threshold}, saved {args.out}")


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline configuration")
    common.add_argument("--seed", type=int, help="override every seed in the configuration")

    parser = argparse.ArgumentParser(prog="waggle", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[common], help="find waggle-run candidates in a video")
    p.add_argument("--source", required=True, help="raw video, PGM directory or synth:<scene>")
    p.add_argument("--out", required=True)
    p.add_argument("--corners", help="x1,y1,...,x4,y4 comb corners (TL, TR, BR, BL) to rectify")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("filter", parents=[common], help="reject non-waggle detections")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("orient", parents=[common], help="decode waggle directions")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_orient)

    p = sub.add_parser("map", parents=[common], help="cluster runs into dances and map them")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--feeder", help="lat,lon of a known feeder to mark")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("pipeline", parents=[common], help="detect, filter, orient and map")
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--corners")
    p.add_argument("--model")
    p.add_argument("--threshold", type=float)
    p.add_argument("--feeder")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("train-filter", parents=[common], help="train the filter network")
    p.add_argument("--data", required=True, help="directory of labelled run files")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=int)
    p.add_argument("--deep", action="store_true", help="three conv + two dense layers")
    p.set_defaults(func=cmd_train_filter)

    p = sub.add_parser("simulate", parents=[common], help="render a synthetic scene")
    p.add_argument("--scene", required=True, help="scene JSON file or built-in scene name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", parents=[common], help="compare runs with ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--runs", required=True)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--labelled", help="write the runs with 0/1 labels for train-filter")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        args.func(args, cfg)
    except ConfigError as exc:
        print(f"waggle: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"waggle: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
