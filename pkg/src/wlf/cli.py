"""Command-line interface.

Subcommands:
    synth      generate synthetic frame bundles with ground truth and votes
    pipeline   full label generation over bundles (stages configurable)
    spg        spatial refinement only (pipeline with pvc/rsc disabled)
    pvc        vote-correct existing labels using buffered teacher scores
    rsc        ring-segment-correct existing labels
    ipg        fuse 2D mask predictions per annotated box
    eval       score predicted labels against bundle ground truth

Exit codes: 0 ok, 2 missing input, 3 malformed config, 4 internal invariant
violation. Set WLF_LOG=debug|info|warning for verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .bundle import (
    BundleError,
    list_vote_epochs,
    read_frame_bundle,
    read_labels,
    read_mask_predictions,
    read_votes,
    write_frame_bundle,
    write_json,
    write_labels,
    write_votes,
)
from .config import ConfigError, PipelineConfig, StageToggles
from .frames import crop_frustum, project_points
from .mask_fusion import binarize, pseudo_loss, weight_masks
from .metrics import (
    confusion_counts,
    instances_from_labels,
    pred_instances_from_labels,
)
from .pipeline import (
    FrameOutput,
    InvariantError,
    MissingInputError,
    aggregate_report,
    discover_bundles,
    reconcile_instances,
    run_pipeline,
)
from .range_image import build_range_image, dcs_dynamic
from .ring_correct import rsc_correct
from .spatial import PseudoLabels
from .synth import CLASS_NAMES, SceneConfig, fabricate_scores, generate_scene
from .voting import VoteBuffer, foreground_score, vote_correct

logger = logging.getLogger("wlf")

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_BAD_CONFIG = 3
EXIT_INVARIANT = 4


def _setup_logging() -> None:
    level = os.environ.get("WLF_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.from_json(args.config)
    else:
        cfg = PipelineConfig()
    if args.frames:
        cfg.frames = args.frames
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    if getattr(args, "stages", None):
        cfg.stages = StageToggles.from_list(
            [s for s in args.stages.split(",") if s]
        )
    if not cfg.out_dir:
        raise ConfigError("no output directory (use --out or the config file)")
    return cfg


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise MissingInputError(f"scene config not found: {path}")
        try:
            scene_cfg = SceneConfig.from_dict(json.loads(path.read_text()))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad scene config: {exc}") from exc
    else:
        scene_cfg = SceneConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = args.seed if args.seed is not None else scene_cfg.seed
    sigma = args.score_sigma if args.score_sigma is not None else scene_cfg.score_sigma
    for i in range(args.num_frames):
        cfg_i = SceneConfig.from_dict({**scene_cfg.to_dict(), "seed": base_seed + i})
        scene = generate_scene(cfg_i, frame_id=f"frame_{i:04d}")
        bundle = write_frame_bundle(
            out / scene.frame.frame_id,
            scene.frame,
            scene.calibration,
            scene.boxes,
            CLASS_NAMES,
            beams=cfg_i.beams,
            columns=cfg_i.columns,
        )
        for epoch in range(args.epochs):
            scores = fabricate_scores(
                scene.frame.gt_semantic, len(CLASS_NAMES), sigma, cfg_i.seed, epoch
            )
            write_votes(bundle, epoch, foreground_score(scores))
        write_json(bundle / "scene.json", cfg_i.to_dict())
    print(f"wrote {args.num_frames} frame bundles to {out}")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args)
    result = run_pipeline(cfg)
    print(f"processed {len(result.frame_ids)} frames -> {result.out_dir}")
    if result.report is not None:
        print(result.report.format_table(result.class_names))
    return EXIT_OK


def cmd_spg(args: argparse.Namespace) -> int:
    args.stages = "spg"
    return cmd_pipeline(args)


def _iter_label_bundles(args: argparse.Namespace):
    bundles = discover_bundles(args.frames)
    labels_dir = Path(args.labels) if args.labels else None
    for bundle in bundles:
        frame, calib, boxes, manifest = read_frame_bundle(bundle)
        src = labels_dir / bundle.name if labels_dir else bundle
        if not (Path(src) / "sem.i32").is_file():
            raise MissingInputError(f"no labels found in {src}")
        labels = read_labels(src, frame.num_points)
        yield bundle, frame, calib, boxes, manifest, labels


def cmd_pvc(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args)
    out_root = Path(cfg.out_dir)
    count = 0
    for bundle, frame, calib, boxes, manifest, labels in _iter_label_bundles(args):
        epochs = list_vote_epochs(bundle)
        if not epochs:
            raise MissingInputError(f"no votes_*.f32 in {bundle}")
        buffer = VoteBuffer(capacity=cfg.pvc.n_his, start_epoch=cfg.pvc.start_epoch)
        for epoch in epochs[-cfg.pvc.n_his :]:
            buffer.record_epoch(frame.frame_id, read_votes(bundle, epoch, frame.num_points))
        buffer.epoch = max(epochs) + 1
        proj = project_points(calib, frame)
        box_assign = crop_frustum(proj, boxes)
        corrected = vote_correct(buffer, cfg.pvc, labels, frame.frame_id, box_assign, boxes)
        write_labels(out_root / bundle.name, corrected)
        count += 1
    print(f"vote-corrected {count} frames -> {out_root}")
    return EXIT_OK


def cmd_rsc(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args)
    out_root = Path(cfg.out_dir)
    count = 0
    for bundle, frame, calib, boxes, manifest, labels in _iter_label_bundles(args):
        beams = int(manifest.get("beams", int(frame.beam_row.max()) + 1))
        columns = int(manifest.get("columns", 2048))
        ri = build_range_image(frame, beams, columns)
        segments = dcs_dynamic(ri, cfg.dcs)
        corrected = rsc_correct(labels.semantic, segments, cfg.rsc)
        fixed = reconcile_instances(
            PseudoLabels(semantic=corrected, instance=labels.instance), boxes
        )
        write_labels(out_root / bundle.name, fixed)
        count += 1
    print(f"ring-corrected {count} frames -> {out_root}")
    return EXIT_OK


def cmd_ipg(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args)
    out_root = Path(cfg.out_dir)
    bundles = discover_bundles(cfg.frames)
    count = 0
    for bundle in bundles:
        frame, calib, boxes, manifest = read_frame_bundle(bundle)
        grouped = read_mask_predictions(bundle)
        if not grouped:
            continue
        box_by_id = {b.box_id: b for b in boxes}
        out_dir = out_root / bundle.name
        out_dir.mkdir(parents=True, exist_ok=True)
        report = {}
        for box_id in sorted(grouped):
            box = box_by_id.get(box_id)
            if box is None:
                logger.warning("%s: masks reference unknown box %d", bundle.name, box_id)
                continue
            preds = grouped[box_id]
            fused = weight_masks(preds, box, cfg.ipg.k)
            target = binarize(fused, cfg.ipg)
            losses = [pseudo_loss(p.prob_map, target) for p in preds]
            fused.astype("<f4").tofile(out_dir / f"fused_{box_id}.f32")
            target.astype("<i1").tofile(out_dir / f"trinary_{box_id}.i8")
            report[str(box_id)] = {
                "num_predictions": len(preds),
                "mean_pseudo_loss": float(np.mean(losses)),
            }
        write_json(out_dir / "ipg.json", report)
        count += 1
    if count == 0:
        raise MissingInputError("no bundles with masks/ found")
    print(f"fused masks for {count} frames -> {out_root}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args)
    out_root = Path(cfg.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    outputs = []
    class_names: list[str] = []
    n_cls = 3
    for bundle, frame, calib, boxes, manifest, labels in _iter_label_bundles(args):
        if not frame.has_gt:
            raise MissingInputError(f"{bundle} has no ground-truth labels")
        class_names = manifest.get("class_names", class_names)
        n_cls = int(manifest.get("num_classes", n_cls))
        ignore = frame.gt_semantic == -1
        out = FrameOutput(frame_id=frame.frame_id, labels=labels, n_points=frame.num_points)
        out.tp, out.fp, out.fn = confusion_counts(labels.semantic, frame.gt_semantic, n_cls)
        out.pred_instances = pred_instances_from_labels(
            labels.semantic, labels.instance, frame.frame_id, ignore
        )
        out.gt_instances = instances_from_labels(
            frame.gt_semantic, frame.gt_instance, frame.frame_id, ignore
        )
        outputs.append(out)
    report = aggregate_report(outputs, n_cls)
    if report is None:
        raise MissingInputError("nothing to evaluate")
    write_json(out_root / "metrics.json", report.to_dict(class_names))
    (out_root / "metrics.txt").write_text(report.format_table(class_names) + "\n")
    print(report.format_table(class_names))
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, labels: bool = False) -> None:
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--frames", help="glob of frame bundle directories")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    if labels:
        parser.add_argument(
            "--labels", help="directory holding per-frame sem.i32/inst.i32 (default: the bundle)"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wlf", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic frame bundles")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="scene config JSON")
    p.add_argument("--num-frames", type=int, default=8)
    p.add_argument("--epochs", type=int, default=4, help="teacher vote epochs to fabricate")
    p.add_argument("--score-sigma", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="full label generation")
    _add_common(p)
    p.add_argument("--stages", help="comma list from spg,pvc,rsc (default: all)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("spg", help="spatial refinement only")
    _add_common(p)
    p.set_defaults(func=cmd_spg)

    p = sub.add_parser("pvc", help="vote-correct existing labels")
    _add_common(p, labels=True)
    p.set_defaults(func=cmd_pvc)

    p = sub.add_parser("rsc", help="ring-segment-correct existing labels")
    _add_common(p, labels=True)
    p.set_defaults(func=cmd_rsc)

    p = sub.add_parser("ipg", help="fuse 2D mask predictions per box")
    _add_common(p)
    p.set_defaults(func=cmd_ipg)

    p = sub.add_parser("eval", help="score labels against ground truth")
    _add_common(p, labels=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MissingInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ConfigError, BundleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (InvariantError, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
