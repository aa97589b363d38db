"""End-to-end label generation over frame bundles.

Per frame: project points, crop frustums, build the range image and ring
segments, refine to trinary labels (optional), cluster per box and keep the
largest component, then apply the optional voting and ring-segment correction
stages. Labels are written next to a metrics report when ground truth is
available, plus a run.json with the config hash and stage timings. Frames are
independent, so the worker pool never changes the output bytes.
"""

from __future__ import annotations

import glob
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import (
    list_vote_epochs,
    read_frame_bundle,
    read_votes,
    write_json,
    write_labels,
)
from .config import PipelineConfig
from .frames import Box2D, crop_frustum, project_points
from .metrics import (
    MetricReport,
    instance_ap,
    instances_from_labels,
    miou_from_counts,
    confusion_counts,
    pred_instances_from_labels,
)
from .range_image import build_range_image, dcs_dynamic
from .spatial import (
    TRINARY_FG,
    PseudoLabels,
    generate_labels,
    refine_by_segments,
)
from .ring_correct import rsc_correct
from .voting import VoteBuffer, vote_correct

__all__ = ["MissingInputError", "InvariantError", "FrameOutput", "RunResult", "run_pipeline"]


class MissingInputError(FileNotFoundError):
    """Input bundles or required files are absent."""


class InvariantError(AssertionError):
    """An internal pipeline invariant was violated."""


@dataclass
class FrameOutput:
    frame_id: str
    labels: PseudoLabels
    n_points: int
    timings: dict[str, float] = field(default_factory=dict)
    tp: np.ndarray | None = None
    fp: np.ndarray | None = None
    fn: np.ndarray | None = None
    pred_instances: list = field(default_factory=list)
    gt_instances: list = field(default_factory=list)


@dataclass
class RunResult:
    out_dir: Path
    frame_ids: list[str]
    report: MetricReport | None
    class_names: list[str]


def reconcile_instances(labels: PseudoLabels, boxes: list[Box2D]) -> PseudoLabels:
    """Drop instance ids wherever the semantic label left the box class."""
    class_of = np.zeros(max([b.box_id for b in boxes], default=0) + 1, dtype=np.int32)
    for b in boxes:
        class_of[b.box_id] = b.class_id
    out = labels.copy()
    owned = out.instance > 0
    mismatch = owned & (out.semantic != class_of[out.instance])
    out.instance[mismatch] = 0
    return out


def process_frame(bundle_dir: Path, cfg: PipelineConfig) -> FrameOutput:
    """Run the configured stages on one bundle and return labels + metrics."""
    frame, calib, boxes, manifest = read_frame_bundle(bundle_dir)
    beams = int(manifest.get("beams", int(frame.beam_row.max()) + 1 if frame.num_points else 1))
    columns = int(manifest.get("columns", 2048))
    n_cls = int(manifest.get("num_classes", 3))
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    proj = project_points(calib, frame)
    box_assign = crop_frustum(proj, boxes)
    timings["project"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ri = build_range_image(frame, beams, columns)
    segments = dcs_dynamic(ri, cfg.dcs)
    timings["segments"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if cfg.stages.spg:
        trinary = refine_by_segments(box_assign, segments)
    else:
        trinary = np.where(box_assign > 0, TRINARY_FG, 0).astype(np.int8)
    labels = generate_labels(frame, trinary, box_assign, boxes, cfg.radii)
    timings["spg"] = time.perf_counter() - t0

    if cfg.stages.pvc:
        t0 = time.perf_counter()
        epochs = list_vote_epochs(bundle_dir)
        buffer = VoteBuffer(capacity=cfg.pvc.n_his, start_epoch=cfg.pvc.start_epoch)
        for epoch in epochs[-cfg.pvc.n_his :]:
            buffer.record_epoch(frame.frame_id, read_votes(bundle_dir, epoch, frame.num_points))
        if epochs:
            buffer.epoch = max(epochs) + 1
            labels = vote_correct(buffer, cfg.pvc, labels, frame.frame_id, box_assign, boxes)
        timings["pvc"] = time.perf_counter() - t0

    if cfg.stages.rsc:
        t0 = time.perf_counter()
        corrected = rsc_correct(labels.semantic, segments, cfg.rsc)
        labels = reconcile_instances(
            PseudoLabels(semantic=corrected, instance=labels.instance), boxes
        )
        timings["rsc"] = time.perf_counter() - t0

    try:
        labels.check_consistency(boxes)
    except AssertionError as exc:
        raise InvariantError(f"frame {frame.frame_id}: {exc}") from exc

    out = FrameOutput(
        frame_id=frame.frame_id,
        labels=labels,
        n_points=frame.num_points,
        timings=timings,
    )
    if frame.has_gt:
        ignore = frame.gt_semantic == -1
        out.tp, out.fp, out.fn = confusion_counts(labels.semantic, frame.gt_semantic, n_cls)
        out.pred_instances = pred_instances_from_labels(
            labels.semantic, labels.instance, frame.frame_id, ignore
        )
        out.gt_instances = instances_from_labels(
            frame.gt_semantic, frame.gt_instance, frame.frame_id, ignore
        )
    return out


def discover_bundles(pattern: str) -> list[Path]:
    """Frame bundle directories matching a glob, sorted by name."""
    if not pattern:
        raise MissingInputError("no input frames configured")
    candidates = sorted(Path(p) for p in glob.glob(pattern))
    bundles = [p for p in candidates if (p / "manifest.json").is_file()]
    if not bundles:
        raise MissingInputError(f"no frame bundles match {pattern!r}")
    return bundles


def aggregate_report(outputs: list[FrameOutput], n_cls: int) -> MetricReport | None:
    """Pool confusion counts and instances over frames with ground truth."""
    scored = [o for o in outputs if o.tp is not None]
    if not scored:
        return None
    tp = np.sum([o.tp for o in scored], axis=0)
    fp = np.sum([o.fp for o in scored], axis=0)
    fn = np.sum([o.fn for o in scored], axis=0)
    per_class_iou, mean_iou = miou_from_counts(tp, fp, fn)
    preds = [p for o in scored for p in o.pred_instances]
    gts = [g for o in scored for g in o.gt_instances]
    per_class_ap, mean_ap, ap50, ap75 = instance_ap(preds, gts)
    return MetricReport(
        per_class_iou=per_class_iou,
        miou=mean_iou,
        ap=mean_ap,
        ap50=ap50,
        ap75=ap75,
        per_class_ap=per_class_ap,
    )


def run_pipeline(cfg: PipelineConfig) -> RunResult:
    """Process every bundle matched by the config and write all artifacts."""
    bundles = discover_bundles(cfg.frames)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outputs = list(pool.map(lambda b: process_frame(b, cfg), bundles))
    else:
        outputs = [process_frame(b, cfg) for b in bundles]

    outputs.sort(key=lambda o: o.frame_id)
    first_manifest = json.loads((bundles[0] / "manifest.json").read_text())
    class_names = first_manifest.get("class_names", [])
    n_cls = int(first_manifest.get("num_classes", len(class_names) or 3))

    for out in outputs:
        write_labels(out_dir / out.frame_id, out.labels)

    report = aggregate_report(outputs, n_cls)
    if report is not None:
        write_json(out_dir / "metrics.json", report.to_dict(class_names))
        (out_dir / "metrics.txt").write_text(report.format_table(class_names) + "\n")

    stage_totals: dict[str, float] = {}
    for out in outputs:
        for stage, dt in out.timings.items():
            stage_totals[stage] = stage_totals.get(stage, 0.0) + dt
    run_info = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "versions": {"wlf": __version__, "numpy": np.__version__},
        "num_frames": len(outputs),
        "stage_seconds": {k: round(v, 6) for k, v in sorted(stage_totals.items())},
        "total_seconds": round(time.perf_counter() - started, 6),
    }
    write_json(out_dir / "run.json", run_info)
    return RunResult(
        out_dir=out_dir,
        frame_ids=[o.frame_id for o in outputs],
        report=report,
        class_names=class_names,
    )
