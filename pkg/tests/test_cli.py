import json

import numpy as np
import pytest

from wlf.bundle import write_mask_predictions
from wlf.cli import main
from wlf.mask_fusion import MaskPrediction


def run(*args) -> int:
    return main([str(a) for a in args])


@pytest.fixture
def bundles(tmp_path):
    out = tmp_path / "frames"
    assert run("synth", "--out", out, "--seed", "7", "--num-frames", "3",
               "--epochs", "4", "--score-sigma", "0.2") == 0
    return out


class TestSynth:
    def test_writes_bundles(self, bundles):
        dirs = sorted(p.name for p in bundles.iterdir() if p.is_dir())
        assert dirs == ["frame_0000", "frame_0001", "frame_0002"]
        first = bundles / "frame_0000"
        for name in ("manifest.json", "points.f32", "beam_row.u16", "boxes.json",
                     "calibration.json", "gt_semantic.i32", "gt_instance.i32",
                     "votes_0.f32", "votes_3.f32", "scene.json"):
            assert (first / name).is_file(), name


class TestPipeline:
    def test_end_to_end_with_report(self, bundles, tmp_path):
        out = tmp_path / "run1"
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", out) == 0
        assert (out / "frame_0000" / "sem.i32").is_file()
        assert (out / "run.json").is_file()
        metrics = json.loads((out / "metrics.json").read_text())
        for key in ("miou", "ap", "ap50", "ap75"):
            assert 0.0 <= metrics[key] <= 1.0
        for val in metrics["per_class_iou"].values():
            assert 0.0 <= val <= 1.0

    def test_missing_input_exit_2(self, tmp_path):
        assert run("pipeline", "--frames", f"{tmp_path}/nothing/*", "--out", tmp_path / "o") == 2

    def test_malformed_config_exit_3(self, bundles, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{\"rsc\": {\"t1\": 4.0}}")
        assert run("pipeline", "--config", cfg, "--frames", f"{bundles}/*",
                   "--out", tmp_path / "o") == 3

    def test_unknown_stage_exit_3(self, bundles, tmp_path):
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", tmp_path / "o",
                   "--stages", "spg,warp") == 3

    def test_runs_are_byte_identical(self, bundles, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", out1, "--seed", "5") == 0
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", out2, "--seed", "5") == 0
        for rel in ("frame_0000/sem.i32", "frame_0001/inst.i32", "metrics.json"):
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    def test_threads_do_not_change_output(self, bundles, tmp_path):
        out1, out2 = tmp_path / "t1", tmp_path / "t4"
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", out1) == 0
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", out2, "--threads", "4") == 0
        for frame in ("frame_0000", "frame_0001", "frame_0002"):
            assert (out1 / frame / "sem.i32").read_bytes() == (out2 / frame / "sem.i32").read_bytes()
        assert (out1 / "metrics.json").read_bytes() == (out2 / "metrics.json").read_bytes()

    def test_disabling_stages_matches_spg_subcommand(self, bundles, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", out_a,
                   "--stages", "spg") == 0
        assert run("spg", "--frames", f"{bundles}/*", "--out", out_b) == 0
        for frame in ("frame_0000", "frame_0001", "frame_0002"):
            assert (out_a / frame / "sem.i32").read_bytes() == (out_b / frame / "sem.i32").read_bytes()
            assert (out_a / frame / "inst.i32").read_bytes() == (out_b / frame / "inst.i32").read_bytes()


class TestStageCommands:
    def test_pvc_then_rsc_match_full_pipeline(self, bundles, tmp_path):
        full = tmp_path / "full"
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", full) == 0
        spg_only = tmp_path / "spg"
        assert run("spg", "--frames", f"{bundles}/*", "--out", spg_only) == 0
        voted = tmp_path / "voted"
        assert run("pvc", "--frames", f"{bundles}/*", "--labels", spg_only, "--out", voted) == 0
        final = tmp_path / "final"
        assert run("rsc", "--frames", f"{bundles}/*", "--labels", voted, "--out", final) == 0
        for frame in ("frame_0000", "frame_0001", "frame_0002"):
            assert (full / frame / "sem.i32").read_bytes() == (final / frame / "sem.i32").read_bytes()
            assert (full / frame / "inst.i32").read_bytes() == (final / frame / "inst.i32").read_bytes()

    def test_pvc_requires_votes(self, tmp_path):
        frames = tmp_path / "noveto"
        assert run("synth", "--out", frames, "--num-frames", "1", "--epochs", "0") == 0
        labels = tmp_path / "labels"
        assert run("spg", "--frames", f"{frames}/*", "--out", labels) == 0
        assert run("pvc", "--frames", f"{frames}/*", "--labels", labels,
                   "--out", tmp_path / "v") == 2

    def test_eval_subcommand(self, bundles, tmp_path):
        labels = tmp_path / "labels"
        assert run("pipeline", "--frames", f"{bundles}/*", "--out", labels) == 0
        report_dir = tmp_path / "report"
        assert run("eval", "--frames", f"{bundles}/*", "--labels", labels,
                   "--out", report_dir) == 0
        metrics = json.loads((report_dir / "metrics.json").read_text())
        assert 0.0 <= metrics["miou"] <= 1.0
        assert (report_dir / "metrics.txt").read_text().strip()


class TestIpg:
    def test_fuses_masks(self, bundles, tmp_path, rng):
        frame_dir = bundles / "frame_0000"
        boxes = json.loads((frame_dir / "boxes.json").read_text())
        box = boxes[0]
        x0, y0, x1, y1 = box["bounds"]
        preds = [
            (box["box_id"], MaskPrediction(
                prob_map=rng.uniform(0, 1, (8, 8)), score=0.8,
                pred_box=(x0, y0, x1, y1))),
            (box["box_id"], MaskPrediction(
                prob_map=rng.uniform(0, 1, (8, 8)), score=0.4,
                pred_box=(x0 + 2, y0 + 2, x1 + 2, y1 + 2))),
        ]
        write_mask_predictions(frame_dir, preds)
        out = tmp_path / "ipg"
        assert run("ipg", "--frames", f"{bundles}/*", "--out", out) == 0
        fused = np.frombuffer(
            (out / "frame_0000" / f"fused_{box['box_id']}.f32").read_bytes(), dtype="<f4"
        )
        assert fused.size == 64
        tri = np.frombuffer(
            (out / "frame_0000" / f"trinary_{box['box_id']}.i8").read_bytes(), dtype="<i1"
        )
        assert set(np.unique(tri)).issubset({-1, 0, 1})
        report = json.loads((out / "frame_0000" / "ipg.json").read_text())
        assert report[str(box["box_id"])]["num_predictions"] == 2

    def test_no_masks_exit_2(self, bundles, tmp_path):
        assert run("ipg", "--frames", f"{bundles}/*", "--out", tmp_path / "o") == 2
