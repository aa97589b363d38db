import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlf.frames import ProjectedPoints
from wlf.losses import (
    LossWeights,
    combine_losses,
    cscs,
    cscs_grad_student,
    sample_image_scores,
)


class TestCscs:
    def test_matched_one_hot_near_zero(self):
        p = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert cscs(p, p) < 1e-5

    def test_half_scores_single_entry(self):
        assert cscs(np.array([[0.5]]), np.array([[0.5]])) == pytest.approx(math.log(2))

    def test_minimised_at_matching_scores(self):
        # 1x1 grid search: the optimum student score equals the teacher score.
        p = np.array([[0.37]])
        grid = np.linspace(0.01, 0.99, 99)
        losses = [cscs(p, np.array([[q]])) for q in grid]
        assert abs(grid[int(np.argmin(losses))] - 0.37) < 0.011

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            cscs(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_invalid_scores_rejected(self):
        with pytest.raises(ValueError):
            cscs(np.array([[1.5]]), np.array([[0.5]]))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 20), st.integers(1, 4))
    def test_nonnegative(self, seed, n, c):
        rng = np.random.default_rng(seed)
        p = rng.uniform(0, 1, (n, c))
        q = rng.uniform(0, 1, (n, c))
        assert cscs(p, q) >= 0.0

    def test_gradient_matches_finite_differences(self, rng):
        p = rng.uniform(0, 1, (6, 3))
        q = rng.uniform(0.05, 0.95, (6, 3))
        grad = cscs_grad_student(p, q)
        eps = 1e-6
        for _ in range(20):
            i = int(rng.integers(0, 6))
            j = int(rng.integers(0, 3))
            up = q.copy()
            up[i, j] += eps
            dn = q.copy()
            dn[i, j] -= eps
            fd = (cscs(p, up) - cscs(p, dn)) / (2 * eps)
            assert grad[i, j] == pytest.approx(fd, rel=1e-4, abs=1e-9)


class TestCombineLosses:
    UNIT = {
        "boxinst": 1.0,
        "pseudo": 1.0,
        "cscs_3d_to_2d": 1.0,
        "cls": 1.0,
        "vote": 1.0,
        "cscs_2d_to_3d": 1.0,
    }

    def test_reference_weights_unit_components(self):
        l2d, l3d, total = combine_losses(self.UNIT)
        assert l2d == 2.5
        assert l3d == 103.0
        assert total == 105.5

    def test_all_zero(self):
        zeros = {k: 0.0 for k in self.UNIT}
        assert combine_losses(zeros) == (0.0, 0.0, 0.0)

    def test_linearity_in_components(self):
        doubled = {k: 2.0 for k in self.UNIT}
        l2d, l3d, total = combine_losses(doubled)
        assert (l2d, l3d, total) == (5.0, 206.0, 211.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_linear_in_weights_and_components(self, seed):
        rng = np.random.default_rng(seed)
        comps = {k: float(rng.uniform(0, 3)) for k in self.UNIT}
        w = LossWeights(*(float(rng.uniform(0, 5)) for _ in range(6)))
        l2d, l3d, total = combine_losses(comps, w)
        want_2d = w.a1 * comps["boxinst"] + w.a2 * comps["pseudo"] + w.a3 * comps["cscs_3d_to_2d"]
        want_3d = w.a4 * comps["cls"] + w.a5 * comps["vote"] + w.a6 * comps["cscs_2d_to_3d"]
        assert l2d == pytest.approx(want_2d)
        assert l3d == pytest.approx(want_3d)
        assert total == pytest.approx(l2d + l3d)

    def test_missing_component_warns_and_zeroes(self, caplog):
        partial = {"boxinst": 1.0}
        with caplog.at_level(logging.WARNING, logger="wlf.losses"):
            l2d, l3d, total = combine_losses(partial)
        assert l2d == 1.0 and l3d == 0.0 and total == 1.0
        assert any("missing" in rec.message for rec in caplog.records)

    def test_nan_component_rejected(self):
        bad = dict(self.UNIT)
        bad["vote"] = float("nan")
        with pytest.raises(ValueError, match="finite"):
            combine_losses(bad)

    def test_unknown_component_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            combine_losses({"typo": 1.0})

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(a1=-1.0)


class TestSampleImageScores:
    def test_nearest_pixel_lookup(self):
        maps = np.zeros((4, 4, 2))
        maps[2, 1] = [0.25, 0.75]
        proj = ProjectedPoints(
            pixels=np.array([[1.6, 2.4], [0.2, 0.2]]),
            depth=np.array([5.0, 5.0]),
            valid=np.array([True, True]),
        )
        out = sample_image_scores(maps, proj)
        np.testing.assert_allclose(out[0], [0.25, 0.75])
        np.testing.assert_allclose(out[1], [0.0, 0.0])

    def test_invalid_points_get_zeros(self):
        maps = np.ones((2, 2, 1))
        proj = ProjectedPoints(
            pixels=np.array([[np.nan, np.nan]]),
            depth=np.array([-1.0]),
            valid=np.array([False]),
        )
        np.testing.assert_allclose(sample_image_scores(maps, proj), [[0.0]])
