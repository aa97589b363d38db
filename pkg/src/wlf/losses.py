"""Cross-modal consistency loss and the branch loss combiner.

The consistency loss is a per-class binary cross-entropy between teacher
scores from one modality and student scores from the other, averaged over
points and classes; the same kernel serves both distillation directions by
swapping which side plays teacher. The combiner applies the six branch
weights and sums the 2D and 3D totals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .frames import ProjectedPoints

__all__ = [
    "LossWeights",
    "cscs",
    "cscs_grad_student",
    "combine_losses",
    "sample_image_scores",
    "COMPONENTS_2D",
    "COMPONENTS_3D",
]

logger = logging.getLogger(__name__)

EPS = 1e-7

COMPONENTS_2D = ("boxinst", "pseudo", "cscs_3d_to_2d")
COMPONENTS_3D = ("cls", "vote", "cscs_2d_to_3d")


@dataclass
class LossWeights:
    """Branch weights a1..a6 for (boxinst, pseudo, cscs_3d_to_2d, cls, vote,
    cscs_2d_to_3d)."""

    a1: float = 1.0
    a2: float = 1.0
    a3: float = 0.5
    a4: float = 100.0
    a5: float = 1.0
    a6: float = 2.0

    def __post_init__(self) -> None:
        for name in ("a1", "a2", "a3", "a4", "a5", "a6"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def _check_scores(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be (N, n_cls)")
    if arr.size and (not np.isfinite(arr).all() or arr.min() < 0 or arr.max() > 1):
        raise ValueError(f"{name} must be finite scores in [0, 1]")
    return arr


def cscs(p_teacher: np.ndarray, q_student: np.ndarray) -> float:
    """Consistency loss: mean over points and classes of the binary
    cross-entropy of the student scores against the teacher scores.

    The kernel is direction-agnostic; pass the 2D side as teacher for
    2d->3d supervision and vice versa.
    """
    p = _check_scores("p_teacher", p_teacher)
    q = _check_scores("q_student", q_student)
    if p.shape != q.shape:
        raise ValueError(f"score shape mismatch: {p.shape} vs {q.shape}")
    if p.size == 0:
        return 0.0
    qc = np.clip(q, EPS, 1.0 - EPS)
    terms = p * np.log(qc) + (1.0 - p) * np.log(1.0 - qc)
    return float(-terms.mean())


def cscs_grad_student(p_teacher: np.ndarray, q_student: np.ndarray) -> np.ndarray:
    """Analytic gradient of ``cscs`` w.r.t. the student scores.

    The teacher is treated as a constant. Zero where the clamp is active.
    """
    p = _check_scores("p_teacher", p_teacher)
    q = _check_scores("q_student", q_student)
    if p.shape != q.shape:
        raise ValueError(f"score shape mismatch: {p.shape} vs {q.shape}")
    qc = np.clip(q, EPS, 1.0 - EPS)
    grad = -(p / qc - (1.0 - p) / (1.0 - qc)) / q.size
    inside = (q > EPS) & (q < 1.0 - EPS)
    return np.where(inside, grad, 0.0)


def combine_losses(
    components: dict[str, float], weights: LossWeights | None = None
) -> tuple[float, float, float]:
    """Weighted totals (loss_2d, loss_3d, loss_total) from named components.

    Missing components are treated as 0 with a warning; NaN or infinite
    components and unknown names are rejected.
    """
    weights = weights or LossWeights()
    known = COMPONENTS_2D + COMPONENTS_3D
    for name in components:
        if name not in known:
            raise ValueError(f"unknown loss component {name!r}")
    values = {}
    for name in known:
        if name in components:
            val = float(components[name])
            if not math.isfinite(val):
                raise ValueError(f"loss component {name!r} is not finite")
            values[name] = val
        else:
            logger.warning("loss component %r missing, using 0", name)
            values[name] = 0.0
    loss_2d = (
        weights.a1 * values["boxinst"]
        + weights.a2 * values["pseudo"]
        + weights.a3 * values["cscs_3d_to_2d"]
    )
    loss_3d = (
        weights.a4 * values["cls"]
        + weights.a5 * values["vote"]
        + weights.a6 * values["cscs_2d_to_3d"]
    )
    return loss_2d, loss_3d, loss_2d + loss_3d


def sample_image_scores(score_maps: np.ndarray, proj: ProjectedPoints) -> np.ndarray:
    """Per-point class scores read from (H, W, n_cls) maps at the nearest
    pixel of each projected point; invalid projections get all-zero rows."""
    score_maps = np.asarray(score_maps, dtype=np.float64)
    if score_maps.ndim != 3:
        raise ValueError("score_maps must be (H, W, n_cls)")
    h, w, n_cls = score_maps.shape
    n = proj.valid.shape[0]
    out = np.zeros((n, n_cls))
    valid = proj.valid
    if valid.any():
        u = np.clip(np.floor(proj.pixels[valid, 0]).astype(np.int64), 0, w - 1)
        v = np.clip(np.floor(proj.pixels[valid, 1]).astype(np.int64), 0, h - 1)
        out[valid] = score_maps[v, u, :]
    return out
