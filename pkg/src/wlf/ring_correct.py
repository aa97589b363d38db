"""Ring-segment label correction.

Votes inside every ring segment to clean up predicted per-point class labels:
a segment dominated by background (relative to the class in question) is
flattened to background, and a segment dominated by one class is flattened to
that class. Counts are always taken on the original input labels; classes are
processed in ascending id order, so a later class pass may overwrite an
earlier one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .range_image import RingSegments

__all__ = ["RscConfig", "rsc_correct"]


@dataclass
class RscConfig:
    """Voting thresholds: background/class ratio above t1 clears a segment,
    class/segment share above t2 claims it."""

    t1: float = 0.5
    t2: float = 0.7

    def __post_init__(self) -> None:
        if not (0.0 <= self.t1 <= 1.0 and 0.0 <= self.t2 <= 1.0):
            raise ValueError("thresholds must lie in [0, 1]")


def rsc_correct(
    pred: np.ndarray,
    segments: RingSegments,
    cfg: RscConfig,
    classes: list[int] | None = None,
) -> np.ndarray:
    """Correct predicted labels (0 = background) by segment-level voting.

    For each class c and each segment containing a c-predicted point:
    if bg_count / c_count > t1 the whole segment becomes background, else if
    c_count / segment_size > t2 the whole segment becomes c.
    """
    pred = np.asarray(pred)
    seg = segments.segment_id
    if pred.shape != seg.shape:
        raise ValueError("pred/segments length mismatch")
    out = pred.copy()
    if pred.size == 0 or segments.num_segments == 0:
        return out
    if classes is None:
        classes = sorted(int(c) for c in np.unique(pred) if c > 0)
    k = segments.num_segments
    seg_total = np.bincount(seg, minlength=k)
    bg_count = np.bincount(seg[pred == 0], minlength=k)
    for cls in classes:
        cls_count = np.bincount(seg[pred == cls], minlength=k)
        touched = np.flatnonzero(cls_count > 0)
        if touched.size == 0:
            continue
        to_bg = bg_count[touched] / cls_count[touched] > cfg.t1
        to_cls = ~to_bg & (cls_count[touched] / seg_total[touched] > cfg.t2)
        clear = touched[to_bg]
        claim = touched[to_cls]
        if clear.size:
            out[np.isin(seg, clear)] = 0
        if claim.size:
            out[np.isin(seg, claim)] = cls
    return out
