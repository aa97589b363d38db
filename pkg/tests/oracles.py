"""Independent brute-force reference implementations used as test oracles.

Everything here is deliberately written as plain loops, straight from the
operation definitions, and shares no code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def dcs_simplified_trace(depth: np.ndarray, threshold: float) -> tuple[np.ndarray, int]:
    """Literal left-to-right scan; returns the per-cell id matrix and count."""
    depth = np.asarray(depth, dtype=float)
    m, n = depth.shape
    ids = np.full((m, n), -1, dtype=int)
    n_clu = 0
    for r in range(m):
        for i in range(n):
            if math.isnan(depth[r, i]):
                continue
            if (
                i >= 1
                and not math.isnan(depth[r, i - 1])
                and abs(depth[r, i] - depth[r, i - 1]) < threshold
            ):
                ids[r, i] = ids[r, i - 1]
            else:
                ids[r, i] = n_clu
                n_clu += 1
    return ids, n_clu


def dcs_dynamic_trace(
    depth: np.ndarray, windows: np.ndarray, thresholds: np.ndarray
) -> tuple[np.ndarray, int]:
    """Literal equal-table trace: link, assign ids to roots, relabel."""
    depth = np.asarray(depth, dtype=float)
    m, n = depth.shape
    ids = np.full((m, n), -1, dtype=int)
    n_clu = 0
    for r in range(m):
        equal = list(range(n))
        half = max(1, int(windows[r] // 2))
        t_r = thresholds[r]
        for i in range(n):
            if math.isnan(depth[r, i]):
                continue
            for j in range(1, half + 1):
                if (
                    i >= j
                    and not math.isnan(depth[r, i - j])
                    and abs(depth[r, i - j] - depth[r, i]) < t_r
                ):
                    equal[i] = equal[i - j]
                    break
        for i in range(n):
            if not math.isnan(depth[r, i]) and equal[i] == i:
                ids[r, i] = n_clu
                n_clu += 1
        for i in range(n):
            if math.isnan(depth[r, i]):
                continue
            label = i
            while label != equal[label]:
                label = equal[label]
            ids[r, i] = ids[r, label]
    return ids, n_clu


def bfs_components(points: np.ndarray, radius: float) -> np.ndarray:
    """Components of the <=radius graph by breadth-first search."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    n = pts.shape[0]
    labels = np.full(n, -1, dtype=int)
    if n == 0:
        return labels
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    adj = d2 <= radius * radius
    nxt = 0
    for i in range(n):
        if labels[i] >= 0:
            continue
        frontier = np.zeros(n, dtype=bool)
        frontier[i] = True
        comp = np.zeros(n, dtype=bool)
        while frontier.any():
            comp |= frontier
            frontier = adj[frontier].any(axis=0) & ~comp
        labels[comp] = nxt
        nxt += 1
    return labels


def rsc_trace(
    pred: np.ndarray,
    seg: np.ndarray,
    t1: float,
    t2: float,
    classes: list[int],
) -> np.ndarray:
    """Literal class-by-class, segment-by-segment voting pass."""
    pred = np.asarray(pred)
    seg = np.asarray(seg)
    out = pred.copy()
    mask_bg = pred == 0
    for cls in classes:
        mask_i = pred == cls
        for s in sorted(set(seg[mask_i].tolist())):
            in_s = seg == s
            n_bg = int((mask_bg & in_s).sum())
            n_i = int((mask_i & in_s).sum())
            n_tot = int(in_s.sum())
            if n_bg / n_i > t1:
                out[in_s] = 0
            elif n_i / n_tot > t2:
                out[in_s] = cls
    return out


def vote_enumerate(
    scores: np.ndarray,
    tau_high: float,
    tau_low: float,
    t_reliable: int,
    semantic: np.ndarray,
    instance: np.ndarray,
    box_assign: np.ndarray,
    box_class: dict[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Point-by-point, epoch-by-epoch vote counting."""
    out_sem = semantic.copy()
    out_inst = instance.copy()
    n_epochs, n = scores.shape
    for p in range(n):
        fg = sum(1 for e in range(n_epochs) if scores[e, p] > tau_high)
        bg = sum(1 for e in range(n_epochs) if scores[e, p] < tau_low)
        if fg >= t_reliable and box_assign[p] > 0:
            out_sem[p] = box_class[int(box_assign[p])]
            out_inst[p] = box_assign[p]
        elif bg >= t_reliable:
            out_sem[p] = 0
            out_inst[p] = 0
    return out_sem, out_inst


def miou_trace(pred: np.ndarray, gt: np.ndarray, n_cls: int) -> tuple[dict[int, float], float]:
    """Confusion counting with explicit loops."""
    per_class: dict[int, float] = {}
    for c in range(1, n_cls + 1):
        tp = fp = fn = 0
        for p, g in zip(pred.tolist(), gt.tolist()):
            if g == -1:
                continue
            if p == c and g == c:
                tp += 1
            elif p == c and g != c:
                fp += 1
            elif p != c and g == c:
                fn += 1
        if tp + fp + fn > 0:
            per_class[c] = tp / (tp + fp + fn)
    mean = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return per_class, mean


def ap_trace(preds: list, gts: list, threshold: float) -> float:
    """AP for one class at one threshold: explicit greedy matching followed by
    a literal 101-point interpolation over prefix precision/recall pairs.

    ``preds`` are (frame_id, indices, score) already sorted by score rule;
    ``gts`` are (frame_id, indices).
    """
    n_gt = len(gts)
    if n_gt == 0:
        return 0.0
    matched = [False] * n_gt
    hits = []
    for frame_id, indices, _score in preds:
        best = -1
        best_iou = 0.0
        for gi, (g_frame, g_idx) in enumerate(gts):
            if matched[gi] or g_frame != frame_id:
                continue
            a, b = set(indices), set(g_idx)
            union = len(a | b)
            iou = len(a & b) / union if union else 0.0
            if iou > best_iou:
                best_iou = iou
                best = gi
        if best >= 0 and best_iou >= threshold:
            matched[best] = True
            hits.append(True)
        else:
            hits.append(False)
    points = []
    tp = 0
    for k, hit in enumerate(hits, start=1):
        tp += 1 if hit else 0
        points.append((tp / n_gt, tp / k))
    total = 0.0
    for grid in np.linspace(0.0, 1.0, 101):
        best_p = 0.0
        for rec, prec in points:
            if rec >= grid and prec > best_p:
                best_p = prec
        total += best_p
    return total / 101.0


def fusion_weights_direct(scores, ious, k) -> np.ndarray:
    """Plain-float evaluation of the score/overlap weighting formula."""
    raw = [s * math.exp(k * i) for s, i in zip(scores, ious)]
    total = sum(raw)
    if total <= 0:
        return np.full(len(raw), 1.0 / len(raw))
    return np.array([w / total for w in raw])
