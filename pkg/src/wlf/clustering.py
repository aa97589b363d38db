"""Radius-graph connected components over 3D points.

Two points are connected iff their Euclidean distance is <= radius; clusters
are the transitive closure. Neighbour search uses a uniform voxel grid with
edge length equal to the radius, merging via union-find, which matches the
naive all-pairs definition exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ClassRadii",
    "Components",
    "EmptySelectionError",
    "ccl_cluster",
    "max_component",
]


class EmptySelectionError(ValueError):
    """Raised when a largest component is requested from an empty point set."""


@dataclass
class ClassRadii:
    """Per-class clustering radius in metres."""

    radii: dict[int, float] = field(
        default_factory=lambda: {1: 0.6, 2: 0.1, 3: 0.15}
    )

    def __post_init__(self) -> None:
        for cls, r in self.radii.items():
            if r <= 0:
                raise ValueError(f"radius for class {cls} must be positive")

    def for_class(self, class_id: int) -> float:
        try:
            return self.radii[class_id]
        except KeyError:
            raise KeyError(f"no clustering radius for class {class_id}") from None


@dataclass
class Components:
    """Dense per-point component ids (first-occurrence order) and sizes."""

    labels: np.ndarray
    sizes: np.ndarray

    @property
    def num(self) -> int:
        return self.sizes.shape[0]


# Half-space neighbour offsets: with cell edge == radius, any pair within the
# radius lies in the same or an adjacent voxel, and each unordered voxel pair
# is visited once.
_HALF_OFFSETS = [
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) > (0, 0, 0)
]


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _candidate_pairs(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs of points in the same or adjacent voxels."""
    voxels: dict[tuple[int, int, int], np.ndarray] = {}
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=uniq.shape[0])
    splits = np.split(order, np.cumsum(counts)[:-1])
    for key, members in zip(map(tuple, uniq), splits):
        voxels[key] = members
    left: list[np.ndarray] = []
    right: list[np.ndarray] = []
    for key, members in voxels.items():
        m = members.shape[0]
        if m > 1:
            ia, ib = np.triu_indices(m, k=1)
            left.append(members[ia])
            right.append(members[ib])
        for off in _HALF_OFFSETS:
            nkey = (key[0] + off[0], key[1] + off[1], key[2] + off[2])
            other = voxels.get(nkey)
            if other is None:
                continue
            left.append(np.repeat(members, other.shape[0]))
            right.append(np.tile(other, m))
    if not left:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(left), np.concatenate(right)


def ccl_cluster(points: np.ndarray, radius: float) -> Components:
    """Cluster points into radius-connected components."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = pts.shape[0]
    if n == 0:
        return Components(labels=np.zeros(0, dtype=np.int32), sizes=np.zeros(0, dtype=np.int64))
    keys = np.floor(pts / radius).astype(np.int64)
    ia, ib = _candidate_pairs(keys)
    uf = _UnionFind(n)
    if ia.size:
        d2 = np.sum((pts[ia] - pts[ib]) ** 2, axis=1)
        hits = d2 <= radius * radius
        for a, b in zip(ia[hits].tolist(), ib[hits].tolist()):
            uf.union(a, b)
    labels = np.empty(n, dtype=np.int32)
    remap: dict[int, int] = {}
    for i in range(n):
        root = uf.find(i)
        labels[i] = remap.setdefault(root, len(remap))
    sizes = np.bincount(labels, minlength=len(remap)).astype(np.int64)
    return Components(labels=labels, sizes=sizes)


def max_component(comps: Components, points: np.ndarray) -> np.ndarray:
    """Indices of the largest component.

    Size ties go to the component with the smaller mean range to the sensor,
    then the smaller component id.
    """
    if comps.num == 0:
        raise EmptySelectionError("no points to select a component from")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    best = int(comps.sizes.max())
    tied = np.flatnonzero(comps.sizes == best)
    if tied.shape[0] > 1:
        ranges = np.linalg.norm(pts, axis=1)
        means = [float(ranges[comps.labels == c].mean()) for c in tied]
        tied = tied[np.lexsort((tied, np.asarray(means)))]
    winner = int(tied[0])
    return np.flatnonzero(comps.labels == winner)
