"""Convex hulls by exhaustive facet enumeration.

Every d-subset of the input spans a candidate hyperplane; it supports a facet
exactly when no input point lies strictly on each side. This is O(C(n, d) * n)
and meant for desk-scale inputs (n up to a few dozen, d up to about 6).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DegenerateInput
from .geometry import SIDE_TOL, Hyperplane, batch_hyperplanes, simplex_volumes

_CHUNK_CELLS = 2_000_000


@dataclass(frozen=True)
class Facet:
    indices: tuple[int, ...]
    hyperplane: Hyperplane  # outward: all input points satisfy <x, w> <= p

    @property
    def merged(self) -> bool:
        return len(self.indices) > self.hyperplane.dim


@dataclass
class HullComplex:
    dim: int
    points: np.ndarray
    vertices: tuple[int, ...]
    facets: list[Facet]
    f_vector: tuple[Optional[int], ...]
    volume: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_facets(self) -> int:
        return len(self.facets)


@lru_cache(maxsize=64)
def _combinations(n: int, k: int) -> np.ndarray:
    return np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.intp,
    ).reshape(-1, k)


def _combination_chunks(n: int, k: int, chunk: int):
    if n <= 60:
        combos = _combinations(n, k)
        for start in range(0, len(combos), chunk):
            yield combos[start:start + chunk]
        return
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def _check_full_dimensional(centered: np.ndarray) -> float:
    n, d = centered.shape
    if n < d + 1:
        raise DegenerateInput(f"need at least d+1={d + 1} points in R^{d}, got {n}")
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= 1e-9 * sv[0]:
        raise DegenerateInput("point set is not full-dimensional")
    return float(np.max(np.linalg.norm(centered, axis=1)))


def supporting_facets(points: np.ndarray):
    """Enumerate facet hyperplanes of the hull of ``points``.

    Returns ``(normals, offsets, on_plane)`` with one row per distinct facet:
    outward unit normals, offsets in the input frame, and a boolean mask of the
    input points lying on that facet. Coplanar candidate subsets are merged.
    """
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    center = pts.mean(axis=0)
    centered = pts - center
    scale = _check_full_dimensional(centered)

    chunk = max(1, _CHUNK_CELLS // max(n, 1))
    keep_w, keep_p, keep_mask = [], [], []
    for combos in _combination_chunks(n, d, chunk):
        w, p, ok = batch_hyperplanes(centered[combos])
        sd = w @ centered.T - p[:, None]
        tol = SIDE_TOL * (scale + np.abs(p))[:, None]
        pos = sd > tol
        neg = sd < -tol
        any_pos = pos.any(axis=1)
        support = ok & ~(any_pos & neg.any(axis=1))
        if not support.any():
            continue
        flip = np.where(any_pos[support], -1.0, 1.0)
        keep_w.append(w[support] * flip[:, None])
        keep_p.append(p[support] * flip)
        keep_mask.append(~(pos[support] | neg[support]))

    if not keep_w:
        raise DegenerateInput("no supporting hyperplane found")
    w = np.concatenate(keep_w)
    p = np.concatenate(keep_p)
    mask = np.concatenate(keep_mask)
    _, first = np.unique(np.packbits(mask, axis=1), axis=0, return_index=True)
    first = np.sort(first)
    w, p, mask = w[first], p[first], mask[first]
    return w, p + w @ center, mask


def _hyperplane(w: np.ndarray, p: float) -> Hyperplane:
    w = w / np.linalg.norm(w)
    return Hyperplane(tuple(float(c) for c in w), float(p))


def _orthonormal_complement(w: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(w[None, :])
    return vt[1:]


def _hull_1d(pts: np.ndarray) -> HullComplex:
    x = pts[:, 0]
    lo, hi = int(np.argmin(x)), int(np.argmax(x))
    if x[hi] - x[lo] <= 1e-9 * max(1.0, float(np.max(np.abs(x)))):
        raise DegenerateInput("point set is not full-dimensional")
    facets = [
        Facet((lo,), Hyperplane((-1.0,), float(-x[lo]))),
        Facet((hi,), Hyperplane((1.0,), float(x[hi]))),
    ]
    return HullComplex(1, pts, tuple(sorted({lo, hi})), facets, (2,), float(x[hi] - x[lo]))


def convex_hull(points) -> HullComplex:
    """Convex hull of n >= d+1 full-dimensional points in R^d."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or not np.all(np.isfinite(pts)):
        raise ValueError("points must be a finite (n, d) array")
    n, d = pts.shape
    if n < d + 1:
        raise DegenerateInput(f"need at least d+1={d + 1} points in R^{d}, got {n}")
    if d == 1:
        return _hull_1d(pts)

    w, p, mask = supporting_facets(pts)
    counts = mask.sum(axis=1)
    simple = counts == d
    diagnostics = []

    facet_vol = np.empty(len(w))
    facet_f0 = np.full(len(w), d)
    facet_verts: list[np.ndarray] = [None] * len(w)
    if simple.any():
        idx = np.nonzero(mask[simple])[1].reshape(-1, d)
        facet_vol[simple] = simplex_volumes(pts[idx])
        for row, ids in zip(np.nonzero(simple)[0], idx):
            facet_verts[row] = ids
    for row in np.nonzero(~simple)[0]:
        ids = np.nonzero(mask[row])[0]
        basis = _orthonormal_complement(w[row])
        sub = convex_hull((pts[ids] - pts[ids].mean(axis=0)) @ basis.T)
        facet_vol[row] = sub.volume
        facet_f0[row] = len(sub.vertices)
        facet_verts[row] = ids[list(sub.vertices)]
        diagnostics.append(
            f"AmbiguousFace: {len(ids)} points on one facet hyperplane, merged into a single facet"
        )

    vertices = tuple(sorted(set(int(i) for v in facet_verts for i in v)))
    centroid = pts[list(vertices)].mean(axis=0)
    heights = p - w @ centroid
    volume = float(np.sum(facet_vol * heights) / d)

    facets = [
        Facet(tuple(int(i) for i in np.nonzero(mask[r])[0]), _hyperplane(w[r], p[r]))
        for r in range(len(w))
    ]
    f_vec: list[Optional[int]] = [len(vertices)] + [None] * (d - 2) + [len(facets)]
    if d == 3:
        f_vec[1] = int(facet_f0.sum()) // 2
    return HullComplex(d, pts, vertices, facets, tuple(f_vec), max(volume, 0.0), diagnostics)


def f_vector(hull: HullComplex) -> tuple[Optional[int], ...]:
    """(f_0, ..., f_{d-1}); middle entries are None for d >= 4."""
    return hull.f_vector


def hull_volume(hull: HullComplex) -> float:
    return hull.volume


def facet_count(points) -> int:
    """Number of facets of the hull, without building the full complex."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] == 1:
        return 2
    return int(supporting_facets(pts)[0].shape[0])
