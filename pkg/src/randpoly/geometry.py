"""Floating-point geometric primitives: hyperplanes, simplex volumes, side tests.

Tolerances are relative to input magnitude. Random continuous inputs are in
general position almost surely, so ties only arise from rounding or from
hand-made inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInput

REL_TOL = 1e-9
SIDE_TOL = 1e-9


@dataclass(frozen=True)
class Hyperplane:
    """The set {x : <x, normal> = offset}; H- is <= offset, H+ is >= offset."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self):
        w = np.asarray(self.normal, dtype=float)
        if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
            raise ValueError("normal must be a non-empty finite vector")
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise ValueError(f"normal must be a unit vector, |w| = {np.linalg.norm(w)!r}")
        if not math.isfinite(self.offset):
            raise ValueError("offset must be finite")

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)

    def flipped(self) -> Hyperplane:
        return Hyperplane(tuple(-c for c in self.normal), -self.offset)

    def signed_distance(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.w - self.offset


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-D array of points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def cross_normals(edges: np.ndarray) -> np.ndarray:
    """Generalized cross product of the d-1 edge vectors in each of m stacks.

    ``edges`` has shape (m, d-1, d); returns unnormalized normals of shape
    (m, d). The squared norm of each normal equals the Gram determinant of its
    edges, so a vanishing normal certifies a degenerate tuple.
    """
    m, k, d = edges.shape
    if k != d - 1:
        raise ValueError(f"need d-1 edges in R^d, got {k} edges in R^{d}")
    if d == 1:
        return np.ones((m, 1))
    if d == 2:
        return np.stack([-edges[:, 0, 1], edges[:, 0, 0]], axis=1)
    if d == 3:
        return np.cross(edges[:, 0, :], edges[:, 1, :])
    out = np.empty((m, d))
    cols = np.arange(d)
    for j in range(d):
        minor = edges[:, :, cols != j]
        sign = 1.0 if (j + d - 1) % 2 == 0 else -1.0
        out[:, j] = sign * np.linalg.det(minor)
    return out


def batch_hyperplanes(tuples: np.ndarray, rel_tol: float = REL_TOL):
    """Hyperplanes through each d-tuple of points in R^d.

    ``tuples`` has shape (m, d, d). Returns ``(normals, offsets, ok)`` where
    normals are unit length (canonical sign not applied) and ``ok`` flags the
    tuples whose affine span is a full hyperplane.
    """
    tuples = np.asarray(tuples, dtype=float)
    m, k, d = tuples.shape
    if k != d:
        raise ValueError(f"need d points in R^d, got {k} points in R^{d}")
    base = tuples[:, 0, :]
    edges = tuples[:, 1:, :] - base[:, None, :]
    raw = cross_normals(edges)
    norm = np.linalg.norm(raw, axis=1)
    scale = np.prod(np.linalg.norm(edges, axis=2), axis=1) if d > 1 else np.ones(m)
    ok = norm > rel_tol * scale
    ok &= norm > 0
    safe = np.where(ok, norm, 1.0)
    normals = raw / safe[:, None]
    offsets = np.einsum("ij,ij->i", normals, base)
    return normals, offsets, ok


def _canonical_sign(w: np.ndarray) -> float:
    for c in w:
        if abs(c) > 1e-12:
            return 1.0 if c > 0 else -1.0
    return 1.0


def affine_hyperplane(points: Sequence[Sequence[float]]) -> Hyperplane:
    """Hyperplane through d affinely independent points of R^d.

    The normal is oriented so its first nonzero coordinate is positive.
    Raises DegenerateInput when the points span less than a hyperplane.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if n != d:
        raise ValueError(f"affine_hyperplane needs exactly d={d} points, got {n}")
    normals, offsets, ok = batch_hyperplanes(pts[None, :, :])
    if not ok[0]:
        raise DegenerateInput("points do not span a hyperplane")
    w = normals[0]
    s = _canonical_sign(w)
    w = w * s
    # offset from the centroid averages out rounding across the tuple
    p = float(pts.mean(axis=0) @ w)
    return Hyperplane(tuple(float(c) for c in w), p)


def simplex_volumes(simplices: np.ndarray) -> np.ndarray:
    """k-volumes of a stack of simplices with shape (..., k+1, d)."""
    s = np.asarray(simplices, dtype=float)
    k = s.shape[-2] - 1
    if k == 0:
        return np.ones(s.shape[:-2])
    g = s[..., 1:, :] - s[..., :1, :]
    gram = g @ np.swapaxes(g, -1, -2)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(k)


def simplex_volume(points: Sequence[Sequence[float]]) -> float:
    """k-dimensional volume of the simplex on k+1 points; 0 when degenerate."""
    pts = _as_points(points)
    if pts.shape[0] - 1 > pts.shape[1]:
        raise ValueError("a k-simplex needs k <= d")
    return float(simplex_volumes(pts))


def side_of(h: Hyperplane, x: Sequence[float]) -> int:
    """Sign of <x, w> - p, with a relative dead zone mapped to 0."""
    x = np.asarray(x, dtype=float)
    if x.shape != (h.dim,):
        raise ValueError(f"dimension mismatch: point {x.shape}, hyperplane {h.dim}")
    v = float(x @ h.w) - h.offset
    if abs(v) <= SIDE_TOL * (1.0 + abs(h.offset)):
        return 0
    return 1 if v > 0 else -1


def dimension_constants(d: int) -> tuple[float, float]:
    """Volume of the unit d-ball and surface area of the unit (d-1)-sphere."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    kappa = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    sigma = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return kappa, sigma


def ball_volume(d: int) -> float:
    """kappa_d, with kappa_0 = 1."""
    if d == 0:
        return 1.0
    return dimension_constants(d)[0]
