from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from randpoly.errors import DegenerateInput
from randpoly.geometry import (
    Hyperplane,
    affine_hyperplane,
    batch_hyperplanes,
    dimension_constants,
    side_of,
    simplex_volume,
    simplex_volumes,
)


def test_hyperplane_requires_unit_normal():
    with pytest.raises(ValueError):
        Hyperplane((1.0, 1.0), 0.0)
    h = Hyperplane((0.0, 1.0), 2.0)
    assert h.flipped().offset == -2.0
    assert h.signed_distance([3.0, 5.0]) == pytest.approx(3.0)


def test_affine_hyperplane_line_through_two_points():
    h = affine_hyperplane([[0.0, 1.0], [1.0, 1.0]])
    assert h.normal == pytest.approx((0.0, 1.0))
    assert h.offset == pytest.approx(1.0)


def test_affine_hyperplane_sign_rule_first_nonzero_positive():
    h = affine_hyperplane([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert h.normal == pytest.approx((1 / math.sqrt(3),) * 3)
    assert h.offset == pytest.approx(1 / math.sqrt(3))
    # vertical line: first coordinate of the normal is the nonzero one
    h = affine_hyperplane([[2.0, 5.0], [2.0, -1.0]])
    assert h.normal == pytest.approx((1.0, 0.0))
    assert h.offset == pytest.approx(2.0)


def test_affine_hyperplane_degenerate():
    with pytest.raises(DegenerateInput):
        affine_hyperplane([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DegenerateInput):
        affine_hyperplane([[0, 0, 0], [1, 1, 1], [2, 2, 2]])


def test_side_of_examples():
    h = Hyperplane((0.0, 1.0), 0.0)
    assert side_of(h, [5.0, 3.0]) == 1
    assert side_of(h, [5.0, 0.0]) == 0
    assert side_of(h, [5.0, -3.0]) == -1


def test_simplex_volume_examples():
    assert simplex_volume([[0, 0], [1, 0], [0, 1]]) == pytest.approx(0.5)
    assert simplex_volume([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]) == pytest.approx(1 / 6)
    # a segment in R^3 has 1-volume equal to its length
    assert simplex_volume([[0, 0, 0], [1, 2, 2]]) == pytest.approx(3.0)
    # collinear triangle is flat
    assert simplex_volume([[0, 0], [1, 1], [2, 2]]) == pytest.approx(0.0, abs=1e-12)


def test_simplex_volume_matches_determinant_oracle():
    rng = np.random.default_rng(3)
    for d in range(1, 7):
        pts = rng.normal(size=(d + 1, d))
        det = abs(np.linalg.det(pts[1:] - pts[0])) / math.factorial(d)
        assert simplex_volume(pts) == pytest.approx(det, rel=1e-9)


def test_simplex_volume_invariances():
    rng = np.random.default_rng(11)
    for d in range(2, 6):
        for k in range(1, d + 1):
            pts = rng.normal(size=(k + 1, d))
            base = simplex_volume(pts)
            perm = pts[rng.permutation(k + 1)]
            rot = special_ortho_group.rvs(d, random_state=rng)
            moved = pts @ rot.T + rng.normal(size=d)
            assert simplex_volume(perm) == pytest.approx(base, rel=1e-9)
            assert simplex_volume(moved) == pytest.approx(base, rel=1e-9)


def test_defining_points_lie_on_hyperplane():
    rng = np.random.default_rng(5)
    for d in range(1, 7):
        for _ in range(20):
            pts = rng.normal(scale=10.0, size=(d, d))
            h = affine_hyperplane(pts)
            assert all(side_of(h, x) == 0 for x in pts)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_hyperplane_property_points_on_plane(d, seed, scale):
    pts = np.random.default_rng(seed).uniform(-scale, scale, size=(d, d))
    h = affine_hyperplane(pts)
    assert np.linalg.norm(h.w) == pytest.approx(1.0, abs=1e-12)
    first = next(c for c in h.normal if abs(c) > 1e-12)
    assert first > 0
    assert all(side_of(h, x) == 0 for x in pts)


def test_batch_hyperplanes_flags_degenerate_tuples():
    tuples = np.array([[[0.0, 0.0], [1.0, 0.0]], [[1.0, 1.0], [1.0, 1.0]]])
    w, p, ok = batch_hyperplanes(tuples)
    assert ok.tolist() == [True, False]
    assert abs(w[0] @ [0.0, 1.0]) == pytest.approx(1.0)


@pytest.mark.parametrize("d,kappa,sigma", [(1, 2, 2), (2, math.pi, 2 * math.pi),
                                           (3, 4 * math.pi / 3, 4 * math.pi)])
def test_dimension_constants_examples(d, kappa, sigma):
    assert dimension_constants(d) == pytest.approx((kappa, sigma), rel=1e-15)


def test_sigma_equals_d_kappa():
    for d in range(1, 11):
        kappa, sigma = dimension_constants(d)
        assert sigma == pytest.approx(d * kappa, rel=1e-14)
    with pytest.raises(ValueError):
        dimension_constants(0)


def test_simplex_volumes_batch_shape():
    arr = np.random.default_rng(0).normal(size=(4, 5, 3, 2))
    assert simplex_volumes(arr).shape == (4, 5)
