from __future__ import annotations

import math

import numpy as np
import pytest

from randpoly.errors import QuadratureNoConvergence
from randpoly.quadrature import integrate


def test_polynomial_exact():
    val, err = integrate(lambda x: 3 * x**2, 0.0, 2.0)
    assert val == pytest.approx(8.0, rel=1e-14)
    assert err < 1e-10


def test_smooth_functions():
    assert integrate(np.sin, 0.0, math.pi, rel_tol=1e-12)[0] == pytest.approx(2.0, rel=1e-12)
    assert integrate(np.exp, -1.0, 1.0, rel_tol=1e-12)[0] == pytest.approx(math.e - 1 / math.e, rel=1e-12)


def test_endpoint_singularity_is_resolved():
    val, _ = integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0, rel_tol=1e-9)
    assert val == pytest.approx(2.0, rel=1e-8)


def test_sharply_peaked_beta_kernel():
    n = 400
    val, _ = integrate(lambda s: (n + 1) * (1 - s) ** n, 0.0, 1.0, rel_tol=1e-12, breakpoints=(0.01,))
    assert val == pytest.approx(1.0, rel=1e-12)


def test_cancelling_integrand_abs_tol():
    # integral of x - 1/2 over [0, 1] vanishes
    val, _ = integrate(lambda x: x - 0.5, 0.0, 1.0, rel_tol=0.0, abs_tol=1e-16)
    assert abs(val) < 1e-15


def test_breakpoints_outside_ignored():
    assert integrate(np.cos, 0.0, 1.0, breakpoints=(-1.0, 0.5, 2.0))[0] == pytest.approx(math.sin(1.0))


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureNoConvergence):
        integrate(lambda x: np.sin(1 / x) / x, 1e-8, 1.0, rel_tol=1e-14, max_intervals=50)


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureNoConvergence):
        integrate(lambda x: np.where(x > 0.3, np.inf, 1.0), 0.0, 1.0)


def test_reversed_and_empty_interval():
    assert integrate(np.exp, 0.0, 0.0)[0] == 0.0
    assert integrate(lambda x: x, 1.0, 0.0)[0] == pytest.approx(-0.5)
