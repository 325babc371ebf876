"""Deterministic facet-number calculus for rotation-invariant models.

With w = e_1 and the substitution s = Psi(p), the expected facet number of the
hull of n i.i.d. points reduces to

    E f_{d-1}(n) = (d-1)! * sigma_d * I(n),
    I(n) = C(n, d) * int_0^1 (1-s)^(n-d) * psi(Psi^-1(s))^(d-1) * ED(Psi^-1(s)) ds,

where ED(t) is the mean (d-1)-volume of a simplex on d points drawn from the
section of the body at offset t. ED is a constant for the Gaussian and
m_{d-1} * rho(t)^(d-1) for a ball whose section at t has radius rho(t); both
constants come from a one-off Monte Carlo run and are cached.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import BallModel, BodyModel, GaussianModel, section_simplex_expectation
from .errors import DomainError, UnsupportedModel
from .estimate import EstimateCI
from .geometry import dimension_constants
from .quadrature import integrate

CONSTANT_REPS = 1_000_000
CONSTANT_SEED = 20190101
CONCAVITY_TOL = 1e-8
GRID_EDGE = 1e-6
GRID_POINTS = 1001


@dataclass(frozen=True)
class SectionConstant:
    """Mean section-simplex volume at t = 0 with its Monte Carlo error."""

    value: float
    std_error: float
    reps: int
    seed: int

    @property
    def rel_error(self) -> float:
        return self.std_error / self.value if self.value else 0.0


_constants: dict[tuple, SectionConstant] = {}
_constants_lock = threading.Lock()


def _require_symmetric(model: BodyModel):
    if not isinstance(model, (GaussianModel, BallModel)):
        raise UnsupportedModel(f"{model.kind} model is not rotation invariant")


def section_constant(model: BodyModel, reps: int = CONSTANT_REPS, seed: int = CONSTANT_SEED,
                     threads: Optional[int] = None) -> SectionConstant:
    """Cached ED normalization: Gaussian section mean, or mean simplex volume in the unit (d-1)-ball."""
    _require_symmetric(model)
    d = model.dim
    if d == 1:
        return SectionConstant(1.0, 0.0, 0, seed)
    key = (model.kind, d, reps, seed)
    with _constants_lock:
        if key not in _constants:
            unit = GaussianModel(d) if model.kind == "gaussian" else BallModel(d)
            est = section_simplex_expectation(unit, 0.0, reps, seed, threads=threads)
            _constants[key] = SectionConstant(est.mean, est.std_error, reps, seed)
        return _constants[key]


def section_mean_volume(model: BodyModel, t, const: SectionConstant):
    """ED(t) assembled from the cached constant."""
    t = np.asarray(t, dtype=float)
    if isinstance(model, GaussianModel) or model.dim == 1:
        return np.full(t.shape, const.value)
    rho2 = np.clip(model.radius ** 2 - t * t, 0.0, None)
    return const.value * rho2 ** ((model.dim - 1) / 2)


def _const(model, const):
    return section_constant(model) if const is None else const


def _weight(model: BodyModel, s: np.ndarray, const: SectionConstant) -> np.ndarray:
    """L(s)^(d-1) = psi(Psi^-1(s))^(d-1) * ED(Psi^-1(s))."""
    d = model.dim
    if d == 1:
        return np.ones_like(s)
    p = model.cdf_inv(s)
    return model.psi(p) ** (d - 1) * section_mean_volume(model, p, const)


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(~((s > 0) & (s < 1))):
        raise DomainError("s must lie strictly inside (0, 1)")
    return s


def profile_L(model: BodyModel, s, const: Optional[SectionConstant] = None):
    """L(s) = psi(Psi^-1(s)) * ED(Psi^-1(s))^(1/(d-1))."""
    _require_symmetric(model)
    if model.dim < 2:
        raise DomainError("the profile L(s) needs d >= 2")
    s = _check_s(s)
    const = _const(model, const)
    p = model.cdf_inv(s)
    out = np.asarray(model.psi(p)) * section_mean_volume(model, p, const) ** (1.0 / (model.dim - 1))
    return float(out) if out.ndim == 0 else out


def gaussian_L_derivative(model: BodyModel, s, const: Optional[SectionConstant] = None):
    """Closed-form L'(s) = -c * Psi^-1(s) for the Gaussian profile L = c * psi(Psi^-1(s))."""
    if not isinstance(model, GaussianModel):
        raise UnsupportedModel("the closed-form derivative holds for the Gaussian model only")
    if model.dim < 2:
        raise DomainError("the profile L(s) needs d >= 2")
    s = _check_s(s)
    c = _const(model, const).value ** (1.0 / (model.dim - 1))
    out = -c * np.asarray(model.cdf_inv(s))
    return float(out) if out.ndim == 0 else out


@dataclass
class SectionProfile:
    model: BodyModel
    grid: np.ndarray
    values: np.ndarray
    constant: Optional[SectionConstant] = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")


def default_grid(points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(GRID_EDGE, 1.0 - GRID_EDGE, points)


def section_profile(model: BodyModel, grid=None, const: Optional[SectionConstant] = None) -> SectionProfile:
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    const = _const(model, const)
    return SectionProfile(model, grid, profile_L(model, grid, const), const)


@dataclass(frozen=True)
class ConcavityCertificate:
    passed: bool
    max_second_difference: float
    argmax_s: float
    tolerance: float
    second_differences: np.ndarray = field(repr=False, compare=False)


def second_differences(grid, values) -> np.ndarray:
    """Second differences scaled to a uniform-grid stencil and by max |L|."""
    s = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    h0 = s[1:-1] - s[:-2]
    h1 = s[2:] - s[1:-1]
    slope0 = (v[1:-1] - v[:-2]) / h0
    slope1 = (v[2:] - v[1:-1]) / h1
    d2 = 2.0 * (slope1 - slope0) / (h0 + h1)
    h = (s[-1] - s[0]) / (len(s) - 1)
    scale = np.max(np.abs(v))
    if scale == 0:
        return np.zeros_like(d2)
    return d2 * h * h / scale


def concavity_check(profile: SectionProfile, tol: float = CONCAVITY_TOL) -> ConcavityCertificate:
    """Pass iff every normalized second difference is at most ``tol``."""
    if len(profile.grid) < 3:
        raise ValueError("concavity check needs at least 3 grid points")
    d2 = second_differences(profile.grid, profile.values)
    i = int(np.argmax(d2))
    worst = float(d2[i])
    return ConcavityCertificate(worst <= tol, worst, float(profile.grid[i + 1]), tol, d2)


def _breaks(n: int, d: int, *extra: float) -> list[float]:
    pts = {min(1.0, 3.0 * d / n), *extra}
    # geometric cuts toward 0 where (1-s)^(n-d) concentrates the mass
    edge = min(1.0, 3.0 * d / n)
    pts.update(edge / 4 ** k for k in range(1, 6))
    return sorted(p for p in pts if 0.0 < p < 1.0)


def integral_I(model: BodyModel, n: int, tol: float = 1e-8,
               const: Optional[SectionConstant] = None) -> float:
    """Reduced one-dimensional facet integral I(n)."""
    _require_symmetric(model)
    d = model.dim
    if n < d:
        raise DomainError(f"I(n) needs n >= d = {d}")
    if d == 1:
        # the weight is identically 1: n * B(1, n) = 1
        return 1.0
    const = _const(model, const)
    coef = math.comb(n, d)

    def f(s):
        return coef * (1.0 - s) ** (n - d) * _weight(model, s, const)

    val, _ = integrate(f, 0.0, 1.0, rel_tol=tol, breakpoints=_breaks(n, d))
    return val


def facet_prefactor(d: int) -> float:
    return math.factorial(d - 1) * dimension_constants(d)[1]


def expected_facets(model: BodyModel, n: int, tol: float = 1e-8,
                    const: Optional[SectionConstant] = None) -> float:
    """E f_{d-1} of the hull of n points, via the reduced integral."""
    if n < model.dim + 1:
        raise DomainError(f"expected facets need n >= d+1 = {model.dim + 1}")
    return facet_prefactor(model.dim) * integral_I(model, n, tol, const)


def expected_facets_estimate(model: BodyModel, n: int, tol: float = 1e-8,
                             const: Optional[SectionConstant] = None) -> EstimateCI:
    """expected_facets with the error inherited from the Monte Carlo section constant."""
    const = _const(model, const)
    val = expected_facets(model, n, tol, const)
    return EstimateCI(val, abs(val) * const.rel_error, const.reps, const.seed)


def delta_I(model: BodyModel, n: int, tol: float = 1e-12,
            const: Optional[SectionConstant] = None) -> tuple[float, float]:
    """I(n) - I(n-1), directly and through the (d - n s) integrand."""
    _require_symmetric(model)
    d = model.dim
    if n < d + 1:
        raise DomainError(f"delta_I needs n >= d+1 = {d + 1}")
    const = _const(model, const)
    direct = integral_I(model, n, tol, const) - integral_I(model, n - 1, tol, const)
    if d == 1:
        return direct, 0.0
    coef = math.comb(n, d) / n

    def f(s):
        return coef * (1.0 - s) ** (n - d - 1) * (d - n * s) * _weight(model, s, const)

    form, _ = integrate(f, 0.0, 1.0, rel_tol=tol, breakpoints=_breaks(n, d, d / n))
    return direct, form


def beta_identity_check(n: int, d: int) -> float:
    """|int_0^1 (1-s)^(n-d-1) (d - n s) s^(d-1) ds|, which vanishes identically."""
    if d < 1 or n < d + 1:
        raise DomainError("need d >= 1 and n >= d+1")

    def f(s):
        return (1.0 - s) ** (n - d - 1) * (d - n * s) * s ** (d - 1)

    val, _ = integrate(f, 0.0, 1.0, rel_tol=0.0, abs_tol=1e-16, breakpoints=(d / n,))
    return abs(val)


@dataclass
class MonotonicityReport:
    model: str
    dim: int
    method: str
    n_values: list[int]
    values: list[float]
    std_errors: Optional[list[float]]
    differences: list[float]
    difference_errors: Optional[list[float]]
    min_difference: float
    monotone: bool
    concavity: Optional[ConcavityCertificate] = None
    seed: Optional[int] = None
    reps: Optional[int] = None

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("non-finite value in monotonicity report")


def quadrature_values(model: BodyModel, n_values: Sequence[int], tol: float = 1e-12,
                      const: Optional[SectionConstant] = None) -> list[float]:
    const = _const(model, const)
    return [expected_facets(model, n, tol, const) for n in n_values]
