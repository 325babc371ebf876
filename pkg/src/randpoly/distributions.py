"""Body models: samplers, halfspace masses, and the projection onto a line.

For the rotation-invariant models (standard Gaussian, uniform ball centred at
the origin) the law of <X, w> does not depend on the unit vector w. Its density
``psi``, CDF ``Psi`` and inverse ``Psi_inv`` are exposed here; every section
computation fixes w = e_1.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import optimize, special

from .errors import DomainError, RejectionBudgetExceeded, UnsupportedModel
from .estimate import EstimateCI
from .geometry import Hyperplane, ball_volume, simplex_volumes
from .quadrature import integrate
from .rng import as_generator, run_chunks

_SQRT_2PI = math.sqrt(2 * math.pi)
_CDF_TOL = 1e-12
_BISECT_STEPS = 16
_NEWTON_STEPS = 40
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class HalfspaceMasses:
    minus: float
    plus: float
    std_error: float = 0.0


class BodyModel:
    """A probability law on R^d."""

    kind = "abstract"
    rotation_invariant = False

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {dim!r}")
        self.dim = int(dim)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        raise NotImplementedError

    def psi(self, t):
        raise UnsupportedModel(f"{self.kind} model has a direction-dependent projection")

    def cdf(self, p):
        raise UnsupportedModel(f"{self.kind} model has a direction-dependent projection")

    def cdf_inv(self, s):
        raise UnsupportedModel(f"{self.kind} model has a direction-dependent projection")

    def support_bracket(self) -> tuple[float, float]:
        raise UnsupportedModel(f"{self.kind} model has a direction-dependent projection")

    def section_points(self, t: float, size: int, rng: np.random.Generator) -> np.ndarray:
        raise UnsupportedModel(f"{self.kind} model has no rotation-invariant sections")

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class _Symmetric(BodyModel):
    rotation_invariant = True

    def cdf_inv(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(~((s_arr > 0) & (s_arr < 1))):
            raise DomainError("Psi_inv needs s strictly inside (0, 1)")
        # solve on the lower half only; the law is symmetric about 0
        upper = s_arr > 0.5
        q = np.where(upper, 1.0 - s_arr, s_arr)
        lo_edge, _ = self.support_bracket()
        lo = np.full(q.shape, lo_edge)
        hi = np.zeros(q.shape)
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        p = 0.5 * (lo + hi)
        # Newton on log Psi (exact for power-law tails), safeguarded by the bracket
        done = np.zeros(q.shape, dtype=bool)
        for _ in range(_NEWTON_STEPS):
            c = np.asarray(self.cdf(p))
            ulp = np.spacing(np.abs(p) + 1e-300)
            done |= (np.abs(c - q) <= 8 * _EPS * q) | (hi - lo <= 4 * ulp)
            if np.all(done):
                break
            lo = np.where(c < q, p, lo)
            hi = np.where(c > q, p, hi)
            dens = np.asarray(self.psi(p))
            ok = (c > 0) & (dens > 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = (np.log(np.where(ok, c, 1.0)) - np.log(q)) * np.where(ok, c / np.where(ok, dens, 1.0), 0.0)
            done |= ok & (np.abs(step) <= 2 * ulp)
            cand = np.where(ok, p - step, np.nan)
            nxt = np.where((cand > lo) & (cand < hi), cand, 0.5 * (lo + hi))
            p = np.where(done, p, nxt)
        p = np.where(q == 0.5, 0.0, p)
        out = np.where(upper, -p, p)
        return float(out) if out.ndim == 0 else out


class GaussianModel(_Symmetric):
    """Standard Gaussian law on R^d."""

    kind = "gaussian"

    def sample(self, n, rng):
        return rng.standard_normal((n, self.dim))

    def contains(self, x, tol=1e-12):
        return np.ones(np.asarray(x).shape[:-1], dtype=bool)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * np.sum(x * x, axis=-1)) / _SQRT_2PI ** self.dim

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(-0.5 * t * t) / _SQRT_2PI
        return float(out) if out.ndim == 0 else out

    def cdf(self, p):
        out = special.ndtr(np.asarray(p, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def support_bracket(self):
        return -40.0, 40.0

    def section_points(self, t, size, rng):
        pts = np.empty((size, self.dim, self.dim))
        pts[..., 0] = t
        pts[..., 1:] = rng.standard_normal((size, self.dim, self.dim - 1))
        return pts


def _uniform_ball(rng: np.random.Generator, shape: tuple, k: int, radius) -> np.ndarray:
    g = rng.standard_normal((*shape, k))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    u = rng.random(shape)
    return g * (np.asarray(radius) * u ** (1.0 / k))[..., None]


@lru_cache(maxsize=8)
def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


class BallModel(_Symmetric):
    """Uniform law on the centred ball of the given radius."""

    kind = "ball"

    def __init__(self, dim: int, radius: float = 1.0):
        super().__init__(dim)
        if not (radius > 0 and math.isfinite(radius)):
            raise ValueError("radius must be positive and finite")
        self.radius = float(radius)
        self._ratio = ball_volume(self.dim - 1) / ball_volume(self.dim)

    def __repr__(self):
        return f"BallModel(dim={self.dim}, radius={self.radius})"

    def sample(self, n, rng):
        return _uniform_ball(rng, (n,), self.dim, self.radius)

    def contains(self, x, tol=1e-12):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1) <= self.radius * (1 + tol)

    def psi(self, t):
        u = np.asarray(t, dtype=float) / self.radius
        inside = np.abs(u) < 1
        base = np.where(inside, 1.0 - u * u, 0.0)
        out = self._ratio / self.radius * base ** ((self.dim - 1) / 2)
        out = np.where(inside, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def _lower_mass(self, phi_hi: np.ndarray, order: int, panels: int) -> np.ndarray:
        # integral of sin^d over [0, phi_hi]; t = -r cos(phi) makes the integrand smooth
        x, w = _gl(order)
        total = np.zeros_like(phi_hi)
        width = phi_hi / panels
        for k in range(panels):
            nodes = (k * width)[..., None] + 0.5 * width[..., None] * (x + 1.0)
            total += 0.5 * width * (np.sin(nodes) ** self.dim @ w)
        return total

    def _half_mass(self) -> float:
        if not hasattr(self, "_half"):
            self._half = float(self._lower_mass(np.array([0.5 * np.pi]), 24, 2)[0])
        return self._half

    def cdf(self, p):
        u = np.clip(np.asarray(p, dtype=float) / self.radius, -1.0, 1.0)
        # evaluate the lower tail only, then reflect
        phi = np.arccos(np.abs(u))
        coarse = self._lower_mass(phi, 24, 1)
        fine = self._lower_mass(phi, 24, 2)
        bad = np.abs(fine - coarse) * self._ratio > _CDF_TOL
        if np.any(bad):
            fine = np.array(fine, copy=True, ndmin=1)
            flat_phi = np.array(phi, ndmin=1)
            for i in np.flatnonzero(np.array(bad, ndmin=1)):
                fine[i], _ = integrate(
                    lambda th: np.sin(th) ** self.dim, 0.0, flat_phi[i],
                    rel_tol=0.0, abs_tol=_CDF_TOL / 10,
                )
            fine = fine.reshape(np.shape(phi))
        lower = np.clip(0.5 * fine / self._half_mass(), 0.0, 0.5)
        out = np.where(u > 0, 1.0 - lower, lower)
        return float(out) if out.ndim == 0 else out

    def support_bracket(self):
        return -self.radius, self.radius

    def section_points(self, t, size, rng):
        r2 = self.radius ** 2 - t * t
        if r2 <= 0:
            raise DomainError(f"|t| = {abs(t)} leaves an empty section of the ball")
        pts = np.empty((size, self.dim, self.dim))
        pts[..., 0] = t
        if self.dim > 1:
            pts[..., 1:] = _uniform_ball(rng, (size, self.dim), self.dim - 1, math.sqrt(r2))
        return pts


@dataclass
class HPolytope:
    """Bounded polytope {x : A x <= b} with nonempty interior."""

    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray = field(init=False)
    upper: np.ndarray = field(init=False)
    interior_point: np.ndarray = field(init=False)
    volume_estimate: float = field(init=False)
    acceptance: float = field(init=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        m, d = self.A.shape
        if self.b.shape != (m,):
            raise ValueError("A and b have inconsistent shapes")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("polytope data must be finite")
        lower, upper = np.empty(d), np.empty(d)
        for j in range(d):
            for sign, store in ((1.0, lower), (-1.0, upper)):
                c = np.zeros(d)
                c[j] = sign
                res = optimize.linprog(c, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * d,
                                       method="highs")
                if res.status == 3:
                    raise ValueError(f"polytope is unbounded along coordinate {j}")
                if res.status != 0:
                    raise ValueError(f"polytope is empty or infeasible ({res.message})")
                store[j] = sign * res.fun
        self.lower, self.upper = lower, upper
        # Chebyshev centre: maximise r subject to a_i.x + r |a_i| <= b_i
        norms = np.linalg.norm(self.A, axis=1)
        c = np.zeros(d + 1)
        c[-1] = -1.0
        res = optimize.linprog(c, A_ub=np.hstack([self.A, norms[:, None]]), b_ub=self.b,
                               bounds=[(None, None)] * d + [(0, None)], method="highs")
        if res.status != 0 or res.x[-1] <= 1e-12 * max(1.0, float(np.max(upper - lower))):
            raise ValueError("polytope has empty interior")
        self.interior_point = res.x[:d]
        rng = np.random.Generator(np.random.Philox(12345))
        probe = lower + (upper - lower) * rng.random((100_000, d))
        self.acceptance = max(float(np.mean(self.contains(probe))), 1e-6)
        self.volume_estimate = self.acceptance * float(np.prod(upper - lower))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        slack = tol * (1.0 + np.abs(self.b))
        return np.all(x @ self.A.T <= self.b + slack, axis=-1)

    @classmethod
    def box(cls, lower, upper) -> HPolytope:
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        d = lower.size
        eye = np.eye(d)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    @classmethod
    def parse(cls, text: str) -> HPolytope:
        """Read one halfspace per line: ``a_1 ... a_d <= b`` ('#' starts a comment)."""
        rows, rhs = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = re.split(r"\s*(?:≤|<=)\s*", line)
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'a_1 ... a_d <= b', got {raw!r}")
            try:
                a = [float(tok) for tok in parts[0].split()]
                b = float(parts[1])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric entry in {raw!r}") from None
            if rows and len(a) != len(rows[0]):
                raise ValueError(f"line {lineno}: expected {len(rows[0])} coefficients, got {len(a)}")
            if not a:
                raise ValueError(f"line {lineno}: no coefficients")
            rows.append(a)
            rhs.append(b)
        if not rows:
            raise ValueError("no halfspaces found")
        return cls(np.array(rows), np.array(rhs))

    @classmethod
    def from_file(cls, path) -> HPolytope:
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = []
        for a, b in zip(self.A, self.b):
            lines.append(" ".join(repr(float(v)) for v in a) + " <= " + repr(float(b)))
        return "\n".join(lines) + "\n"


class PolytopeModel(BodyModel):
    """Uniform law on an H-polytope, sampled by rejection from its bounding box."""

    kind = "polytope"

    def __init__(self, polytope: HPolytope, rejection_budget: int = 100_000_000):
        super().__init__(polytope.dim)
        self.polytope = polytope
        self.rejection_budget = int(rejection_budget)

    def __repr__(self):
        return f"PolytopeModel(dim={self.dim}, halfspaces={len(self.polytope.b)})"

    def sample(self, n, rng):
        poly = self.polytope
        expected = n / poly.acceptance
        if expected > self.rejection_budget:
            raise RejectionBudgetExceeded(
                f"{expected:.3g} expected proposals for {n} samples exceeds budget "
                f"{self.rejection_budget} (acceptance {poly.acceptance:.3g})"
            )
        out = np.empty((n, self.dim))
        filled = drawn = 0
        span = poly.upper - poly.lower
        while filled < n:
            if drawn > self.rejection_budget:
                raise RejectionBudgetExceeded(f"drew {drawn} proposals for {n} samples")
            batch = int(1.2 * (n - filled) / poly.acceptance) + 16
            prop = poly.lower + span * rng.random((batch, self.dim))
            drawn += batch
            ok = prop[poly.contains(prop, tol=0.0)]
            take = min(len(ok), n - filled)
            out[filled:filled + take] = ok[:take]
            filled += take
        return out

    def contains(self, x, tol=1e-12):
        return self.polytope.contains(x, tol)


def sample(model: BodyModel, n: int, seed) -> np.ndarray:
    """n i.i.d. draws; deterministic given (model, n, seed)."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return model.sample(int(n), as_generator(seed))


def psi(model: BodyModel, t):
    return model.psi(t)


def Psi(model: BodyModel, p):
    return model.cdf(p)


def Psi_inv(model: BodyModel, s):
    return model.cdf_inv(s)


def mass_below(model: BodyModel, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Closed-form Phi(H-) for a batch of unit normals (rotation-invariant models)."""
    if not model.rotation_invariant:
        raise UnsupportedModel("closed-form halfspace masses need a rotation-invariant model")
    return np.asarray(model.cdf(np.asarray(offsets, dtype=float)))


def halfspace_mass(model: BodyModel, h: Hyperplane, sub_reps: int = 10_000, seed=0) -> HalfspaceMasses:
    """Probability mass of the closed halfspaces below and above ``h``."""
    if h.dim != model.dim:
        raise ValueError(f"dimension mismatch: model {model.dim}, hyperplane {h.dim}")
    if model.rotation_invariant:
        # compute the smaller tail directly, the other as its complement
        if h.offset <= 0:
            minus = float(model.cdf(h.offset))
            return HalfspaceMasses(minus, 1.0 - minus)
        plus = float(model.cdf(-h.offset))
        return HalfspaceMasses(1.0 - plus, plus)
    x = sample(model, sub_reps, seed)
    minus = float(np.mean(x @ h.w <= h.offset))
    se = math.sqrt(minus * (1 - minus) / sub_reps)
    return HalfspaceMasses(minus, 1.0 - minus, se)


def section_simplex_expectation(model: BodyModel, t: float, reps: int, seed: int,
                                threads: Optional[int] = None) -> EstimateCI:
    """MC estimate of the mean (d-1)-volume of a simplex on d points of the section at t."""
    if not model.rotation_invariant:
        raise UnsupportedModel(f"{model.kind} model has no rotation-invariant sections")
    d = model.dim
    if d < 2:
        raise DomainError("section simplices need d >= 2")
    if isinstance(model, BallModel) and abs(t) >= model.radius:
        raise DomainError(f"|t| = {abs(t)} must be below the ball radius")
    start = time.perf_counter()

    def task(rng, size):
        return simplex_volumes(model.section_points(t, size, rng))

    vals = run_chunks(task, reps, seed, threads=threads)
    return EstimateCI.from_samples(vals, seed, time.perf_counter() - start)


def make_model(kind: str, dim: Optional[int] = None, polytope_file=None, radius: float = 1.0) -> BodyModel:
    kind = kind.lower()
    if kind == "gaussian":
        return GaussianModel(dim)
    if kind == "ball":
        return BallModel(dim, radius)
    if kind == "polytope":
        if polytope_file is None:
            raise ValueError("polytope model needs a polytope file")
        poly = HPolytope.from_file(polytope_file)
        if dim is not None and poly.dim != dim:
            raise ValueError(f"polytope file has dimension {poly.dim}, expected {dim}")
        return PolytopeModel(poly)
    if kind == "interval":
        return PolytopeModel(HPolytope.box([0.0], [1.0]))
    if kind == "cube":
        return PolytopeModel(HPolytope.box(np.zeros(dim), np.ones(dim)))
    raise ValueError(f"unknown model kind {kind!r}")
