"""Sampling-based estimators of facet numbers and volumes of random polytopes.

Replications run in fixed-size chunks, chunk i drawing from stream (seed, i),
so estimates are bit-identical for any worker count. Degenerate samples are
redrawn from the same stream and counted, never dropped silently.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calculus import (
    SectionConstant,
    MonotonicityReport,
    concavity_check,
    quadrature_values,
    section_constant,
    section_profile,
)
from .distributions import BallModel, BodyModel, PolytopeModel
from .errors import ContainmentUnverified, DegenerateInput, DomainError
from .estimate import EstimateCI
from .geometry import batch_hyperplanes, simplex_volumes
from .hull import convex_hull, facet_count
from .rng import derive_seed, run_chunks, stream

MAX_REDRAWS = 1000
CONTAINMENT_SAMPLES = 10_000
_CONTAINMENT_STREAM = 2**31 - 1
_SUB_BATCH_CELLS = 2_000_000


def _check_n(model: BodyModel, n: int):
    if int(n) != n or n < model.dim + 1:
        raise DomainError(f"need n >= d+1 = {model.dim + 1}, got {n!r}")


def _check_reps(reps: int, minimum: int = 2):
    if int(reps) != reps or reps < minimum:
        raise DomainError(f"reps must be an integer >= {minimum}, got {reps!r}")


def _simplex_fvector(d: int) -> list[int]:
    return [math.comb(d + 1, j + 1) for j in range(d)]


def _hull_task(model: BodyModel, n: int):
    d = model.dim

    def task(rng, size):
        # columns: f_0..f_{d-1}, volume, redraws
        out = np.full((size, d + 2), np.nan)
        if n == d + 1:
            pts = model.sample(size * n, rng).reshape(size, n, d)
            vol = simplex_volumes(pts)
            scale = np.max(np.abs(pts), axis=(1, 2)) ** d
            bad = vol <= 1e-12 * scale
            redraws = np.zeros(size)
            for i in np.flatnonzero(bad):
                while bad[i]:
                    redraws[i] += 1
                    if redraws[i] > MAX_REDRAWS:
                        raise DegenerateInput("too many degenerate simplices")
                    p = model.sample(n, rng)
                    vol[i] = simplex_volumes(p)
                    bad[i] = vol[i] <= 1e-12 * np.max(np.abs(p)) ** d
            out[:, :d] = _simplex_fvector(d)
            out[:, d] = vol
            out[:, d + 1] = redraws
            return out
        for r in range(size):
            redraws = 0
            while True:
                try:
                    hull = convex_hull(model.sample(n, rng))
                    break
                except DegenerateInput:
                    redraws += 1
                    if redraws > MAX_REDRAWS:
                        raise
            out[r, :d] = [np.nan if f is None else f for f in hull.f_vector]
            out[r, d] = hull.volume
            out[r, d + 1] = redraws
        return out

    return task


def _hull_runs(model, n, reps, seed, threads):
    _check_n(model, n)
    _check_reps(reps)
    start = time.perf_counter()
    data = run_chunks(_hull_task(model, int(n)), int(reps), seed, threads=threads)
    return data, time.perf_counter() - start


def mc_expected_fvector(model: BodyModel, n: int, reps: int, seed: int,
                        threads: Optional[int] = None) -> list[Optional[EstimateCI]]:
    """Per-j estimates of E f_j; entries are None where f_j is not computed (d >= 4)."""
    data, wall = _hull_runs(model, n, reps, seed, threads)
    d = model.dim
    redraws = int(data[:, d + 1].sum())
    out: list[Optional[EstimateCI]] = []
    for j in range(d):
        col = data[:, j]
        out.append(None if np.isnan(col).any() else EstimateCI.from_samples(col, seed, wall, redraws))
    return out


def mc_expected_volume(model: BodyModel, n: int, reps: int, seed: int,
                       threads: Optional[int] = None) -> EstimateCI:
    data, wall = _hull_runs(model, n, reps, seed, threads)
    d = model.dim
    return EstimateCI.from_samples(data[:, d], seed, wall, int(data[:, d + 1].sum()))


def _power_estimate(count: np.ndarray, m: int, k: int) -> np.ndarray:
    """Unbiased estimate of q^k from count ~ Binomial(m, q) when m >= k."""
    count = np.asarray(count, dtype=float)
    if k == 0:
        return np.ones_like(count)
    if m < k:
        return (count / m) ** k
    out = np.ones_like(count)
    for i in range(k):
        out *= np.clip(count - i, 0.0, None) / (m - i)
    return out


def _tuple_masses(model: BodyModel, rng, size: int, sub_reps: int):
    """Sample ``size`` d-tuples and return halfspace masses on both sides.

    Rotation-invariant models give exact masses. Polytope models return
    binomial counts out of ``sub_reps`` instead (flagged by the third item).
    """
    d = model.dim
    tuples = model.sample(size * d, rng).reshape(size, d, d)
    normals, offsets, ok = batch_hyperplanes(tuples)
    redraws = 0
    while not ok.all():
        redraws += int((~ok).sum())
        if redraws > MAX_REDRAWS * size:
            raise DegenerateInput("too many degenerate d-tuples")
        bad = np.flatnonzero(~ok)
        fresh = model.sample(len(bad) * d, rng).reshape(len(bad), d, d)
        w, p, k = batch_hyperplanes(fresh)
        normals[bad], offsets[bad], ok[bad] = w, p, k
    if model.rotation_invariant:
        return np.asarray(model.cdf(offsets)), np.asarray(model.cdf(-offsets)), False, redraws
    below = np.empty(size)
    batch = max(1, _SUB_BATCH_CELLS // (sub_reps * d))
    for start in range(0, size, batch):
        stop = min(size, start + batch)
        pts = model.sample((stop - start) * sub_reps, rng).reshape(stop - start, sub_reps, d)
        proj = np.einsum("rmd,rd->rm", pts, normals[start:stop])
        below[start:stop] = np.sum(proj <= offsets[start:stop, None], axis=1)
    return below, sub_reps - below, True, redraws


def _facet_values(minus, plus, counts: bool, n: int, d: int, sub_reps: int) -> np.ndarray:
    k = n - d
    if counts:
        return math.comb(n, d) * (_power_estimate(plus, sub_reps, k) + _power_estimate(minus, sub_reps, k))
    return math.comb(n, d) * (plus ** k + minus ** k)


def facet_prob_estimator(model: BodyModel, n: int, reps: int, seed: int, sub_reps: int = 1000,
                         threads: Optional[int] = None) -> EstimateCI:
    """E f_{d-1} = C(n,d) E[Phi(H+)^(n-d) + Phi(H-)^(n-d)] over random d-tuples.

    For polytopes the halfspace masses are themselves sampled; when
    ``sub_reps >= n - d`` the power of each mass is estimated without bias.
    """
    _check_n(model, n)
    _check_reps(reps)
    d = model.dim
    start = time.perf_counter()

    def task(rng, size):
        minus, plus, counts, redraws = _tuple_masses(model, rng, size, sub_reps)
        vals = _facet_values(minus, plus, counts, n, d, sub_reps)
        extra = np.zeros(size)
        extra[0] = redraws
        return np.stack([vals, extra], axis=1)

    data = run_chunks(task, int(reps), seed, threads=threads)
    return EstimateCI.from_samples(data[:, 0], seed, time.perf_counter() - start, int(data[:, 1].sum()))


METHODS = ("quadrature", "hull", "facet_prob")


def _paired_hull_task(model: BodyModel, n_values: Sequence[int]):
    n_max = max(n_values)

    def task(rng, size):
        out = np.empty((size, len(n_values) + 1))
        for r in range(size):
            redraws = 0
            while True:
                pts = model.sample(n_max, rng)
                try:
                    out[r, :-1] = [facet_count(pts[:n]) for n in n_values]
                    break
                except DegenerateInput:
                    redraws += 1
                    if redraws > MAX_REDRAWS:
                        raise
            out[r, -1] = redraws
        return out

    return task


def _paired_facet_task(model: BodyModel, n_values: Sequence[int], sub_reps: int):
    d = model.dim

    def task(rng, size):
        minus, plus, counts, redraws = _tuple_masses(model, rng, size, sub_reps)
        out = np.zeros((size, len(n_values) + 1))
        for i, n in enumerate(n_values):
            out[:, i] = _facet_values(minus, plus, counts, n, d, sub_reps)
        out[0, -1] = redraws
        return out

    return task


def monotonicity_sweep(model: BodyModel, n_values: Sequence[int], method: str = "quadrature",
                       reps: int = 1000, seed: int = 0, sub_reps: int = 1000,
                       tol: float = 1e-12, threads: Optional[int] = None,
                       const: Optional[SectionConstant] = None) -> MonotonicityReport:
    """E f_{d-1}(n) over increasing n with successive differences.

    Stochastic methods reuse the same random input for every n within a
    replication (common random numbers), so differences are estimated per
    replication. A difference passes if it is at least -3 standard errors;
    quadrature differences must be at least -1e-10.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise DomainError("n_values must be non-empty and strictly increasing")
    for n in n_values:
        _check_n(model, n)
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")

    if method == "quadrature":
        const = section_constant(model) if const is None else const
        values = quadrature_values(model, n_values, tol, const)
        diffs = list(np.diff(values))
        monotone = all(x >= -1e-10 for x in diffs)
        cert = concavity_check(section_profile(model, const=const)) if model.dim >= 2 else None
        return MonotonicityReport(model.kind, model.dim, method, n_values, values, None, diffs, None,
                                  min(diffs, default=0.0), monotone, cert, const.seed, const.reps)

    _check_reps(reps)
    task = (_paired_hull_task(model, n_values) if method == "hull"
            else _paired_facet_task(model, n_values, sub_reps))
    data = run_chunks(task, int(reps), seed, threads=threads)[:, :-1]
    values = data.mean(axis=0)
    ses = data.std(axis=0, ddof=1) / math.sqrt(reps)
    per_rep = np.diff(data, axis=1)
    diffs = per_rep.mean(axis=0)
    diff_ses = per_rep.std(axis=0, ddof=1) / math.sqrt(reps)
    monotone = bool(np.all(diffs >= -3 * diff_ses - 1e-10))
    return MonotonicityReport(model.kind, model.dim, method, n_values, [float(v) for v in values],
                              [float(s) for s in ses], [float(x) for x in diffs],
                              [float(s) for s in diff_ses], float(min(diffs, default=0.0)),
                              monotone, None, seed, int(reps))


@dataclass(frozen=True)
class InclusionResult:
    inner: EstimateCI
    outer: EstimateCI
    difference: EstimateCI  # inner minus outer


def _verify_containment(inner: BodyModel, outer: BodyModel, seed: int, samples: int):
    if inner.dim != outer.dim:
        raise DomainError(f"dimension mismatch: {inner.dim} vs {outer.dim}")
    for m in (inner, outer):
        if not isinstance(m, (BallModel, PolytopeModel)):
            raise DomainError(f"inclusion experiments need ball or polytope models, got {m.kind}")
    if isinstance(inner, BallModel) and isinstance(outer, BallModel):
        if inner.radius > outer.radius:
            raise ContainmentUnverified(f"ball radius {inner.radius} exceeds {outer.radius}")
        return
    x = inner.sample(samples, stream(seed, _CONTAINMENT_STREAM))
    outside = int(np.sum(~outer.contains(x, tol=1e-9)))
    if outside:
        raise ContainmentUnverified(f"{outside} of {samples} samples of K fall outside L")


def inclusion_experiment(inner: BodyModel, outer: BodyModel, n: int, reps: int, seed: int,
                         check_samples: int = CONTAINMENT_SAMPLES,
                         threads: Optional[int] = None) -> InclusionResult:
    """Paired estimates of E V_d for K (inner) and L (outer) with independent streams."""
    _verify_containment(inner, outer, seed, check_samples)
    k = mc_expected_volume(inner, n, reps, derive_seed(seed, 0), threads)
    l = mc_expected_volume(outer, n, reps, derive_seed(seed, 1), threads)
    diff = EstimateCI(k.mean - l.mean, math.hypot(k.std_error, l.std_error), int(reps), seed,
                      k.wall_time + l.wall_time, k.degenerate + l.degenerate)
    return InclusionResult(k, l, diff)
