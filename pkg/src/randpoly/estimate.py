from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EstimateCI:
    """Monte Carlo mean with its standard error and provenance."""

    mean: float
    std_error: float
    reps: int
    seed: int
    wall_time: float = 0.0
    degenerate: int = 0

    @classmethod
    def from_samples(cls, values, seed: int, wall_time: float = 0.0, degenerate: int = 0) -> EstimateCI:
        v = np.asarray(values, dtype=float)
        n = v.size
        if n == 0:
            raise ValueError("no samples")
        se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return cls(float(v.mean()), se, n, seed, wall_time, degenerate)

    def z_distance(self, other: EstimateCI | float, other_se: float = 0.0) -> float:
        """Difference in units of the combined standard error."""
        if isinstance(other, EstimateCI):
            other, other_se = other.mean, other.std_error
        se = math.hypot(self.std_error, other_se)
        diff = abs(self.mean - other)
        if se == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / se
