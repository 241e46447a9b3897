"""Efficient frontier curves: (target mean, minimal variance) pairs.

Both information regimes produce frontiers of the same shape, a parabola in
the target mean anchored at the riskless vertex:  Var = coef * (d - vertex)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InfeasibleTargetError(ValueError):
    """Requested expected terminal wealth below the attainable vertex."""


@dataclass(frozen=True, eq=False)
class FrontierCurve:
    d: np.ndarray         # target expected terminal wealth
    variance: np.ndarray  # minimal attainable variance

    def __post_init__(self):
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        object.__setattr__(self, "variance", np.asarray(self.variance, dtype=float))
        if self.d.shape != self.variance.shape:
            raise ValueError("d and variance must have the same shape")

    @property
    def std_dev(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def __len__(self):
        return self.d.size


def quadratic_frontier(vertex: float, coefficient: float, d_grid) -> FrontierCurve:
    """Var = coefficient * (d - vertex)^2 on the grid; rejects d below the vertex."""
    if coefficient <= 0:
        raise ValueError("frontier coefficient must be positive")
    d = np.atleast_1d(np.asarray(d_grid, dtype=float))
    slack = 1e-9 * max(1.0, abs(vertex))
    if np.any(d < vertex - slack):
        raise InfeasibleTargetError(
            f"target mean {d.min()} below attainable vertex {vertex}"
        )
    gap = np.maximum(d - vertex, 0.0)
    return FrontierCurve(d=d, variance=coefficient * gap * gap)
