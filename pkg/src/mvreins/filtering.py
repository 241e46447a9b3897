"""Kalman-Bucy filtering of the hidden expected return from observed price returns.

Conditional on the observation filtration the hidden drift stays Gaussian with
mean m(t) and variance n(t).  The variance solves a deterministic Riccati ODE

    n' = 2 h n + l^2 + z^2 - (l + n/sigma)^2

shared by every path, while the mean is updated per path from observed returns:

    dm = h m dt + (l + n/sigma) (1/sigma) (dS/S - m dt).

The bracketed observation residual, scaled by 1/sigma, is the innovation
increment; it is a Brownian increment under the observation filtration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import PiecewiseConstantCurve, SampledCurve, as_curve
from .model import DriftParams
from .odekernel import integrate_forward


@dataclass(frozen=True)
class FilterState:
    """Filter state at one instant: conditional mean and variance of the drift."""

    t: float
    m: float
    n: float


@dataclass(frozen=True, eq=False)
class FilterPath:
    """One path of the filter on a uniform grid, with recorded innovations."""

    times: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    innovations: np.ndarray  # one increment per step, length len(times) - 1

    def state(self, k: int) -> FilterState:
        return FilterState(float(self.times[k]), float(self.means[k]),
                           float(self.variances[k]))


def _variance_rhs(drift: DriftParams, sigma: PiecewiseConstantCurve):
    h_at = drift.h.scalar_evaluator()
    l_at = drift.l.scalar_evaluator()
    z_at = drift.z.scalar_evaluator()
    sig_at = sigma.scalar_evaluator()

    def rhs(t, n):
        l_t = l_at(t)
        gain_num = l_t + n / sig_at(t)
        return 2.0 * h_at(t) * n + l_t * l_t + z_at(t) ** 2 - gain_num * gain_num

    return rhs


def solve_variance(drift: DriftParams, sigma, T: float,
                   steps: int = 10000) -> SampledCurve:
    """Forward RK4 solution of the conditional-variance Riccati ODE from n0.

    The variance is deterministic, so it is solved once and shared by all
    Monte Carlo paths.  Diverging (non-finite) states raise
    :class:`~mvreins.odekernel.IntegrationDivergedError`.
    """
    sigma = as_curve(sigma)
    breaks = np.concatenate([
        drift.h.breakpoints_within(0.0, T),
        drift.l.breakpoints_within(0.0, T),
        drift.z.breakpoints_within(0.0, T),
        sigma.breakpoints_within(0.0, T),
    ])
    curve = integrate_forward(_variance_rhs(drift, sigma), drift.n0, T, steps,
                              breakpoints=breaks)
    if curve.values.min() < -1e-12:
        raise RuntimeError(
            f"conditional variance went negative: min {curve.values.min():.3e}"
        )
    return curve


def filter_step(state: FilterState, observed_return: float, dt: float,
                drift: DriftParams, sigma, variance: SampledCurve) -> FilterState:
    """One Euler step of the mean update; variance advanced from the precomputed curve.

    ``observed_return`` is the price relative dS/S accumulated over [t, t+dt].
    Euler stepping matches the simulation grid; higher-order in the mean would
    be wasted because the driving term is stochastic.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    sig = sigma(state.t) if callable(sigma) else float(sigma)
    h = drift.h(state.t)
    l = drift.l(state.t)
    gain = (l + state.n / sig) / sig
    m_next = state.m + h * state.m * dt + gain * (observed_return - state.m * dt)
    return FilterState(state.t + dt, m_next, float(variance(state.t + dt)))


def run_filter(observed_returns, drift: DriftParams, sigma, dt: float,
               variance: SampledCurve | None = None) -> FilterPath:
    """Run the filter along one path of observed returns on a uniform dt grid.

    Also records the innovation increments (obs - m dt)/sigma for each step,
    whose empirical mean/variance should match Brownian increments.
    """
    obs = np.asarray(observed_returns, dtype=float)
    n_steps = obs.size
    T = n_steps * dt
    if variance is None:
        variance = solve_variance(drift, sigma, T, steps=max(1000, n_steps))
    sig_curve = sigma if callable(sigma) else (lambda t: float(sigma))

    times = dt * np.arange(n_steps + 1)
    means = np.empty(n_steps + 1)
    variances = np.empty(n_steps + 1)
    innovations = np.empty(n_steps)
    state = FilterState(0.0, drift.m0, drift.n0)
    means[0], variances[0] = state.m, state.n
    for k in range(n_steps):
        innovations[k] = (obs[k] - state.m * dt) / sig_curve(state.t)
        state = filter_step(state, obs[k], dt, drift, sig_curve, variance)
        means[k + 1], variances[k + 1] = state.m, state.n
    return FilterPath(times, means, variances, innovations)


def projected_mean_curve(drift: DriftParams, T: float,
                         samples: int = 2001) -> SampledCurve:
    """Mean of the filter process, m0 * exp(integral of h), sampled on [0, T].

    Used as the deterministic stand-in for the filtered drift when reducing
    the backward equations to ODEs; exact when the drift is degenerate.
    """
    grid = np.linspace(0.0, T, samples)
    grid = np.unique(np.concatenate([grid, drift.h.breakpoints_within(0.0, T)]))
    ih = np.array([drift.h.integral(0.0, t) for t in grid])
    return SampledCurve(grid, drift.m0 * np.exp(ih))
