"""Model parameters for the reinsurance/investment problem and their standing assumptions.

Parameter groups mirror the economic structure: the insurance book (claim flow
and safety loadings), the financial market (risk-free rate, risky volatility),
the dynamics of the hidden expected return, and the mean-variance objective.
All value objects are immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass

from .curves import PiecewiseConstantCurve, as_curve
from .odekernel import integrate_forward

import numpy as np

INFO_FULL = "full"
INFO_PARTIAL = "partial"


@dataclass(frozen=True)
class ClaimParams:
    """Insurance book: claim flow dC = a dt - b dW0, premium rate (1+theta) a.

    ``eta`` is the reinsurer's safety loading; retention q(t) cedes a fraction
    1-q(t) of each claim against a premium stream (1+eta) a (1-q(t)).
    """

    a: float
    b: float
    theta: float
    eta: float


@dataclass(frozen=True)
class MarketParams:
    """Risk-free rate and risky-asset volatility, constant or piecewise-constant."""

    r: PiecewiseConstantCurve
    sigma: PiecewiseConstantCurve

    def __init__(self, r, sigma):
        object.__setattr__(self, "r", as_curve(r))
        object.__setattr__(self, "sigma", as_curve(sigma))

    def rate_integral(self, t0: float, t1: float) -> float:
        return self.r.integral(t0, t1)

    def discount(self, t0: float, t1: float) -> float:
        """exp(-integral of r over [t0, t1])."""
        return float(np.exp(-self.rate_integral(t0, t1)))

    def growth(self, t0: float, t1: float) -> float:
        """exp(+integral of r over [t0, t1])."""
        return float(np.exp(self.rate_integral(t0, t1)))


@dataclass(frozen=True)
class DriftParams:
    """Hidden expected-return dynamics: d(mu) = h mu dt + l dW1 + z dW2.

    ``m0`` and ``n0`` are the mean and variance of the Gaussian prior on mu(0);
    the observer's estimate starts there.
    """

    h: PiecewiseConstantCurve
    l: PiecewiseConstantCurve
    z: PiecewiseConstantCurve
    m0: float
    n0: float

    def __init__(self, h, l, z, m0, n0):
        object.__setattr__(self, "h", as_curve(h))
        object.__setattr__(self, "l", as_curve(l))
        object.__setattr__(self, "z", as_curve(z))
        object.__setattr__(self, "m0", float(m0))
        object.__setattr__(self, "n0", float(n0))

    def is_degenerate(self) -> bool:
        """True when the drift carries no uncertainty (l = z = 0, n0 = 0)."""
        return (self.l.max_value() == 0.0 and self.l.min_value() == 0.0
                and self.z.max_value() == 0.0 and self.z.min_value() == 0.0
                and self.n0 == 0.0)


@dataclass(frozen=True)
class Objective:
    """Mean-variance target: minimize Var[X(T)] subject to E[X(T)] = d."""

    x0: float
    T: float
    d: float


@dataclass(frozen=True)
class ModelParams:
    claim: ClaimParams
    market: MarketParams
    drift: DriftParams
    objective: Objective
    info_mode: str = INFO_FULL

    def discount_to_horizon(self, t: float) -> float:
        return self.market.discount(t, self.objective.T)

    def growth_to_horizon(self, t: float = 0.0) -> float:
        return self.market.growth(t, self.objective.T)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(self.violations)


def validate(params: ModelParams) -> ValidationReport:
    """Check the standing assumptions; deterministic and side-effect free.

    Returns a report rather than raising, so callers can surface every
    violation at once (the CLI maps a failed report to exit code 1).
    """
    v: list[str] = []
    c, mk, dr, ob = params.claim, params.market, params.drift, params.objective

    if not c.a > 0:
        v.append("claim.a > 0 required")
    if not c.b > 0:
        v.append("claim.b > 0 required")
    if not c.theta > 0:
        v.append("claim.theta > 0 required")
    if not c.eta > 0:
        v.append("claim.eta > 0 required")

    if mk.r.min_value() <= 0:
        v.append("market.r: r(t) > 0 required")
    if not np.isfinite(mk.r.max_value()):
        v.append("market.r must be bounded")
    if mk.sigma.min_value() <= 0:
        v.append("market.sigma: sigma_min > 0 required")

    if dr.n0 < 0:
        v.append("drift.n0 >= 0 required")

    if not ob.x0 > 0:
        v.append("objective.x0 > 0 required")
    if not ob.T > 0:
        v.append("objective.T > 0 required")

    if params.info_mode not in (INFO_FULL, INFO_PARTIAL):
        v.append(f"info_mode must be 'full' or 'partial', got {params.info_mode!r}")
    elif params.info_mode == INFO_FULL:
        # Closed forms in full mode assume a constant, known expected return
        # above the risk-free rate, and constant market coefficients.
        if not dr.is_degenerate():
            v.append("full mode requires degenerate drift (l = z = 0, n0 = 0)")
        if not (dr.h.is_constant and dr.h.constant_value() == 0.0):
            v.append("full mode requires h = 0 (constant expected return)")
        if not (mk.r.is_constant and mk.sigma.is_constant):
            v.append("full mode requires constant r and sigma")
        if mk.r.is_constant and not dr.m0 > mk.r.constant_value():
            v.append("full mode requires m0 > r (positive excess return)")
    else:
        if c.eta != c.theta:
            v.append("cheap reinsurance required in partial mode (eta = theta)")

    return ValidationReport(ok=not v, violations=tuple(v))


def riskless_terminal_wealth(params: ModelParams) -> float:
    """Terminal wealth under the zero strategy (everything reinsured, all in the bond).

    Solves dX = [a(theta - eta) + r X] dt from x0 exactly, chaining the affine
    closed form across the rate curve's segments.  This is the smallest
    attainable expected terminal wealth (the frontier vertex), alias d_min.
    """
    c, mk, T = params.claim, params.market, params.objective.T
    drift = c.a * (c.theta - c.eta)
    edges = np.concatenate((mk.r.breakpoints_within(0.0, T), [0.0, T]))
    edges = np.unique(edges)
    x = params.objective.x0
    for t0, t1 in zip(edges[:-1], edges[1:]):
        rate = mk.r(0.5 * (t0 + t1))
        grow = np.exp(rate * (t1 - t0))
        x = x * grow + drift * (grow - 1.0) / rate
    return float(x)


def riskless_terminal_wealth_ode(params: ModelParams, steps: int = 10000) -> float:
    """Same quantity by numerically integrating the riskless wealth ODE (oracle)."""
    c, mk, T = params.claim, params.market, params.objective.T
    drift = c.a * (c.theta - c.eta)
    r_at = mk.r.scalar_evaluator()
    curve = integrate_forward(
        lambda t, x: drift + r_at(t) * x,
        params.objective.x0, T, steps,
        breakpoints=mk.r.breakpoints_within(0.0, T),
    )
    return float(curve(T))
