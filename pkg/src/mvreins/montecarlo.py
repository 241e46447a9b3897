"""Monte Carlo simulation of drift, prices, claims, filter, and controlled wealth.

Two representations of the same system:

* ``simulate_physical`` drives three independent Brownian motions (claims,
  price, idiosyncratic drift), evolves the hidden expected return, and runs
  the filter alongside on observed returns.  Strategies see only (t, wealth,
  filtered mean) -- the information actually available.
* ``simulate_innovation`` works directly under the observation filtration with
  two drivers (claims and the innovation process); the filtered mean follows
  its own SDE.  Partial information only.  Terminal price moments must agree
  with the physical representation within Monte Carlo error.

Paths are partitioned into fixed-size blocks; block b draws from substream b
of the configured seed and results are reduced in block order, so output is
bitwise identical for any worker count.  Euler-Maruyama stepping throughout:
the dynamics are linear in the state, so higher-order schemes buy nothing at
the tested tolerances.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .filtering import solve_variance
from .model import INFO_PARTIAL, ModelParams
from .odekernel import RngStream

MODE_PHYSICAL = "physical"
MODE_INNOVATION = "innovation"

_BLOCK = 16384            # paths per RNG substream; fixed so results never
                          # depend on how blocks are spread over workers
_MAX_STORED = 5_000_000   # trajectory elements allowed with store_paths
_FLAG_LIMIT = 1e-3        # tolerated fraction of non-finite paths


class SimulationError(RuntimeError):
    """Too many paths diverged, or the configuration is unusable."""


class InsufficientDataError(ValueError):
    """Estimation requires at least two paths."""


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    dt: float
    seed: int
    mode: str = MODE_PHYSICAL
    store_paths: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.mode not in (MODE_PHYSICAL, MODE_INNOVATION):
            raise ValueError(f"mode must be physical or innovation, got {self.mode!r}")

    def resolve_steps(self, T: float) -> tuple[int, float]:
        """Step count and effective dt; T/dt must be integral within rounding."""
        n = int(round(T / self.dt))
        if n < 1 or abs(n * self.dt - T) > 1e-9 * max(1.0, T):
            raise SimulationError(f"T={T} is not an integral multiple of dt={self.dt}")
        return n, T / n


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Per-path terminal data plus admissibility diagnostics.

    ``terminal_drift_error`` holds mu(T) - m(T) for physical simulations (the
    filter-consistency statistic) and is None under the innovation dynamics.
    Non-finite paths are dropped from all arrays; their count is reported.
    """

    terminal_wealth: np.ndarray
    terminal_price: np.ndarray
    terminal_drift_error: np.ndarray | None
    int_q2: np.ndarray
    int_pi2: np.ndarray
    n_flagged: int
    times: np.ndarray | None = None
    trajectories: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return int(self.terminal_wealth.size)


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    variance: float
    se_mean: float
    se_variance: float


def estimate(ensemble) -> EstimateResult:
    """Unbiased sample mean/variance of terminal wealth with standard errors.

    The variance standard error uses the fourth central moment:
    Var(s^2) ~ [m4 - (n-3)/(n-1) s^4] / n.
    """
    x = ensemble if isinstance(ensemble, np.ndarray) else ensemble.terminal_wealth
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientDataError("need at least two paths to estimate variance")
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    centered = x - mean
    m4 = float(np.mean(centered ** 4))
    se_var_sq = (m4 - (n - 3.0) / (n - 1.0) * var * var) / n
    return EstimateResult(
        mean=mean,
        variance=var,
        se_mean=float(np.sqrt(var / n)),
        se_variance=float(np.sqrt(max(se_var_sq, 0.0))),
    )


def _step_curves(model: ModelParams, n_steps: int, dt: float):
    """Coefficient values at the left endpoint of every step (step functions)."""
    t = dt * np.arange(n_steps)
    mk, dr = model.market, model.drift
    return {
        "r": np.asarray(mk.r(t), dtype=float),
        "sigma": np.asarray(mk.sigma(t), dtype=float),
        "h": np.asarray(dr.h(t), dtype=float),
        "l": np.asarray(dr.l(t), dtype=float),
        "z": np.asarray(dr.z(t), dtype=float),
    }


def _run_blocks(n_paths: int, workers: int, block_fn):
    """Process path blocks 0..B-1, serially or on a thread pool.

    Each block writes into disjoint slices of preallocated output, and the
    block decomposition is fixed, so the schedule cannot affect results.
    """
    n_blocks = (n_paths + _BLOCK - 1) // _BLOCK
    if workers <= 1:
        for b in range(n_blocks):
            block_fn(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(block_fn, range(n_blocks)))


def _finalize(cfg: SimConfig, X, price, drift_err, int_q2, int_pi2,
              times=None, traj=None) -> PathEnsemble:
    ok = np.isfinite(X) & np.isfinite(price) & np.isfinite(int_q2) & np.isfinite(int_pi2)
    if drift_err is not None:
        ok &= np.isfinite(drift_err)
    n_flagged = int((~ok).sum())
    if n_flagged > _FLAG_LIMIT * cfg.n_paths:
        raise SimulationError(
            f"{n_flagged} of {cfg.n_paths} paths diverged (> {_FLAG_LIMIT:.1%})"
        )
    return PathEnsemble(
        terminal_wealth=X[ok],
        terminal_price=price[ok],
        terminal_drift_error=None if drift_err is None else drift_err[ok],
        int_q2=int_q2[ok],
        int_pi2=int_pi2[ok],
        n_flagged=n_flagged,
        times=times,
        trajectories=None if traj is None else traj[ok],
    )


def _alloc_trajectories(cfg: SimConfig, n_steps: int):
    if not cfg.store_paths:
        return None
    if cfg.n_paths * (n_steps + 1) > _MAX_STORED:
        raise SimulationError(
            "store_paths would retain more than "
            f"{_MAX_STORED} wealth samples; reduce paths or increase dt"
        )
    return np.empty((cfg.n_paths, n_steps + 1))


def simulate_physical(model: ModelParams, strategy, cfg: SimConfig,
                      workers: int = 1) -> PathEnsemble:
    """Simulate under the physical dynamics with the filter run alongside.

    ``strategy`` maps (t, wealth array, filtered-mean array) to (q, pi) arrays;
    it never sees the hidden drift.  The wealth step is

        dX = [a(theta-eta) + a eta q + r X + (mu - r) pi] dt + b q dW0 + pi sigma dW1

    with the hidden drift mu driven by (W1, W2) and the filter mean updated
    from the observed return mu dt + sigma dW1.  The conditional-variance
    curve is solved once and shared by all paths.
    """
    if cfg.mode != MODE_PHYSICAL:
        raise ValueError("cfg.mode must be 'physical' for simulate_physical")
    c, dr, ob = model.claim, model.drift, model.objective
    n_steps, dt = cfg.resolve_steps(ob.T)
    sdt = np.sqrt(dt)
    cur = _step_curves(model, n_steps, dt)
    n_curve = solve_variance(dr, model.market.sigma, ob.T, steps=max(n_steps, 1000))
    n_at = n_curve(dt * np.arange(n_steps))
    gains = (cur["l"] + n_at / cur["sigma"]) / cur["sigma"]
    stochastic_drift = not dr.is_degenerate()
    drift_const = c.a * c.theta - c.a * c.eta

    X_out = np.empty(cfg.n_paths)
    price_out = np.empty(cfg.n_paths)
    err_out = np.empty(cfg.n_paths)
    q2_out = np.empty(cfg.n_paths)
    pi2_out = np.empty(cfg.n_paths)
    traj = _alloc_trajectories(cfg, n_steps)
    base = RngStream(cfg.seed)

    def run_block(bidx: int):
        lo = bidx * _BLOCK
        hi = min(lo + _BLOCK, cfg.n_paths)
        nb = hi - lo
        rng = base.substream(bidx).generator()
        X = np.full(nb, ob.x0)
        mu = np.full(nb, dr.m0)
        if dr.n0 > 0:
            mu = mu + np.sqrt(dr.n0) * rng.standard_normal(nb)
        m = np.full(nb, dr.m0)
        log_s = np.zeros(nb)
        int_q2 = np.zeros(nb)
        int_pi2 = np.zeros(nb)
        if traj is not None:
            traj[lo:hi, 0] = X
        # overflow on a diverging path propagates to its terminal flag
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                t = k * dt
                r_k, sig_k = cur["r"][k], cur["sigma"][k]
                h_k, l_k, z_k = cur["h"][k], cur["l"][k], cur["z"][k]
                q, pi = strategy(t, X, m)
                int_q2 += q * q * dt
                int_pi2 += pi * pi * dt
                Z = rng.standard_normal((3 if stochastic_drift else 2, nb))
                dW0, dW1 = sdt * Z[0], sdt * Z[1]
                obs = mu * dt + sig_k * dW1
                X = X + (drift_const + c.a * c.eta * q + r_k * X
                         + (mu - r_k) * pi) * dt \
                    + c.b * q * dW0 + pi * sig_k * dW1
                log_s = log_s + (mu - 0.5 * sig_k * sig_k) * dt + sig_k * dW1
                m = m + h_k * m * dt + gains[k] * (obs - m * dt)
                if stochastic_drift:
                    mu = mu + h_k * mu * dt + l_k * dW1 + z_k * (sdt * Z[2])
                else:
                    mu = mu + h_k * mu * dt
                if traj is not None:
                    traj[lo:hi, k + 1] = X
        X_out[lo:hi] = X
        price_out[lo:hi] = np.exp(log_s)
        err_out[lo:hi] = mu - m
        q2_out[lo:hi] = int_q2
        pi2_out[lo:hi] = int_pi2

    _run_blocks(cfg.n_paths, workers, run_block)
    times = dt * np.arange(n_steps + 1) if traj is not None else None
    return _finalize(cfg, X_out, price_out, err_out, q2_out, pi2_out, times, traj)


def simulate_innovation(model: ModelParams, strategy, cfg: SimConfig,
                        workers: int = 1) -> PathEnsemble:
    """Simulate directly under the observation filtration (partial mode only).

    Two drivers: claims noise and the innovation Brownian motion.  The wealth
    step is dX = [a eta q + r X + (m - r) pi] dt + b q dW0 + pi sigma dWbar and
    the filter mean follows dm = h m dt + (l + n/sigma) dWbar.
    """
    if cfg.mode != MODE_INNOVATION:
        raise ValueError("cfg.mode must be 'innovation' for simulate_innovation")
    if model.info_mode != INFO_PARTIAL:
        raise ValueError("innovation dynamics require a partial-information model")
    c, dr, ob = model.claim, model.drift, model.objective
    n_steps, dt = cfg.resolve_steps(ob.T)
    sdt = np.sqrt(dt)
    cur = _step_curves(model, n_steps, dt)
    n_curve = solve_variance(dr, model.market.sigma, ob.T, steps=max(n_steps, 1000))
    n_at = n_curve(dt * np.arange(n_steps))
    m_vols = cur["l"] + n_at / cur["sigma"]

    X_out = np.empty(cfg.n_paths)
    price_out = np.empty(cfg.n_paths)
    q2_out = np.empty(cfg.n_paths)
    pi2_out = np.empty(cfg.n_paths)
    traj = _alloc_trajectories(cfg, n_steps)
    base = RngStream(cfg.seed)

    def run_block(bidx: int):
        lo = bidx * _BLOCK
        hi = min(lo + _BLOCK, cfg.n_paths)
        nb = hi - lo
        rng = base.substream(bidx).generator()
        X = np.full(nb, ob.x0)
        m = np.full(nb, dr.m0)
        log_s = np.zeros(nb)
        int_q2 = np.zeros(nb)
        int_pi2 = np.zeros(nb)
        if traj is not None:
            traj[lo:hi, 0] = X
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                t = k * dt
                r_k, sig_k, h_k = cur["r"][k], cur["sigma"][k], cur["h"][k]
                q, pi = strategy(t, X, m)
                int_q2 += q * q * dt
                int_pi2 += pi * pi * dt
                Z = rng.standard_normal((2, nb))
                dW0, dWbar = sdt * Z[0], sdt * Z[1]
                X = X + (c.a * c.eta * q + r_k * X + (m - r_k) * pi) * dt \
                    + c.b * q * dW0 + pi * sig_k * dWbar
                log_s = log_s + (m - 0.5 * sig_k * sig_k) * dt + sig_k * dWbar
                m = m + h_k * m * dt + m_vols[k] * dWbar
                if traj is not None:
                    traj[lo:hi, k + 1] = X
        X_out[lo:hi] = X
        price_out[lo:hi] = np.exp(log_s)
        q2_out[lo:hi] = int_q2
        pi2_out[lo:hi] = int_pi2

    _run_blocks(cfg.n_paths, workers, run_block)
    times = dt * np.arange(n_steps + 1) if traj is not None else None
    return _finalize(cfg, X_out, price_out, None, q2_out, pi2_out, times, traj)


def zero_strategy(t, x, m):
    """No reinsurance retention, no risky investment."""
    zeros = np.zeros_like(np.asarray(x, dtype=float))
    return zeros, zeros


def constant_strategy(q: float, pi: float):
    """Constant admissible control, mainly for discretization tests."""
    def strategy(t, x, m):
        ones = np.ones_like(np.asarray(x, dtype=float))
        return q * ones, pi * ones
    return strategy
