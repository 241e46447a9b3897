import dataclasses

import numpy as np
import pytest

import mvreins as mv
from mvreins.montecarlo import (InsufficientDataError, SimConfig,
                                SimulationError, constant_strategy, estimate,
                                simulate_innovation, simulate_physical,
                                zero_strategy)

from conftest import make_model


def with_d(model, d):
    return dataclasses.replace(
        model, objective=dataclasses.replace(model.objective, d=d))


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def test_estimate_two_point():
    est = estimate(np.array([0.0, 2.0]))
    assert est.mean == 1.0
    assert est.variance == 2.0


def test_estimate_constant_ensemble():
    est = estimate(np.full(50, 3.25))
    assert est == mv.EstimateResult(3.25, 0.0, 0.0, 0.0)


def test_estimate_needs_two_paths():
    with pytest.raises(InsufficientDataError):
        estimate(np.array([1.0]))


def test_estimate_standard_errors_gaussian():
    rng = np.random.default_rng(0)
    x = rng.normal(5.0, 2.0, size=200_000)
    est = estimate(x)
    assert abs(est.mean - 5.0) <= 4 * est.se_mean
    assert abs(est.variance - 4.0) <= 4 * est.se_variance
    # for a Gaussian, se(s^2) ~ sqrt(2/n) sigma^2
    assert est.se_variance == pytest.approx(np.sqrt(2 / 200_000) * 4.0, rel=0.05)


# ---------------------------------------------------------------------------
# deterministic limits
# ---------------------------------------------------------------------------

def test_zero_strategy_hits_riskless_wealth(scaled_noncheap_model):
    cfg = SimConfig(n_paths=8, dt=0.001, seed=1)
    ens = simulate_physical(scaled_noncheap_model, zero_strategy, cfg)
    d_min = mv.riskless_terminal_wealth(scaled_noncheap_model)
    assert ens.terminal_wealth.max() == ens.terminal_wealth.min()  # zero variance
    # Euler integrates the riskless ODE to O(dt)
    assert ens.terminal_wealth[0] == pytest.approx(d_min, rel=1e-5)
    assert np.all(ens.int_q2 == 0.0) and np.all(ens.int_pi2 == 0.0)


def test_zero_strategy_innovation_riskless(partial_exact_model):
    model = with_d(dataclasses.replace(
        partial_exact_model,
        objective=dataclasses.replace(partial_exact_model.objective, T=5.0)),
        d=70.0)
    cfg = SimConfig(n_paths=8, dt=0.001, seed=1, mode="innovation")
    ens = simulate_innovation(model, zero_strategy, cfg)
    assert ens.terminal_wealth.max() == ens.terminal_wealth.min()
    assert ens.terminal_wealth[0] == pytest.approx(50.0 * np.exp(0.2), rel=1e-5)


# ---------------------------------------------------------------------------
# reproducibility
# ---------------------------------------------------------------------------

def test_bitwise_reproducible_across_runs_and_workers(scaled_noncheap_model):
    sol = mv.compute_solution(scaled_noncheap_model)
    strategy = mv.full_feedback_strategy(sol, scaled_noncheap_model)
    cfg = SimConfig(n_paths=40_000, dt=0.01, seed=99)
    a = simulate_physical(scaled_noncheap_model, strategy, cfg, workers=1)
    b = simulate_physical(scaled_noncheap_model, strategy, cfg, workers=1)
    c = simulate_physical(scaled_noncheap_model, strategy, cfg, workers=4)
    assert np.array_equal(a.terminal_wealth, b.terminal_wealth)
    assert np.array_equal(a.terminal_wealth, c.terminal_wealth)
    ea, ec = estimate(a), estimate(c)
    assert (ea.mean, ea.variance) == (ec.mean, ec.variance)


def test_different_seeds_differ(scaled_noncheap_model):
    cfg1 = SimConfig(n_paths=1000, dt=0.01, seed=1)
    cfg2 = SimConfig(n_paths=1000, dt=0.01, seed=2)
    sol = mv.compute_solution(scaled_noncheap_model)
    strategy = mv.full_feedback_strategy(sol, scaled_noncheap_model)
    a = simulate_physical(scaled_noncheap_model, strategy, cfg1)
    b = simulate_physical(scaled_noncheap_model, strategy, cfg2)
    assert not np.array_equal(a.terminal_wealth, b.terminal_wealth)


# ---------------------------------------------------------------------------
# distributional cross-checks
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def tame_partial_model():
    return make_model(theta=0.2, eta=0.2, sigma=0.5, l=0.3, z=0.2, m0=0.06,
                      T=1.0, d=55.0, info_mode="partial")


def test_price_moments_agree_between_representations(tame_partial_model):
    """Terminal price mean/variance must agree between the physical and the
    innovation representations (the observation filtration carries the same
    price law)."""
    n = 40_000
    phys = simulate_physical(tame_partial_model, zero_strategy,
                             SimConfig(n_paths=n, dt=0.001, seed=5))
    innov = simulate_innovation(tame_partial_model, zero_strategy,
                                SimConfig(n_paths=n, dt=0.001, seed=6,
                                          mode="innovation"))
    ep, ei = estimate(phys.terminal_price), estimate(innov.terminal_price)
    se_mean = np.hypot(ep.se_mean, ei.se_mean)
    se_var = np.hypot(ep.se_variance, ei.se_variance)
    assert abs(ep.mean - ei.mean) <= 3 * se_mean
    assert abs(ep.variance - ei.variance) <= 3 * se_var


def test_innovation_filter_mean_growth():
    model = make_model(theta=0.2, eta=0.2, sigma=0.5, l=0.3, z=0.2, m0=0.06,
                       h=0.1, T=1.0, d=55.0, info_mode="partial")
    # E[m(T)] = m0 e^{int h}: the mean SDE is driftless noise around it
    n = 40_000
    target = 0.06 * np.exp(0.1)

    means = []

    def recording_strategy(t, x, m):
        if t >= 1.0 - 0.0015:
            means.append(np.array(m))
        zeros = np.zeros_like(x)
        return zeros, zeros

    simulate_innovation(model, recording_strategy,
                        SimConfig(n_paths=n, dt=0.001, seed=7, mode="innovation"))
    m_T = np.concatenate(means)
    se = m_T.std(ddof=1) / np.sqrt(m_T.size)
    assert abs(m_T.mean() - target) <= 3 * se + 1e-4  # 1e-4 Euler drift slack


def test_filter_consistency_physical(tame_partial_model):
    """E[(mu(t) - m(t))^2] matches the Riccati variance n(t) within MC error,
    checked at t = T/4, T/2 and T (by running horizons of those lengths)."""
    n = 30_000
    n_curve = mv.solve_variance(tame_partial_model.drift,
                                tame_partial_model.market.sigma, 1.0)
    for horizon in (0.25, 0.5, 1.0):
        model = dataclasses.replace(
            tame_partial_model,
            objective=dataclasses.replace(tame_partial_model.objective,
                                          T=horizon))
        ens = simulate_physical(model, zero_strategy,
                                SimConfig(n_paths=n, dt=0.0005, seed=9))
        err2 = ens.terminal_drift_error ** 2
        se = err2.std(ddof=1) / np.sqrt(err2.size)
        assert abs(err2.mean() - n_curve(horizon)) <= 3 * se
        # unbiasedness of the filter mean
        se_mean = ens.terminal_drift_error.std(ddof=1) / np.sqrt(n)
        assert abs(ens.terminal_drift_error.mean()) <= 3 * se_mean


def test_optimal_strategy_hits_target_mean(scaled_noncheap_model):
    sol = mv.compute_solution(scaled_noncheap_model)
    strategy = mv.full_feedback_strategy(sol, scaled_noncheap_model)
    cfg = SimConfig(n_paths=30_000, dt=0.002, seed=12)
    est = estimate(simulate_physical(scaled_noncheap_model, strategy, cfg))
    d = scaled_noncheap_model.objective.d
    assert abs(est.mean - d) <= 3.5 * est.se_mean


def test_partial_feedback_innovation_mode(partial_exact_model):
    """Realized moments under the filtered-information feedback on a short
    horizon match the analytic frontier point."""
    model = with_d(dataclasses.replace(
        partial_exact_model,
        objective=dataclasses.replace(partial_exact_model.objective, T=5.0)),
        d=1.15 * 50.0 * np.exp(0.2))
    sol = mv.solve_partial(model, steps=4000)
    strategy = mv.partial_feedback_strategy(sol, model)
    cfg = SimConfig(n_paths=30_000, dt=0.002, seed=13, mode="innovation")
    ens = simulate_innovation(model, strategy, cfg)
    est = estimate(ens)
    frontier = mv.frontier_partial(sol.riccati, model, [model.objective.d])
    assert abs(est.mean - model.objective.d) <= 3.5 * est.se_mean
    assert abs(est.variance - frontier.variance[0]) <= \
        0.05 * frontier.variance[0]


# ---------------------------------------------------------------------------
# discretization
# ---------------------------------------------------------------------------

def test_weak_convergence_order_one(scaled_cheap_model):
    """Euler bias in the mean shrinks linearly in dt.

    Measured with a constant control so the continuous-time mean is available
    in closed form and additive noise keeps the estimator exactly unbiased for
    the discrete system (feedback strategies bury the O(dt) bias below Monte
    Carlo noise at any feasible path count).
    """
    model = scaled_cheap_model
    q_bar, pi_bar = 1.0, 1.0
    # dE = [a eta q + r E + (mu - r) pi] dt with eta = theta
    c_bar = 0.2 * q_bar + 0.02 * pi_bar
    exact = 50.0 * np.exp(0.2) + c_bar * (np.exp(0.2) - 1.0) / 0.04
    errors = []
    for dt, seed in ((0.5, 3), (0.25, 4), (0.125, 5)):
        cfg = SimConfig(n_paths=200_000, dt=dt, seed=seed)
        est = estimate(simulate_physical(model, constant_strategy(q_bar, pi_bar),
                                         cfg))
        assert abs(est.mean - exact) > 3 * est.se_mean  # bias dominates noise
        errors.append(abs(est.mean - exact))
    assert 1.5 <= errors[0] / errors[1] <= 2.7
    assert 1.5 <= errors[1] / errors[2] <= 2.7


# ---------------------------------------------------------------------------
# config, flags, diagnostics
# ---------------------------------------------------------------------------

def test_dt_must_divide_horizon(scaled_cheap_model):
    cfg = SimConfig(n_paths=4, dt=0.3, seed=0)
    with pytest.raises(SimulationError):
        simulate_physical(scaled_cheap_model, zero_strategy, cfg)


def test_mode_mismatch_rejected(scaled_cheap_model, partial_exact_model):
    cfg = SimConfig(n_paths=4, dt=0.01, seed=0, mode="innovation")
    with pytest.raises(ValueError):
        simulate_physical(scaled_cheap_model, zero_strategy, cfg)
    with pytest.raises(ValueError):
        simulate_innovation(scaled_cheap_model, zero_strategy, cfg)  # full mode


def test_diverging_paths_flagged(scaled_cheap_model):
    cfg = SimConfig(n_paths=64, dt=0.01, seed=0)
    with pytest.raises(SimulationError):
        simulate_physical(scaled_cheap_model, constant_strategy(1e200, 1e200),
                          cfg)


def test_admissibility_diagnostics_finite(scaled_noncheap_model):
    sol = mv.compute_solution(scaled_noncheap_model)
    strategy = mv.full_feedback_strategy(sol, scaled_noncheap_model)
    ens = simulate_physical(scaled_noncheap_model, strategy,
                            SimConfig(n_paths=2000, dt=0.005, seed=2))
    assert np.all(np.isfinite(ens.int_q2))
    assert np.all(np.isfinite(ens.int_pi2))
    assert ens.n_flagged == 0


def test_store_paths(scaled_cheap_model):
    cfg = SimConfig(n_paths=16, dt=0.05, seed=0, store_paths=True)
    ens = simulate_physical(scaled_cheap_model, zero_strategy, cfg)
    assert ens.trajectories.shape == (16, 101)
    assert ens.times.shape == (101,)
    np.testing.assert_array_equal(ens.trajectories[:, 0], 50.0)
    np.testing.assert_array_equal(ens.trajectories[:, -1], ens.terminal_wealth)


def test_store_paths_size_guard(scaled_cheap_model):
    cfg = SimConfig(n_paths=200_000, dt=0.001, seed=0, store_paths=True)
    with pytest.raises(SimulationError):
        simulate_physical(scaled_cheap_model, zero_strategy, cfg)
