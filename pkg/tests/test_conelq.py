import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvreins.conelq import (ControlPair, LQCoefficients, cone_quadratic_argmin,
                            hamiltonian_min, solve_riccati_pair, xi_minimizer)
from mvreins.filtering import projected_mean_curve


def grid_search_argmin(sign, P, coeffs, lo=0.0, hi=1.0, step=1e-3):
    """Independent oracle: brute-force minimization over the [lo, hi]^2 grid."""
    s = 1.0 if sign == "plus" else -1.0
    u = np.arange(lo, hi + step / 2, step)
    q, pi = np.meshgrid(u, u, indexing="ij")
    obj = (P * (coeffs.d_q ** 2 * q ** 2 + coeffs.d_pi ** 2 * pi ** 2)
           + s * 2.0 * P * (coeffs.b_q * q + coeffs.b_pi * pi))
    k = np.unravel_index(np.argmin(obj), obj.shape)
    return u[k[0]], u[k[1]], obj[k]


def test_xi_minus_interior_example():
    coeffs = LQCoefficients(b_q=0.2, b_pi=0.02, d_q=1.0, d_pi=1.0)
    xi = xi_minimizer("minus", 1.0, coeffs)
    assert xi.q == pytest.approx(0.2, abs=1e-12)
    assert xi.pi == pytest.approx(0.02, abs=1e-12)
    gq, gpi, _ = grid_search_argmin("minus", 1.0, coeffs)
    assert abs(gq - xi.q) <= 1e-3 and abs(gpi - xi.pi) <= 1e-3


def test_xi_plus_origin_for_nonnegative_drift():
    coeffs = LQCoefficients(b_q=0.2, b_pi=0.02, d_q=1.0, d_pi=1.0)
    xi = xi_minimizer("plus", 1.0, coeffs)
    assert (xi.q, xi.pi) == (0.0, 0.0)


def test_xi_minus_clips_negative_excess_return():
    coeffs = LQCoefficients(b_q=0.2, b_pi=-0.05, d_q=1.0, d_pi=1.0)
    xi = xi_minimizer("minus", 1.0, coeffs)
    assert xi.q == pytest.approx(0.2, abs=1e-12)
    assert xi.pi == 0.0
    gq, gpi, _ = grid_search_argmin("minus", 1.0, coeffs)
    assert abs(gq - 0.2) <= 1e-3 and gpi == 0.0


def test_hamiltonian_minus_matches_hand_value():
    coeffs = LQCoefficients(b_q=0.2, b_pi=0.02, d_q=1.0, d_pi=1.0)
    h = hamiltonian_min("minus", 1.0, coeffs)
    assert h == pytest.approx(-0.0404, abs=1e-15)
    _, _, oracle = grid_search_argmin("minus", 1.0, coeffs)
    assert h <= oracle + 1e-9


def test_hamiltonian_plus_zero_for_nonnegative_drift():
    coeffs = LQCoefficients(b_q=0.2, b_pi=0.02, d_q=1.0, d_pi=1.0)
    assert hamiltonian_min("plus", 1.0, coeffs) == 0.0


def test_hamiltonian_degree_one_homogeneity():
    coeffs = LQCoefficients(b_q=0.7, b_pi=-0.4, d_q=1.3, d_pi=0.6)
    base = {s: hamiltonian_min(s, 1.0, coeffs) for s in ("plus", "minus")}
    for alpha in (0.5, 2.0, 10.0):
        for s in ("plus", "minus"):
            assert hamiltonian_min(s, alpha, coeffs) == \
                pytest.approx(alpha * base[s], rel=1e-12)


def test_nonpositive_p_rejected():
    coeffs = LQCoefficients(b_q=0.2, b_pi=0.02, d_q=1.0, d_pi=1.0)
    with pytest.raises(ValueError):
        xi_minimizer("minus", 0.0, coeffs)
    with pytest.raises(ValueError):
        hamiltonian_min("plus", -1.0, coeffs)


def test_control_pair_rejects_negative_components():
    with pytest.raises(ValueError):
        ControlPair(q=-1e-9, pi=0.0)


def test_cone_quadratic_argmin_requires_convexity():
    with pytest.raises(ValueError):
        cone_quadratic_argmin(0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(
    b_q=st.floats(-3, 3), b_pi=st.floats(-3, 3),
    d_q=st.floats(0.05, 4), d_pi=st.floats(0.05, 4),
    P=st.floats(0.01, 50), seed=st.integers(0, 2 ** 31),
)
def test_cone_optimality_never_beaten(b_q, b_pi, d_q, d_pi, P, seed):
    coeffs = LQCoefficients(b_q=b_q, b_pi=b_pi, d_q=d_q, d_pi=d_pi)
    rng = np.random.default_rng(seed)
    probes = rng.uniform(0.0, 5.0, size=(50, 2))
    for sign, s in (("plus", 1.0), ("minus", -1.0)):
        xi = xi_minimizer(sign, P, coeffs)
        h = hamiltonian_min(sign, P, coeffs)
        assert h <= 1e-12

        def obj(q, pi):
            return (P * (d_q ** 2 * q ** 2 + d_pi ** 2 * pi ** 2)
                    + s * 2.0 * P * (b_q * q + b_pi * pi))

        assert obj(xi.q, xi.pi) == pytest.approx(h, rel=1e-12, abs=1e-12)
        assert np.all(obj(xi.q, xi.pi) <= obj(probes[:, 0], probes[:, 1]) + 1e-9)


def test_h_minus_below_h_plus_for_nonnegative_drift():
    rng = np.random.default_rng(5)
    for _ in range(100):
        coeffs = LQCoefficients(b_q=rng.uniform(0, 2), b_pi=rng.uniform(0, 2),
                                d_q=rng.uniform(0.1, 2), d_pi=rng.uniform(0.1, 2))
        P = rng.uniform(0.1, 5)
        assert hamiltonian_min("minus", P, coeffs) <= \
            hamiltonian_min("plus", P, coeffs) + 1e-15


def test_riccati_pair_closed_forms(paper44_model):
    m_bar = projected_mean_curve(paper44_model.drift, 100.0)
    sol = solve_riccati_pair(paper44_model, m_bar, steps=2500)
    grid = sol.p_plus.grid
    p_plus_exact = np.exp(2 * 0.04 * (100.0 - grid))
    a1 = -(0.06 - 0.04) ** 2 / 2 - 0.2 ** 2 / 2
    p_minus_exact = np.exp((2 * 0.04 + 2 * a1) * (100.0 - grid))
    assert np.max(np.abs(sol.p_plus.values - p_plus_exact) / p_plus_exact) <= 1e-6
    assert np.max(np.abs(sol.p_minus.values - p_minus_exact) / p_minus_exact) <= 1e-6


def test_riccati_terminal_condition(paper44_model):
    m_bar = projected_mean_curve(paper44_model.drift, 100.0)
    sol = solve_riccati_pair(paper44_model, m_bar, steps=500)
    assert sol.p_plus(100.0) == 1.0
    assert sol.p_minus(100.0) == 1.0
    assert sol.lambda_zero


def test_riccati_positive_and_below_envelope(partial_filter_model):
    model = partial_filter_model
    m_bar = projected_mean_curve(model.drift, model.objective.T)
    sol = solve_riccati_pair(model, m_bar, steps=3000)
    grid = sol.p_plus.grid
    envelope = np.exp(2 * 0.04 * (model.objective.T - grid))
    for curve in (sol.p_plus, sol.p_minus):
        assert curve.values.min() > 0
        assert np.all(curve.values <= envelope * (1 + 1e-9))
