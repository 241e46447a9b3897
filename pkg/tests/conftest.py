import numpy as np
import pytest

import mvreins as mv


def make_model(*, theta=0.3, eta=0.2, r=0.04, sigma=1.0, h=0.0, l=0.0, z=0.0,
               m0=0.06, n0=0.0, x0=50.0, T=100.0, d=10000.0, a=1.0, b=1.0,
               info_mode="full") -> mv.ModelParams:
    return mv.ModelParams(
        claim=mv.ClaimParams(a=a, b=b, theta=theta, eta=eta),
        market=mv.MarketParams(r=r, sigma=sigma),
        drift=mv.DriftParams(h=h, l=l, z=z, m0=m0, n0=n0),
        objective=mv.Objective(x0=x0, T=T, d=d),
        info_mode=info_mode,
    )


@pytest.fixture(scope="session")
def paper44_model():
    """Long-horizon full-information worked example (noncheap reinsurance)."""
    return make_model()


@pytest.fixture(scope="session")
def scaled_cheap_model():
    """Short-horizon cheap instance, d = 1.2 * riskless terminal wealth."""
    d_min = 50.0 * np.exp(0.2)
    return make_model(theta=0.2, eta=0.2, T=5.0, d=1.2 * d_min)


@pytest.fixture(scope="session")
def scaled_noncheap_model():
    """Short-horizon noncheap instance (corrected vs published constant differ)."""
    base = make_model(theta=0.3, eta=0.2, T=5.0, d=100.0)
    d_min = mv.riskless_terminal_wealth(base)
    return make_model(theta=0.3, eta=0.2, T=5.0, d=1.2 * d_min)


@pytest.fixture(scope="session")
def partial_exact_model():
    """Partial information with degenerate drift: reduces to full information."""
    return make_model(theta=0.2, eta=0.2, info_mode="partial")


@pytest.fixture(scope="session")
def partial_filter_model():
    """Partial information with genuinely uncertain drift (projected reduction)."""
    return make_model(theta=0.2, eta=0.2, l=3.0, z=2.0, T=10.0, d=80.0,
                      info_mode="partial")


@pytest.fixture(scope="session")
def filter_demo_drift():
    return mv.DriftParams(h=0.0, l=3.0, z=2.0, m0=0.06, n0=0.0)
