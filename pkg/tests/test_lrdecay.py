import math

import pytest

from sgdlab.errors import ConfigurationError, PreconditionError
from sgdlab.lrdecay import (decay_constant, idealized_risk, required_time,
                            rough_stationarity_iterations, rough_stationarity_time)

# independent closed forms: k = log(b/0.01) exp(c/s) / s with b = 100 - s, c = 0.1
K_01 = 250.335812
K_0001 = 2.4758447e47


def test_rough_stationarity_iterations():
    assert rough_stationarity_iterations(99.9, 0.1, c=0.1) == pytest.approx(K_01, rel=1e-6)
    assert rough_stationarity_iterations(99.999, 0.001, c=0.1) == pytest.approx(K_0001, rel=1e-5)
    ratio = (rough_stationarity_iterations(99.999, 0.001, c=0.1)
             / rough_stationarity_iterations(99.9, 0.1, c=0.1))
    assert ratio == pytest.approx(9.8901e44, rel=1e-4)


def test_strongly_convex_ratio_is_about_hundred():
    # lambda independent of s: iteration count scales like 1/s
    k1 = rough_stationarity_iterations(99.9, 0.1, lam=1.0)
    k2 = rough_stationarity_iterations(99.999, 0.001, lam=1.0)
    assert k2 / k1 == pytest.approx(100.0, rel=1e-3)


def test_risk_reaches_threshold():
    s, b, c = 0.1, 99.9, 0.1
    t = rough_stationarity_time(b, s, c=c)
    assert idealized_risk(1.0, b, c, s, t) - s == pytest.approx(0.01, rel=1e-12)
    assert idealized_risk(1.0, b, c, s, t / 2) > idealized_risk(1.0, b, c, s, t)


def test_decay_constant():
    assert decay_constant(0.1, 0.1) == pytest.approx(math.exp(-1))
    with pytest.raises(ConfigurationError):
        decay_constant(0.1, 0.0)
    with pytest.raises(ConfigurationError):
        rough_stationarity_time(1.0, 0.1)


def test_required_time_identities():
    base = dict(s=0.01, A=1.0, C=2.0, rho_gap=5.0, lambda_s=0.3)
    t1 = required_time(epsilon=0.1, **base)
    t2 = required_time(epsilon=0.2, **base)
    assert t1 - t2 == pytest.approx(math.log(2) / 0.3)
    assert required_time(epsilon=0.1, **{**base, "rho_gap": 0.1 / (2 * 2.0)}) == pytest.approx(0.0)
    slow = required_time(epsilon=0.1, **{**base, "lambda_s": math.exp(-100)})
    fast = required_time(epsilon=0.1, **{**base, "lambda_s": math.exp(-1)})
    assert slow / fast == pytest.approx(math.exp(99), rel=1e-12)


def test_required_time_precondition():
    with pytest.raises(PreconditionError):
        required_time(s=0.2, A=1.0, C=1.0, rho_gap=1.0, epsilon=0.1, lambda_s=1.0)
