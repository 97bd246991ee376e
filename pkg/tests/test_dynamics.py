import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from sgdlab.dynamics import (NoiseModel, block_normals, coupled_deviation,
                             discrete_coupled_deviation, em_ensemble_states, euler_maruyama,
                             gaussian_norm_tail, hitting_time_mc, kramers_time, ou_hitting_time,
                             run_discrete, run_ensemble, weak_error_study)
from sgdlab.errors import ConfigurationError, DivergenceError, DomainError
from sgdlab.objective import ScalarField, catalog


def test_gd_on_quadratic_is_geometric(quad):
    tr = run_discrete("gd", quad, 0.1, 50, [1.0], NoiseModel(0))
    np.testing.assert_allclose(tr.states[:, 0], 0.9 ** np.arange(51), rtol=1e-13)


def test_sgd_with_zero_noise_is_gd(quad, monkeypatch):
    import sgdlab.dynamics as dyn
    gd = run_discrete("gd", quad, 0.1, 30, [1.0], NoiseModel(0))
    monkeypatch.setattr(dyn, "block_normals", lambda seed, step, n, d, stream=0: np.zeros((n, d)))
    sgd = run_discrete("sgd", quad, 0.1, 30, [1.0], NoiseModel(0))
    assert np.array_equal(gd.states, sgd.states)


def test_sgd_and_sgld_agree_in_distribution_at_unit_rate():
    f = catalog("quadratic_2d_paper")
    a = run_ensemble("sgd", f, 1.0, 40, [8.0, 8.0], 4000, 11)
    b = run_ensemble("sgld", f, 1.0, 40, [8.0, 8.0], 4000, 12)
    z = np.abs(a.mean_excess_risk - b.mean_excess_risk) / np.hypot(a.std_err, b.std_err)
    assert np.max(z[1:]) < 4.5


def test_noise_independent_of_ensemble_size():
    small = block_normals(5, 3, 4, 2)
    large = block_normals(5, 3, 40, 2)
    assert np.array_equal(small, large[:4])
    assert np.array_equal(NoiseModel(5, 3).normals(3, 2), small[3])


def test_run_ensemble_reproducible(quad):
    a = run_ensemble("sgd", quad, 0.1, 20, [1.0], 50, 7)
    b = run_ensemble("sgd", quad, 0.1, 20, [1.0], 50, 7)
    assert np.array_equal(a.mean_excess_risk, b.mean_excess_risk)
    assert np.array_equal(a.std_err, b.std_err)


def test_gd_ensemble_has_zero_std_err(quad):
    st = run_ensemble("gd", quad, 0.1, 20, [1.0], 10, 0)
    assert np.all(st.std_err == 0)


def test_sgd_stationary_excess_risk(quad):
    # x_{k+1} = (1 - s) x_k - s xi_k has stationary variance s / (2 - s)
    s = 0.1
    st = run_ensemble("sgd", quad, s, 400, [0.0], 20000, 3)
    tail = st.mean_excess_risk[200:].mean()
    assert tail == pytest.approx(s / (2 * (2 - s)), rel=0.03)
    assert tail == pytest.approx(s / 4, rel=0.08)


def test_nonconvex_plateaus_ordered():
    f = catalog("nonconvex_2d_paper")
    hi = run_ensemble("sgd", f, 0.1, 600, [0.7, -0.7], 2000, 1)
    lo = run_ensemble("sgd", f, 0.05, 1200, [0.7, -0.7], 2000, 1)
    assert hi.mean_excess_risk[-200:].mean() > lo.mean_excess_risk[-400:].mean()


def test_divergence_reports_step_and_replica(quad):
    with pytest.raises(DivergenceError) as info:
        run_discrete("gd", quad, 3.0, 200, [1.0], NoiseModel(0))
    assert info.value.step is not None and info.value.replica == 0
    assert np.all(np.isfinite(info.value.last_finite))


def test_unknown_method_rejected(quad):
    with pytest.raises(ConfigurationError):
        run_discrete("adam", quad, 0.1, 5, [1.0], NoiseModel(0))


def test_em_step_precondition(quad):
    with pytest.raises(ConfigurationError):
        euler_maruyama(quad, 0.1, 0.05, 1.0, [1.0], NoiseModel(0))


def test_em_zero_noise_is_gradient_flow(quad):
    tr = euler_maruyama(quad, 0.0, 1e-3, 2.0, [1.0], NoiseModel(0))
    assert abs(tr.states[-1, 0] - math.exp(-2.0)) < 2e-3 * math.exp(-2.0) * 2


def test_em_ou_variance(quad):
    s, t = 0.5, 1.0
    _, X = em_ensemble_states(quad, s, 1e-3, t, [0.0], 10_000, 4)
    var = np.var(X[-1, :, 0], ddof=1)
    exact = s / 2 * (1 - math.exp(-2 * t))
    # sampling std of a variance estimate is about var * sqrt(2/n)
    assert abs(var - exact) < 4 * exact * math.sqrt(2 / 10_000) + 1e-3


def test_em_quadratic_2d_mean_path():
    f = catalog("quadratic_2d_paper")
    times, X = em_ensemble_states(f, 0.1, 0.01, 10.0, [8.0, 8.0], 4000, 2, times=[5.0, 10.0])
    for t, block in zip(times, X):
        exact = np.array([8 * math.exp(-0.1 * t), 8 * math.exp(-0.05 * t)])
        se = block.std(axis=0, ddof=1) / math.sqrt(len(block))
        assert np.all(np.abs(block.mean(axis=0) - exact) < 4 * se + 1e-3)


def test_weak_error_zero_noise_slope(quad):
    r = weak_error_study(quad, [0.2, 0.1, 0.05, 0.025], 5.0, 4, 0.00125, [1.0], noise=False)
    assert 0.9 <= r.order <= 1.1


def test_weak_error_nonincreasing(quad):
    r = weak_error_study(quad, [0.2, 0.1, 0.05, 0.025], 5.0, 20_000, 0.00125, [1.0], seed=5)
    assert np.all(np.diff(r.errors) <= 0)


def test_weak_error_preconditions(quad):
    with pytest.raises(ConfigurationError):
        weak_error_study(quad, [0.2, 0.1], 5.0, 10, 0.01, [1.0])


def test_hitting_time_large_noise_is_fast(quad):
    r = hitting_time_mc(quad, 10.0, 0.0, 1.0, 2000, 1e-3, seed=1)
    assert r.mean < 1.0 and r.n_censored == 0


def test_hitting_time_requires_distinct_points(quad):
    with pytest.raises(ConfigurationError):
        hitting_time_mc(quad, 0.5, 1.0, 1.0, 10, 1e-3)


def test_ou_hitting_formula():
    assert ou_hitting_time(1.0, 0.5, 0.0, 1.0) == pytest.approx(math.sqrt(math.pi * 0.5) * math.e**2)


def _kramers_field():
    # f(0) = 0, f''(0) = 2, f(1) = 0.25, f''(1) = -1
    p = Polynomial([0.0, -0.25, 1.0, -0.5])
    d1, d2 = p.deriv(), p.deriv(2)
    return ScalarField("cubic", 1, lambda x: p(x[..., 0]), lambda x: d1(x),
                       lambda x: d2(x)[..., None])


def test_kramers_time_examples():
    f = _kramers_field()
    assert kramers_time(f, 0.0, 1.0, 0.2) == pytest.approx(math.pi / math.sqrt(2) * math.exp(2.5))
    assert kramers_time(f, 0.0, 1.0, 0.2) == pytest.approx(27.06, abs=0.01)
    ratio = kramers_time(f, 0.0, 1.0, 0.1) / kramers_time(f, 0.0, 1.0, 0.2)
    assert ratio == pytest.approx(math.exp(2 * 0.25 / 0.2))


def test_kramers_time_wrong_curvature():
    with pytest.raises(DomainError):
        kramers_time(_kramers_field(), 1.0, 0.0, 0.2)


def test_coupling_zero_noise(quad):
    r = coupled_deviation(quad, 0.0, 2.0, 1e-3, NoiseModel(0))
    assert r.sup_deviation == 0.0 and r.bound_satisfied


def test_coupling_bound_many_seeds(quad):
    assert all(coupled_deviation(quad, 0.1, 2.0, 1e-2, NoiseModel(9, i)).bound_satisfied
               for i in range(30))


def test_discrete_coupling_shrinks_with_s(quad):
    devs = []
    for s in (0.2, 0.1, 0.05):
        reps = [discrete_coupled_deviation(quad, s, 2.0, NoiseModel(4, i)) for i in range(50)]
        devs.append(np.median([r.sup_deviation for r in reps]))
        assert all(r.accumulated_bound >= r.sup_deviation for r in reps)
    assert devs[0] > devs[1] > devs[2]


def test_gaussian_norm_tail():
    p, _ = gaussian_norm_tail(2, 2.0)
    assert p == pytest.approx(math.exp(-2))
    p, _ = gaussian_norm_tail(1, 1.96)
    assert p == pytest.approx(0.05, abs=5e-4)
    p, bound = gaussian_norm_tail(5, 6.0)
    assert bound >= p
    with pytest.raises(DomainError):
        gaussian_norm_tail(2, -1.0)
