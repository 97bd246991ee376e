import math

import numpy as np
import pytest

from sgdlab.errors import ConfigurationError, TruncationError, WeightedNormOverflowError
from sgdlab.gibbs import (GridSpec, chi_square_integral, cross_norm, default_grid,
                          epsilon_derivative, epsilon_of_s, export_csv, gaussian_density,
                          gibbs_on_grid, l1_distance, normalized, refined_minimum,
                          relative_entropy, risk_second_moment, stationarity_residual,
                          weighted_l2_distance)
from sgdlab.objective import available, catalog


@pytest.fixture
def box6():
    return GridSpec.box(1, 6.0, 2000)


def test_grid_spec_basics():
    g = GridSpec.box(2, 1.0, 11)
    assert g.shape == (11, 11) and g.n_nodes == 121
    assert g.points.shape == (11, 11, 2)
    np.testing.assert_allclose(g.spacing, [0.2, 0.2])
    assert np.exp(g.log_weights).sum() == pytest.approx(4.0)
    with pytest.raises(ConfigurationError):
        GridSpec.box(1, 1.0, 1)


def test_partition_function_quadratic(quad, box6):
    mu = gibbs_on_grid(quad, 0.2, box6)
    assert mu.Z_s == pytest.approx(math.sqrt(math.pi * 0.2), rel=1e-6)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-12)
    x = box6.axes[0]
    assert mu.integrate(x**2) == pytest.approx(0.1, rel=1e-6)


def test_truncated_box_rejected(quad):
    with pytest.raises(TruncationError):
        gibbs_on_grid(quad, 0.5, GridSpec.box(1, 1.0, 201))


def test_mass_concentrates_on_global_minimum(dw, dw_roots):
    g = default_grid(dw, 0.2)
    x = g.axes[0]
    ratios = []
    for s in (0.2, 0.1):
        mu = gibbs_on_grid(dw, s, g)
        d = np.interp(dw_roots[[0, 2]], x, mu.density)
        ratios.append(d[0] / d[1])
    df = float(dw.value(np.array([dw_roots[2]])) - dw.value(np.array([dw_roots[0]])))
    # the Laplace ratio gains exp(2 df / s) when s is halved, up to the prefactor
    gain = ratios[1] / ratios[0]
    assert gain == pytest.approx(math.exp(2 * df / 0.1 - 2 * df / 0.2), rel=0.05)


def test_nonconvex_2d_four_modes():
    f = catalog("nonconvex_2d_paper")
    g = default_grid(f, 0.1, n=201)
    dens = gibbs_on_grid(f, 0.1, g).density
    from scipy.ndimage import maximum_filter
    peaks = (dens == maximum_filter(dens, size=5)) & (dens > 1e-6 * dens.max())
    assert peaks.sum() == 4


@pytest.mark.parametrize("theta", [0.5, 1.0, 4.0])
def test_epsilon_quadratic_1d(theta):
    f = catalog("quadratic_1d", theta=theta)
    for s in (0.1, 0.05, 0.025):
        assert abs(epsilon_of_s(f, s, default_grid(f, s)) - s / 4) < 1e-4
        assert abs(epsilon_derivative(f, s, default_grid(f, s)) - 0.25) < 1e-4


def test_epsilon_quadratic_2d():
    f = catalog("quadratic_2d_paper")
    for s in (0.1, 0.05):
        assert abs(epsilon_of_s(f, s, default_grid(f, s)) - s / 2) < 1e-4


def test_epsilon_tends_to_zero(dw):
    g = default_grid(dw, 0.1)
    eps = [epsilon_of_s(dw, s, g) for s in (0.1, 0.05, 0.025)]
    assert eps[0] > eps[1] > eps[2] > 0
    assert eps[2] < 0.01


@pytest.mark.parametrize("name", available())
def test_epsilon_strictly_increasing(name):
    f = catalog(name)
    s_values = (0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3)
    g = default_grid(f, max(s_values))
    eps = [epsilon_of_s(f, s, g) for s in s_values]
    assert np.all(np.diff(eps) > 0)


def test_epsilon_derivative_matches_difference(dw):
    g = default_grid(dw, 0.25)
    h = 1e-3
    fd = (epsilon_of_s(dw, 0.2 + h, g) - epsilon_of_s(dw, 0.2 - h, g)) / (2 * h)
    assert epsilon_derivative(dw, 0.2, g) == pytest.approx(fd, rel=1e-3)
    # frozen from a centred difference with h = 1e-3 on the same grid
    assert epsilon_derivative(dw, 0.2, g) == pytest.approx(0.383384, rel=1e-4)


def test_epsilon_derivative_constant_field():
    from sgdlab.objective import ScalarField
    const = ScalarField("flat_box", 1, lambda x: 1e3 * (np.abs(x[..., 0]) > 1.0),
                        lambda x: np.zeros_like(x), lambda x: np.zeros(x.shape + (1,)))
    g = GridSpec.box(1, 1.5, 601)
    assert epsilon_derivative(const, 0.2, g) == pytest.approx(0.0, abs=1e-14)


def test_risk_second_moment_quadratic(quad, box6):
    # E[(x^2/2)^2] = 3 v^2 / 4 with v = s/2
    s = 0.2
    assert risk_second_moment(quad, s, box6) ** 2 == pytest.approx(3 * (s / 2) ** 2 / 4, rel=1e-6)


def test_refined_minimum(dw, dw_roots):
    x, fx = refined_minimum(dw, default_grid(dw, 0.2))
    assert x[0] == pytest.approx(dw_roots[0], abs=1e-12)
    assert fx == pytest.approx(dw.minimum_value, abs=1e-14)


def _gauss(g, v):
    return normalized(g, gaussian_density(g, [0.0], v))


def test_weighted_l2_zero_and_identity(quad, box6):
    mu = gibbs_on_grid(quad, 0.2, box6)
    assert weighted_l2_distance(mu.density, mu) == pytest.approx(0.0, abs=1e-12)
    rho = _gauss(box6, 0.15)
    d2 = weighted_l2_distance(rho, mu) ** 2
    assert d2 == pytest.approx(chi_square_integral(rho, mu) - 1.0, abs=1e-10)


def test_weighted_l2_gaussian_closed_form(quad, box6):
    v = 0.1
    mu = gibbs_on_grid(quad, 0.2, box6)
    # chi^2(N(0, w) | N(0, v)) + 1 = v / sqrt(w (2v - w)), finite for w < 2v
    rho = _gauss(box6, 1.5 * v)
    exact = v / math.sqrt(1.5 * v * (2 * v - 1.5 * v)) - 1
    assert weighted_l2_distance(rho, mu) ** 2 == pytest.approx(exact, rel=1e-6)


def test_cross_norm_closed_form(quad):
    g = GridSpec.box(1, 4.0, 4001)
    v1, v2 = 0.04, 0.025
    exact = math.sqrt(v2 / math.sqrt(v1 * (2 * v2 - v1)) - 1)
    assert cross_norm(quad, 0.08, 0.05, g) == pytest.approx(exact, abs=1e-4)
    assert cross_norm(quad, 0.05, 0.05, g) == pytest.approx(0.0, abs=1e-12)


def test_cross_norm_divergent_pair(quad):
    with pytest.raises(WeightedNormOverflowError):
        cross_norm(quad, 0.1, 0.05, GridSpec.box(1, 4.0, 2001))


def test_cross_norm_warm_start_smaller(dw):
    g = GridSpec.box(1, 3.0, 3001)
    warm = cross_norm(dw, 0.08, 0.05, g)
    cold = weighted_l2_distance(normalized(g, np.ones(g.shape)), gibbs_on_grid(dw, 0.05, g))
    assert warm < cold


def test_relative_entropy_gaussians(quad, box6):
    mu = gibbs_on_grid(quad, 0.2, box6)
    assert relative_entropy(mu.density, mu) == pytest.approx(0.0, abs=1e-12)
    v1, v2 = 0.15, 0.1
    exact = 0.5 * (v1 / v2 - 1 - math.log(v1 / v2))
    assert relative_entropy(_gauss(box6, v1), mu) == pytest.approx(exact, abs=1e-5)


def test_csiszar_kullback_random_densities(quad, box6):
    rng = np.random.default_rng(0)
    mu = gibbs_on_grid(quad, 0.2, box6)
    x = box6.axes[0]
    for _ in range(50):
        c, w, a = rng.normal(scale=0.5), rng.uniform(0.1, 0.5), rng.normal()
        rho = normalized(box6, mu.density * np.exp(a * np.exp(-((x - c) / w) ** 2)))
        assert relative_entropy(rho, mu) >= 0.5 * l1_distance(rho, mu) ** 2 - 1e-14


def test_stationarity_residual(quad, box6):
    mu = gibbs_on_grid(quad, 0.2, box6)
    peak = mu.density.max()
    r = stationarity_residual(quad, mu)
    assert r < 1e-4 * peak
    wrong = gibbs_on_grid(quad, 0.4, box6)
    assert stationarity_residual(quad, wrong, s=0.2) > 100 * r
    fine = gibbs_on_grid(quad, 0.2, box6.refined())
    assert r / stationarity_residual(quad, fine) == pytest.approx(4.0, rel=0.1)


def test_export_csv(tmp_path, quad):
    g = GridSpec.box(1, 5.0, 101)
    path = export_csv(gibbs_on_grid(quad, 0.5, g), tmp_path / "mu.csv")
    rows = open(path).read().splitlines()
    assert rows[0] == "x1,density" and len(rows) == 102
