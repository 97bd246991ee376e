import math

import numpy as np
import pytest

from sgdlab.errors import CatalogError, ConfigurationError, EvaluationError
from sgdlab.objective import (MULTIWELL, ScalarField, available, catalog, check_confining,
                              check_villani, derivative_errors)


def _field(name, value, grad, hess, d=1):
    return ScalarField(name, d, value, grad, hess)


def linear_1d():
    return _field("linear", lambda x: x[..., 0], lambda x: np.ones_like(x),
                  lambda x: np.zeros(x.shape + (1,)))


def constant_1d():
    return _field("constant", lambda x: np.zeros(x.shape[:-1]), lambda x: np.zeros_like(x),
                  lambda x: np.zeros(x.shape + (1,)))


@pytest.mark.parametrize("name", available())
def test_derivatives_match_finite_differences(name):
    g, h, asym = derivative_errors(catalog(name), n_probes=100, box=3.0, seed=1)
    assert g < 1e-6 and h < 1e-6
    assert asym == 0.0


def test_quadratic_2d_paper_coefficients():
    f = catalog("quadratic_2d_paper")
    x = np.array([[8.0, 8.0], [1.0, -2.0]])
    np.testing.assert_allclose(f.value(x), 5e-2 * x[:, 0] ** 2 + 2.5e-2 * x[:, 1] ** 2)
    assert f.lipschitz_L == pytest.approx(0.1)
    assert f.strong_convexity_mu == pytest.approx(0.05)


def test_double_well_critical_points(dw, dw_roots):
    np.testing.assert_allclose(dw_roots, [-1.125, 0.337, 0.788], atol=2e-3)
    np.testing.assert_allclose(dw.gradient(dw_roots[:, None])[:, 0], 0.0, atol=1e-12)
    assert dw.minimum_value == pytest.approx(float(dw.value(np.array([dw_roots[0]]))))


def test_nonconvex_2d_global_minimum_bottom_right():
    f = catalog("nonconvex_2d_paper")
    corners = np.array([[0.7, -0.7], [-0.7, 0.7], [0.7, 0.7], [-0.7, -0.7]])
    vals = f.value(corners)
    assert np.argmin(vals) == 0
    assert vals[0] == pytest.approx(0.0, abs=1e-14)
    assert np.all(vals[1:] > 0)


def test_catalog_unknown_name_lists_choices():
    with pytest.raises(CatalogError, match="quadratic_1d"):
        catalog("no_such_field")


def test_catalog_parameters_validated():
    assert catalog("quadratic_1d", theta=3.0).strong_convexity_mu == 3.0
    with pytest.raises(ConfigurationError):
        catalog("quadratic_1d", theta=-1.0)


def test_multiwell_entries_are_in_catalog():
    assert set(MULTIWELL) <= set(available())


def test_vectorized_and_scalar_shapes(quad):
    x = np.linspace(-1, 1, 5)[:, None]
    assert quad.value(x).shape == (5,)
    assert quad.gradient(x).shape == (5, 1)
    assert quad.hessian(x).shape == (5, 1, 1)
    assert quad.as_points(0.5).shape == (1,)


def test_confining_quadratic_2d():
    rep = check_confining(catalog("quadratic_2d_paper"), 0.1, [2, 4, 8, 16])
    assert rep.confining_ok


def test_linear_is_not_confining():
    assert not check_confining(linear_1d(), 0.1, [2, 4, 8]).confining_ok


def test_tilted_double_well_confining(dw):
    rep = check_confining(dw, 0.2, [2, 4, 8])
    assert rep.confining_ok
    assert rep.integrability_tail < 1e-10


def test_villani_quadratic_and_constant(quad):
    rep = check_villani(quad, 0.1, [2, 4, 8])
    assert rep.villani_ok
    # V_s = x^2/s - 1 on the shells
    np.testing.assert_allclose(rep.min_potential_on_shells, [4 / 0.1 - 1, 16 / 0.1 - 1, 64 / 0.1 - 1])
    assert not check_villani(constant_1d(), 0.1, [2, 4, 8]).villani_ok


def test_villani_nonconvex_2d():
    assert check_villani(catalog("nonconvex_2d_paper"), 0.1, [2, 4, 8]).villani_ok


def test_radii_must_increase(quad):
    with pytest.raises(ConfigurationError):
        check_confining(quad, 0.1, [4, 2, 8])


def test_nonfinite_objective_reported_with_location():
    bad = _field("bad", lambda x: np.where(np.abs(x[..., 0]) > 3, np.nan, x[..., 0] ** 2),
                 lambda x: 2 * x, lambda x: 2 * np.ones(x.shape + (1,)))
    with pytest.raises(EvaluationError) as info:
        check_confining(bad, 0.1, [2, 4, 8])
    assert info.value.location is not None
    assert math.isclose(abs(float(np.ravel(info.value.location)[0])), 4.0)
