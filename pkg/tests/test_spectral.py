import json
import math

import numpy as np
import pytest

from sgdlab.errors import ConfigurationError, PrecisionError, PreconditionError, TruncationError
from sgdlab.gibbs import GridSpec
from sgdlab.morse import analyze, barrier
from sgdlab.objective import MULTIWELL, catalog
from sgdlab.spectral import (assemble_witten, exp_law_fit, export_spectrum_json,
                             ground_state_check, lambda_ratio, low_lying_count,
                             schrodinger_potential, smallest_eigs, witten_grid, witten_spectrum)


@pytest.fixture
def box8():
    return GridSpec.box(1, 8.0, 2000)


def test_potential_closed_form():
    f = catalog("quadratic_1d", theta=2.0)
    x = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(schrodinger_potential(f, 0.3, x), 4 * x**2 / 0.3 - 2.0)


def test_potential_at_critical_point(dw, dw_roots):
    v = schrodinger_potential(dw, 0.2, dw_roots)
    np.testing.assert_allclose(v, -dw.laplacian(dw_roots[:, None]), atol=1e-12)


def test_potential_matches_fd_laplacian(dw):
    x, s, h = 2.0, 0.2, 1e-4
    fv = lambda t: float(dw.value(np.array([t])))
    lap = (fv(x + h) - 2 * fv(x) + fv(x - h)) / h**2
    grad = float(dw.gradient(np.array([x]))[0])
    assert float(np.ravel(schrodinger_potential(dw, s, x))[0]) == pytest.approx(
        grad**2 / s - lap, abs=1e-6)


def test_operator_structure(quad, box8):
    op = assemble_witten(quad, 0.1, box8)
    A = op.matrix.tocoo()
    assert np.all(np.abs(A.row - A.col) <= 1)
    assert op.asymmetry() <= 1e-12
    rng = np.random.default_rng(0)
    u = rng.normal(size=(100, op.n))
    assert np.min(np.einsum("ij,ij->i", u, (op.matrix @ u.T).T)) >= -1e-8


def test_null_vector_residual(quad, box8):
    op = assemble_witten(quad, 0.2, box8)
    phi = op.ground_state_samples()
    r = op.matrix @ phi
    h = box8.spacing[0]
    assert np.max(np.abs(r[1:-1])) <= 10 * h**2 * 0.2**2 * np.max(phi)


def test_truncated_box_rejected(quad):
    with pytest.raises(TruncationError):
        assemble_witten(quad, 0.5, GridSpec.box(1, 1.0, 200))


def test_harmonic_spectrum(quad, box8):
    s = 0.1
    spec = smallest_eigs(assemble_witten(quad, s, box8), 4)
    np.testing.assert_allclose(spec.eigenvalues, 2 * s * np.arange(4), atol=2e-3 * s)
    assert np.all(np.diff(spec.eigenvalues) > 0)
    np.testing.assert_allclose(spec.zeta * s, spec.eigenvalues)


def test_lambda_s_independent_of_s(quad, box8):
    lams = [witten_spectrum(quad, s, box8).lambda_s for s in (0.05, 0.1, 0.2)]
    for lam in lams:
        assert lam == pytest.approx(1.0, rel=0.02)
    assert max(lams) / min(lams) < 1.02


def test_dense_and_arpack_agree(quad, box8):
    op = assemble_witten(quad, 0.1, box8)
    d = smallest_eigs(op, 4, method="dense").eigenvalues
    a = smallest_eigs(op, 4, method="arpack").eigenvalues
    np.testing.assert_allclose(a[1:], d[1:], rtol=1e-8)


def test_quadratic_2d_gap():
    f = catalog("quadratic_2d_paper")
    spec = witten_spectrum(f, 0.1)
    assert spec.method == "arpack"
    assert spec.lambda_s == pytest.approx(0.05, rel=0.03)


def test_ground_state(quad, box8, dw):
    op = assemble_witten(quad, 0.2, box8)
    assert ground_state_check(op, smallest_eigs(op, 3, eigenvectors=True)) <= 1e-6
    defects = []
    for n in (500, 1000, 2000):
        g = witten_grid(dw, 0.2, n=n)
        op = assemble_witten(dw, 0.2, g)
        defects.append(ground_state_check(op, smallest_eigs(op, 3, eigenvectors=True)))
    assert defects[-1] <= 1e-4
    assert defects[0] > defects[1] > defects[2]
    with pytest.raises(ConfigurationError):
        ground_state_check(op, smallest_eigs(op, 3))


@pytest.mark.parametrize("name,scheme", [
    ("quadratic_1d", "fd"), ("double_well_tilted", "fd"), ("symmetric_double_well", "fd"),
    ("double_well_2d", "sqra"), ("multiwell_1d_generic", "sqra"), ("multiwell_1d_degenerate", "sqra"),
])
def test_clean_zero_mode(name, scheme):
    spec = witten_spectrum(catalog(name), 0.2, scheme=scheme)
    assert abs(spec.eigenvalues[0]) <= 1e-3 * spec.eigenvalues[1]


@pytest.mark.parametrize("name", MULTIWELL)
def test_low_lying_count_matches_minima(name):
    f = catalog(name)
    n_min = analyze(f, GridSpec.box(f.dimension, 3.0, 2001 if f.dimension == 1 else 201)).n_minima
    s = 0.1
    spec = witten_spectrum(f, s, k=n_min + 2, scheme="sqra")
    assert low_lying_count(spec, 0.5 * s) == n_min


def test_sqra_zero_mode_exact(quad, box8):
    op = assemble_witten(quad, 0.1, box8, scheme="sqra")
    phi = op.ground_state_samples()
    assert np.max(np.abs(op.matrix @ phi)) < 1e-12 * np.max(np.abs(op.matrix.diagonal()))
    spec = smallest_eigs(op, 3)
    assert spec.lambda_s == pytest.approx(1.0, rel=0.01)


def test_precision_floor_fd_stencil():
    # the stencil's O(h^2) zero-mode error swamps delta_1 here; the sqra variant resolves it
    f = catalog("multiwell_1d_generic")
    with pytest.raises(PrecisionError):
        witten_spectrum(f, 0.2)
    assert witten_spectrum(f, 0.2, scheme="sqra").eigenvalues[1] > 0


def test_precision_floor(dw):
    # at s = 0.01 delta_1 sits far below the round-off level of the zero mode
    with pytest.raises(PrecisionError):
        witten_spectrum(catalog("symmetric_double_well"), 0.01)


def test_exp_law_fit_shape(dw):
    fit = exp_law_fit(dw, [0.25, 0.2, 0.15, 0.12, 0.1])
    assert fit.slope < 0 and fit.r2 > 0.99
    assert len(fit.lambda_values) == 5
    with pytest.raises(PreconditionError):
        exp_law_fit(dw, [0.2, 0.1, 0.05])
    with pytest.raises(PreconditionError):
        exp_law_fit(catalog("quadratic_1d"), [0.4, 0.3, 0.2, 0.1])


def test_exp_law_fit_small_s_barrier(dw):
    # the asymptotic slope is only reached at small s; ten percent at s <= 0.05
    H = barrier(analyze(dw, GridSpec.box(1, 3.0, 2001)))
    fit = exp_law_fit(dw, [0.05, 0.04, 0.03, 0.025, 0.02])
    assert fit.barrier_estimate == pytest.approx(H, rel=0.10)


def test_lambda_ratio():
    assert lambda_ratio(0.05, 0.1, 0.001) == pytest.approx(9.889e42, rel=1e-3)
    assert lambda_ratio(0.05, 0.1, 0.001) == pytest.approx(math.exp(99))


def test_export(tmp_path, quad, box8):
    spec = witten_spectrum(quad, 0.1, box8)
    data = json.load(open(export_spectrum_json(spec, tmp_path / "spec.json")))
    assert set(data) == {"s", "delta", "lambda_s", "grid"}
    assert data["lambda_s"] == pytest.approx(spec.lambda_s)
