"""Analytic test objectives and numeric probes of their behaviour at infinity.

Every evaluator is vectorised over leading axes: ``value`` maps an array of
shape ``(..., d)`` to ``(...)``, ``gradient`` to ``(..., d)`` and ``hessian``
to ``(..., d, d)``.  Derivatives are hand-written closures so that they can
serve as an oracle independent of any differentiation machinery.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import logsumexp

from .errors import CatalogError, ConfigurationError, EvaluationError

Array = np.ndarray

#: Tail mass (normalised) beyond the outermost probe radius that still counts as confining.
TAIL_THRESHOLD = 1e-10


@dataclass(frozen=True)
class ScalarField:
    name: str
    dimension: int
    value: Callable[[Array], Array]
    gradient: Callable[[Array], Array]
    hessian: Callable[[Array], Array]
    lipschitz_L: Optional[float] = None
    strong_convexity_mu: Optional[float] = None
    #: Global minimum value when known in closed form (or by exact root finding).
    minimum_value: Optional[float] = None
    params: dict = dc_field(default_factory=dict)

    def laplacian(self, x):
        return np.trace(self.hessian(x), axis1=-2, axis2=-1)

    def as_points(self, x):
        """Coerce ``x`` to an array whose last axis has length ``dimension``."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dimension:
            raise ConfigurationError(
                f"{self.name}: expected points of dimension {self.dimension}, got shape {x.shape}"
            )
        return x


# --------------------------------------------------------------------------
# catalog construction helpers


def _poly_field(name, poly: Polynomial, **meta):
    d1 = poly.deriv(1)
    d2 = poly.deriv(2)

    def value(x):
        return poly(np.asarray(x, dtype=float)[..., 0])

    def gradient(x):
        return d1(np.asarray(x, dtype=float)[..., 0])[..., None]

    def hessian(x):
        return d2(np.asarray(x, dtype=float)[..., 0])[..., None, None]

    return ScalarField(name, 1, value, gradient, hessian, **meta)


def _separable_2d(name, p1: Polynomial, p2: Polynomial, **meta):
    d11, d12 = p1.deriv(1), p1.deriv(2)
    d21, d22 = p2.deriv(1), p2.deriv(2)

    def value(x):
        x = np.asarray(x, dtype=float)
        return p1(x[..., 0]) + p2(x[..., 1])

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.stack([d11(x[..., 0]), d21(x[..., 1])], axis=-1)

    def hessian(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = d12(x[..., 0])
        out[..., 1, 1] = d22(x[..., 1])
        return out

    return ScalarField(name, 2, value, gradient, hessian, **meta)


def _min_of_poly(poly: Polynomial) -> float:
    crit = poly.deriv().roots()
    crit = crit[np.abs(crit.imag) < 1e-9].real
    return float(np.min(poly(crit)))


def quadratic_1d(theta=1.0):
    theta = float(theta)
    if theta <= 0:
        raise ConfigurationError("quadratic_1d needs theta > 0")
    return _poly_field(
        "quadratic_1d",
        Polynomial([0.0, 0.0, theta / 2]),
        lipschitz_L=theta,
        strong_convexity_mu=theta,
        minimum_value=0.0,
        params={"theta": theta},
    )


def quadratic_2d_paper():
    # f = 5e-2 x1^2 + 2.5e-2 x2^2 with initial point (8, 8) in the optimizer comparison
    return _separable_2d(
        "quadratic_2d_paper",
        Polynomial([0.0, 0.0, 5e-2]),
        Polynomial([0.0, 0.0, 2.5e-2]),
        lipschitz_L=0.1,
        strong_convexity_mu=0.05,
        minimum_value=0.0,
    )


def nonconvex_2d_paper():
    # [(x1 + 0.7)^2 + 0.1](x1 - 0.7)^2 + (x2 + 0.7)^2[(x2 - 0.7)^2 + 0.1]
    p1 = (Polynomial.fromroots([-0.7, -0.7]) + 0.1) * Polynomial.fromroots([0.7, 0.7])
    p2 = Polynomial.fromroots([-0.7, -0.7]) * (Polynomial.fromroots([0.7, 0.7]) + 0.1)
    return _separable_2d("nonconvex_2d_paper", p1, p2, minimum_value=0.0)


def double_well_tilted():
    poly = Polynomial([0.0, 0.3, -0.5, 0.0, 0.25])
    return _poly_field("double_well_tilted", poly, minimum_value=_min_of_poly(poly))


def multiwell_1d_generic():
    # minima at -1.8, 0, 1.9 with distinct values; saddles at -0.9 and 1.0
    poly = (0.5 * Polynomial.fromroots([-1.8, -0.9, 0.0, 1.0, 1.9])).integ()
    return _poly_field("multiwell_1d_generic", poly, minimum_value=_min_of_poly(poly))


def multiwell_1d_degenerate():
    # x^6/12 - 5x^4/8 + x^2: minima at 0 and +-2, the outer pair sharing one value
    poly = Polynomial([0.0, 0.0, 1.0, 0.0, -5.0 / 8.0, 0.0, 1.0 / 12.0])
    return _poly_field("multiwell_1d_degenerate", poly, minimum_value=_min_of_poly(poly))


def symmetric_double_well():
    poly = Polynomial.fromroots([-1.0, -1.0, 1.0, 1.0]) / 4.0
    return _poly_field("symmetric_double_well", poly, minimum_value=0.0)


def double_well_2d():
    # x^4 - x^2 + y^2: separating index-1 saddle at the origin
    return _separable_2d(
        "double_well_2d",
        Polynomial([0.0, 0.0, -1.0, 0.0, 1.0]),
        Polynomial([0.0, 0.0, 1.0]),
        minimum_value=-0.25,
    )


def ring_1saddle(tilt=0.3):
    """Ring valley ``(|x|^2 - 1)^2 + tilt*y``.

    The top of the ring is an index-1 saddle whose two descent sides meet
    again at the bottom of the ring, so it is not separating.
    """
    tilt = float(tilt)

    def value(x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        return (r2 - 1.0) ** 2 + tilt * x[..., 1]

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        g = 4.0 * (r2 - 1.0)[..., None] * x
        g[..., 1] += tilt
        return g

    def hessian(x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        out = 8.0 * x[..., :, None] * x[..., None, :]
        out[..., 0, 0] += 4.0 * (r2 - 1.0)
        out[..., 1, 1] += 4.0 * (r2 - 1.0)
        return out

    # global minimum on the y-axis, root of 4(y^2 - 1)y + tilt = 0 below -1
    roots = np.roots([4.0, 0.0, -4.0, tilt]).real
    fmin = float(np.min((roots**2 - 1.0) ** 2 + tilt * roots))
    return ScalarField("ring_1saddle", 2, value, gradient, hessian,
                       minimum_value=fmin, params={"tilt": tilt})


_CATALOG = {
    "quadratic_1d": quadratic_1d,
    "quadratic_2d_paper": quadratic_2d_paper,
    "nonconvex_2d_paper": nonconvex_2d_paper,
    "double_well_tilted": double_well_tilted,
    "multiwell_1d_generic": multiwell_1d_generic,
    "multiwell_1d_degenerate": multiwell_1d_degenerate,
    "symmetric_double_well": symmetric_double_well,
    "double_well_2d": double_well_2d,
    "ring_1saddle": ring_1saddle,
}

#: Entries with two or more local minima.
MULTIWELL = (
    "nonconvex_2d_paper",
    "double_well_tilted",
    "multiwell_1d_generic",
    "multiwell_1d_degenerate",
    "symmetric_double_well",
    "double_well_2d",
)


def available():
    return sorted(_CATALOG)


def catalog(name: str, **params) -> ScalarField:
    """Return the catalog objective registered under ``name``."""
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise CatalogError(
            f"unknown objective {name!r}; available: {', '.join(available())}"
        ) from None
    return factory(**params)


# --------------------------------------------------------------------------
# finite-difference verification


def fd_step(x):
    eps = np.finfo(float).eps
    return eps ** (1.0 / 3.0) * np.maximum(1.0, np.linalg.norm(x, axis=-1))


def derivative_errors(field: ScalarField, n_probes=100, box=3.0, seed=0):
    """Max relative error of the analytic gradient and Hessian against central differences.

    Returns ``(grad_err, hess_err, hess_asym)``.  The relative error of a
    vector is ``|fd - exact| / max(1, |exact|)``.
    """
    rng = np.random.default_rng(seed)
    d = field.dimension
    pts = rng.uniform(-box, box, size=(n_probes, d))
    h = fd_step(pts)[:, None]
    eye = np.eye(d)

    grad = field.gradient(pts)
    fd_grad = np.empty_like(grad)
    hess = field.hessian(pts)
    fd_hess = np.empty_like(hess)
    for j in range(d):
        step = h * eye[j]
        fd_grad[:, j] = (field.value(pts + step) - field.value(pts - step)) / (2 * h[:, 0])
        fd_hess[:, :, j] = (field.gradient(pts + step) - field.gradient(pts - step)) / (2 * h)

    g_scale = np.maximum(1.0, np.linalg.norm(grad, axis=-1))
    h_scale = np.maximum(1.0, np.linalg.norm(hess, axis=(-2, -1)))
    grad_err = np.max(np.linalg.norm(fd_grad - grad, axis=-1) / g_scale)
    hess_err = np.max(np.linalg.norm(fd_hess - hess, axis=(-2, -1)) / h_scale)
    asym = np.max(np.abs(hess - np.swapaxes(hess, -1, -2)))
    return float(grad_err), float(hess_err), float(asym)


# --------------------------------------------------------------------------
# conditions at infinity


@dataclass(frozen=True)
class ConditionReport:
    confining_ok: bool
    villani_ok: bool
    probe_radii: list
    min_value_on_shells: list
    min_potential_on_shells: list
    integrability_tail: float


def shell_points(dimension, radius, n_angles=720):
    if dimension == 1:
        return np.array([[-radius], [radius]])
    if dimension == 2:
        theta = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
        return radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    raise ConfigurationError("shell probes are implemented for d <= 2 only")


def _checked(values, points, what):
    bad = ~np.isfinite(values)
    if np.any(bad):
        loc = points[np.argmax(bad)]
        raise EvaluationError(f"non-finite {what} at probe {loc.tolist()}", location=loc)
    return values


def _log_radial_mass(field, s, r_lo, r_hi, f_ref, n_r=4000, n_angles=720):
    """log of the integral of exp(-2(f - f_ref)/s) over r_lo <= |x| <= r_hi.

    Returns ``(log_mass, log_edge)`` where ``log_edge`` is the largest log-integrand
    on the outer edge, used to detect non-integrable growth.
    """
    r = np.linspace(r_lo, r_hi, n_r)
    dr = r[1] - r[0]
    w = np.full(n_r, dr)
    w[[0, -1]] *= 0.5
    if field.dimension == 1:
        pts = np.concatenate([-r[::-1], r])[:, None]
        lw = np.log(np.concatenate([w[::-1], w]))
        logf = -2.0 * (_checked(field.value(pts), pts, "objective") - f_ref) / s
        edge = max(logf[0], logf[-1])
        return logsumexp(logf + lw), edge
    theta = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
    vals = _checked(field.value(pts), pts, "objective")
    logf = -2.0 * (vals - f_ref) / s
    lw = np.log(w * np.maximum(r, 1e-300))[:, None] + np.log(2 * np.pi / n_angles)
    edge = np.max(logf[-1])
    return logsumexp(logf + lw), edge


def _probe(field: ScalarField, s: float, radii) -> ConditionReport:
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
        raise ConfigurationError("radii must be positive, strictly increasing, at least 3 entries")
    if s <= 0:
        raise ConfigurationError("s must be positive")

    min_vals, min_pot = [], []
    for r in radii:
        pts = shell_points(field.dimension, r)
        f = _checked(field.value(pts), pts, "objective")
        g = _checked(field.gradient(pts), pts, "gradient")
        lap = _checked(field.laplacian(pts), pts, "Laplacian")
        min_vals.append(float(np.min(f)))
        min_pot.append(float(np.min(np.sum(g * g, axis=-1) / s - lap)))

    confining_shells = all(b > a for a, b in zip(min_vals, min_vals[1:]))
    villani_ok = all(b > a for a, b in zip(min_pot, min_pot[1:])) and min_pot[-1] > 0

    # normalised tail mass of exp(-2f/s) beyond the outermost radius
    r_max = radii[-1]
    inner_pts = shell_points(field.dimension, 1.0)
    f_ref = min(min_vals[0], float(np.min(field.value(np.zeros((1, field.dimension))))))
    f_ref = min(f_ref, float(np.min(field.value(inner_pts * radii[0]))))
    log_inner, _ = _log_radial_mass(field, s, 0.0, r_max, f_ref)
    log_tail, log_edge = _log_radial_mass(field, s, r_max, 8.0 * r_max, f_ref)
    if log_edge > log_inner + np.log(1e-30):
        tail = np.inf
    else:
        tail = float(np.exp(log_tail - np.logaddexp(log_tail, log_inner)))
    confining_ok = bool(confining_shells and tail < TAIL_THRESHOLD)

    return ConditionReport(
        confining_ok=confining_ok,
        villani_ok=bool(villani_ok),
        probe_radii=radii,
        min_value_on_shells=min_vals,
        min_potential_on_shells=min_pot,
        integrability_tail=tail,
    )


def check_confining(field: ScalarField, s: float, radii) -> ConditionReport:
    """Probe growth of ``f`` on shells and integrability of ``exp(-2f/s)``."""
    return _probe(field, s, radii)


def check_villani(field: ScalarField, s: float, radii) -> ConditionReport:
    """Probe growth of ``|grad f|^2/s - lap f`` on shells."""
    return _probe(field, s, radii)
