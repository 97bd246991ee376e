"""Fokker-Planck evolution on a grid and numeric checks of the functional inequalities.

The spatial scheme is a finite-volume discretisation of the flux
``rho grad f + (s/2) grad rho = (s/2) mu grad(rho / mu)``.  The face value of
``mu`` is the geometric mean of its two neighbours, which makes the discrete
generator reversible with respect to the tabulated Gibbs density: ``mu_s`` is an
exact fixed point, mass is conserved to rounding, and the weighted distance
to ``mu_s`` can only shrink.  Cell volumes are the trapezoid weights, so the
conserved mass is exactly the quadrature used elsewhere.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, SchemeError
from .gibbs import (GridMeasure, GridSpec, gibbs_on_grid, integral, refined_minimum,
                    relative_entropy, weighted_l2_distance)
from .objective import ScalarField

#: Most negative node value (relative to the peak) tolerated before the scheme is declared broken.
NEGATIVITY_TOL = 1e-12
#: Floor applied to mu in log domain for h-transform computations.
LOG_MU_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class DensitySnapshot:
    time: float
    density: np.ndarray

    def mass(self, grid: GridSpec):
        return integral(grid, self.density)


@dataclass
class DecayFit:
    s: float
    times: list
    norms: list
    fitted_rate: float
    fit_r2: float
    reference_rate: float
    window: tuple
    inconclusive: bool
    epsilon: float = float("nan")
    #: amplitude D in the excess-risk fit eps + D exp(-lambda t)
    risk_amplitude: float = float("nan")
    #: (int (f - f*)^2 d mu_s)^(1/2)
    risk_scale: float = float("nan")

    def to_json(self):
        return {"s": self.s, "fitted_rate": self.fitted_rate,
                "reference_rate": self.reference_rate, "r2": self.fit_r2,
                "window": list(self.window)}


@dataclass
class StationarityTime:
    time: float
    censored: bool
    horizon: float
    epsilon: float


@dataclass
class MarginReport:
    """Per-function ``rhs - lhs`` of an inequality ``lhs <= rhs``."""
    name: str
    lhs: list
    rhs: list
    tolerance: float = 0.0

    @property
    def margins(self):
        return [r - l for l, r in zip(self.lhs, self.rhs)]

    @property
    def min_margin(self):
        return min(self.margins) if self.lhs else float("inf")

    @property
    def holds(self):
        return self.min_margin >= -self.tolerance


# --------------------------------------------------------------------------
# discretisation


def _as_density(rho, grid: GridSpec):
    if isinstance(rho, DensitySnapshot):
        rho = rho.density
    elif isinstance(rho, GridMeasure):
        if rho.grid != grid:
            raise ConfigurationError("initial density lives on a different grid")
        rho = rho.density
    rho = np.asarray(rho, dtype=float)
    if rho.shape != grid.shape:
        raise ConfigurationError(f"density shape {rho.shape} does not match grid {grid.shape}")
    return rho


def fp_generator(field: ScalarField, s, grid: GridSpec):
    """Sparse ``K`` and volumes ``V`` with ``V d(rho)/dt = K rho`` (flattened, row-major)."""
    f = field.value(grid.points)
    vol = np.exp(grid.log_weights)
    idx = np.arange(grid.n_nodes).reshape(grid.shape)
    rows, cols, vals = [], [], []
    diag = np.zeros(grid.n_nodes)
    for ax, h in enumerate(grid.spacing):
        lo = [slice(None)] * grid.dimension
        hi = [slice(None)] * grid.dimension
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        # face area: trapezoid weight of the transverse axes
        area = vol[lo] / _axis_weight(grid, ax)[lo]
        a = (0.5 * s / h) * area
        df = np.clip((f[hi] - f[lo]) / s, -700.0, 700.0)
        i, j = idx[lo].ravel(), idx[hi].ravel()
        a, df = a.ravel(), df.ravel()
        # inflow to i from j and to j from i
        rows += [i, j]
        cols += [j, i]
        vals += [a * np.exp(df), a * np.exp(-df)]
        np.add.at(diag, i, -a * np.exp(-df))
        np.add.at(diag, j, -a * np.exp(df))
    rows.append(np.arange(grid.n_nodes))
    cols.append(np.arange(grid.n_nodes))
    vals.append(diag)
    K = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(grid.n_nodes, grid.n_nodes))
    return K, vol.ravel()


def _axis_weight(grid: GridSpec, ax):
    h = grid.spacing[ax]
    w = np.full(grid.n[ax], h)
    w[[0, -1]] *= 0.5
    shape = [1] * grid.dimension
    shape[ax] = -1
    return np.broadcast_to(w.reshape(shape), grid.shape)


def max_stable_dt(field: ScalarField, s, grid: GridSpec):
    """Largest explicit step that keeps every node nonnegative."""
    K, vol = fp_generator(field, s, grid)
    return float(1.0 / np.max(-K.diagonal() / vol))


def _record_steps(times, dt, n_steps):
    if times is None:
        every = max(1, int(math.ceil(n_steps / 2000)))
        steps = set(range(0, n_steps + 1, every)) | {n_steps}
    else:
        steps = {int(round(t / dt)) for t in times}
        if any(k < 0 or k > n_steps for k in steps):
            raise ConfigurationError("snapshot times must lie in [0, T]")
    return steps


def fp_evolve(field: ScalarField, s, rho0, grid: GridSpec, dt, T, times=None,
              scheme="cn", n_startup=2):
    """Evolve ``d rho/dt = div(rho grad f) + (s/2) lap rho`` with no-flux walls.

    ``scheme`` is ``"cn"`` (Crank-Nicolson with ``n_startup`` steps replaced by
    pairs of backward-Euler half steps to damp rough initial data),
    ``"trbdf2"`` (L-stable, second order), ``"be"`` (backward Euler; first
    order but positivity preserving, the safe choice for discontinuous
    starts) or ``"explicit"`` (forward Euler, stability-checked).  ``dt`` is shrunk so
    that ``T`` is an integer number of steps; snapshots are taken at the
    steps nearest to ``times`` (every step, thinned to at most ~2000, by default).
    """
    if s <= 0 or dt <= 0 or T < 0:
        raise ConfigurationError("fp_evolve needs s > 0, dt > 0 and T >= 0")
    gibbs_on_grid(field, s, grid)  # certifies the box
    rho = _as_density(rho0, grid).ravel().copy()
    K, vol = fp_generator(field, s, grid)
    mass0 = float(vol @ rho)
    if abs(mass0 - 1.0) > 1e-6:
        raise ConfigurationError(f"initial density has mass {mass0:.8g}, expected 1")

    n_steps = max(1, int(math.ceil(T / dt - 1e-9))) if T > 0 else 0
    dt = T / n_steps if n_steps else dt
    record = _record_steps(times, dt, n_steps)
    V = sp.diags(vol)

    if scheme == "explicit":
        dt_max = float(1.0 / np.max(-K.diagonal() / vol))
        if dt > dt_max:
            raise ConfigurationError(f"explicit step dt={dt:g} is unstable; max stable dt={dt_max:g}")
        advance = lambda r, k: r + dt * (K @ r) / vol
    elif scheme == "cn":
        cn_lhs = splu((V - 0.5 * dt * K).tocsc())
        cn_rhs = (V + 0.5 * dt * K).tocsr()

        def advance(r, k):
            if k < n_startup:
                # backward Euler with dt/2 shares the Crank-Nicolson matrix
                r = cn_lhs.solve(vol * r)
                return cn_lhs.solve(vol * r)
            return cn_lhs.solve(cn_rhs @ r)
    elif scheme == "be":
        be_lhs = splu((V - dt * K).tocsc())
        advance = lambda r, k: be_lhs.solve(vol * r)
    elif scheme == "trbdf2":
        g = 2.0 - math.sqrt(2.0)
        tr_lhs = splu((V - 0.5 * g * dt * K).tocsc())
        tr_rhs = (V + 0.5 * g * dt * K).tocsr()
        bdf_lhs = splu((V - (1 - g) / (2 - g) * dt * K).tocsc())
        c1, c2 = 1.0 / (g * (2 - g)), (1 - g) ** 2 / (g * (2 - g))

        def advance(r, k):
            mid = tr_lhs.solve(tr_rhs @ r)
            return bdf_lhs.solve(vol * (c1 * mid - c2 * r))
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")

    out = []
    if 0 in record:
        out.append(DensitySnapshot(0.0, rho.reshape(grid.shape).copy()))
    for k in range(n_steps):
        rho = advance(rho, k)
        peak = float(np.max(rho))
        if not np.all(np.isfinite(rho)):
            raise SchemeError(f"non-finite density at step {k + 1}")
        if float(np.min(rho)) < -NEGATIVITY_TOL * max(peak, 1.0):
            raise SchemeError(
                f"density went negative ({float(np.min(rho)):.3g}) at t={(k + 1) * dt:g}")
        if k + 1 in record:
            out.append(DensitySnapshot((k + 1) * dt, rho.reshape(grid.shape).copy()))
    return out


def ou_closed_form(theta, s, x0, t, grid: GridSpec, var0=0.0) -> DensitySnapshot:
    """Density at time ``t`` of the OU flow for ``f = theta x^2 / 2`` started at ``N(x0, var0)``.

    With ``var0 = 0`` this is the transition density from the point ``x0``.
    """
    if t <= 0 and var0 <= 0:
        raise ConfigurationError("ou_closed_form needs t > 0 for a point start")
    if grid.dimension != 1:
        raise ConfigurationError("ou_closed_form is one-dimensional")
    decay = math.exp(-theta * t)
    mean = x0 * decay
    var = var0 * decay**2 + (s / (2 * theta)) * (1 - decay**2)
    x = grid.points[..., 0]
    dens = np.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
    return DensitySnapshot(float(t), dens)


# --------------------------------------------------------------------------
# decay rates and stationarity times


def _mean_of(grid, density, values):
    return integral(grid, density * values)


def decay_fit(field: ScalarField, s, rho0, grid: GridSpec, dt, T, lambda_ref,
              window_start=None, noise_floor=1e-14, snapshots=None) -> DecayFit:
    """Fit the late-time exponential decay of ``||rho_t - mu_s||^2_{1/mu_s}``.

    The fit window starts at ``window_start`` (default ``T / 3``) and ends at
    the last snapshot whose squared norm is above ``noise_floor`` times the
    initial one.  Fewer than five points in the window flags the fit as
    inconclusive.  The excess-risk curve is fitted to ``eps + D exp(-lambda_ref t)``.
    """
    mu = gibbs_on_grid(field, s, grid)
    if snapshots is None:
        snapshots = fp_evolve(field, s, rho0, grid, dt, T)
    times = np.array([sn.time for sn in snapshots])
    norms = np.array([weighted_l2_distance(np.maximum(sn.density, 0.0), mu) ** 2
                      for sn in snapshots])

    start = T / 3 if window_start is None else window_start
    n0 = norms[0]
    mask = times >= start
    if n0 > 1e-24:
        mask &= norms > noise_floor * n0
    else:
        mask[:] = False
    rate, r2, window, inconclusive = float("nan"), float("nan"), (float(start), float(T)), True
    if mask.sum() >= 5:
        tt, yy = times[mask], np.log(norms[mask])
        slope, icpt = np.polyfit(tt, yy, 1)
        resid = yy - (slope * tt + icpt)
        ss_tot = float(np.sum((yy - yy.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else float("nan")
        rate = -float(slope)
        window = (float(tt[0]), float(tt[-1]))
        inconclusive = False

    f = field.value(grid.points)
    _, f_star = refined_minimum(field, grid)
    eps = mu.integrate(f - f_star)
    risk = np.array([_mean_of(grid, sn.density, f - f_star) for sn in snapshots])
    basis = np.exp(-lambda_ref * times)
    denom = float(basis @ basis)
    D = float(basis @ (risk - eps)) / denom if denom > 0 else float("nan")
    C = math.sqrt(mu.integrate((f - f_star) ** 2))
    return DecayFit(float(s), times.tolist(), norms.tolist(), rate, r2, 2.0 * lambda_ref,
                    window, inconclusive, eps, D, C)


def time_to_stationarity(field: ScalarField, s, rho0, grid: GridSpec, delta, dt=0.01, T=50.0,
                         snapshots=None, scheme="cn") -> StationarityTime:
    """First snapshot time with ``|E f(X_t) - E f(X_inf)| <= delta * eps(s)``."""
    if not 0 < delta < 1:
        raise ConfigurationError("delta must lie in (0, 1)")
    mu = gibbs_on_grid(field, s, grid)
    f = field.value(grid.points)
    _, f_star = refined_minimum(field, grid)
    eps = mu.integrate(f - f_star)
    if eps <= 0:
        raise ConfigurationError("time_to_stationarity needs eps(s) > 0")
    target = mu.integrate(f)
    if snapshots is None:
        snapshots = fp_evolve(field, s, rho0, grid, dt, T, scheme=scheme)
    for sn in snapshots:
        if abs(_mean_of(grid, sn.density, f) - target) <= delta * eps:
            return StationarityTime(sn.time, False, float(T), eps)
    return StationarityTime(float("inf"), True, float(T), eps)


# --------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    name: str
    value: Callable
    gradient: Callable
    hessian: Optional[Callable] = None

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class BumpSum:
    """``sum_k a_k exp(-|x - c_k|^2 / (2 w_k^2))``."""
    amplitudes: np.ndarray
    centers: np.ndarray
    widths: np.ndarray

    def value(self, x):
        d2 = np.sum((x[..., None, :] - self.centers) ** 2, axis=-1)
        return np.sum(self.amplitudes * np.exp(-d2 / (2 * self.widths**2)), axis=-1)

    def gradient(self, x):
        diff = x[..., None, :] - self.centers
        d2 = np.sum(diff**2, axis=-1)
        coef = -self.amplitudes * np.exp(-d2 / (2 * self.widths**2)) / self.widths**2
        return np.sum(coef[..., None] * diff, axis=-2)

    def hessian(self, x):
        diff = x[..., None, :] - self.centers
        d2 = np.sum(diff**2, axis=-1)
        w2 = self.widths**2
        e = self.amplitudes * np.exp(-d2 / (2 * w2)) / w2
        d = x.shape[-1]
        outer = diff[..., :, None] * diff[..., None, :] / w2[:, None, None]
        return np.sum(e[..., None, None] * (outer - np.eye(d)), axis=-3)

    def as_test_function(self, name="bump"):
        return TestFunction(name, self.value, self.gradient, self.hessian)


def random_bumps(dimension, n_functions, lower, upper, seed=0, n_terms=3,
                 width_range=(0.15, 0.6)):
    """Random bump sums with centres in ``[lower, upper]^d`` (per-axis bounds allowed)."""
    rng = np.random.default_rng(seed)
    lower = np.broadcast_to(np.asarray(lower, float), (dimension,))
    upper = np.broadcast_to(np.asarray(upper, float), (dimension,))
    out = []
    for i in range(n_functions):
        b = BumpSum(rng.normal(size=n_terms),
                    rng.uniform(lower, upper, size=(n_terms, dimension)),
                    rng.uniform(*width_range, size=n_terms))
        out.append(b.as_test_function(f"bump{i}"))
    return out


def linear_function(coef):
    coef = np.asarray(coef, dtype=float)
    d = coef.size
    return TestFunction("linear", lambda x: x @ coef,
                        lambda x: np.broadcast_to(coef, np.shape(x)[:-1] + (d,)),
                        lambda x: np.zeros(np.shape(x)[:-1] + (d, d)))


def quadratic_function(A, b=None):
    """``x^T A x / 2 + b^T x`` with symmetric ``A``."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    return TestFunction("quadratic",
                        lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, A, x) + x @ b,
                        lambda x: x @ A + b,
                        lambda x: np.broadcast_to(A, np.shape(x)[:-1] + A.shape))


def random_quadratics(dimension, n_functions, seed=0):
    rng = np.random.default_rng(seed)
    return [quadratic_function(rng.normal(size=(dimension, dimension)), rng.normal(size=dimension))
            for _ in range(n_functions)]


# --------------------------------------------------------------------------
# functional inequalities


def _centered(mu: GridMeasure, h):
    pts = mu.grid.points
    v = h.value(pts)
    return v - mu.integrate(v), h.gradient(pts)


def key_inequality_check(field: ScalarField, s, test_fns, grid: GridSpec, tolerance=1e-10):
    """``int V_s h^2 d mu_s <= s int |grad h|^2 d mu_s`` for mean-centred ``h``."""
    mu = gibbs_on_grid(field, s, grid)
    pts = grid.points
    V = np.sum(field.gradient(pts) ** 2, axis=-1) / s - field.laplacian(pts)
    lhs, rhs = [], []
    for h in test_fns:
        v, g = _centered(mu, h)
        lhs.append(mu.integrate(V * v**2))
        rhs.append(s * mu.integrate(np.sum(g**2, axis=-1)))
    return MarginReport("key_inequality", lhs, rhs, tolerance)


def poincare_check(field: ScalarField, s, lambda_s, test_fns, grid: GridSpec, tolerance=1e-6):
    """``Var_mu_s(h) <= (s / (2 lambda_s)) int |grad h|^2 d mu_s``."""
    mu = gibbs_on_grid(field, s, grid)
    lhs, rhs = [], []
    for h in test_fns:
        v, g = _centered(mu, h)
        lhs.append(mu.integrate(v**2))
        rhs.append(s / (2 * lambda_s) * mu.integrate(np.sum(g**2, axis=-1)))
    return MarginReport("poincare", lhs, rhs, tolerance)


@dataclass
class GammaReport:
    name: str
    gamma: np.ndarray
    gamma2: np.ndarray
    min_margin: Optional[float]
    asserted: bool

    @property
    def holds(self):
        return (not self.asserted) or self.min_margin >= -1e-10


def gamma_calculus_check(field: ScalarField, s, g_fns, grid: GridSpec):
    """Nodewise ``Gamma(g,g)`` and ``Gamma_2(g,g)`` and the margin ``Gamma_2 - mu Gamma``.

    The margin is only asserted when the field declares a strong-convexity constant.
    """
    pts = grid.points
    H = field.hessian(pts)
    mu_c = field.strong_convexity_mu
    out = []
    for g in g_fns:
        dg = g.gradient(pts)
        Hg = g.hessian(pts)
        gamma = 0.5 * s * np.sum(dg**2, axis=-1)
        gamma2 = (0.5 * s * np.einsum("...i,...ij,...j->...", dg, H, dg)
                  + 0.25 * s**2 * np.einsum("...ij,...ij->...", Hg, Hg))
        margin = float(np.min(gamma2 - mu_c * gamma)) if mu_c is not None else None
        if margin is None:
            margin = float(np.min(gamma2 - _min_hessian_eig(H) * gamma))
        out.append(GammaReport(g.name, gamma, gamma2, margin, mu_c is not None))
    return out


def _min_hessian_eig(H):
    return np.linalg.eigvalsh(H)[..., 0]


def _grid_gradient(values, grid: GridSpec):
    grads = np.gradient(values, *grid.spacing, edge_order=2)
    if grid.dimension == 1:
        grads = [grads]
    return np.stack(grads, axis=-1)


@dataclass
class EntropyDecayReport:
    times: list
    entropy: list
    l1: list
    ck_margins: list
    decay_margins: list
    lsi_margins: list
    fitted_rate: float
    tolerance: float

    @property
    def ck_holds(self):
        return min(self.ck_margins) >= -self.tolerance

    @property
    def decay_holds(self):
        return min(self.decay_margins) >= -self.tolerance

    @property
    def lsi_holds(self):
        return min(self.lsi_margins) >= -self.tolerance

    @property
    def holds(self):
        return self.ck_holds and self.decay_holds and self.lsi_holds


def log_sobolev_margin(mu: GridMeasure, h_values, mu_const):
    """``(s/mu) int |grad h|^2 d mu_s - Ent[h^2]`` with ``grad h`` by finite differences."""
    h2 = h_values**2
    m = mu.integrate(h2)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(h2 > 0, h2 * np.log(np.where(h2 > 0, h2, 1.0)), 0.0)
    ent = mu.integrate(plogp) - (m * math.log(m) if m > 0 else 0.0)
    grad = _grid_gradient(h_values, mu.grid)
    dirichlet = mu.integrate(np.sum(grad**2, axis=-1))
    return mu.s / mu_const * dirichlet - ent


def entropy_decay_check(field: ScalarField, s, rho0, grid: GridSpec, dt, T, tolerance=1e-8,
                        snapshots=None) -> EntropyDecayReport:
    """Csiszar-Kullback, entropy decay ``e^{-2 mu t}`` and log-Sobolev along an evolution."""
    mu_c = field.strong_convexity_mu
    if mu_c is None:
        raise ConfigurationError("entropy_decay_check needs a declared strong-convexity constant")
    mu = gibbs_on_grid(field, s, grid)
    if snapshots is None:
        snapshots = fp_evolve(field, s, rho0, grid, dt, T)
    log_mu = np.maximum(mu.log_density, LOG_MU_FLOOR)
    times, ents, l1s, ck, dec, lsi = [], [], [], [], [], []
    H0 = None
    for sn in snapshots:
        rho = np.maximum(sn.density, 0.0)
        H = relative_entropy(rho, mu)
        if H0 is None:
            H0 = H
        l1 = integral(grid, np.abs(rho - mu.density))
        h = np.sqrt(rho * np.exp(-log_mu))
        times.append(sn.time)
        ents.append(H)
        l1s.append(l1)
        ck.append(2 * H - l1**2)
        dec.append(math.exp(-2 * mu_c * sn.time) * H0 - H)
        lsi.append(log_sobolev_margin(mu, h, mu_c))
    t, e = np.array(times), np.array(ents)
    keep = e > 1e-13 * max(e[0], 1e-300)
    rate = float(-np.polyfit(t[keep], np.log(e[keep]), 1)[0]) if keep.sum() >= 3 else float("nan")
    return EntropyDecayReport(times, ents, l1s, ck, dec, lsi, rate, tolerance)


def dissipation_check(field: ScalarField, s, snapshots, grid: GridSpec):
    """Compare ``d/dt ||rho - mu||^2`` (centred differences) with ``-s int |grad h|^2 d mu``.

    Returns ``(lhs, rhs)`` arrays at the interior snapshots, ``h = rho / mu``.
    """
    mu = gibbs_on_grid(field, s, grid)
    norms = np.array([weighted_l2_distance(np.maximum(sn.density, 0.0), mu) ** 2
                      for sn in snapshots])
    times = np.array([sn.time for sn in snapshots])
    lhs = (norms[2:] - norms[:-2]) / (times[2:] - times[:-2])
    rhs = []
    for sn in snapshots[1:-1]:
        h = sn.density * np.exp(-np.maximum(mu.log_density, LOG_MU_FLOOR))
        grad = _grid_gradient(h, grid)
        rhs.append(-s * mu.integrate(np.sum(grad**2, axis=-1)))
    return lhs, np.array(rhs)


# --------------------------------------------------------------------------
# export


def export_snapshots_csv(snapshots, grid: GridSpec, path):
    """Long-format CSV: time, node index, coordinates, density."""
    pts = grid.points.reshape(-1, grid.dimension)
    cols = ["time", "node"] + [f"x{i + 1}" for i in range(grid.dimension)] + ["density"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for sn in snapshots:
            for i, (p, v) in enumerate(zip(pts, sn.density.reshape(-1))):
                w.writerow([repr(sn.time), i] + [repr(float(c)) for c in p] + [repr(float(v))])
    return path


def export_decay_json(fit: DecayFit, path):
    with open(path, "w") as fh:
        json.dump(fit.to_json(), fh, indent=2, sort_keys=True)
    return path
