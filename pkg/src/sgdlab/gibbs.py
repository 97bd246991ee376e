"""Gibbs measures tabulated on truncated uniform grids.

Densities are stored as log-densities and every quadrature goes through a
shifted log-sum-exp, since ``exp(-2 f / s)`` underflows long before the
learning rates of interest get small.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .errors import (ConfigurationError, DomainError, TruncationError,
                     WeightedNormOverflowError)
from .objective import ScalarField

#: Default cap on the total number of grid nodes.
MAX_NODES = 4_000_000
#: Gibbs boundary criterion: exp(-2 (f - f_min) / s) below this at every boundary node.
BOUNDARY_MASS = 1e-12
#: Largest log-ratio accepted before a weighted norm is declared infinite.
LOG_RATIO_LIMIT = 700.0


@dataclass(frozen=True)
class GridSpec:
    lower: tuple
    upper: tuple
    n: tuple
    max_nodes: int = MAX_NODES

    def __post_init__(self):
        lo, hi, n = (tuple(np.atleast_1d(v).tolist()) for v in (self.lower, self.upper, self.n))
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))
        object.__setattr__(self, "n", tuple(int(v) for v in n))
        if not (len(self.lower) == len(self.upper) == len(self.n)) or len(self.n) not in (1, 2):
            raise ConfigurationError("grid must be 1D or 2D with matching bounds and counts")
        if any(a >= b for a, b in zip(self.lower, self.upper)):
            raise ConfigurationError("grid lower bounds must be below upper bounds")
        if any(k < 3 for k in self.n):
            raise ConfigurationError("grid needs at least 3 points per axis")
        if math.prod(self.n) > self.max_nodes:
            raise ConfigurationError(
                f"grid has {math.prod(self.n)} nodes, above the cap of {self.max_nodes}")

    @classmethod
    def box(cls, dimension, half_width, n, center=None):
        c = np.zeros(dimension) if center is None else np.broadcast_to(center, (dimension,))
        return cls(tuple(c - half_width), tuple(c + half_width), (n,) * dimension)

    @property
    def dimension(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def n_nodes(self):
        return math.prod(self.n)

    @property
    def spacing(self):
        return tuple((b - a) / (k - 1) for a, b, k in zip(self.lower, self.upper, self.n))

    @property
    def axes(self):
        return tuple(np.linspace(a, b, k) for a, b, k in zip(self.lower, self.upper, self.n))

    @cached_property
    def points(self):
        """Node coordinates, shape ``(*shape, d)`` in row-major order."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @cached_property
    def log_weights(self):
        """Log trapezoid weights on the node array."""
        logs = []
        for h, k in zip(self.spacing, self.n):
            w = np.full(k, h)
            w[[0, -1]] *= 0.5
            logs.append(np.log(w))
        out = logs[0]
        for extra in logs[1:]:
            out = out[:, None] + extra[None, :]
        return out

    @cached_property
    def boundary_mask(self):
        mask = np.zeros(self.n, dtype=bool)
        for ax in range(self.dimension):
            idx = [slice(None)] * self.dimension
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    def refined(self, factor=2):
        """Same box with the spacing divided by ``factor``."""
        return GridSpec(self.lower, self.upper,
                        tuple((k - 1) * factor + 1 for k in self.n), self.max_nodes)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper), "n": list(self.n)}


@dataclass(frozen=True)
class GridMeasure:
    grid: GridSpec
    log_density: np.ndarray
    log_Z: float
    s: float

    @property
    def Z_s(self):
        return math.exp(self.log_Z)

    @property
    def density(self):
        return np.exp(self.log_density)

    def integrate(self, values):
        """Integral of ``values * density`` over the grid."""
        return float(np.sum(np.exp(self.grid.log_weights + self.log_density) * values))

    def total_mass(self):
        return float(np.exp(logsumexp(self.grid.log_weights + self.log_density)))


def log_integral(grid: GridSpec, log_values):
    """``log`` of the trapezoid integral of ``exp(log_values)``."""
    return float(logsumexp(grid.log_weights + log_values))


def integral(grid: GridSpec, values):
    return float(np.sum(np.exp(grid.log_weights) * values))


def _field_values(field: ScalarField, grid: GridSpec):
    if field.dimension != grid.dimension:
        raise ConfigurationError(
            f"{field.name} is {field.dimension}D but the grid is {grid.dimension}D")
    return field.value(grid.points)


def _boundary_exponent(f, grid, temperature_factor, s):
    """Smallest ``factor * (f - f_min) / s`` over the boundary nodes."""
    return float(np.min(temperature_factor * (f[grid.boundary_mask] - f.min()) / s))


def gibbs_on_grid(field: ScalarField, s, grid: GridSpec) -> GridMeasure:
    """Tabulate ``mu_s`` proportional to ``exp(-2 f / s)`` on ``grid``."""
    if s <= 0:
        raise ConfigurationError("the Gibbs measure needs s > 0")
    f = _field_values(field, grid)
    if not np.all(np.isfinite(f)):
        raise DomainError(f"{field.name} is not finite on the grid")
    if _boundary_exponent(f, grid, 2.0, s) < -math.log(BOUNDARY_MASS):
        raise TruncationError(
            f"Gibbs mass at the boundary of the box {grid.lower}..{grid.upper} exceeds "
            f"{BOUNDARY_MASS:g} at s={s:g}; enlarge the box")
    log_unnorm = -2.0 * f / s
    log_Z = log_integral(grid, log_unnorm)
    return GridMeasure(grid, log_unnorm - log_Z, log_Z, float(s))


def default_grid(field: ScalarField, s, n=None, half_width=1.0, temperature_factor=2.0,
                 max_doublings=12, n_bisect=8) -> GridSpec:
    """Smallest symmetric box on which the boundary criterion holds.

    The half-width is doubled until the criterion holds and then bisected
    back towards the last failing width, which keeps the box (and hence the
    stiffness far out in the tails) as small as the certificate allows.
    ``temperature_factor`` is 2 for the Gibbs density and 1 for the ground
    state of the Witten Laplacian.
    """
    d = field.dimension
    if n is None:
        n = 2001 if d == 1 else 301
    threshold = -math.log(BOUNDARY_MASS if temperature_factor == 2.0 else 1e-10)

    def certified(w):
        grid = GridSpec.box(d, w, n)
        f = field.value(grid.points)
        ok = np.all(np.isfinite(f)) and _boundary_exponent(f, grid, temperature_factor, s) >= threshold
        return ok, grid

    lo = None
    for _ in range(max_doublings):
        ok, grid = certified(half_width)
        if ok:
            break
        lo = half_width
        half_width *= 2.0
    else:
        raise TruncationError(
            f"no box up to half-width {half_width:g} certifies {field.name} at s={s:g}")
    if lo is not None:
        hi = half_width
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            ok, trial = certified(mid)
            if ok:
                hi, grid = mid, trial
            else:
                lo = mid
    return grid


def refined_minimum(field: ScalarField, grid: GridSpec, n_newton=8):
    """Best grid node polished by damped Newton steps; returns ``(x_star, f_star)``."""
    f = _field_values(field, grid)
    flat = int(np.argmin(f))
    x = grid.points.reshape(-1, grid.dimension)[flat].copy()
    fx = float(f.reshape(-1)[flat])
    for _ in range(n_newton):
        g = field.gradient(x)
        H = field.hessian(x)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if g @ step <= 0:
            break
        t = 1.0
        while t > 1e-6:
            trial = x - t * step
            ft = float(field.value(trial))
            if ft <= fx:
                x, fx = trial, ft
                break
            t *= 0.5
        else:
            break
    return x, fx


def _excess(field, mu):
    f = _field_values(field, mu.grid)
    _, f_star = refined_minimum(field, mu.grid)
    return f - f_star


def epsilon_of_s(field: ScalarField, s, grid: GridSpec) -> float:
    """Excess risk at stationarity ``int (f - f*) d mu_s``."""
    mu = gibbs_on_grid(field, s, grid)
    return mu.integrate(_excess(field, mu))


def risk_second_moment(field: ScalarField, s, grid: GridSpec) -> float:
    """``(int (f - f*)^2 d mu_s)^(1/2)``, the constant multiplying the decay in the risk bound."""
    mu = gibbs_on_grid(field, s, grid)
    return math.sqrt(mu.integrate(_excess(field, mu) ** 2))


def epsilon_derivative(field: ScalarField, s, grid: GridSpec) -> float:
    """``d epsilon / ds = (2 / s^2) Var_mu_s(f - f*)``."""
    mu = gibbs_on_grid(field, s, grid)
    g = _excess(field, mu)
    mean = mu.integrate(g)
    return 2.0 / s**2 * mu.integrate((g - mean) ** 2)


def _log_of(rho, grid):
    """Log of a density given as a GridMeasure or as node values."""
    if isinstance(rho, GridMeasure):
        if rho.grid != grid:
            raise ConfigurationError("densities live on different grids")
        return rho.log_density
    rho = np.asarray(rho, dtype=float)
    if rho.shape != grid.shape:
        raise ConfigurationError(f"density shape {rho.shape} does not match grid {grid.shape}")
    if np.any(rho < 0):
        raise DomainError("density has negative nodes")
    with np.errstate(divide="ignore"):
        return np.log(rho)


def weighted_l2_distance(rho, mu: GridMeasure) -> float:
    """``(int (rho - mu)^2 / mu dx)^(1/2)``."""
    log_rho = _log_of(rho, mu.grid)
    log_ratio = log_rho - mu.log_density
    if np.any(log_ratio > LOG_RATIO_LIMIT):
        bad = np.unravel_index(int(np.argmax(log_ratio)), log_ratio.shape)
        raise WeightedNormOverflowError(
            f"rho/mu overflows at node {tuple(int(i) for i in bad)}; rho is not in L2(1/mu)")
    # mu (r - 1)^2 with r = rho/mu, summed in log space since r may reach e^700
    with np.errstate(divide="ignore"):
        log_gap = np.where(log_ratio > 0, log_ratio + np.log1p(-np.exp(-np.abs(log_ratio))),
                           np.log(-np.expm1(np.minimum(log_ratio, 0.0))))
    terms = mu.grid.log_weights + mu.log_density + 2.0 * log_gap
    if np.all(np.isneginf(terms)):
        return 0.0
    return math.exp(0.5 * float(logsumexp(terms)))


def chi_square_integral(rho, mu: GridMeasure) -> float:
    """``int rho^2 / mu dx``, equal to ``1 + weighted_l2_distance**2`` for normalised rho."""
    log_rho = _log_of(rho, mu.grid)
    return float(np.exp(logsumexp(mu.grid.log_weights + 2 * log_rho - mu.log_density)))


def cross_norm(field: ScalarField, s1, s2, grid: GridSpec) -> float:
    """``(int mu_s1^2 / mu_s2 dx - 1)^(1/2)`` for ``s1 >= s2``.

    The integrand is ``exp((2/s2 - 4/s1) f)`` up to constants, so it only decays
    at infinity when ``s1 < 2 s2``; otherwise the integral is infinite.
    """
    if not s1 >= s2 > 0:
        raise ConfigurationError("cross_norm needs s1 >= s2 > 0")
    mu1 = gibbs_on_grid(field, s1, grid)
    mu2 = gibbs_on_grid(field, s2, grid)
    log_integrand = 2 * mu1.log_density - mu2.log_density
    if 2.0 / s2 - 4.0 / s1 >= 0:
        raise WeightedNormOverflowError(
            f"int mu_s1^2/mu_s2 diverges for s1={s1:g}, s2={s2:g} (needs s1 < 2 s2)")
    edge = float(np.max(log_integrand[grid.boundary_mask]))
    if edge - float(np.max(log_integrand)) > math.log(BOUNDARY_MASS):
        raise TruncationError(
            f"mu_s1^2/mu_s2 is not negligible at the boundary for s1={s1:g}, s2={s2:g}; "
            "enlarge the box")
    value = math.exp(log_integral(grid, log_integrand))
    return math.sqrt(max(value - 1.0, 0.0))


def relative_entropy(rho, mu: GridMeasure) -> float:
    """``int rho log(rho / mu) dx`` with ``0 log 0 = 0``."""
    log_rho = _log_of(rho, mu.grid)
    pos = np.isfinite(log_rho)
    if np.any(pos & ~np.isfinite(mu.log_density)):
        raise DomainError("rho charges nodes where mu vanishes")
    terms = np.zeros(mu.grid.shape)
    terms[pos] = np.exp(log_rho[pos]) * (log_rho[pos] - mu.log_density[pos])
    return float(np.sum(np.exp(mu.grid.log_weights) * terms))


def l1_distance(rho, mu: GridMeasure) -> float:
    rho = np.exp(_log_of(rho, mu.grid))
    return integral(mu.grid, np.abs(rho - mu.density))


def _divergence_residual(field: ScalarField, s, density, grid: GridSpec):
    g = field.gradient(grid.points)
    out = np.zeros(tuple(k - 2 for k in grid.n))
    interior = tuple(slice(1, -1) for _ in grid.n)
    for ax, h in enumerate(grid.spacing):
        flux = density * g[..., ax]
        fwd = [slice(1, -1)] * grid.dimension
        bwd = [slice(1, -1)] * grid.dimension
        fwd[ax] = slice(2, None)
        bwd[ax] = slice(None, -2)
        fwd, bwd = tuple(fwd), tuple(bwd)
        out += (flux[fwd] - flux[bwd]) / (2 * h)
        out += 0.5 * s * (density[fwd] - 2 * density[interior] + density[bwd]) / h**2
    return out


def stationarity_residual(field: ScalarField, mu: GridMeasure, s=None) -> float:
    """Max over interior nodes of ``|div(mu grad f) + (s/2) lap mu|``.

    ``s`` defaults to the temperature of ``mu``; passing another value tests
    ``mu`` against a mismatched generator.
    """
    s = mu.s if s is None else s
    return float(np.max(np.abs(_divergence_residual(field, s, mu.density, mu.grid))))


def gaussian_density(grid: GridSpec, mean, var):
    """Isotropic normal density sampled on the grid nodes."""
    x = grid.points
    d = grid.dimension
    r2 = np.sum((x - np.broadcast_to(mean, (d,))) ** 2, axis=-1)
    return np.exp(-r2 / (2 * var)) / (2 * math.pi * var) ** (d / 2)


def normalized(grid: GridSpec, values):
    values = np.asarray(values, dtype=float)
    return values / integral(grid, values)


def export_csv(mu: GridMeasure, path):
    """Write node coordinates and density, one node per row."""
    pts = mu.grid.points.reshape(-1, mu.grid.dimension)
    dens = mu.density.reshape(-1)
    cols = [f"x{i + 1}" for i in range(mu.grid.dimension)] + ["density"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for p, v in zip(pts, dens):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v))])
    return path
