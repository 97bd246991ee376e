"""Finite-difference Witten Laplacian and its low spectrum.

The operator ``-s^2 lap + |grad f|^2 - s lap f`` is assembled with the 3-point
(1D) or 5-point (2D) Laplacian and homogeneous Dirichlet data on a box that is
certified large enough for the ground state ``exp(-f/s)`` to be negligible at
the walls.  Up to ``DENSE_LIMIT`` nodes the spectrum comes from a dense
symmetric eigensolve; above that from ARPACK shift-invert Lanczos.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import (ConfigurationError, PrecisionError, PreconditionError, SolverError,
                     TruncationError)
from .gibbs import GridSpec, default_grid, refined_minimum
from .objective import ScalarField

#: Ground-state boundary criterion: exp(-(f - f_min)/s) below this on the boundary.
GROUND_BOUNDARY = 1e-10
#: Node count up to which the dense eigensolver is used.
DENSE_LIMIT = 2000
#: Smallest delta_1 the solver will report.
DELTA_FLOOR = 1e-250


def schrodinger_potential(field: ScalarField, s, x):
    """``V_s(x) = |grad f(x)|^2 / s - lap f(x)``."""
    x = field.as_points(x)
    return np.sum(field.gradient(x) ** 2, axis=-1) / s - field.laplacian(x)


@dataclass(frozen=True)
class WittenOperator:
    grid: GridSpec
    s: float
    matrix: sp.csr_matrix
    potential_values: np.ndarray
    f_values: np.ndarray

    @property
    def n(self):
        return self.grid.n_nodes

    def ground_state_samples(self):
        """Normalised samples of ``exp(-f/s)`` as a flat vector."""
        v = np.exp(-(self.f_values - self.f_values.min()) / self.s).ravel()
        return v / np.linalg.norm(v)

    def asymmetry(self):
        A = self.matrix
        diff = abs(A - A.T)
        return float(diff.max()) / float(abs(A).max()) if diff.nnz else 0.0


def _laplacian_1d(n, h):
    main = np.full(n, -2.0 / h**2)
    off = np.full(n - 1, 1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def _sqra_matrix(f, s, grid: GridSpec):
    """Ground-state preserving discretisation with no-flux walls.

    Off-diagonals are the usual ``-s^2 / h^2``; the diagonal is
    ``(s^2/h^2) sum_j exp((f_i - f_j)/s)`` over grid neighbours, which agrees
    with ``s^2 * 2/h^2 + |grad f|^2 - s lap f`` to second order and makes the
    sampled ``exp(-f/s)`` an exact null vector.
    """
    idx = np.arange(grid.n_nodes).reshape(grid.shape)
    rows, cols, vals = [], [], []
    diag = np.zeros(grid.n_nodes)
    for ax, h in enumerate(grid.spacing):
        lo = [slice(None)] * grid.dimension
        hi = [slice(None)] * grid.dimension
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        i, j = idx[tuple(lo)].ravel(), idx[tuple(hi)].ravel()
        df = np.clip((f[tuple(hi)] - f[tuple(lo)]).ravel() / s, -700.0, 700.0)
        c = s**2 / h**2
        rows += [i, j]
        cols += [j, i]
        vals += [np.full(i.size, -c), np.full(i.size, -c)]
        np.add.at(diag, i, c * np.exp(-df))
        np.add.at(diag, j, c * np.exp(df))
    rows.append(np.arange(grid.n_nodes))
    cols.append(np.arange(grid.n_nodes))
    vals.append(diag)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(grid.n_nodes, grid.n_nodes))


def assemble_witten(field: ScalarField, s, grid: GridSpec, scheme="fd") -> WittenOperator:
    """Witten Laplacian on ``grid`` (row-major node order).

    ``scheme="fd"`` is ``-s^2 lap_h + diag(|grad f|^2 - s lap f)`` with
    homogeneous Dirichlet data.  ``scheme="sqra"`` is the ground-state
    preserving variant (see :func:`_sqra_matrix`), whose zero mode is exact;
    use it when the small eigenvalues fall below the ``O(h^2)`` error that the
    plain stencil makes in the zero mode.
    """
    if s <= 0:
        raise ConfigurationError("the Witten Laplacian needs s > 0")
    if field.dimension != grid.dimension:
        raise ConfigurationError(f"{field.name} is {field.dimension}D but the grid is {grid.dimension}D")
    pts = grid.points
    f = field.value(pts)
    edge = float(np.min(f[grid.boundary_mask] - f.min())) / s
    if edge < -math.log(GROUND_BOUNDARY):
        raise TruncationError(
            f"ground state exp(-f/s) exceeds {GROUND_BOUNDARY:g} on the boundary of "
            f"{grid.lower}..{grid.upper} at s={s:g}; use a larger box")
    V = np.sum(field.gradient(pts) ** 2, axis=-1) / s - field.laplacian(pts)
    if scheme == "sqra":
        return WittenOperator(grid, float(s), _sqra_matrix(f, s, grid), V, f)
    if scheme != "fd":
        raise ConfigurationError(f"unknown discretisation {scheme!r}")
    if grid.dimension == 1:
        lap = _laplacian_1d(grid.n[0], grid.spacing[0])
    else:
        (nx, ny), (hx, hy) = grid.n, grid.spacing
        lap = (sp.kron(_laplacian_1d(nx, hx), sp.identity(ny))
               + sp.kron(sp.identity(nx), _laplacian_1d(ny, hy)))
    A = (-s**2) * lap + sp.diags(s * V.ravel())
    return WittenOperator(grid, float(s), A.tocsr(), V, f)


@dataclass
class Spectrum:
    s: float
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    method: str
    grid: Optional[GridSpec] = None

    @property
    def lambda_s(self):
        return float(self.eigenvalues[1] / (2 * self.s))

    @property
    def zeta(self):
        return self.eigenvalues / self.s

    def to_json(self):
        return {"s": self.s, "delta": [float(v) for v in self.eigenvalues],
                "lambda_s": self.lambda_s,
                "grid": self.grid.to_dict() if self.grid is not None else None}


def smallest_eigs(op: WittenOperator, k=4, eigenvectors=False, method="auto",
                  maxiter=None, tol=0.0) -> Spectrum:
    """The ``k`` smallest eigenvalues ``delta_{s,0..k-1}`` of the operator.

    ``method`` is ``"dense"``, ``"arpack"`` or ``"auto"`` (dense up to
    ``DENSE_LIMIT`` nodes).  A ``delta_1`` below ``DELTA_FLOOR`` or within a
    factor 100 of ``|delta_0|`` raises a precision error.
    """
    n = op.n
    if k < 2 or k >= n:
        raise ConfigurationError("need 2 <= k < node count")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "arpack"
    A = op.matrix
    if method == "dense":
        if op.grid.dimension == 1:
            vals, vecs = eigh_tridiagonal(A.diagonal(), A.diagonal(1), select="i",
                                          select_range=(0, k - 1))
        else:
            vals, vecs = eigh(A.toarray(), subset_by_index=(0, k - 1))
    elif method == "arpack":
        # shift slightly below the (near-zero) ground state so A - sigma I is definite
        sigma = -1e-2 * op.s**2
        try:
            vals, vecs = eigsh(A.tocsc(), k=k, sigma=sigma, which="LM", maxiter=maxiter, tol=tol)
        except ArpackNoConvergence as exc:
            res = [float(np.linalg.norm(A @ v - lam * v))
                   for lam, v in zip(exc.eigenvalues, exc.eigenvectors.T)]
            raise SolverError(f"shift-invert Lanczos did not converge ({len(res)} of {k} pairs)",
                              residuals=res) from None
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ConfigurationError(f"unknown eigensolver {method!r}")

    # the computed zero mode is an empirical witness of the round-off and
    # discretisation floor; delta_1 must clear it by a wide margin
    floor = max(DELTA_FLOOR, 100.0 * abs(vals[0]))
    if vals[1] <= floor:
        raise PrecisionError(
            f"delta_1={vals[1]:.3g} at s={op.s:g} is not resolved above the floor {floor:.3g}")
    return Spectrum(op.s, np.asarray(vals), vecs if eigenvectors else None, method, op.grid)


def ground_state_check(op: WittenOperator, spectrum: Spectrum) -> float:
    """``1 - |<phi_0, exp(-f/s)/||exp(-f/s)||>|``."""
    if spectrum.eigenvectors is None:
        raise ConfigurationError("ground_state_check needs eigenvectors")
    phi0 = spectrum.eigenvectors[:, 0]
    return float(1.0 - abs(phi0 @ op.ground_state_samples()) / np.linalg.norm(phi0))


def low_lying_count(spectrum: Spectrum, threshold):
    """Number of computed eigenvalues (the zero mode included) below ``threshold``."""
    return int(np.sum(spectrum.eigenvalues < threshold))


def witten_spectrum(field: ScalarField, s, grid: Optional[GridSpec] = None, k=4,
                    eigenvectors=False, method="auto", scheme="fd") -> Spectrum:
    grid = grid if grid is not None else witten_grid(field, s)
    return smallest_eigs(assemble_witten(field, s, grid, scheme), k, eigenvectors, method)


def witten_grid(field: ScalarField, s, n=None):
    """Default certified box for the ground-state criterion."""
    if n is None:
        n = DENSE_LIMIT if field.dimension == 1 else 201
    return default_grid(field, s, n=n, temperature_factor=1.0)


@dataclass
class ExpLawFit:
    s_values: list
    lambda_values: list
    slope: float
    intercept: float
    r2: float

    @property
    def barrier_estimate(self):
        return -self.slope / 2

    @property
    def alpha_estimate(self):
        return math.exp(self.intercept)


def exp_law_fit(field: ScalarField, s_values, grid_policy: Optional[Callable] = None,
                method="auto") -> ExpLawFit:
    """Regress ``log lambda_s`` on ``1/s``.

    ``grid_policy(field, s)`` returns the grid for each ``s``; the default is
    :func:`witten_grid`.  Every ``s`` must satisfy ``lambda_s < 0.5 *`` the
    harmonic gap at the global minimum (smallest Hessian eigenvalue there).
    """
    s_values = [float(s) for s in s_values]
    if len(s_values) < 4:
        raise PreconditionError("exp_law_fit needs at least 4 values of s")
    policy = grid_policy or witten_grid
    lams = []
    harmonic = None
    for s in s_values:
        grid = policy(field, s)
        if harmonic is None:
            x_star, _ = refined_minimum(field, grid)
            harmonic = float(np.linalg.eigvalsh(field.hessian(x_star))[0])
        spec = smallest_eigs(assemble_witten(field, s, grid), 3, method=method)
        d1, d2 = spec.eigenvalues[1], spec.eigenvalues[2]
        if d1 < 1e-14 * d2:
            raise PrecisionError(f"delta_1/delta_2 = {d1 / d2:.3g} at s={s:g}; raise s")
        if spec.lambda_s >= 0.5 * harmonic:
            raise PreconditionError(
                f"s={s:g} is outside the small-s regime: lambda_s={spec.lambda_s:.4g} "
                f">= half the harmonic gap {harmonic:.4g}")
        lams.append(spec.lambda_s)
    x = 1.0 / np.array(s_values)
    y = np.log(lams)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else float("nan")
    return ExpLawFit(s_values, lams, float(slope), float(icpt), r2)


def lambda_ratio(H, s_large, s_small):
    """``lambda_{s_large} / lambda_{s_small}`` under the pure law ``lambda_s = exp(-2H/s)``."""
    return math.exp(2 * H * (1.0 / s_small - 1.0 / s_large))


def export_spectrum_json(spectrum: Spectrum, path):
    with open(path, "w") as fh:
        json.dump(spectrum.to_json(), fh, indent=2, sort_keys=True)
    return path
