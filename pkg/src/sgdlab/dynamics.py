"""Discrete optimizers, Euler-Maruyama for the learning-rate SDE, and Monte Carlo studies.

Noise is counter based: the standard normal used by replica ``r`` at step
``k`` of stream ``c`` is row ``r`` of a block drawn from a Philox generator
keyed by ``(seed, c, k)``.  Drawing ``n`` rows yields the same first rows as
drawing ``m > n`` rows, so a draw depends only on its indices and never on
the ensemble size or on how replicas are chunked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaincc, gammaln

from .errors import ConfigurationError, DivergenceError, DomainError
from .objective import ScalarField

DIVERGENCE_NORM = 1e8

STREAM_DISCRETE = 0
STREAM_BROWNIAN = 1
STREAM_BRIDGE = 2

METHODS = ("gd", "sgd", "sgld")


def _keyed_generator(seed, stream, step):
    ss = np.random.SeedSequence([int(seed), int(stream), int(step)])
    return np.random.Generator(np.random.Philox(ss))


def block_normals(seed, step, n_rows, d, stream=STREAM_DISCRETE):
    """Standard normals of shape ``(n_rows, d)`` for one (seed, stream, step) key."""
    return _keyed_generator(seed, stream, step).standard_normal((n_rows, d))


def block_uniforms(seed, step, n_rows, stream=STREAM_BRIDGE):
    return _keyed_generator(seed, stream, step).random(n_rows)


@dataclass(frozen=True)
class NoiseModel:
    seed: int
    replica_index: int = 0
    kind: str = "gaussian_iid"

    def __post_init__(self):
        if self.kind != "gaussian_iid":
            raise ConfigurationError(f"unsupported noise kind {self.kind!r}")
        if not (0 <= int(self.seed) < 2**64) or self.replica_index < 0:
            raise ConfigurationError("seed must be a 64-bit unsigned integer, replica_index >= 0")

    def normals(self, step, d, stream=STREAM_DISCRETE):
        return block_normals(self.seed, step, self.replica_index + 1, d, stream)[-1]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    objective_values: np.ndarray


@dataclass
class EnsembleStats:
    times: np.ndarray
    mean_excess_risk: np.ndarray
    std_err: np.ndarray
    n_replicas: int

    @property
    def k(self):
        return np.arange(len(self.times))


@dataclass
class CouplingReport:
    s: float
    horizon_T: float
    sup_deviation: float
    noise_sup: float
    bound_value: float
    bound_satisfied: bool
    #: Bound that keeps the accumulated-noise sum of the discrete recursion (discrete case only).
    accumulated_bound: Optional[float] = None


@dataclass
class WeakErrorReport:
    s_values: np.ndarray
    errors: np.ndarray
    std_errs: np.ndarray
    order: float
    intercept: float
    inconclusive: bool


@dataclass
class HittingTimeResult:
    mean: float
    std_err: float
    n_completed: int
    n_censored: int
    max_time: float
    inconclusive: bool


# --------------------------------------------------------------------------
# helpers


def _initial_block(field, x0, n):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (field.dimension,):
        raise ConfigurationError(f"x0 must have shape ({field.dimension},), got {x0.shape}")
    return np.tile(x0, (n, 1))


def _check_finite(X, step, prev, offset=0):
    norms = np.linalg.norm(X, axis=-1)
    bad = ~(norms <= DIVERGENCE_NORM)
    if np.any(bad):
        r = int(np.argmax(bad))
        raise DivergenceError(
            f"iterate diverged at step {step} (replica {r + offset})",
            last_finite=prev[r].copy(),
            step=step,
            replica=r + offset,
        )


def _update(method, field, X, s, xi):
    g = field.gradient(X)
    if method == "gd":
        return X - s * g
    if method == "sgd":
        return X - s * g - s * xi
    if method == "sgld":
        return X - s * g + math.sqrt(s) * xi
    raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")


def _discrete_block(method, field, s, k_max, X, seed, offset, observe):
    """Run ``k_max`` steps on the replica block ``[offset, offset + len(X))``."""
    n, d = X.shape
    observe(0, X)
    for k in range(k_max):
        if method == "gd":
            xi = None
        else:
            xi = block_normals(seed, k, offset + n, d, STREAM_DISCRETE)[offset:]
        X_new = _update(method, field, X, s, xi)
        _check_finite(X_new, k + 1, X, offset)
        X = X_new
        observe(k + 1, X)
    return X


def _check_em_step(s, dt):
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    if s < 0:
        raise ConfigurationError("s must be nonnegative")
    if s > 0 and dt > s / 10 * (1 + 1e-12):
        raise ConfigurationError(f"inner step dt={dt} must satisfy dt <= s/10 = {s / 10}")


def _n_steps(T, dt):
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ConfigurationError(f"horizon T={T} is not a multiple of dt={dt}")
    return n


def _em_block(field, s, dt, n_steps, X, seed, offset, observe):
    n, d = X.shape
    amp = math.sqrt(s * dt)
    observe(0, X)
    for j in range(n_steps):
        X_new = X - dt * field.gradient(X)
        if s > 0:
            X_new = X_new + amp * block_normals(seed, j, offset + n, d, STREAM_BROWNIAN)[offset:]
        _check_finite(X_new, j + 1, X, offset)
        X = X_new
        observe(j + 1, X)
    return X


# --------------------------------------------------------------------------
# single trajectories


def run_discrete(method, field: ScalarField, s, k_max, x0, noise: NoiseModel) -> Trajectory:
    """Iterate GD, SGD (``x - s grad - s xi``) or SGLD (``x - s grad + sqrt(s) xi``)."""
    if s <= 0:
        raise ConfigurationError("learning rate s must be positive")
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")
    X = _initial_block(field, x0, 1)
    states = np.empty((k_max + 1, field.dimension))

    def observe(k, X):
        states[k] = X[0]

    _discrete_block(method, field, s, k_max, X, noise.seed, noise.replica_index, observe)
    return Trajectory(s * np.arange(k_max + 1), states, field.value(states))


def euler_maruyama(field: ScalarField, s, dt, T, x0, noise: NoiseModel) -> Trajectory:
    """Integrate ``dX = -grad f(X) dt + sqrt(s) dW`` with step ``dt`` up to time ``T``."""
    _check_em_step(s, dt)
    n_steps = _n_steps(T, dt)
    X = _initial_block(field, x0, 1)
    states = np.empty((n_steps + 1, field.dimension))

    def observe(j, X):
        states[j] = X[0]

    _em_block(field, s, dt, n_steps, X, noise.seed, noise.replica_index, observe)
    return Trajectory(dt * np.arange(n_steps + 1), states, field.value(states))


def em_ensemble_states(field, s, dt, T, x0, n_replicas, base_seed, times=None):
    """Euler-Maruyama ensemble; returns (times, states) at the requested times.

    ``states`` has shape ``(len(times), n_replicas, d)``.
    """
    _check_em_step(s, dt)
    n_steps = _n_steps(T, dt)
    if times is None:
        idx = np.array([n_steps])
    else:
        idx = np.array([_n_steps(t, dt) if t > 0 else 0 for t in np.atleast_1d(times)])
    want = {int(j): i for i, j in enumerate(idx)}
    out = np.empty((len(idx), n_replicas, field.dimension))

    def observe(j, X):
        if j in want:
            out[want[j]] = X

    _em_block(field, s, dt, n_steps, _initial_block(field, x0, n_replicas), base_seed, 0, observe)
    return dt * idx, out


# --------------------------------------------------------------------------
# ensembles


def run_ensemble(method, field: ScalarField, s, k_max, x0, n_replicas, base_seed,
                 f_star=None) -> EnsembleStats:
    """Mean excess risk of ``n_replicas`` independent runs; replica ``r`` uses NoiseModel(base_seed, r)."""
    if n_replicas < 2:
        raise ConfigurationError("n_replicas must be at least 2")
    if s <= 0:
        raise ConfigurationError("learning rate s must be positive")
    if f_star is None:
        f_star = field.minimum_value
    if f_star is None:
        raise ConfigurationError(f"{field.name}: global minimum value unknown; pass f_star")
    mean = np.empty(k_max + 1)
    se = np.empty(k_max + 1)

    def observe(k, X):
        excess = field.value(X) - f_star
        mean[k] = np.mean(excess)
        # gd replicas are identical; np.std would report rounding noise
        se[k] = 0.0 if method == "gd" else np.std(excess, ddof=1) / math.sqrt(n_replicas)

    _discrete_block(method, field, s, k_max, _initial_block(field, x0, n_replicas),
                    base_seed, 0, observe)
    return EnsembleStats(s * np.arange(k_max + 1), mean, se, n_replicas)


def weak_error_study(field: ScalarField, s_list, T, n_replicas, dt_ref, x0, seed=0,
                     noise=True) -> WeakErrorReport:
    """Weak error between SGD and the SDE at matched times ``t = ks``.

    One Brownian path per replica drives every SDE solution; the SGD noise for
    learning rate ``s`` is the normalised Brownian increment over ``[ks, (k+1)s]``,
    so both sides share common random numbers.
    """
    s_values = np.asarray(sorted(s_list, reverse=True), dtype=float)
    if len(s_values) < 2:
        raise ConfigurationError("need at least two learning rates")
    if dt_ref > s_values.min() / 20 * (1 + 1e-12):
        raise ConfigurationError("dt_ref must be at most min(s_list)/20")
    if field.lipschitz_L is not None and np.any(s_values > 1.0 / field.lipschitz_L):
        raise ConfigurationError("every s must satisfy s <= 1/L")
    ratios = s_values / dt_ref
    sub = np.rint(ratios).astype(int)
    if np.any(np.abs(ratios - sub) > 1e-9 * ratios):
        raise ConfigurationError("each s must be an integer multiple of dt_ref")
    n_total = _n_steps(T, dt_ref)
    k_max = [int(math.floor(T / s + 1e-9)) for s in s_values]

    d = field.dimension
    X0 = _initial_block(field, x0, n_replicas)
    X = [X0.copy() for _ in s_values]
    x = [X0.copy() for _ in s_values]
    acc = [np.zeros_like(X0) for _ in s_values]
    err = np.zeros(len(s_values))
    err_se = np.zeros(len(s_values))
    sqrt_dt = math.sqrt(dt_ref)

    for j in range(n_total):
        dW = sqrt_dt * block_normals(seed, j, n_replicas, d, STREAM_BROWNIAN) if noise else 0.0
        for i, s in enumerate(s_values):
            if j >= k_max[i] * sub[i]:
                continue
            X[i] = X[i] - dt_ref * field.gradient(X[i]) + math.sqrt(s) * dW
            acc[i] = acc[i] + dW
            if (j + 1) % sub[i] == 0:
                xi = -acc[i] / math.sqrt(s)
                x[i] = x[i] - s * field.gradient(x[i]) - s * xi
                acc[i] = np.zeros_like(X0)
                diff = field.value(x[i]) - field.value(X[i])
                e = abs(float(np.mean(diff)))
                if e > err[i]:
                    err[i] = e
                    err_se[i] = float(np.std(diff, ddof=1) / math.sqrt(n_replicas)) if noise else 0.0

    inconclusive = bool(np.any(err <= 3 * err_se)) or bool(np.any(err <= 0))
    if np.all(err > 0):
        slope, intercept = np.polyfit(np.log(s_values), np.log(err), 1)
    else:
        slope, intercept = float("nan"), float("nan")
    return WeakErrorReport(s_values, err, err_se, float(slope), float(intercept), inconclusive)


# --------------------------------------------------------------------------
# hitting times


def hitting_time_mc(field: ScalarField, s, x_start, x_target, n_replicas, dt, seed=0,
                    max_time=1000.0) -> HittingTimeResult:
    """First-passage times of Euler-Maruyama paths from ``x_start`` to ``x_target`` (1D).

    A crossing seen at a step endpoint is located by linear interpolation.
    Excursions that cross and return within one step are caught with the
    Brownian-bridge crossing probability ``exp(-2 a b / (s dt))`` (``a, b`` the
    endpoint distances to the target) and timed at the step midpoint.  Paths
    still running at ``max_time`` are censored; more than half censored is
    inconclusive.
    """
    if field.dimension != 1:
        raise ConfigurationError("hitting_time_mc needs a one-dimensional field")
    if x_start == x_target:
        raise ConfigurationError("x_start must differ from x_target")
    _check_em_step(s, dt)
    if s <= 0:
        raise ConfigurationError("hitting times need s > 0")
    direction = 1.0 if x_target > x_start else -1.0
    x = np.full(n_replicas, float(x_start))
    idx = np.arange(n_replicas)
    hit = np.full(n_replicas, np.nan)
    amp = math.sqrt(s * dt)
    n_steps = int(math.ceil(max_time / dt))

    for j in range(n_steps):
        if idx.size == 0:
            break
        n_rows = int(idx[-1]) + 1
        z = block_normals(seed, j, n_rows, 1, STREAM_BROWNIAN)[idx, 0]
        x_new = x - dt * field.gradient(x[:, None])[:, 0] + amp * z
        gap_old = (x_target - x) * direction
        gap_new = (x_target - x_new) * direction
        crossed = gap_new <= 0
        t_hit = dt * (j + gap_old / np.where(crossed, gap_old - gap_new, 1.0))
        p_bridge = np.exp(-2.0 * gap_old * np.maximum(gap_new, 0.0) / (s * dt))
        u = block_uniforms(seed, j, n_rows)[idx]
        bridged = ~crossed & (u < p_bridge)
        t_hit = np.where(bridged, dt * (j + 0.5), t_hit)
        done = crossed | bridged
        if np.any(done):
            hit[idx[done]] = t_hit[done]
            keep = ~done
            x_new, idx = x_new[keep], idx[keep]
        if not np.all(np.isfinite(x_new)) or np.any(np.abs(x_new) > DIVERGENCE_NORM):
            raise DivergenceError(f"hitting-time path diverged at step {j + 1}", step=j + 1)
        x = x_new

    times = hit[np.isfinite(hit)]
    n_cens = n_replicas - times.size
    if times.size >= 2:
        mean = float(np.mean(times))
        se = float(np.std(times, ddof=1) / math.sqrt(times.size))
    else:
        mean, se = float("nan"), float("nan")
    return HittingTimeResult(mean, se, int(times.size), int(n_cens), float(max_time),
                             inconclusive=n_cens > 0.5 * n_replicas)


def kramers_time(field: ScalarField, x_bullet, x_circ, s) -> float:
    """``pi / sqrt(-f''(x_bullet) f''(x_circ)) * exp(2 (f(x_circ) - f(x_bullet)) / s)``."""
    if field.dimension != 1:
        raise DomainError("kramers_time is defined for one-dimensional fields")
    a = float(field.hessian(np.array([x_bullet]))[0, 0])
    b = float(field.hessian(np.array([x_circ]))[0, 0])
    if not (a > 0 and b < 0):
        raise DomainError(f"need f''(x_bullet) > 0 and f''(x_circ) < 0, got {a:.3g}, {b:.3g}")
    barrier = float(field.value(np.array([x_circ])) - field.value(np.array([x_bullet])))
    return math.pi / math.sqrt(-a * b) * math.exp(2.0 * barrier / s)


def ou_hitting_time(theta, s, x_bullet, x_circ) -> float:
    """Asymptotic mean first passage of the OU process from ``x_bullet`` to ``x_circ``."""
    gap = abs(x_circ - x_bullet)
    return (math.sqrt(math.pi * s) / (gap * theta * math.sqrt(theta))
            * math.exp(theta * gap * gap / s))


# --------------------------------------------------------------------------
# coupling bounds


def coupled_deviation(field: ScalarField, s, T, dt, noise: NoiseModel, x0=None) -> CouplingReport:
    """Deviation between the noisy SDE path and the noiseless gradient flow on one grid."""
    if field.lipschitz_L is None:
        raise ConfigurationError(f"{field.name} does not declare a Lipschitz constant")
    if dt <= 0 or s < 0:
        raise ConfigurationError("need dt > 0 and s >= 0")
    n_steps = _n_steps(T, dt)
    d = field.dimension
    X = np.ones(d) if x0 is None else np.asarray(x0, dtype=float).reshape(d)
    Y = X.copy()
    W = np.zeros(d)
    sup_dev = 0.0
    sup_w = 0.0
    sqrt_dt = math.sqrt(dt)
    for j in range(n_steps):
        dW = sqrt_dt * noise.normals(j, d, STREAM_BROWNIAN)
        W = W + dW
        X = X - dt * field.gradient(X[None])[0] + math.sqrt(s) * dW
        Y = Y - dt * field.gradient(Y[None])[0]
        sup_dev = max(sup_dev, float(np.linalg.norm(X - Y)))
        sup_w = max(sup_w, float(np.linalg.norm(W)))
    bound = math.sqrt(s) * sup_w * math.exp(field.lipschitz_L * T)
    return CouplingReport(float(s), float(T), sup_dev, sup_w, bound, sup_dev <= bound)


def discrete_coupled_deviation(field: ScalarField, s, T, noise: NoiseModel, x0=None) -> CouplingReport:
    """Deviation between SGD and GD driven by the same start point."""
    if field.lipschitz_L is None:
        raise ConfigurationError(f"{field.name} does not declare a Lipschitz constant")
    if s <= 0:
        raise ConfigurationError("learning rate s must be positive")
    L = field.lipschitz_L
    k_max = int(round(T / s))
    d = field.dimension
    x = np.ones(d) if x0 is None else np.asarray(x0, dtype=float).reshape(d)
    y = x.copy()
    sup_dev = 0.0
    sup_xi = 0.0
    for k in range(k_max):
        xi = noise.normals(k, d, STREAM_DISCRETE)
        x = x - s * field.gradient(x[None])[0] - s * xi
        y = y - s * field.gradient(y[None])[0]
        sup_dev = max(sup_dev, float(np.linalg.norm(x - y)))
        sup_xi = max(sup_xi, float(np.linalg.norm(xi)))
    stated = s * (1 + L * s) ** (T / s) * sup_xi
    accumulated = sup_xi * ((1 + L * s) ** k_max - 1) / L
    return CouplingReport(float(s), float(T), sup_dev, sup_xi, stated, sup_dev <= stated,
                          accumulated_bound=accumulated)


def gaussian_norm_tail(d, x):
    """``P(|X| >= x)`` for a standard Gaussian in ``d`` dimensions, and the large-x bound.

    Returns ``(probability, bound)``.
    """
    if int(d) != d or d < 1:
        raise DomainError("dimension d must be a positive integer")
    if x <= 0:
        raise DomainError("x must be positive")
    a = d / 2.0
    prob = float(gammaincc(a, x * x / 2.0))
    log_bound = (math.log(4.0) + (d - 2) * math.log(x) - x * x / 2.0
                 - a * math.log(2.0) - gammaln(a))
    return prob, math.exp(log_bound)
