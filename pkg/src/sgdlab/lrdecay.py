"""Closed-form arithmetic behind learning-rate decay: idealised risk curves and time budgets."""
from __future__ import annotations

import math

from .errors import ConfigurationError, PreconditionError

#: Absolute level below which the transient term counts as gone.
ROUGH_TOL = 0.01


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ConfigurationError(f"{k} must be positive, got {v!r}")


def decay_constant(c, s):
    """``lambda_s = exp(-c / s)``."""
    _positive(c=c, s=s)
    return math.exp(-c / s)


def idealized_risk(a, b, c, s, t):
    """``a s + b exp(-lambda_s t)`` with ``lambda_s = exp(-c / s)``."""
    _positive(a=a, b=b, c=c, s=s, t=t)
    return a * s + b * math.exp(-decay_constant(c, s) * t)


def rough_stationarity_time(b, s, lam=None, c=None, tol=ROUGH_TOL):
    """Time ``t`` at which ``b exp(-lambda t)`` falls to ``tol``.

    Pass either ``lam`` directly or ``c`` for ``lambda = exp(-c/s)``.
    """
    if (lam is None) == (c is None):
        raise ConfigurationError("give exactly one of lam and c")
    lam = decay_constant(c, s) if lam is None else lam
    _positive(b=b, s=s, lam=lam, tol=tol)
    return max(math.log(b / tol), 0.0) / lam


def rough_stationarity_iterations(b, s, lam=None, c=None, tol=ROUGH_TOL):
    """Iteration count ``k = t / s`` for :func:`rough_stationarity_time`."""
    return rough_stationarity_time(b, s, lam, c, tol) / s


def required_time(s, A, C, rho_gap, epsilon, lambda_s):
    """``(1 / lambda_s) log(2 C rho_gap / epsilon)``, valid for ``s <= epsilon / (2 A)``."""
    _positive(s=s, A=A, C=C, rho_gap=rho_gap, epsilon=epsilon, lambda_s=lambda_s)
    if s > epsilon / (2 * A):
        raise PreconditionError(f"s={s:g} exceeds epsilon/(2A)={epsilon / (2 * A):g}")
    return math.log(2 * C * rho_gap / epsilon) / lambda_s
