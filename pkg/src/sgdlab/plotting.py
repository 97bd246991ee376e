"""Figures written next to the CSV/JSON outputs (Agg backend, PNG files)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamps or version strings in the files
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return str(path)


def ensemble_figure(curves, path):
    """``curves``: list of ``(label, times, mean, std_err)``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, t, m, se in curves:
        ax.plot(t, m, label=label)
        ax.fill_between(t, np.maximum(m - 2 * se, 1e-300), m + 2 * se, alpha=0.2)
    ax.set_yscale("log")
    ax.set_xlabel("t = k s")
    ax.set_ylabel("mean excess risk")
    ax.legend(fontsize=8)
    return _save(fig, path)


def spectrum_figure(s_values, lambdas, path, fit=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = 1.0 / np.asarray(s_values)
    ax.plot(x, np.log(lambdas), "o", label="log lambda_s")
    if fit is not None:
        xx = np.linspace(x.min(), x.max(), 50)
        ax.plot(xx, fit.slope * xx + fit.intercept, "-",
                label=f"fit: slope {fit.slope:.4g}")
    ax.set_xlabel("1/s")
    ax.set_ylabel("log lambda_s")
    ax.legend(fontsize=8)
    return _save(fig, path)


def landscape_figure(field, grid, report, path):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    vals = field.value(grid.points)
    minima = [m.location for m in report.minima]
    saddles = [c.location for c in report.saddles_index1]
    if grid.dimension == 1:
        ax.plot(grid.axes[0], vals, "k-", lw=1)
        for pts, style in ((minima, "bo"), (saddles, "r^")):
            if pts:
                xs = np.array(pts)
                ax.plot(xs[:, 0], field.value(xs), style)
        ax.set_xlabel("x")
        ax.set_ylabel("f")
    else:
        X, Y = grid.axes
        ax.contour(X, Y, vals.T, levels=40, linewidths=0.6)
        for pts, style in ((minima, "bo"), (saddles, "r^")):
            if pts:
                xs = np.array(pts)
                ax.plot(xs[:, 0], xs[:, 1], style)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title(f"{field.name}: minima (o), index-1 saddles (^)")
    return _save(fig, path)


def density_figure(grid, snapshots, mu_density, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = grid.axes[0]
    picks = snapshots[:: max(1, len(snapshots) // 6)]
    for sn in picks:
        ax.plot(x, sn.density, lw=1, label=f"t={sn.time:.3g}")
    ax.plot(x, mu_density, "k--", lw=1.2, label="Gibbs")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(fontsize=7)
    return _save(fig, path)


def decay_figure(times, norms, path, rate=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    norms = np.asarray(norms)
    ax.semilogy(times, np.maximum(norms, 1e-300), label="||rho_t - mu||^2")
    if rate is not None and np.isfinite(rate) and norms[0] > 0:
        t = np.asarray(times)
        ax.semilogy(t, norms[0] * np.exp(-rate * t), "--", label=f"rate {rate:.4g}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    return _save(fig, path)


def idealized_risk_figure(curves, path):
    """``curves``: list of ``(s, iterations, risk)``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for s, k, r in curves:
        ax.loglog(k, r, label=f"s={s:g}")
    ax.set_xlabel("iteration k")
    ax.set_ylabel("idealized risk")
    ax.legend(fontsize=8)
    return _save(fig, path)
