"""Command line entry point: ``sgdlab <subcommand> [options]``.

Every invocation writes CSV/JSON data, PNG figures and one ``run_report.json``
into the output directory.  Exit status is 0 on success, 1 when a criterion
or computation fails and 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import dynamics, gibbs, lrdecay, morse, pde, spectral, verify as verify_mod
from .config import SUBCOMMANDS, ExperimentConfig
from .errors import CatalogError, ConfigurationError, SgdLabError
from .objective import catalog

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclasses.dataclass
class Outcome:
    """Result of one subcommand: per-operation records and written files."""
    results: list
    artifacts: list
    passed: bool = True


def _derived_seed(seed, *keys):
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0])


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(verify_mod._clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _field(cfg):
    return catalog(cfg.field, **cfg.field_params)


def _grid(cfg, f, s, temperature_factor=2.0):
    if cfg.grid.half_width is None:
        return gibbs.default_grid(f, s, n=cfg.grid.n, temperature_factor=temperature_factor)
    n = cfg.grid.n or (2001 if f.dimension == 1 else 301)
    return gibbs.GridSpec.box(f.dimension, cfg.grid.half_width, n)


def _x0(cfg, f):
    if cfg.x0 is not None:
        return np.asarray(cfg.x0, dtype=float)
    return np.ones(f.dimension)


def _s_tag(s):
    return f"{s:g}".replace(".", "p")


# --------------------------------------------------------------------------
# subcommands


def run_simulate(cfg, out, plots):
    f = _field(cfg)
    x0 = _x0(cfg, f)
    results, artifacts, curves = [], [], []
    for i, method in enumerate(cfg.methods):
        for j, s in enumerate(cfg.s):
            k_max = int(round(cfg.horizon / s))
            seed = _derived_seed(cfg.seed, i, j)
            stats = dynamics.run_ensemble(method, f, s, k_max, x0, cfg.n_replicas, seed)
            path = os.path.join(out, f"ensemble_{method}_s{_s_tag(s)}.csv")
            _write_csv(path, ["k", "t", "mean_excess_risk", "std_err"],
                       zip(stats.k, stats.times, stats.mean_excess_risk, stats.std_err))
            artifacts.append(path)
            results.append({"operation": "run_ensemble", "method": method, "s": s, "seed": seed,
                            "k_max": k_max, "final_mean_excess_risk": stats.mean_excess_risk[-1]})
            curves.append((f"{method} s={s:g}", stats.times, stats.mean_excess_risk, stats.std_err))
    if plots:
        from . import plotting
        artifacts.append(plotting.ensemble_figure(curves, os.path.join(out, "ensemble.png")))
    return Outcome(results, artifacts)


def run_spectrum(cfg, out, plots):
    f = _field(cfg)
    results, artifacts, rows = [], [], []
    for s in cfg.s:
        grid = spectral.witten_grid(f, s, n=cfg.grid.n) if cfg.grid.half_width is None \
            else _grid(cfg, f, s)
        spec = spectral.witten_spectrum(f, s, grid, k=4)
        path = spectral.export_spectrum_json(spec, os.path.join(out, f"spectrum_s{_s_tag(s)}.json"))
        artifacts.append(path)
        rows.append([s, spec.lambda_s, *spec.eigenvalues, spec.method])
        results.append({"operation": "witten_spectrum", "s": s, "lambda_s": spec.lambda_s,
                        "method": spec.method})
    artifacts.append(_write_csv(os.path.join(out, "spectrum.csv"),
                                ["s", "lambda_s", "delta_0", "delta_1", "delta_2", "delta_3",
                                 "method"], rows))
    fit = None
    if len(cfg.s) >= 4:
        try:
            fit = spectral.exp_law_fit(f, cfg.s)
            results.append({"operation": "exp_law_fit", "slope": fit.slope,
                            "intercept": fit.intercept, "r2": fit.r2,
                            "barrier_estimate": fit.barrier_estimate})
        except SgdLabError as exc:
            results.append({"operation": "exp_law_fit", "error": str(exc)})
    if plots:
        from . import plotting
        artifacts.append(plotting.spectrum_figure(cfg.s, [r[1] for r in rows],
                                                  os.path.join(out, "spectrum.png"), fit))
    return Outcome(results, artifacts)


def run_morse(cfg, out, plots):
    f = _field(cfg)
    n = cfg.grid.n or (2001 if f.dimension == 1 else 201)
    grid = gibbs.GridSpec.box(f.dimension, cfg.grid.half_width or 3.0, n)
    report = morse.analyze(f, grid)
    artifacts = [morse.export_report_json(report, os.path.join(out, "morse.json"))]
    crit = report.minima + report.saddles_index1
    artifacts.append(_write_csv(
        os.path.join(out, "critical_points.csv"),
        [f"x{i + 1}" for i in range(f.dimension)] + ["value", "index"],
        ([*c.location, c.value, c.index] for c in crit)))
    results = [{"operation": "analyze", "n_minima": report.n_minima,
                "n_separating": report.n_separating, "H_f": report.H_f,
                "generic": report.generic}]
    for s in cfg.s:
        if report.n_minima < 2:
            break
        pred = morse.eyring_kramers_predict(f, report, s)
        results.append({"operation": "eyring_kramers_predict", "s": s,
                        "prediction": dataclasses.asdict(pred)
                        if isinstance(pred, morse.PredictionInterval) else pred})
    if plots:
        from . import plotting
        artifacts.append(plotting.landscape_figure(f, grid, report,
                                                   os.path.join(out, "landscape.png")))
    return Outcome(results, artifacts)


def _initial_density(cfg, f, s, grid):
    if cfg.initial == "uniform":
        return gibbs.normalized(grid, np.ones(grid.shape))
    if cfg.initial == "gibbs":
        return gibbs.gibbs_on_grid(f, 2 * s, grid).density
    return gibbs.gaussian_density(grid, _x0(cfg, f), 0.05)


def run_fp(cfg, out, plots):
    f = _field(cfg)
    s = cfg.s[0]
    grid = _grid(cfg, f, 2 * s if cfg.initial == "gibbs" else s)
    dt = cfg.dt or 0.01
    scheme = "be" if cfg.initial == "uniform" else "cn"
    rho0 = _initial_density(cfg, f, s, grid)
    snaps = pde.fp_evolve(f, s, rho0, grid, dt, cfg.horizon, scheme=scheme)
    mu = gibbs.gibbs_on_grid(f, s, grid)
    lam = spectral.witten_spectrum(f, s).lambda_s
    fit = pde.decay_fit(f, s, rho0, grid, dt, cfg.horizon, lam, snapshots=snaps)
    artifacts = []
    keep = snaps[:: max(1, len(snaps) // 20)]
    if snaps[-1] is not keep[-1]:
        keep.append(snaps[-1])
    if f.dimension == 1:
        artifacts.append(pde.export_snapshots_csv(keep, grid, os.path.join(out, "snapshots.csv")))
    artifacts.append(_write_csv(os.path.join(out, "decay.csv"), ["t", "weighted_l2_sq"],
                                zip(fit.times, fit.norms)))
    artifacts.append(pde.export_decay_json(fit, os.path.join(out, "decay.json")))
    results = [{"operation": "decay_fit", "s": s, "scheme": scheme, "fitted_rate": fit.fitted_rate,
                "reference_rate": fit.reference_rate, "inconclusive": fit.inconclusive,
                "epsilon": fit.epsilon, "grid": grid.to_dict()}]
    if plots:
        from . import plotting
        if f.dimension == 1:
            artifacts.append(plotting.density_figure(grid, keep, mu.density,
                                                     os.path.join(out, "densities.png")))
        artifacts.append(plotting.decay_figure(fit.times, fit.norms,
                                               os.path.join(out, "decay.png"), fit.fitted_rate))
    return Outcome(results, artifacts)


def run_decay_study(cfg, out, plots):
    p = cfg.decay
    results, rows, curves = [], [], []
    for s in cfg.s:
        b = p.b0 - s
        if b <= 0:
            raise ConfigurationError(f"b0 - s must be positive (s={s:g})")
        k_rough = lrdecay.rough_stationarity_iterations(b, s, c=p.c)
        results.append({"operation": "rough_stationarity_iterations", "s": s,
                        "lambda_s": lrdecay.decay_constant(p.c, s), "k": k_rough})
        ks = np.unique(np.geomspace(1, max(10.0, 10 * k_rough), 200))
        risk = [lrdecay.idealized_risk(p.a, b, p.c, s, k * s) for k in ks]
        rows.extend([s, k, k * s, r] for k, r in zip(ks, risk))
        curves.append((s, ks, risk))
    artifacts = [_write_csv(os.path.join(out, "idealized_risk.csv"), ["s", "k", "t", "risk"], rows)]
    if len(cfg.s) >= 2:
        k = [r["k"] for r in results]
        results.append({"operation": "iteration_ratio", "s_first": cfg.s[0], "s_last": cfg.s[-1],
                        "ratio": k[-1] / k[0]})
        f = _field(cfg)
        if f.dimension == 1:
            s_hot, s_cold = cfg.s[0], cfg.s[1]
            grid = _grid(cfg, f, max(s_hot, s_cold))
            dt = cfg.dt or 0.005
            warm = pde.time_to_stationarity(f, s_cold, gibbs.gibbs_on_grid(f, s_hot, grid).density,
                                            grid, 0.1, dt=dt, T=cfg.horizon, scheme="be")
            cold = pde.time_to_stationarity(f, s_cold, gibbs.normalized(grid, np.ones(grid.shape)),
                                            grid, 0.1, dt=dt, T=cfg.horizon, scheme="be")
            results.append({"operation": "time_to_stationarity", "field": f.name,
                            "from_s": s_hot, "to_s": s_cold, "warm": warm.time,
                            "warm_censored": warm.censored, "cold": cold.time,
                            "cold_censored": cold.censored})
    artifacts.append(_write_json(os.path.join(out, "decay_study.json"), results))
    if plots:
        from . import plotting
        artifacts.append(plotting.idealized_risk_figure(curves,
                                                        os.path.join(out, "idealized_risk.png")))
    return Outcome(results, artifacts)


def run_verify(cfg, out, plots, faults=(), log=None):
    report = verify_mod.verify(cfg.suite, cfg.seed, only=cfg.only, faults=faults,
                               config=cfg.to_dict(), log=log)
    path = _write_csv(os.path.join(out, "criteria.csv"), ["id", "name", "passed"],
                      ([r.id, r.name, int(r.passed)] for r in report.results))
    results = [{"operation": "criterion", **r.to_json()} for r in report.results]
    return Outcome(results, [path], passed=report.passed), report


RUNNERS = {
    "simulate": run_simulate,
    "spectrum": run_spectrum,
    "morse": run_morse,
    "fp": run_fp,
    "decay-study": run_decay_study,
}


def execute(cfg: ExperimentConfig, plots=True, faults=(), log=None):
    """Run one configured subcommand and write its outputs; returns the report dict."""
    out = cfg.output
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.subcommand == "verify":
        outcome, vreport = run_verify(cfg, out, plots, faults, log)
        report = vreport.to_json()
        report["artifacts"] = outcome.artifacts
        timing = {"total": time.perf_counter() - t0, **vreport.timing}
    else:
        outcome = RUNNERS[cfg.subcommand](cfg, out, plots)
        report = {"config": cfg.to_dict(), "seed": cfg.seed, "results": outcome.results,
                  "artifacts": outcome.artifacts, "passed": outcome.passed}
        timing = {"total": time.perf_counter() - t0}
    report_path = os.path.join(out, "run_report.json")
    # paths relative to the output directory keep the report independent of where it lives
    report["artifacts"] = [os.path.relpath(p, out) for p in report["artifacts"]] + ["run_report.json"]
    _write_json(report_path, report)
    with open(os.path.join(out, "timing.json"), "w") as fh:
        json.dump(timing, fh, indent=2, sort_keys=True)
    return report


def build_parser():
    ap = argparse.ArgumentParser(prog="sgdlab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file (versioned)")
    ap.add_argument("--seed", type=int, help="top-level unsigned 64-bit seed")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--suite", choices=("fast", "full"))
    ap.add_argument("--field", help="catalog objective name")
    ap.add_argument("--s", type=float, nargs="+", help="learning rate(s)")
    ap.add_argument("--only", nargs="+", help="verify: run only these criteria, e.g. C3 C8")
    ap.add_argument("--inject-fault", action="append", default=[], metavar="FIELD",
                    help="verify: corrupt the gradient of this catalog entry")
    ap.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    return ap


def _config_from_args(args):
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.subcommand != args.subcommand:
            raise ConfigurationError(
                f"config is for {cfg.subcommand!r} but {args.subcommand!r} was requested")
        data = cfg.to_dict()
    else:
        data = {"subcommand": args.subcommand}
    for key, val in (("seed", args.seed), ("output", args.out), ("suite", args.suite),
                     ("field", args.field), ("s", args.s), ("only", args.only)):
        if val is not None:
            data[key] = val
    return ExperimentConfig(**data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if cfg.subcommand != "verify":
            _field(cfg)
        report = execute(cfg, plots=not args.no_plots, faults=tuple(args.inject_fault),
                         log=lambda line: print(line, flush=True))
    except (ConfigurationError, CatalogError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SgdLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if cfg.subcommand == "verify":
        status = "PASS" if report["passed"] else f"FAIL ({', '.join(report['failures'])})"
        print(f"verify {cfg.suite}: {status}")
    else:
        for path in report["artifacts"]:
            print(path)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
