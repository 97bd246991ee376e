"""Critical points, separating saddles and the saddle/minimum labelling of a landscape.

Sublevel sets ``{f < level}`` are represented by grid nodes and their
connected components by nearest-neighbour adjacency (2 neighbours in 1D, 4
in 2D).  Levels are sampled slightly below each saddle value so that the
two descent sides of a separating saddle do not touch through the saddle
node itself.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from .errors import (ConfigurationError, DomainError, NoBarrierError, NondegeneracyError,
                     ResolutionError)
from .gibbs import GridSpec
from .objective import ScalarField

log = logging.getLogger(__name__)

#: Values closer than this are treated as ties.
VALUE_TOL = 1e-9
#: Hessian eigenvalues closer than this to zero violate nondegeneracy.
EIG_TOL = 1e-8


class _Infinity:
    """The fictive saddle at infinity paired with the global minimum."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


@dataclass(frozen=True)
class CriticalPoint:
    location: tuple
    value: float
    index: int
    hessian_eigs: tuple
    converged: bool = True

    @property
    def point(self):
        return np.array(self.location)

    def to_json(self):
        return {"location": list(self.location), "value": self.value, "index": self.index,
                "hessian_eigs": list(self.hessian_eigs)}


@dataclass
class SaddlePairing:
    saddle: Union[CriticalPoint, _Infinity]
    minimum: CriticalPoint
    barrier: float
    gamma: Optional[float] = None
    #: other saddles/minima realising the same value pair (degenerate landscapes)
    alternatives: list = dc_field(default_factory=list)

    @property
    def fictive(self):
        return self.saddle is INFINITY

    def to_json(self):
        return {
            "saddle": "INFINITY" if self.fictive else self.saddle.to_json(),
            "minimum": self.minimum.to_json(),
            "barrier": None if self.fictive else self.barrier,
            "gamma": self.gamma,
            "alternatives": [[list(s.location), list(m.location)] for s, m in self.alternatives],
        }


@dataclass
class MorseReport:
    minima: list
    saddles_index1: list
    separating_saddles: list
    pairings: list
    H_f: Optional[float]
    generic: bool
    degenerate_notes: list
    #: every index-1 saddle that passed the separating test
    separating_candidates: list = dc_field(default_factory=list)
    #: per finite pairing, ``(lower, upper)`` barrier bounds for degenerate landscapes
    barrier_intervals: list = dc_field(default_factory=list)

    @property
    def n_minima(self):
        return len(self.minima)

    @property
    def n_separating(self):
        return len(self.separating_saddles)

    @property
    def convex_like(self):
        return len(self.minima) == 1

    def to_json(self):
        return {
            "minima": [m.to_json() for m in self.minima],
            "saddles_index1": [s.to_json() for s in self.saddles_index1],
            "separating_saddles": [s.to_json() for s in self.separating_saddles],
            "pairings": [p.to_json() for p in self.pairings],
            "H_f": self.H_f,
            "generic": self.generic,
            "degenerate_notes": list(self.degenerate_notes),
            "barrier_intervals": [list(b) for b in self.barrier_intervals],
        }


# --------------------------------------------------------------------------
# critical points


def _classify(field: ScalarField, x, converged=True):
    H = np.atleast_2d(field.hessian(x))
    eigs = np.sort(np.linalg.eigvalsh(0.5 * (H + H.T)))[::-1]
    if np.any(np.abs(eigs) < EIG_TOL):
        raise NondegeneracyError(
            f"{field.name}: Hessian is singular at {tuple(np.round(x, 8))} (eigs {eigs})",
            location=tuple(float(v) for v in x))
    return CriticalPoint(tuple(float(v) for v in x), float(field.value(x)),
                         int(np.sum(eigs < 0)), tuple(float(e) for e in eigs), converged)


def _newton(field: ScalarField, x, tol, max_iter, lower, upper, max_step):
    for _ in range(max_iter):
        g = np.atleast_1d(field.gradient(x))
        if np.linalg.norm(g) <= tol:
            return x
        H = np.atleast_2d(field.hessian(x))
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return None
        norm = np.linalg.norm(step)
        if norm > max_step:
            step *= max_step / norm
        x = x - step
        if np.any(x < lower) or np.any(x > upper) or not np.all(np.isfinite(x)):
            return None
    g = np.atleast_1d(field.gradient(x))
    return x if np.linalg.norm(g) <= tol else None


def _dedupe(points, radius):
    kept = []
    for x in points:
        if all(np.linalg.norm(x - y) > radius for y in kept):
            kept.append(x)
    return kept


def find_critical_points(field: ScalarField, grid: GridSpec, newton_tol=1e-10,
                         dedupe_radius=1e-4, max_iter=60):
    """Newton on ``grad f = 0`` seeded from grid-local minima of ``|grad f|^2``.

    A second round is seeded from midpoints between all pairs of minima found
    in the first.  Seeds whose Newton iteration fails are skipped and logged.
    Results are sorted by index, then value, then location.
    """
    if field.dimension != grid.dimension:
        raise ConfigurationError(f"{field.name} is {field.dimension}D but the grid is {grid.dimension}D")
    pts = grid.points
    g2 = np.sum(field.gradient(pts) ** 2, axis=-1)
    local = g2 <= ndimage.minimum_filter(g2, size=3, mode="nearest")
    seeds = pts[local]
    lower, upper = np.array(grid.lower), np.array(grid.upper)
    max_step = 0.25 * float(np.min(upper - lower))

    def solve_all(seed_list):
        found = []
        for x0 in seed_list:
            x = _newton(field, np.array(x0, dtype=float), newton_tol, max_iter, lower, upper, max_step)
            if x is None:
                log.debug("Newton failed from seed %s", x0)
                continue
            found.append(x)
        return found

    found = _dedupe(solve_all(seeds), dedupe_radius)
    minima = [x for x in found if np.all(np.linalg.eigvalsh(np.atleast_2d(field.hessian(x))) > 0)]
    mids = [0.5 * (a + b) for i, a in enumerate(minima) for b in minima[i + 1:]]
    found = _dedupe(found + solve_all(mids), dedupe_radius)
    crit = [_classify(field, x) for x in found]
    crit.sort(key=lambda c: (c.index, round(c.value, 12), c.location))
    return crit


# --------------------------------------------------------------------------
# sublevel connectivity


def _structure(d):
    return ndimage.generate_binary_structure(d, 1)


def _default_offset(field_values, saddle: CriticalPoint, grid: GridSpec):
    scale = float(np.ptp(field_values)) or 1.0
    eta = abs(min(saddle.hessian_eigs))
    return max(1e-6 * scale, eta * max(grid.spacing) ** 2)


def _nearest_node(grid: GridSpec, x):
    idx = []
    for xi, a, h, k in zip(x, grid.lower, grid.spacing, grid.n):
        idx.append(int(np.clip(round((xi - a) / h), 0, k - 1)))
    return tuple(idx)


def _descent_nodes(field: ScalarField, saddle: CriticalPoint, grid: GridSpec, mask, level):
    """Grid nodes inside ``mask`` reached by walking down both descent directions."""
    H = np.atleast_2d(field.hessian(saddle.point))
    w, v = np.linalg.eigh(0.5 * (H + H.T))
    direction = v[:, 0]
    h = min(grid.spacing)
    max_dist = 0.5 * max(b - a for a, b in zip(grid.lower, grid.upper))
    out = []
    for sign in (1.0, -1.0):
        hit = None
        t = 0.5 * h
        while t <= max_dist:
            x = saddle.point + sign * t * direction
            node = _nearest_node(grid, x)
            if mask[node] and field.value(grid.points[node]) < level:
                hit = node
                break
            t += 0.5 * h
        if hit is None:
            raise ResolutionError(
                f"descent side of the saddle at {saddle.location} never enters the sublevel "
                f"set on this grid; refine the grid")
        out.append(hit)
    return out


def separating_test(field: ScalarField, saddle: CriticalPoint, grid: GridSpec, level_offset=None,
                    field_values=None):
    """True iff the two descent sides of ``saddle`` lie in different components of
    ``{f < f(saddle) - level_offset}``."""
    if saddle.index != 1:
        raise ConfigurationError("separating_test needs an index-1 saddle")
    f = field.value(grid.points) if field_values is None else field_values
    offset = _default_offset(f, saddle, grid) if level_offset is None else level_offset
    level = saddle.value - offset
    mask = f < level
    labels, _ = ndimage.label(mask, structure=_structure(grid.dimension))
    a, b = _descent_nodes(field, saddle, grid, mask, level)
    return bool(labels[a] != labels[b])


# --------------------------------------------------------------------------
# labelling


def _tie_groups(values, tol=VALUE_TOL):
    """Group indices of ``values`` (sorted descending) whose values agree within ``tol``."""
    order = sorted(range(len(values)), key=lambda i: -values[i])
    groups = []
    for i in order:
        if groups and abs(values[groups[-1][0]] - values[i]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def labeling(field: ScalarField, criticals, grid: GridSpec, level_offset=None) -> MorseReport:
    """Pair every local minimum with a separating saddle (the global one with INFINITY).

    Distinct separating-saddle values are visited from the top.  At each level
    the components of the sublevel set that touch a descent side of a saddle
    at that level are the critical components; each one that contains no
    already-labelled minimum receives its argmin as a new minimum, paired with
    the saddle on its boundary.  Ties in minimum values, in the argmin of a
    component or in the boundary saddle make the landscape non-generic; the
    labelling still proceeds (by location order) and barrier intervals are
    reported alongside.
    """
    if any(not c.converged for c in criticals):
        raise ConfigurationError("labeling needs converged critical points")
    f = field.value(grid.points)
    minima = [c for c in criticals if c.index == 0]
    saddles = [c for c in criticals if c.index == 1]
    if not minima:
        raise DomainError(f"{field.name}: no local minimum found on the grid")
    notes = []

    min_vals = [m.value for m in minima]
    for grp in _tie_groups(min_vals):
        if len(grp) > 1:
            notes.append(f"minima {[minima[i].location for i in grp]} share the value "
                         f"{minima[grp[0]].value:.10g}")

    separating = [sd for sd in saddles if separating_test(field, sd, grid, level_offset, f)]

    gmin_val = min(min_vals)
    global_candidates = [m for m in minima if m.value - gmin_val <= VALUE_TOL]
    x_star = global_candidates[0]
    pairings = [SaddlePairing(INFINITY, x_star, math.inf)]
    labelled = {x_star.location}

    def min_in(labels, lab):
        return [m for m in minima if labels[_nearest_node(grid, m.location)] == lab]

    sep_vals = [sd.value for sd in separating]
    for grp in _tie_groups(sep_vals):
        level_saddles = [separating[i] for i in grp]
        top = level_saddles[0]
        offset = _default_offset(f, top, grid) if level_offset is None else level_offset
        level = top.value - offset
        mask = f < level
        labels, _ = ndimage.label(mask, structure=_structure(grid.dimension))
        touching = {}
        for sd in level_saddles:
            for node in _descent_nodes(field, sd, grid, mask, level):
                touching.setdefault(int(labels[node]), []).append(sd)
        for lab in sorted(touching):
            inside = min_in(labels, lab)
            if not inside:
                raise ResolutionError(
                    f"a critical component at level {top.value:.6g} contains no detected minimum")
            if any(m.location in labelled for m in inside):
                continue
            lowest = min(m.value for m in inside)
            argmins = [m for m in inside if m.value - lowest <= VALUE_TOL]
            bnd = sorted({sd.location: sd for sd in touching[lab]}.values(), key=lambda c: c.location)
            if len(argmins) > 1:
                notes.append(f"critical component at level {top.value:.10g} has "
                             f"{len(argmins)} minima of equal value")
            if len(bnd) > 1:
                notes.append(f"critical component at level {top.value:.10g} meets "
                             f"{len(bnd)} saddles of equal value")
            x_b, x_c = argmins[0], bnd[0]
            alts = [(sd, m) for sd in bnd for m in argmins if (sd, m) != (x_c, x_b)]
            pairings.append(SaddlePairing(x_c, x_b, x_c.value - x_b.value, alternatives=alts))
            labelled.add(x_b.location)

    finite = sorted(pairings[1:], key=lambda p: (-p.barrier, p.minimum.location))
    for p in finite:
        p.gamma = _gamma_or_none(field, p)
    pairings = pairings[:1] + finite
    if len(labelled) != len(minima):
        missing = [m.location for m in minima if m.location not in labelled]
        notes.append(f"minima left unlabelled at this resolution: {missing}")

    generic = not notes
    intervals = []
    if finite and not generic:
        upper = finite[0].saddle.value - gmin_val
        intervals = [(p.barrier, upper) for p in finite]
    H_f = finite[0].barrier if finite else None
    return MorseReport(minima, saddles, [p.saddle for p in finite], pairings, H_f, generic,
                       notes, separating, intervals)


def analyze(field: ScalarField, grid: GridSpec, **kwargs) -> MorseReport:
    """``find_critical_points`` followed by ``labeling`` on the same grid."""
    return labeling(field, find_critical_points(field, grid, **kwargs), grid)


# --------------------------------------------------------------------------
# barriers and prefactors


def barrier(report: MorseReport) -> float:
    """The Morse saddle barrier ``H_f`` (the largest finite barrier)."""
    if report.H_f is None:
        raise NoBarrierError("single local minimum: the landscape has no saddle barrier")
    return report.H_f


def prefactor(field: ScalarField, pairing: SaddlePairing) -> float:
    """``gamma = |eta_d(x_c)| / pi * sqrt(det H(x_b) / -det H(x_c))``."""
    if pairing.fictive:
        raise DomainError("the fictive pairing has no prefactor")
    sd, mn = pairing.saddle, pairing.minimum
    if sd.index != 1 or mn.index != 0:
        raise DomainError("prefactor needs an index-1 saddle and a minimum")
    det_c = float(np.linalg.det(np.atleast_2d(field.hessian(sd.point))))
    det_b = float(np.linalg.det(np.atleast_2d(field.hessian(mn.point))))
    if det_b <= 0 or det_c >= 0:
        raise DomainError(f"Hessian determinants ({det_b:.3g}, {det_c:.3g}) contradict the indices")
    eta = abs(min(sd.hessian_eigs))
    return eta / math.pi * math.sqrt(det_b / -det_c)


def _gamma_or_none(field, pairing):
    try:
        return prefactor(field, pairing)
    except DomainError:
        return None


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float


def eyring_kramers_predict(field: ScalarField, report: MorseReport, s, ell=1):
    """Predicted ``delta_{s,ell} = s gamma_ell exp(-2 H_ell / s)``.

    For non-generic landscapes a :class:`PredictionInterval` is returned,
    built from the barrier interval of the pairing.
    """
    finite = report.pairings[1:]
    if not 1 <= ell <= len(finite):
        raise ConfigurationError(f"ell must lie in [1, {len(finite)}]")
    p = finite[ell - 1]
    gamma = p.gamma if p.gamma is not None else prefactor(field, p)
    if report.generic:
        return s * gamma * math.exp(-2 * p.barrier / s)
    lo, hi = report.barrier_intervals[ell - 1]
    return PredictionInterval(s * gamma * math.exp(-2 * hi / s), s * gamma * math.exp(-2 * lo / s))


def export_report_json(report: MorseReport, path):
    with open(path, "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
    return path
