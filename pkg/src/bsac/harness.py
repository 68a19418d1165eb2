"""Experiment orchestration: K-sweeps, Yosida sweeps, perturbation
scaling studies, and log-log rate fitting.

Error norms follow the mixed space-time convention
x_omega = max_t ||d(t)||_L2 + (int_0^T ||d(t)||_H1^2 dt)^{1/2}
for a bulk difference trajectory d (x_gamma is the surface analogue);
the max runs over stored samples and the time integral is a trapezoid
over sample times, so sweeps sample every step. The boundary mismatch
is the L2-in-time, L2-on-the-boundary norm of h(phi) - trace(u).

All sweeps run each entry independently and assemble tables in
parameter order, so results do not depend on execution order.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import limit, model, robin
from .errors import FitError, InputError, NumericalError
from .grid import (SurfaceField, bulk_gradient_sq, integrate_bulk,
                   integrate_surface, surface_gradient_sq, trace)

log = logging.getLogger(__name__)

# 7 points spanning 3 decades: stable slope fits at desk scale.
DEFAULT_KS = tuple(10.0 ** (-1.0 - 0.5 * i) for i in range(7))

_PERTURBABLE = ("u0", "phi0", "f", "fGamma")


@dataclass(frozen=True)
class ErrorNorms:
    """Mixed space-time norms of a difference trajectory."""

    x_omega: float
    x_gamma: float
    boundary_mismatch: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log parameter, log error)."""

    slope: float
    intercept: float
    r2: float
    n_used: int
    excluded: Tuple[int, ...] = ()


@dataclass
class ConvergenceTable:
    parameter: str
    params: List[float]                 # strictly decreasing
    rows: List[Optional[ErrorNorms]]    # None marks a failed run
    fits: Dict[str, RateFit] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(r, name) if r is not None else math.nan
                         for r in self.rows])


@dataclass
class ScalingReport:
    """Perturbation response ratios for one datum."""

    which: str
    deltas: List[float]
    norms: List[Optional[ErrorNorms]]
    ratios: List[float]       # (x_omega + x_gamma)/delta, nan on failure
    ratio_band: float         # max/min over finite ratios
    notes: List[str] = field(default_factory=list)


def _sample_times(result):
    return result.times[np.asarray(result.sample_indices)]


def trajectory_errors(grid, result_a, result_b, coupling=None):
    """ErrorNorms of the difference of two runs on the same grid/dt.

    Both runs must have identical sample times. The mismatch norm is
    the L2(boundary x time) norm of the difference of the two runs'
    transmission defects h(phi) - trace(u); against a limit-mode
    reference (whose defect vanishes) this is the Robin run's own
    mismatch. With no coupling given the mismatch is reported as 0.
    """
    ta, tb = _sample_times(result_a), _sample_times(result_b)
    if ta.size != tb.size or not np.allclose(ta, tb, rtol=0.0, atol=1e-12):
        raise InputError("runs have different sample times")

    l2_max_u = 0.0
    l2_max_p = 0.0
    h1sq_u = np.empty(ta.size)
    h1sq_p = np.empty(ta.size)
    missq = np.empty(ta.size)
    for i, (sa, sb) in enumerate(zip(result_a.samples, result_b.samples)):
        du = sa.u - sb.u
        dphi = result_a.sample_phis[i] - result_b.sample_phis[i]
        l2sq_u = integrate_bulk(grid, du**2)
        l2sq_p = integrate_surface(grid, dphi.map(np.square))
        l2_max_u = max(l2_max_u, math.sqrt(l2sq_u))
        l2_max_p = max(l2_max_p, math.sqrt(l2sq_p))
        h1sq_u[i] = l2sq_u + bulk_gradient_sq(grid, du)
        h1sq_p[i] = l2sq_p + surface_gradient_sq(grid, dphi)
        if coupling is None:
            missq[i] = 0.0
        else:
            ma = result_a.sample_phis[i].map(coupling.h) - trace(sa.u)
            mb = result_b.sample_phis[i].map(coupling.h) - trace(sb.u)
            missq[i] = integrate_surface(grid, (ma - mb).map(np.square))

    x_omega = l2_max_u + math.sqrt(np.trapezoid(h1sq_u, ta))
    x_gamma = l2_max_p + math.sqrt(np.trapezoid(h1sq_p, ta))
    mismatch = math.sqrt(np.trapezoid(missq, ta))
    return ErrorNorms(x_omega, x_gamma, mismatch)


def fit_rate(params, errors):
    """Least-squares slope of log(error) against log(parameter).

    Rows with nonpositive error are excluded (a zero error has no
    logarithm); fewer than 3 usable rows, or parameters without spread,
    raise FitError. r2 is against the fitted line (1.0 for a perfect
    horizontal fit).
    """
    params = np.asarray(params, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if params.shape != errors.shape or params.ndim != 1:
        raise InputError("fit_rate needs matching 1-d params and errors")
    if np.any(params <= 0.0):
        raise InputError("fit_rate parameters must be positive")
    usable = np.isfinite(errors) & (errors > 0.0)
    excluded = tuple(int(i) for i in np.nonzero(~usable)[0])
    if excluded:
        log.info("fit_rate excluded rows %s (nonpositive or missing error)",
                 list(excluded))
    if int(usable.sum()) < 3:
        raise FitError(f"only {int(usable.sum())} usable rows, need 3")
    x = np.log(params[usable])
    y = np.log(errors[usable])
    if np.ptp(x) == 0.0:
        raise FitError("degenerate fit: all parameters equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return RateFit(float(slope), float(intercept), float(r2),
                   int(usable.sum()), excluded)


def _run_mode(config):
    if config.mode == "limit":
        return limit.run_limit(config)
    return robin.run(config)


def _check_decreasing(values, label):
    values = [float(v) for v in values]
    if len(values) < 1 or any(b >= a for a, b in zip(values, values[1:])):
        raise InputError(f"{label} must be strictly decreasing")
    return values


def _fit_table(table):
    for name in ("x_omega", "x_gamma", "boundary_mismatch"):
        try:
            table.fits[name] = fit_rate(table.params, table.column(name))
        except FitError as exc:
            table.notes.append(f"{name}: fit failed ({exc})")
    return table


def sweep_K(base_config, Ks=None):
    """Robin runs over a decreasing K list against one limit reference.

    The reference is the limit run on the same grid and dt, isolating
    the K-dependence from discretization error. Requires affine
    coupling and K-independent data; a diverging entry leaves a failure
    marker instead of a row.
    """
    Ks = _check_decreasing(DEFAULT_KS if Ks is None else Ks, "K values")
    if base_config.coupling.affine is None:
        raise InputError("sweep_K requires affine coupling")
    base_config = base_config.with_updates(sample_every=1)
    grid = base_config.grid

    ref = limit.run_limit(base_config.with_updates(mode="limit"))
    table = ConvergenceTable("K", Ks, [])
    for K in Ks:
        try:
            res = robin.run(base_config.with_updates(mode="robin", K=K))
            table.rows.append(trajectory_errors(grid, res, ref,
                                                base_config.coupling))
        except NumericalError as exc:
            log.warning("sweep_K entry K=%g failed: %s", K, exc)
            table.rows.append(None)
            table.notes.append(f"K={K:g}: {exc}")
    return _fit_table(table)


def sweep_eps(base_config, epss):
    """Yosida-regularized runs against the exact-resolvent run.

    Report-only diagnostic: compares each eps > 0 run with the eps = 0
    run in the same mode and fits an empirical slope; no theory rate is
    enforced.
    """
    epss = _check_decreasing(epss, "eps values")
    if epss[-1] <= 0.0:
        raise InputError("eps values must be positive")
    base_config = base_config.with_updates(sample_every=1)
    grid = base_config.grid

    ref = _run_mode(base_config.with_updates(eps=0.0))
    table = ConvergenceTable("eps", epss, [])
    for eps in epss:
        try:
            res = _run_mode(base_config.with_updates(eps=eps))
            table.rows.append(trajectory_errors(grid, res, ref,
                                                base_config.coupling))
        except NumericalError as exc:
            log.warning("sweep_eps entry eps=%g failed: %s", eps, exc)
            table.rows.append(None)
            table.notes.append(f"eps={eps:g}: {exc}")
    return _fit_table(table)


def _bulk_profile(grid):
    """Fixed smooth bulk perturbation with unit L2 norm."""
    raw = np.outer(np.cos(2.0 * np.pi * grid.x / grid.lx),
                   np.cos(np.pi * grid.y)) + 0.3
    return raw / math.sqrt(integrate_bulk(grid, raw**2))


def _surface_profile(grid):
    """Fixed smooth surface perturbation with unit L2 norm."""
    if grid.nx == 1:
        raw = SurfaceField(np.ones(1), np.ones(1))
    else:
        row = np.cos(2.0 * np.pi * grid.x / grid.lx) + 0.3
        raw = SurfaceField(row, row.copy())
    return raw * (1.0 / math.sqrt(integrate_surface(grid, raw.map(np.square))))


def _perturbed(config, which, delta):
    """Config with the chosen datum shifted by delta times the profile."""
    grid = config.grid
    if which == "u0":
        payload = config.u0.bulk(grid) + delta * _bulk_profile(grid)
        return config.with_updates(u0=model.DataSpec(kind="array",
                                                     payload=payload))
    if which == "phi0":
        prof = _surface_profile(grid)
        if config.mode == "limit":
            # phi is the transmitted trace: shifting phi0 by delta*q
            # shifts the boundary rows of u0 by alpha*delta*q.
            alpha = config.coupling.affine[0]
            payload = config.u0.bulk(grid)
            payload[:, 0] += alpha * delta * prof.bottom
            payload[:, -1] += alpha * delta * prof.top
            return config.with_updates(u0=model.DataSpec(kind="array",
                                                         payload=payload))
        base = model.initial_phi(config, config.u0.bulk(grid))
        return config.with_updates(phi0=model.DataSpec(
            kind="array", payload=base + prof * delta))
    spec = config.f if which == "f" else config.f_gamma
    if spec.time_dependent:
        raise InputError(f"perturbing {which} requires time-independent "
                         "base forcing")
    if which == "f":
        payload = spec.bulk(grid) + delta * _bulk_profile(grid)
        return config.with_updates(f=model.DataSpec(kind="array",
                                                    payload=payload))
    payload = spec.surface(grid) + _surface_profile(grid) * delta
    return config.with_updates(f_gamma=model.DataSpec(kind="array",
                                                      payload=payload))


def ctsdep(base_config, deltas, which):
    """Scaling of the solution response to data perturbations.

    Perturbs the chosen datum by delta times a fixed unit-norm profile
    and reports (x_omega + x_gamma)/delta per delta plus the max/min
    ratio across deltas; a ratio band near 1 reflects the Lipschitz
    continuous-dependence estimate.
    """
    if which not in _PERTURBABLE:
        raise InputError(f"unknown datum {which!r}, expected one of "
                         f"{_PERTURBABLE}")
    deltas = _check_decreasing(deltas, "deltas")
    if deltas[-1] <= 0.0:
        raise InputError("deltas must be positive")
    base_config = base_config.with_updates(sample_every=1)
    grid = base_config.grid

    base = _run_mode(base_config)
    rows, ratios, notes = [], [], []
    for delta in deltas:
        try:
            res = _run_mode(_perturbed(base_config, which, delta))
            err = trajectory_errors(grid, res, base, base_config.coupling)
            rows.append(err)
            ratios.append((err.x_omega + err.x_gamma) / delta)
        except NumericalError as exc:
            log.warning("ctsdep entry delta=%g failed: %s", delta, exc)
            rows.append(None)
            ratios.append(math.nan)
            notes.append(f"delta={delta:g}: {exc}")
    finite = [r for r in ratios if math.isfinite(r)]
    band = math.nan
    if finite and min(finite) > 0.0:
        band = max(finite) / min(finite)
    return ScalingReport(which, deltas, rows, ratios, band, notes)
