"""Time integration of the Robin-coupled bulk-surface system.

One Lie-split step of size dt:

1. Reaction substep (pointwise, exact). The bulk field solves
   u* + dt*beta_eps(u*) = u - dt*(pi(u) - f(t)) through the resolvent;
   the surface field does the same with its own graph and the extra
   explicit coupling term -dt*h'(phi)*dnu(u), where dnu(u) is the
   one-sided normal derivative of the current state. The multiplier
   xi = (rhs - u*)/dt is recorded; it equals beta_eps(u*) exactly.

2. Diffusion substep (implicit, linear). The surface solve
   (I - dt*Lap_Gamma)phi = phi* runs first; the bulk solve
   (I - dt*Lap)u = u* is then closed by the Robin ghost rows against
   h(phi) at the new surface state, so the stored states satisfy
   K*dnu(u) + u = h(phi) with the centered ghost stencil exactly and
   the recorded boundary mismatch is -K*dnu(u) with no splitting floor.

Explicit treatment of pi and the coupling term gives a mild dt
restriction (see ``model.suggested_dt``); both implicit solves are
unconditionally stable.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import model
from .errors import InputError
from .grid import (SurfaceField, laplacian_bulk_closed, normal_derivative,
                   norms, robin_ghost, trace)
from .graphs import yosida
from .stepping import (RobinWorkspace, check_finite, composed_reaction_solve,
                       reaction_solve)

log = logging.getLogger(__name__)


@dataclass
class SolverState:
    """Time level of the Robin system.

    ``xi`` and ``xi_gamma`` record the pointwise multipliers selected by
    the last reaction substep (zero at t = 0).
    """

    t: float
    u: np.ndarray
    phi: SurfaceField
    xi: np.ndarray
    xi_gamma: SurfaceField

    def copy(self):
        return SolverState(self.t, self.u.copy(), self.phi.copy(),
                           self.xi.copy(), self.xi_gamma.copy())


@dataclass
class RunResult:
    """Trajectory summary shared by both solvers."""

    mode: str
    times: np.ndarray                 # all step times, length nsteps+1
    sample_indices: List[int]
    samples: list                     # states at the sampled steps
    sample_phis: List[SurfaceField]   # phi at the sampled steps (limit:
                                      # reconstructed from boundary rows)
    reports: List[model.EnergyReport]
    reaction_bulk_range: np.ndarray       # (nsteps, 2) post-reaction min/max
    reaction_boundary_range: np.ndarray   # (nsteps, 2)
    warnings: List[str] = field(default_factory=list)

    @property
    def final(self):
        return self.samples[-1]

    def energy_arrays(self):
        """Energy report columns as a dict of aligned arrays."""
        cols = ("time", "energy", "bulk_dissipation", "surface_dissipation",
                "forcing_power", "identity_residual")
        return {c: np.array([getattr(r, c) for r in self.reports]) for c in cols}


@dataclass(frozen=True)
class SteadyResult:
    state: SolverState
    iterations: int
    converged: bool
    residual: float


@dataclass(frozen=True)
class ResidualReport:
    bulk_res: float
    surface_res: float
    robin_res: float


def initial_state(config):
    """State at t = 0 from the configured initial data."""
    u0 = config.u0.bulk(config.grid)
    phi0 = model.initial_phi(config, u0)
    return SolverState(0.0, u0, phi0,
                       np.zeros_like(u0), config.grid.zeros_surface())


def _advance(state, config, ws):
    """One step; returns (new_state, post-reaction ranges)."""
    grid, dt, eps = config.grid, config.dt, config.eps
    t = state.t
    u, phi = state.u, state.phi
    f = ws.f(t)
    fg = ws.f_gamma(t)

    dnu = normal_derivative(grid, u)
    hp = phi.map(config.coupling.hp)
    rhs_u = u - dt * (config.bulk.pi(u) - f)
    u_star, xi = reaction_solve(config.bulk.graph, eps, dt, rhs_u)

    sg = config.surface.graph
    rows, xgs = [], []
    for side in ("bottom", "top"):
        rhs = (getattr(phi, side)
               - dt * (config.surface.pi(getattr(phi, side))
                       - getattr(fg, side)
                       + getattr(hp, side) * getattr(dnu, side)))
        y, xg = reaction_solve(sg, eps, dt, rhs)
        rows.append(y)
        xgs.append(xg)
    phi_star = SurfaceField(rows[0], rows[1])
    xi_gamma = SurfaceField(xgs[0], xgs[1])
    check_finite(u_star, "reaction", t)
    check_finite(phi_star.bottom, "reaction", t)
    check_finite(phi_star.top, "reaction", t)

    phi_new = ws.solve_surface(phi_star)
    u_new = ws.solve_bulk(u_star, phi_new.map(config.coupling.h))
    check_finite(u_new, "diffusion", t)
    check_finite(phi_new.bottom, "diffusion", t)

    bulk_range = (float(u_star.min()), float(u_star.max()))
    brange = (min(float(phi_star.bottom.min()), float(phi_star.top.min())),
              max(float(phi_star.bottom.max()), float(phi_star.top.max())))
    new = SolverState(t + dt, u_new, phi_new, xi, xi_gamma)
    return new, bulk_range, brange


def step(state, config):
    """Advance one dt; validated Robin config."""
    new, _, _ = _advance(state, config, RobinWorkspace(config))
    return new


def run(config, skip_validation=False):
    """Integrate to t_final, emitting an energy report every step."""
    warnings = []
    if not skip_validation:
        config, warnings = model.validate(config)
    if config.mode != "robin":
        raise InputError(f"robin.run got mode {config.mode!r}")
    for w in warnings:
        log.warning("%s", w)
    log.info("robin run: dt=%g (suggested cap %g), T=%g, K=%g, eps=%g",
             config.dt, model.suggested_dt(config), config.t_final,
             config.K, config.eps)

    ws = RobinWorkspace(config)
    nsteps = int(round(config.t_final / config.dt))
    grid = config.grid
    state = initial_state(config)
    reports = [model.EnergyReport(0.0, model.energy(grid, state.u, state.phi,
                                                    config))]
    samples, sample_phis, sample_indices = [state.copy()], [state.phi.copy()], [0]
    bulk_ranges = np.empty((nsteps, 2))
    boundary_ranges = np.empty((nsteps, 2))

    for n in range(nsteps):
        prev = state
        state, bulk_ranges[n], boundary_ranges[n] = _advance(state, config, ws)
        state.t = (n + 1) * config.dt  # exact time grid, no accumulation drift
        reports.append(model.step_energy_report(
            grid, config, reports[-1], state.t, prev.u, prev.phi,
            state.u, state.phi))
        if (n + 1) % config.sample_every == 0 or n + 1 == nsteps:
            samples.append(state.copy())
            sample_phis.append(state.phi.copy())
            sample_indices.append(n + 1)

    times = np.arange(nsteps + 1) * config.dt
    return RunResult("robin", times, sample_indices, samples, sample_phis,
                     reports, bulk_ranges, boundary_ranges, warnings)


def steady_state(config, tol, max_steps=500_000):
    """Drive the dynamics to stationarity.

    Steps until ||u_{n+1}-u_n||/dt + ||phi_{n+1}-phi_n||/dt < tol (L2
    norms) or the cap; forcing must be constant in time. Starting at a
    fixed point returns after the first check.
    """
    config, warnings = model.validate(config)
    for w in warnings:
        log.warning("%s", w)
    if config.mode != "robin":
        raise InputError("steady_state drives the Robin dynamics; "
                         "run_limit trajectories can be tested with "
                         "stationary_residual directly")
    if config.f.time_dependent or config.f_gamma.time_dependent:
        raise InputError("steady_state requires time-independent forcing")
    ws = RobinWorkspace(config)
    grid = config.grid
    state = initial_state(config)
    residual = math.inf
    for it in range(1, max_steps + 1):
        new, _, _ = _advance(state, config, ws)
        residual = (norms(grid, new.u - state.u).l2
                    + norms(grid, new.phi - state.phi).l2) / config.dt
        state = new
        if residual < tol:
            return SteadyResult(state, it, True, residual)
    log.warning("steady_state hit the %d-step cap at residual %.3e",
                max_steps, residual)
    return SteadyResult(state, max_steps, False, residual)


def _multiplier_defect(graph, eps, u_vals, targets):
    """Distance from targets to the admissible multipliers beta_eps(u).

    For eps > 0 (or single-valued graphs) this is targets - beta_eps(u);
    for the obstacle graph at eps = 0 the target is projected onto the
    ray admitted at active nodes, onto {0} inside.
    """
    if eps > 0:
        return targets - np.asarray(yosida(graph, eps, u_vals))
    if graph.kind == "obstacle":
        tol_lo = 1e-12 * (1.0 + abs(graph.lower))
        tol_hi = 1e-12 * (1.0 + abs(graph.upper))
        at_lower = u_vals <= graph.lower + tol_lo
        at_upper = u_vals >= graph.upper - tol_hi
        proj = np.zeros_like(targets)
        proj[at_upper] = np.maximum(targets[at_upper], 0.0)
        proj[at_lower] = np.minimum(targets[at_lower], 0.0)
        proj[at_lower & at_upper] = targets[at_lower & at_upper]
        return targets - proj
    lo, hi = graph.domain
    clipped = np.clip(u_vals, lo, hi)
    beta = graph.coeff * clipped**graph.power if graph.kind == "polynomial" \
        else np.asarray(graph.beta_fn(clipped), dtype=float)
    return targets - beta


def stationary_residual(state, config):
    """L2 defects of the stationary system at the given state.

    Returns (bulk_res, surface_res, robin_res): the bulk equation
    Lap(u) = xi + pi(u) - f with the minimal admissible multiplier, the
    surface equation with the h'(phi)*dnu(u) term, and the Robin law
    via the one-sided stencil. Constant-in-time forcing is subtracted
    (the forcing-free stationary case is f = f_Gamma = 0). In limit
    mode the boundary rows are tested against the transmitted surface
    equation and robin_res is identically zero.
    """
    from .grid import integrate_bulk, integrate_surface, laplace_beltrami
    grid, eps = config.grid, config.eps
    u = state.u
    f = config.f.bulk(grid, state.t)
    fg = config.f_gamma.surface(grid, state.t)
    dnu = normal_derivative(grid, u)

    if config.mode == "robin":
        phi = state.phi
        h_phi = phi.map(config.coupling.h)
        gb, gt = robin_ghost(grid, u, h_phi, config.K)
        lap = laplacian_bulk_closed(grid, u, gb, gt)
        target = lap - config.bulk.pi(u) + f
        defect = _multiplier_defect(config.bulk.graph, eps, u, target)
        bulk_res = math.sqrt(integrate_bulk(grid, defect**2))

        lapg = laplace_beltrami(grid, phi)
        hp = phi.map(config.coupling.hp)
        rows = []
        for side in ("bottom", "top"):
            tgt = (getattr(lapg, side) - config.surface.pi(getattr(phi, side))
                   + getattr(fg, side) - getattr(hp, side) * getattr(dnu, side))
            rows.append(_multiplier_defect(config.surface.graph, eps,
                                           getattr(phi, side), tgt))
        surf_res = math.sqrt(integrate_surface(
            grid, SurfaceField(rows[0]**2, rows[1]**2)))

        law = dnu * config.K + trace(u) - h_phi
        robin_res = math.sqrt(integrate_surface(grid, law.map(np.square)))
        return ResidualReport(bulk_res, surf_res, robin_res)

    # limit mode: interior bulk equation + transmitted boundary equation
    alpha, eta = config.coupling.affine
    lap = laplacian_bulk_closed(grid, u, u[:, 0], u[:, -1])  # ghost unused rows
    target = (lap - config.bulk.pi(u) + f)
    defect = _multiplier_defect(config.bulk.graph, eps, u, target)
    defect[:, 0] = 0.0
    defect[:, -1] = 0.0
    bulk_res = math.sqrt(integrate_bulk(grid, defect**2))

    u_gamma = trace(u)
    w = u_gamma.map(lambda s: (s - eta) / alpha)
    lapg = laplace_beltrami(grid, u_gamma)
    rows = []
    for side in ("bottom", "top"):
        tgt = (getattr(lapg, side)
               - alpha * (config.surface.pi(getattr(w, side)) - getattr(fg, side))
               - alpha**2 * getattr(dnu, side))
        # admissible term is alpha*beta_Gamma(w); divide out alpha
        rows.append(alpha * _multiplier_defect(config.surface.graph, eps,
                                               getattr(w, side), tgt / alpha))
    surf_res = math.sqrt(integrate_surface(grid,
                                           SurfaceField(rows[0]**2, rows[1]**2)))
    return ResidualReport(bulk_res, surf_res, 0.0)
