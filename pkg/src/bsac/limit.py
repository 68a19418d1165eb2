"""Time integration of the transmitted (fast-reaction) limit system.

The transmission law u = alpha*phi + eta holds on the boundary, so the
surface unknown is stored as the boundary rows of the single bulk array
and phi = (u_G - eta)/alpha is derived, never stored. One Lie-split
step:

1. Reaction. Interior rows solve the bulk reaction exactly as the Robin
   solver does. Each boundary row solves
   y + dt*alpha*beta_eps_G((y - eta)/alpha) = rhs pointwise through the
   affine substitution (one resolvent evaluation); for the obstacle
   graph at eps = 0 this is the exact projection onto the interval of
   ``compose_affine_domain``.

2. Diffusion. One coupled implicit solve advances everything: interior
   rows carry the bulk stencil, boundary rows the surface stencil plus
   the alpha^2*dnu(u) flux through the second-order one-sided stencil,
   taken implicitly (an explicit boundary flux destabilizes for small
   hy). The second-neighbour coefficient is eliminated against the
   adjacent interior row, so the system stays tridiagonal per mode.

The optional viscosity term adds rho*u to both equations (implicitly);
it is an experimental regularization, zero by default.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import InputError
from .grid import SurfaceField, trace
from .robin import RunResult
from .stepping import (LimitWorkspace, check_finite, composed_reaction_solve,
                       reaction_solve)

log = logging.getLogger(__name__)


@dataclass
class LimitState:
    """Time level of the limit system.

    The boundary rows of ``u`` are the surface unknown u_G; the
    transmission law holds by construction.
    """

    t: float
    u: np.ndarray
    xi: np.ndarray          # interior multiplier rows (boundary rows zero)
    xi_gamma: SurfaceField

    def copy(self):
        return LimitState(self.t, self.u.copy(), self.xi.copy(),
                          self.xi_gamma.copy())

    @property
    def phi(self):
        raise AttributeError("phi is derived in limit mode; use "
                             "reconstruct_phi(trace(u), alpha, eta)")


def reconstruct_phi(u_gamma, alpha, eta):
    """Surface order parameter from the transmitted trace: (u_G - eta)/alpha."""
    if alpha == 0.0:
        raise InputError("reconstruct_phi requires alpha != 0")
    return u_gamma.map(lambda v: (v - eta) / alpha)


def state_phi(state, config):
    alpha, eta = config.coupling.affine
    return reconstruct_phi(trace(state.u), alpha, eta)


def initial_state(config):
    """State at t = 0; boundary rows of u0 are the initial trace."""
    u0 = config.u0.bulk(config.grid)
    return LimitState(0.0, u0, np.zeros_like(u0),
                      config.grid.zeros_surface())


def _advance(state, config, ws):
    grid, dt, eps = config.grid, config.dt, config.eps
    alpha, eta = config.coupling.affine
    t = state.t
    u = state.u
    f = ws.f(t)
    fg = ws.f_gamma(t)

    u_star = np.empty_like(u)
    xi = np.zeros_like(u)
    rhs_int = u[:, 1:-1] - dt * (config.bulk.pi(u[:, 1:-1]) - f[:, 1:-1])
    u_star[:, 1:-1], xi[:, 1:-1] = reaction_solve(config.bulk.graph, eps, dt,
                                                  rhs_int)
    sg = config.surface.graph
    xgs = []
    for j, side in ((0, "bottom"), (-1, "top")):
        w_old = (u[:, j] - eta) / alpha
        rhs = u[:, j] - dt * alpha * (config.surface.pi(w_old)
                                      - getattr(fg, side))
        u_star[:, j], xg = composed_reaction_solve(sg, eps, dt, alpha, eta, rhs)
        xgs.append(xg)
    xi_gamma = SurfaceField(xgs[0], xgs[1])
    check_finite(u_star, "reaction", t)

    u_new = ws.solve_coupled(u_star)
    check_finite(u_new, "diffusion", t)

    bulk_range = (float(u_star[:, 1:-1].min()), float(u_star[:, 1:-1].max()))
    brange = (min(float(u_star[:, 0].min()), float(u_star[:, -1].min())),
              max(float(u_star[:, 0].max()), float(u_star[:, -1].max())))
    return LimitState(t + dt, u_new, xi, xi_gamma), bulk_range, brange


def step_limit(state, config):
    """Advance one dt; validated limit config."""
    new, _, _ = _advance(state, config, LimitWorkspace(config))
    return new


def run_limit(config, skip_validation=False):
    """Integrate to t_final; phi is reconstructed for reporting."""
    warnings = []
    if not skip_validation:
        config, warnings = model.validate(config)
    if config.mode != "limit":
        raise InputError(f"limit.run_limit got mode {config.mode!r}")
    for w in warnings:
        log.warning("%s", w)
    alpha, eta = config.coupling.affine
    log.info("limit run: dt=%g, T=%g, alpha=%g, eta=%g, eps=%g",
             config.dt, config.t_final, alpha, eta, config.eps)

    ws = LimitWorkspace(config)
    nsteps = int(round(config.t_final / config.dt))
    grid = config.grid
    state = initial_state(config)

    def phi_of(st):
        return reconstruct_phi(trace(st.u), alpha, eta)

    phi0 = phi_of(state)
    reports = [model.EnergyReport(0.0, model.energy(grid, state.u, phi0,
                                                    config))]
    samples, sample_phis, sample_indices = [state.copy()], [phi0], [0]
    bulk_ranges = np.empty((nsteps, 2))
    boundary_ranges = np.empty((nsteps, 2))

    for n in range(nsteps):
        prev, phi_prev = state, phi_of(state)
        state, bulk_ranges[n], boundary_ranges[n] = _advance(state, config, ws)
        state.t = (n + 1) * config.dt
        phi_new = phi_of(state)
        reports.append(model.step_energy_report(
            grid, config, reports[-1], state.t, prev.u, phi_prev,
            state.u, phi_new))
        if (n + 1) % config.sample_every == 0 or n + 1 == nsteps:
            samples.append(state.copy())
            sample_phis.append(phi_new)
            sample_indices.append(n + 1)

    times = np.arange(nsteps + 1) * config.dt
    return RunResult("limit", times, sample_indices, samples, sample_phis,
                     reports, bulk_ranges, boundary_ranges, warnings)
