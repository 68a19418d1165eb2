"""Independent dense reference integrators for the solver tests.

These rebuild the semi-discrete right-hand sides from scratch (ghost
closure, one-sided flux, plain loops) and integrate them with explicit
Euler at a small sub-step, so they share no stepping code with the
package. Interval geometry only (nx = 1), eps = 0, polynomial graphs.
"""

import numpy as np


def _beta(graph):
    assert graph.kind == "polynomial"
    return lambda s: graph.coeff * s**graph.power


def explicit_euler_1d(config, refine=100):
    """Unsplit explicit-Euler trajectory of the interval-mode system.

    Integrates with step config.dt/refine and records the state at
    every multiple of config.dt. Returns (times, us) where us has shape
    (nsteps+1, ny); in Robin mode the surface pair is appended so rows
    are [u(y...), phi_bottom, phi_top].
    """
    g = config.grid
    assert g.nx == 1 and config.eps == 0.0
    hy = g.hy
    dts = config.dt / refine
    nsteps = round(config.t_final / config.dt)
    beta = _beta(config.bulk.graph)
    beta_g = _beta(config.surface.graph)
    pi, pi_g = config.bulk.pi, config.surface.pi

    static = not (config.f.time_dependent or config.f_gamma.time_dependent)
    if static:
        fb = config.f.bulk(g, 0.0)[0]
        fs = config.f_gamma.surface(g, 0.0)
        fg = (fs.bottom[0], fs.top[0])

    u = config.u0.bulk(g)[0].astype(float).copy()
    lap = np.zeros_like(u)

    if config.mode == "robin":
        from bsac.model import initial_phi
        phi0 = initial_phi(config, config.u0.bulk(g))
        pb, pt = float(phi0.bottom[0]), float(phi0.top[0])
        h, hp = config.coupling.h, config.coupling.hp
        K = config.K
    else:
        alpha, eta = config.coupling.affine

    out = [np.concatenate([u, [pb, pt]]) if config.mode == "robin" else u.copy()]
    for n in range(nsteps * refine):
        t = n * dts
        if not static:
            fb = config.f.bulk(g, t)[0]
            fs = config.f_gamma.surface(g, t)
            fg = (fs.bottom[0], fs.top[0])
        dnu_b = (1.5 * u[0] - 2.0 * u[1] + 0.5 * u[2]) / hy
        dnu_t = (1.5 * u[-1] - 2.0 * u[-2] + 0.5 * u[-3]) / hy
        lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / hy**2

        if config.mode == "robin":
            gb = u[1] + (2.0 * hy / K) * (h(pb) - u[0])
            gt = u[-2] + (2.0 * hy / K) * (h(pt) - u[-1])
            lap[0] = (u[1] - 2.0 * u[0] + gb) / hy**2
            lap[-1] = (gt - 2.0 * u[-1] + u[-2]) / hy**2
            du = lap - beta(u) - pi(u) + fb
            dpb = -beta_g(pb) - pi_g(pb) - hp(pb) * dnu_b + fg[0]
            dpt = -beta_g(pt) - pi_g(pt) - hp(pt) * dnu_t + fg[1]
            u = u + dts * du
            pb = pb + dts * dpb
            pt = pt + dts * dpt
        else:
            du = lap - beta(u) - pi(u) + fb
            wb, wt = (u[0] - eta) / alpha, (u[-1] - eta) / alpha
            du[0] = (-alpha * (beta_g(wb) + pi_g(wb) - fg[0])
                     - alpha**2 * dnu_b)
            du[-1] = (-alpha * (beta_g(wt) + pi_g(wt) - fg[1])
                      - alpha**2 * dnu_t)
            u = u + dts * (du - config.viscosity * u)

        if (n + 1) % refine == 0:
            if config.mode == "robin":
                out.append(np.concatenate([u, [pb, pt]]))
            else:
                out.append(u.copy())
    times = np.arange(nsteps + 1) * config.dt
    return times, np.array(out)
