"""Shared time-stepping plumbing for the two solvers.

Both solvers use Lie splitting: an exact pointwise resolvent step for
the convex reaction part (with the Lipschitz pi terms and couplings
explicit), then implicit diffusion. The periodic x-direction
diagonalizes by a real FFT, after which each Fourier mode carries an
independent tridiagonal system across y that the kernel backend solves
in a batch:

* Robin bulk solve: (I - dt*Lap)u = rhs with the ghost closure folded
  into the boundary rows, h(phi) entering the right-hand side.
* Surface solve: (I - dt*Lap_Gamma)phi = rhs, diagonal per mode.
* Limit coupled solve: interior rows carry the bulk stencil, boundary
  rows the surface stencil plus the alpha^2 * dnu(u) flux through the
  second-order one-sided stencil. That stencil reaches two rows inward;
  one exact row elimination per boundary restores tridiagonal form.

All matrices depend only on (grid, dt, K or alpha, viscosity), so they
are assembled once per run in a workspace object.
"""

import numpy as np

from . import backends, graphs
from .errors import DivergenceError
from .grid import SurfaceField

_IRFT_KW = {"axis": 0}


def mode_eigenvalues(grid):
    """Eigenvalues of the negated periodic second difference, rfft order."""
    k = np.arange(grid.nx // 2 + 1)
    return (2.0 - 2.0 * np.cos(2.0 * np.pi * k / grid.nx)) / grid.hx**2


def check_finite(values, substep, t):
    if not np.all(np.isfinite(values)):
        raise DivergenceError(
            f"non-finite values after {substep} substep at t={t:.6g}",
            substep=substep, t=t)


def reaction_solve(graph, eps, lam, rhs):
    """Solve y + lam*beta_eps(y) = rhs elementwise; beta_eps is the
    Yosida approximation for eps > 0 and the graph itself at eps = 0.

    Returns (y, xi) with xi = (rhs - y)/lam, the discrete selection: it
    equals beta_eps(y) exactly (and lies in beta(J_eps y)).
    """
    y = graphs.resolvent_of_yosida(graph, eps, lam, rhs)
    xi = (rhs - y) / lam
    return y, xi


def composed_reaction_solve(graph, eps, lam, alpha, eta, rhs):
    """Boundary-row reaction of the limit problem.

    Solves y + lam*alpha*beta_eps((y - eta)/alpha) = rhs pointwise. The
    affine substitution w = (y - eta)/alpha turns this into the plain
    scalar problem w + lam*beta_eps(w) = (rhs - eta)/alpha, so one
    resolvent evaluation suffices; for the obstacle graph at eps = 0
    the result is exactly the projection of rhs onto the composed
    domain interval (monotone image of the clamp).

    Returns (y, xi_gamma) with xi_gamma = (rhs - y)/(lam*alpha).
    """
    w, _ = reaction_solve(graph, eps, lam, (rhs - eta) / alpha)
    y = alpha * w + eta
    xi_gamma = (rhs - y) / (lam * alpha)
    return y, xi_gamma


class _ForcingCache:
    """Evaluate a DataSpec repeatedly, caching time-independent fields."""

    def __init__(self, spec, grid, role):
        self._spec = spec
        self._grid = grid
        self._role = role
        self._static = None
        if not spec.time_dependent:
            self._static = self._evaluate(0.0)

    def _evaluate(self, t):
        if self._role == "bulk":
            return self._spec.bulk(self._grid, t)
        return self._spec.surface(self._grid, t)

    def __call__(self, t):
        if self._static is not None:
            return self._static
        return self._evaluate(t)


class RobinWorkspace:
    """Precomputed implicit systems and forcing caches for Robin stepping."""

    def __init__(self, config):
        grid = config.grid
        dt, K = config.dt, config.K
        self.grid = grid
        self.config = config
        lam = mode_eigenvalues(grid)
        nm, ny = lam.size, grid.ny
        r = dt / grid.hy**2
        self.cb = 2.0 * dt / (K * grid.hy)

        d = np.empty((nm, ny))
        d[:, :] = 1.0 + dt * lam[:, None] + 2.0 * r
        d[:, 0] += self.cb
        d[:, -1] += self.cb
        dl = np.full((nm, ny), -r)
        du = np.full((nm, ny), -r)
        du[:, 0] = -2.0 * r
        dl[:, -1] = -2.0 * r
        self.bulk_bands = (dl, d, du)
        self.surf_denom = 1.0 + dt * lam
        self.f = _ForcingCache(config.f, grid, "bulk")
        self.f_gamma = _ForcingCache(config.f_gamma, grid, "surface")

    def solve_bulk(self, rhs, h_of_phi):
        """(I - dt*Lap)u = rhs with Robin ghost closure against h(phi)."""
        B = np.fft.rfft(rhs, axis=0)
        B[:, 0] += self.cb * np.fft.rfft(h_of_phi.bottom)
        B[:, -1] += self.cb * np.fft.rfft(h_of_phi.top)
        X = backends.thomas_batch(*self.bulk_bands, B)
        return np.fft.irfft(X, n=self.grid.nx, **_IRFT_KW)

    def solve_surface(self, phi_star):
        """(I - dt*Lap_Gamma)phi = phi_star on both circles (exact, circulant)."""
        out = []
        for row in (phi_star.bottom, phi_star.top):
            rh = np.fft.rfft(row) / self.surf_denom
            out.append(np.fft.irfft(rh, n=self.grid.nx))
        return SurfaceField(out[0], out[1])


class LimitWorkspace:
    """Precomputed coupled implicit system for the limit problem."""

    def __init__(self, config):
        grid = config.grid
        dt = config.dt
        alpha = config.coupling.affine[0]
        v = dt * config.viscosity
        self.grid = grid
        self.config = config
        lam = mode_eigenvalues(grid)
        nm, ny = lam.size, grid.ny
        r = dt / grid.hy**2
        ca = dt * alpha**2 / grid.hy
        # one-sided flux rows reach two nodes inward; eliminating the
        # second-neighbour coefficient against the adjacent interior row
        # restores a tridiagonal system (q is the multiplier).
        self.q = 0.5 * ca / r

        di = 1.0 + dt * lam + 2.0 * r + v
        d = np.empty((nm, ny))
        d[:, :] = di[:, None]
        d[:, 0] = 1.0 + dt * lam + ca + v
        d[:, -1] = 1.0 + dt * lam + ca + v
        dl = np.full((nm, ny), -r)
        du = np.full((nm, ny), -r)
        du[:, 0] = -2.0 * ca + self.q * di
        dl[:, -1] = -2.0 * ca + self.q * di
        self.bands = (dl, d, du)
        self.f = _ForcingCache(config.f, grid, "bulk")
        self.f_gamma = _ForcingCache(config.f_gamma, grid, "surface")

    def solve_coupled(self, rhs):
        """One implicit solve advancing bulk and boundary rows together."""
        B = np.fft.rfft(rhs, axis=0)
        B[:, 0] += self.q * B[:, 1]
        B[:, -1] += self.q * B[:, -2]
        X = backends.thomas_batch(*self.bands, B)
        return np.fft.irfft(X, n=self.grid.nx, **_IRFT_KW)
