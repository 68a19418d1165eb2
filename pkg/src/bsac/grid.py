"""Geometry, discrete operators and quadratures.

The domain is the periodic strip (R / Lx Z) x [0, 1] sampled on a
tensor grid: ``nx`` equispaced periodic samples in x (spacing
hx = lx/nx) and ``ny`` samples across [0, 1] including both boundary
rows (spacing hy = 1/(ny-1)). The boundary consists of the two circles
y = 0 and y = 1, where the surface Laplacian is the periodic second
difference in x. A degenerate interval mode (nx = 1, lx = 1) collapses
the strip to [0, 1] with a two-point boundary; every operator below
handles it without special cases because the periodic x-stencils vanish
identically at nx = 1.

Bulk fields are plain (nx, ny) float arrays; surface fields carry one
length-nx array per boundary circle. Quadrature is rectangle in x
(uniform periodic weights) and trapezoid in y; the H1 seminorm uses
forward differences, which makes the implicit diffusion solves exact
proximal steps of the reported Dirichlet energy.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class StripGrid:
    """Periodic strip (or degenerate interval) sampling."""

    nx: int
    ny: int
    lx: float = 1.0
    geometry: str = "strip"

    def __post_init__(self):
        if self.geometry not in ("strip", "interval"):
            raise InputError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "interval" and self.nx != 1:
            raise InputError("interval mode requires nx = 1")
        if self.nx < 1:
            raise InputError(f"nx must be >= 1, got {self.nx}")
        if self.ny < 3:
            raise InputError(f"ny must be >= 3, got {self.ny}")
        if not (self.lx > 0):
            raise InputError(f"lx must be positive, got {self.lx}")

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return 1.0 / (self.ny - 1)

    @property
    def x(self):
        return np.arange(self.nx) * self.hx

    @property
    def y(self):
        return np.linspace(0.0, 1.0, self.ny)

    @property
    def bulk_measure(self):
        return self.lx * 1.0

    @property
    def surface_measure(self):
        return 2.0 * self.lx

    def zeros_bulk(self):
        return np.zeros((self.nx, self.ny))

    def zeros_surface(self):
        return SurfaceField(np.zeros(self.nx), np.zeros(self.nx))


def interval_grid(ny):
    """[0, 1] with a two-point boundary; x-derivatives vanish."""
    return StripGrid(nx=1, ny=ny, lx=1.0, geometry="interval")


@dataclass
class SurfaceField:
    """Values on the two boundary circles y = 0 (bottom) and y = 1 (top)."""

    bottom: np.ndarray
    top: np.ndarray

    def __post_init__(self):
        self.bottom = np.asarray(self.bottom, dtype=float)
        self.top = np.asarray(self.top, dtype=float)
        if self.bottom.shape != self.top.shape or self.bottom.ndim != 1:
            raise InputError("surface rows must be 1-d arrays of equal length")

    def copy(self):
        return SurfaceField(self.bottom.copy(), self.top.copy())

    def map(self, fn):
        return SurfaceField(np.asarray(fn(self.bottom), dtype=float),
                            np.asarray(fn(self.top), dtype=float))

    def __add__(self, other):
        return SurfaceField(self.bottom + other.bottom, self.top + other.top)

    def __sub__(self, other):
        return SurfaceField(self.bottom - other.bottom, self.top - other.top)

    def __mul__(self, c):
        return SurfaceField(self.bottom * c, self.top * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def max_abs(self):
        return max(float(np.max(np.abs(self.bottom), initial=0.0)),
                   float(np.max(np.abs(self.top), initial=0.0)))


def _check_bulk(grid, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.nx, grid.ny):
        raise InputError(
            f"bulk field shape {u.shape} does not match grid "
            f"({grid.nx}, {grid.ny})")
    return u


def _check_surface(grid, phi):
    if phi.bottom.shape != (grid.nx,):
        raise InputError(
            f"surface field length {phi.bottom.shape} does not match nx={grid.nx}")
    return phi


def _dxx(grid, values, axis=0):
    # periodic centered second difference; identically zero when nx == 1
    return (np.roll(values, -1, axis=axis) + np.roll(values, 1, axis=axis)
            - 2.0 * values) / grid.hx**2


def laplacian_bulk(grid, u):
    """Five-point Laplacian on interior rows; boundary rows are left zero.

    Boundary rows need a closure (see ``robin_ghost`` /
    ``laplacian_bulk_closed``), so this routine reports them as 0.
    """
    u = _check_bulk(grid, u)
    out = np.zeros_like(u)
    out[:, 1:-1] = (_dxx(grid, u)[:, 1:-1]
                    + (u[:, 2:] + u[:, :-2] - 2.0 * u[:, 1:-1]) / grid.hy**2)
    return out


def laplacian_bulk_closed(grid, u, ghost_bottom, ghost_top):
    """Five-point Laplacian on all rows, closing y with given ghost rows."""
    u = _check_bulk(grid, u)
    padded = np.empty((grid.nx, grid.ny + 2))
    padded[:, 1:-1] = u
    padded[:, 0] = ghost_bottom
    padded[:, -1] = ghost_top
    return (_dxx(grid, u)
            + (padded[:, 2:] + padded[:, :-2] - 2.0 * u) / grid.hy**2)


def laplace_beltrami(grid, phi):
    """Periodic second difference along each boundary circle.

    For the interval grid (nx = 1) the boundary is two points and the
    result is identically zero.
    """
    _check_surface(grid, phi)
    return phi.map(lambda row: (np.roll(row, -1) + np.roll(row, 1)
                                - 2.0 * row) / grid.hx**2)


def trace(u):
    """Boundary rows of a bulk field as a surface field (copies)."""
    u = np.asarray(u, dtype=float)
    return SurfaceField(u[:, 0].copy(), u[:, -1].copy())


def normal_derivative(grid, u):
    """Outward normal derivative by the second-order one-sided stencil.

    At y = 0 the outward normal is -e_y, giving
    (1.5*u0 - 2*u1 + 0.5*u2)/hy; mirrored at y = 1. Exact for fields
    quadratic in y.
    """
    u = _check_bulk(grid, u)
    hy = grid.hy
    bottom = (1.5 * u[:, 0] - 2.0 * u[:, 1] + 0.5 * u[:, 2]) / hy
    top = (1.5 * u[:, -1] - 2.0 * u[:, -2] + 0.5 * u[:, -3]) / hy
    return SurfaceField(bottom, top)


def robin_ghost(grid, u, h_of_phi, K):
    """Ghost rows making the centered normal derivative satisfy the Robin law.

    Returns (ghost_bottom, ghost_top) such that with the centered ghost
    stencil K*dnu(u) + u = h(phi) holds exactly at every boundary node;
    ``h_of_phi`` is the surface field of h values.
    """
    if not (K > 0):
        raise InputError(f"K must be positive, got {K}")
    u = _check_bulk(grid, u)
    c = 2.0 * grid.hy / K
    gb = u[:, 1] + c * (h_of_phi.bottom - u[:, 0])
    gt = u[:, -2] + c * (h_of_phi.top - u[:, -1])
    return gb, gt


def y_weights(grid):
    """Trapezoid weights across [0, 1]: hy*(1/2, 1, ..., 1, 1/2)."""
    w = np.full(grid.ny, grid.hy)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def integrate_bulk(grid, values):
    """Quadrature of a nodal bulk integrand (rectangle-x, trapezoid-y)."""
    return float(grid.hx * np.sum(values @ y_weights(grid)))


def integrate_surface(grid, sf):
    """Quadrature over both boundary circles (rectangle rule)."""
    return float(grid.hx * (np.sum(sf.bottom) + np.sum(sf.top)))


def bulk_gradient_sq(grid, u):
    """Nodal-cell quadrature of |grad u|^2 (forward differences)."""
    u = _check_bulk(grid, u)
    wy = y_weights(grid)
    if grid.nx > 1:
        gx = (np.roll(u, -1, axis=0) - u) / grid.hx
        sx = grid.hx * np.sum(gx**2 @ wy)
    else:
        sx = 0.0
    gy = (u[:, 1:] - u[:, :-1]) / grid.hy
    sy = grid.hx * grid.hy * np.sum(gy**2)
    return float(sx + sy)


def surface_gradient_sq(grid, phi):
    """Quadrature of |grad_Gamma phi|^2 (periodic forward differences)."""
    _check_surface(grid, phi)
    if grid.nx == 1:
        return 0.0
    total = 0.0
    for row in (phi.bottom, phi.top):
        g = (np.roll(row, -1) - row) / grid.hx
        total += grid.hx * np.sum(g**2)
    return float(total)


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1_seminorm: float
    linf: float


def norms(grid, field):
    """L2, H1-seminorm and sup norm of a bulk array or surface field."""
    if isinstance(field, SurfaceField):
        l2 = np.sqrt(integrate_surface(grid, field.map(np.square)))
        h1 = np.sqrt(surface_gradient_sq(grid, field))
        linf = field.max_abs()
    else:
        u = _check_bulk(grid, field)
        l2 = np.sqrt(integrate_bulk(grid, u**2))
        h1 = np.sqrt(bulk_gradient_sq(grid, u))
        linf = float(np.max(np.abs(u)))
    return NormReport(float(l2), float(h1), linf)


def write_bulk_csv(path, u, extra=None, extra_name="phi_reconstructed"):
    """Write a bulk field as rows (x_index, y_index, value).

    ``extra`` may be a SurfaceField whose values are emitted in an extra
    column on the boundary rows (blank elsewhere), which is how the
    limit solver reports the reconstructed phase variable.
    """
    u = np.asarray(u)
    nx, ny = u.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["x_index", "y_index", "value"]
        if extra is not None:
            header.append(extra_name)
        writer.writerow(header)
        for i in range(nx):
            for j in range(ny):
                row = [i, j, repr(float(u[i, j]))]
                if extra is not None:
                    if j == 0:
                        row.append(repr(float(extra.bottom[i])))
                    elif j == ny - 1:
                        row.append(repr(float(extra.top[i])))
                    else:
                        row.append("")
                writer.writerow(row)


def write_surface_csv(path, grid, sf):
    """Write a surface field as rows (x_index, y_index, value).

    Boundary circles use the bulk row convention y_index in {0, ny-1}.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_index", "y_index", "value"])
        for i in range(grid.nx):
            writer.writerow([i, 0, repr(float(sf.bottom[i]))])
        for i in range(grid.nx):
            writer.writerow([i, grid.ny - 1, repr(float(sf.top[i]))])


def read_bulk_csv(path, grid):
    """Read a (x_index, y_index, value) table into a bulk array."""
    u = np.full((grid.nx, grid.ny), np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            u[int(row["x_index"]), int(row["y_index"])] = float(row["value"])
    if np.any(np.isnan(u)):
        raise InputError(f"{path} does not cover the full {grid.nx}x{grid.ny} grid")
    return u


def read_surface_csv(path, grid):
    """Read a surface table (y_index 0 or ny-1 per row)."""
    sf = SurfaceField(np.full(grid.nx, np.nan), np.full(grid.nx, np.nan))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            j = int(row["y_index"])
            if j == 0:
                sf.bottom[int(row["x_index"])] = float(row["value"])
            elif j == grid.ny - 1:
                sf.top[int(row["x_index"])] = float(row["value"])
            else:
                raise InputError(f"surface row with interior y_index {j}")
    if np.any(np.isnan(sf.bottom)) or np.any(np.isnan(sf.top)):
        raise InputError(f"{path} does not cover both boundary rows")
    return sf
