"""Potential splits, coupling functions, forcing/initial data, energy.

The potential of each Allen-Cahn equation is split as W = beta_hat + pi_hat
with beta_hat convex (a monotone graph's antiderivative) and pi Lipschitz.
The free energy of a (u, phi) pair is

    E = int_Omega 1/2|grad u|^2 + W(u)
      + int_Gamma 1/2|grad_G phi|^2 + W_G(phi)
      + int_Gamma 1/(2K) |u - h(phi)|^2,

where the boundary penalty is present in Robin mode only; in the fast
reaction limit the transmission u|_Gamma = h(phi) holds structurally and
the term vanishes. With Yosida parameter eps > 0 the convex parts are
evaluated through the smoothed envelope instead of beta_hat.

Per-step energy reports record the backward-difference dissipation
integrals and the defect of the energy identity

    dE/dt + ||d_t u||^2 + ||d_t phi||^2 = (f, d_t u) + (f_G, d_t phi),

which the scheme satisfies to O(dt). Reaction substeps evaluate forcing
at the step's start time; the identity's forcing power uses the end
time, consistent with the backward differences.
"""

import importlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import graphs
from .errors import InputError
from .grid import (StripGrid, SurfaceField, bulk_gradient_sq, integrate_bulk,
                   integrate_surface, normal_derivative, read_bulk_csv,
                   read_surface_csv, surface_gradient_sq, trace)


@dataclass(frozen=True)
class PotentialSplit:
    """W = beta_hat + pi_hat with convex graph part and Lipschitz pi."""

    graph: graphs.MonotoneGraph
    pi: Callable
    pi_hat: Callable
    lipschitz: float
    validity: tuple = (-math.inf, math.inf)


def linear_pi_split(graph, slope, clip=10.0):
    """pi(s) = slope * clamp(s, -clip, clip), pi_hat shifted nonnegative.

    The clamp keeps pi globally Lipschitz; the additive constant in
    pi_hat is chosen so pi_hat >= 0 on [-clip, clip] (its declared
    validity interval) and changes no dynamics.
    """
    slope, clip = float(slope), float(clip)
    if clip <= 0:
        raise InputError(f"clip must be positive, got {clip}")
    shift = max(0.0, -slope) * clip**2 / 2.0

    def pi(s):
        return slope * np.clip(s, -clip, clip)

    def pi_hat(s):
        a = np.abs(np.asarray(s, dtype=float))
        inner = np.minimum(a, clip)
        return slope * inner**2 / 2.0 + shift + slope * clip * (a - inner)

    validity = (-clip, clip) if slope < 0 else (-math.inf, math.inf)
    return PotentialSplit(graph, pi, pi_hat, abs(slope), validity)


def zero_pi_split(graph):
    return PotentialSplit(graph, lambda s: np.zeros_like(np.asarray(s, float)),
                          lambda s: np.zeros_like(np.asarray(s, float)), 0.0)


def double_well_split(clip=10.0):
    """Quartic double well with minima at +-1: beta(r)=r^3, pi(s)=-s."""
    return linear_pi_split(graphs.polynomial_graph(3, 1.0), -1.0, clip)


def obstacle_split(clip=10.0):
    """Double obstacle: indicator of [-1, 1] plus the concave -s^2/2 part."""
    return linear_pi_split(graphs.obstacle_graph(-1.0, 1.0), -1.0, clip)


def w_values(split, eps, x):
    """Nodal potential values; the smoothed envelope replaces beta_hat
    when eps > 0. May contain +inf (obstacle violation at eps = 0)."""
    if eps > 0:
        convex = graphs.moreau_envelope(split.graph, eps, x)
    else:
        convex = split.graph.beta_hat(x)
    return convex + split.pi_hat(x)


@dataclass(frozen=True)
class Coupling:
    """Transmission function h with declared derivative bounds."""

    h: Callable
    hp: Callable
    hpp: Callable
    hp_bound: float
    hpp_bound: float
    affine: Optional[tuple] = None  # (alpha, eta) when h(s) = alpha*s + eta

    def g(self, s):
        """Inverse transmission (s - eta)/alpha; affine couplings only."""
        if self.affine is None:
            raise InputError("g is defined only for affine couplings")
        alpha, eta = self.affine
        return (np.asarray(s, dtype=float) - eta) / alpha


def affine_coupling(alpha, eta=0.0):
    alpha, eta = float(alpha), float(eta)
    if not np.isfinite(alpha) or not np.isfinite(eta):
        raise InputError("alpha, eta must be finite")

    def h(s):
        return alpha * np.asarray(s, dtype=float) + eta

    def hp(s):
        return np.full_like(np.asarray(s, dtype=float), alpha)

    def hpp(s):
        return np.zeros_like(np.asarray(s, dtype=float))

    return Coupling(h, hp, hpp, abs(alpha), 0.0, affine=(alpha, eta))


def identity_coupling():
    return affine_coupling(1.0, 0.0)


def tanh_coupling(scale=1.0, offset=0.0):
    """Smooth nonlinear coupling h(s) = scale*tanh(s) + offset."""
    scale, offset = float(scale), float(offset)

    def h(s):
        return scale * np.tanh(np.asarray(s, dtype=float)) + offset

    def hp(s):
        return scale / np.cosh(np.asarray(s, dtype=float)) ** 2

    def hpp(s):
        s = np.asarray(s, dtype=float)
        return -2.0 * scale * np.tanh(s) / np.cosh(s) ** 2

    # sup|h''| = 4/(3*sqrt(3)) * scale ~= 0.7699 * scale
    return Coupling(h, hp, hpp, abs(scale), 0.77 * abs(scale))


_DATA_KINDS = ("zero", "constant", "sinusoidal", "random", "csv", "trace",
               "array")


@dataclass(frozen=True)
class DataSpec:
    """Closed-form or tabulated scalar data on the bulk or the surface.

    ``sinusoidal`` bulk data is
    offset + amplitude*cos(2 pi mode_x x / Lx)*cos(pi mode_y y)*exp(-decay t);
    the surface variant drops the y factor. ``random`` synthesizes a
    seeded low-mode combination of the same shapes (time-independent),
    decaying like 1/(1+m^2+n^2) in the mode numbers, so the field is
    smooth and has vanishing normal derivative. ``trace`` is only valid
    as initial surface data and resolves to g(u0|_Gamma). ``array``
    wraps a fixed in-memory field (an ndarray or a SurfaceField); it is
    how perturbation studies inject precomputed data and has no config
    file syntax.
    """

    kind: str = "zero"
    value: float = 0.0
    amplitude: float = 0.1
    offset: float = 0.0
    mode_x: int = 1
    mode_y: int = 1
    decay: float = 0.0
    modes: int = 3
    seed: int = 0
    path: str = ""
    payload: object = None

    def __post_init__(self):
        if self.kind not in _DATA_KINDS:
            raise InputError(f"unknown data kind {self.kind!r}")

    @property
    def time_dependent(self):
        return self.kind == "sinusoidal" and self.decay != 0.0

    def _random_coeffs(self, two_dim):
        rng = np.random.default_rng(self.seed)
        m = np.arange(self.modes)
        if two_dim:
            c = rng.standard_normal((self.modes, self.modes))
            ph = rng.uniform(0, 2 * np.pi, self.modes)
            w = 1.0 / (1.0 + m[:, None] ** 2 + m[None, :] ** 2)
            return c * w, ph
        c = rng.standard_normal(self.modes)
        ph = rng.uniform(0, 2 * np.pi, self.modes)
        return c / (1.0 + m**2), ph

    def bulk(self, grid, t=0.0):
        x, y = grid.x, grid.y
        if self.kind == "zero":
            return grid.zeros_bulk()
        if self.kind == "constant":
            return np.full((grid.nx, grid.ny), self.value)
        if self.kind == "sinusoidal":
            fx = np.cos(2 * np.pi * self.mode_x * x / grid.lx)
            fy = np.cos(np.pi * self.mode_y * y)
            return (self.offset
                    + self.amplitude * math.exp(-self.decay * t) * np.outer(fx, fy))
        if self.kind == "random":
            c, ph = self._random_coeffs(two_dim=True)
            out = np.full((grid.nx, grid.ny), self.offset)
            for m in range(self.modes):
                fx = np.cos(2 * np.pi * m * x / grid.lx + ph[m])
                for n in range(self.modes):
                    out += self.amplitude * c[m, n] * np.outer(fx, np.cos(np.pi * n * y))
            return out
        if self.kind == "csv":
            return read_bulk_csv(self.path, grid)
        if self.kind == "array":
            arr = np.asarray(self.payload, dtype=float)
            if arr.shape != (grid.nx, grid.ny):
                raise InputError(f"array data has shape {arr.shape}, "
                                 f"grid needs {(grid.nx, grid.ny)}")
            return arr.copy()
        raise InputError(f"data kind {self.kind!r} cannot produce a bulk field")

    def surface(self, grid, t=0.0):
        x = grid.x
        if self.kind == "zero":
            return grid.zeros_surface()
        if self.kind == "constant":
            row = np.full(grid.nx, self.value)
            return SurfaceField(row, row.copy())
        if self.kind == "sinusoidal":
            row = (self.offset + self.amplitude * math.exp(-self.decay * t)
                   * np.cos(2 * np.pi * self.mode_x * x / grid.lx))
            return SurfaceField(row, row.copy())
        if self.kind == "random":
            c, ph = self._random_coeffs(two_dim=False)
            rows = []
            for shift in (0.0, np.pi / 3):
                row = np.full(grid.nx, self.offset)
                for m in range(self.modes):
                    row = row + self.amplitude * c[m] * np.cos(
                        2 * np.pi * m * x / grid.lx + ph[m] + shift * m)
                rows.append(row)
            return SurfaceField(rows[0], rows[1])
        if self.kind == "csv":
            return read_surface_csv(self.path, grid)
        if self.kind == "array":
            if not isinstance(self.payload, SurfaceField):
                raise InputError("surface array data must be a SurfaceField")
            if self.payload.bottom.size != grid.nx:
                raise InputError(f"surface array data has {self.payload.bottom.size} "
                                 f"nodes, grid needs {grid.nx}")
            return self.payload.copy()
        raise InputError(f"data kind {self.kind!r} cannot produce a surface field")


@dataclass(frozen=True)
class ModelConfig:
    grid: StripGrid
    bulk: PotentialSplit
    surface: PotentialSplit
    coupling: Coupling
    dt: float
    t_final: float
    mode: str = "robin"          # "robin" | "limit"
    K: Optional[float] = None
    eps: float = 0.0
    viscosity: float = 0.0
    sample_every: int = 1
    f: DataSpec = field(default_factory=DataSpec)
    f_gamma: DataSpec = field(default_factory=DataSpec)
    u0: DataSpec = field(default_factory=DataSpec)
    phi0: DataSpec = field(default_factory=lambda: DataSpec(kind="trace"))

    def with_updates(self, **kw):
        return replace(self, **kw)


def suggested_dt(config):
    """Explicit-part stability heuristic, emitted in the run header."""
    lip = max(config.bulk.lipschitz, config.surface.lipschitz)
    coup = 0.0
    if config.mode == "robin" and config.K:
        coup = config.coupling.hp_bound * config.coupling.hpp_bound / config.K
    return min(1e-3, 0.25 / (lip + coup + 1.0))


def _sample_points(lo, hi, n=17):
    lo = max(lo, -50.0)
    hi = min(hi, 50.0)
    return np.linspace(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo), n)


def _check_split(split, name, errors):
    lo, hi = split.validity
    pts = _sample_points(lo, hi)
    rng = np.random.default_rng(12345)
    s1 = rng.uniform(pts[0], pts[-1], 64)
    s2 = rng.uniform(pts[0], pts[-1], 64)
    lhs = np.abs(np.asarray(split.pi(s1)) - np.asarray(split.pi(s2)))
    rhs = split.lipschitz * np.abs(s1 - s2)
    if np.any(lhs > rhs + 1e-9 * (1.0 + rhs)):
        errors.append(f"{name}: pi violates its declared Lipschitz constant "
                      f"{split.lipschitz}")
    if np.any(np.asarray(split.pi_hat(pts)) < -1e-12):
        errors.append(f"{name}: pi_hat is negative inside its validity interval")
    h = 1e-5
    dd = (np.asarray(split.pi_hat(pts + h)) - np.asarray(split.pi_hat(pts - h))) / (2 * h)
    pv = np.asarray(split.pi(pts))
    if np.any(np.abs(dd - pv) > 1e-8 * (1.0 + np.abs(pv))):
        errors.append(f"{name}: pi_hat' does not match pi (finite-difference check)")


def _check_coupling(coupling, errors):
    pts = np.linspace(-5.0, 5.0, 21)
    if coupling.affine is not None:
        alpha, eta = coupling.affine
        if np.any(np.abs(np.asarray(coupling.h(pts)) - (alpha * pts + eta)) > 0):
            errors.append("coupling: affine marker set but h is not alpha*s + eta")
    if np.any(np.abs(np.asarray(coupling.hp(pts))) > coupling.hp_bound + 1e-9):
        errors.append("coupling: |h'| exceeds its declared bound")
    if np.any(np.abs(np.asarray(coupling.hpp(pts))) > coupling.hpp_bound + 1e-9):
        errors.append("coupling: |h''| exceeds its declared bound")


def compatibility_defect(config):
    """L2(Gamma) norm of K*dnu(u0) + u0 - h(phi0) for Robin data."""
    grid = config.grid
    u0 = config.u0.bulk(grid)
    phi0 = initial_phi(config, u0)
    dnu = normal_derivative(grid, u0)
    tr = trace(u0)
    h = phi0.map(config.coupling.h)
    defect = dnu * config.K + tr - h
    return float(np.sqrt(integrate_surface(grid, defect.map(np.square))))


def initial_phi(config, u0):
    """Initial surface data; kind 'trace' resolves to g(u0|_Gamma)."""
    if config.phi0.kind == "trace":
        return trace(u0).map(config.coupling.g)
    return config.phi0.surface(config.grid, 0.0)


def validate(config):
    """Check structural requirements; returns (config, warnings).

    Declared-constant violations and mode inconsistencies are hard
    errors; an incompatible initial pair (the Robin law failing at t=0)
    only warns, since the scheme tolerates it.
    """
    errors, warnings = [], []
    if not (config.dt > 0):
        errors.append(f"dt must be positive, got {config.dt}")
    if not (config.t_final > config.dt):
        errors.append("t_final must exceed dt")
    if config.sample_every < 1:
        errors.append("sample_every must be >= 1")
    if config.eps < 0:
        errors.append("eps must be >= 0")
    if config.viscosity < 0:
        errors.append("viscosity must be >= 0")
    if config.mode not in ("robin", "limit"):
        errors.append(f"unknown mode {config.mode!r}")
    if config.mode == "robin":
        if config.K is None or not (config.K > 0):
            errors.append("Robin mode requires K > 0")
        if config.viscosity > 0:
            errors.append("viscosity is a limit-mode term; Robin mode "
                          "ignores it, so set it to 0")
    if config.mode == "limit":
        if config.coupling.affine is None:
            errors.append("limit mode requires an affine coupling")
        elif config.coupling.affine[0] == 0:
            errors.append("limit mode requires alpha != 0")
    if config.phi0.kind == "trace" and config.coupling.affine is None:
        errors.append("phi0 = 'trace' requires an affine coupling")
    _check_split(config.bulk, "bulk_potential", errors)
    _check_split(config.surface, "surface_potential", errors)
    _check_coupling(config.coupling, errors)
    if errors:
        raise InputError("invalid configuration: " + "; ".join(errors))

    cap = suggested_dt(config)
    if config.dt > cap:
        warnings.append(
            f"dt={config.dt:g} exceeds the explicit-part heuristic {cap:g}; "
            "the reaction coupling terms may be underresolved")
    if config.mode == "robin":
        defect = compatibility_defect(config)
        u0n = np.sqrt(integrate_surface(config.grid,
                                        trace(config.u0.bulk(config.grid)).map(np.square)))
        if defect > 1e-6 * (1.0 + u0n):
            warnings.append(
                f"initial data violate the Robin law: defect {defect:.3e} "
                "(the run proceeds; expect an initial boundary layer)")
    return config, warnings


@dataclass(frozen=True)
class EnergyReport:
    """Free energy at one time level plus the step integrals behind it."""

    time: float
    energy: float
    bulk_dissipation: float = 0.0
    surface_dissipation: float = 0.0
    forcing_power: float = 0.0
    identity_residual: float = 0.0


def energy(grid, u, phi, config):
    """Free energy of (u, phi); +inf signals an obstacle violation."""
    E = 0.5 * bulk_gradient_sq(grid, u)
    E += integrate_bulk(grid, w_values(config.bulk, config.eps, u))
    E += 0.5 * surface_gradient_sq(grid, phi)
    E += integrate_surface(grid, phi.map(
        lambda s: w_values(config.surface, config.eps, s)))
    if config.mode == "robin":
        mismatch = trace(u) - phi.map(config.coupling.h)
        E += integrate_surface(grid, mismatch.map(np.square)) / (2.0 * config.K)
    return float(E)


def energy_identity_residual(report_prev, report_next, bulk_diss, surf_diss,
                             forcing_power):
    """Defect of the energy identity over one step (backward differences)."""
    dt = report_next.time - report_prev.time
    if not (math.isfinite(report_prev.energy) and math.isfinite(report_next.energy)):
        return math.nan
    return ((report_next.energy - report_prev.energy) / dt
            + bulk_diss + surf_diss - forcing_power)


def step_energy_report(grid, config, report_prev, t_next, u_prev, phi_prev,
                       u_next, phi_next):
    """Energy report for the state at t_next given the previous report."""
    dt = t_next - report_prev.time
    du = (u_next - u_prev) / dt
    dphi = (phi_next - phi_prev) * (1.0 / dt)
    bulk_diss = integrate_bulk(grid, du**2)
    surf_diss = integrate_surface(grid, dphi.map(np.square))
    fb = config.f.bulk(grid, t_next)
    fs = config.f_gamma.surface(grid, t_next)
    power = integrate_bulk(grid, fb * du) + integrate_surface(
        grid, SurfaceField(fs.bottom * dphi.bottom, fs.top * dphi.top))
    E_next = energy(grid, u_next, phi_next, config)
    resid = energy_identity_residual(report_prev,
                                     EnergyReport(t_next, E_next),
                                     bulk_diss, surf_diss, power)
    return EnergyReport(t_next, E_next, bulk_diss, surf_diss, power, resid)


def load_callable(spec):
    """Resolve a 'module:function' string (custom graphs in config files)."""
    mod, _, fn = spec.partition(":")
    if not mod or not fn:
        raise InputError(f"expected 'module:function', got {spec!r}")
    try:
        return getattr(importlib.import_module(mod), fn)
    except (ImportError, AttributeError) as exc:
        raise InputError(f"cannot resolve callable {spec!r}: {exc}") from exc
