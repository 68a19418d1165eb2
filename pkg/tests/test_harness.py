"""Rate fitting, trajectory error norms, sweeps, perturbation scaling."""

import math

import numpy as np
import pytest

from bsac import (DataSpec, StripGrid, ctsdep, fit_rate, run, sweep_eps,
                  sweep_K, trajectory_errors)
from bsac.errors import FitError, InputError
from bsac.grid import SurfaceField, integrate_bulk, integrate_surface
from bsac.harness import (DEFAULT_KS, _bulk_profile, _perturbed,
                          _surface_profile)
from bsac.model import identity_coupling, tanh_coupling
from bsac.robin import RunResult, SolverState


# --------------------------------------------------------------- fit_rate


def test_fit_rate_exact_power_laws():
    K = np.logspace(-4, -1, 7)
    lin = fit_rate(K, K)
    assert lin.slope == pytest.approx(1.0, abs=1e-12)
    assert lin.r2 == pytest.approx(1.0, abs=1e-12)
    assert lin.n_used == 7 and lin.excluded == ()
    half = fit_rate(K, np.sqrt(K))
    assert half.slope == pytest.approx(0.5, abs=1e-12)


def test_fit_rate_dominant_linear_term():
    K = np.logspace(-4, -1, 7)
    fit = fit_rate(K, 3.0 * K + 0.01 * K**2)
    assert 0.98 <= fit.slope <= 1.02


def test_fit_rate_rescale_invariance():
    K = np.logspace(-3, -1, 5)
    e = 2.0 * K**0.7
    a = fit_rate(K, e)
    b = fit_rate(K, 17.0 * e)
    assert abs(a.slope - b.slope) <= 1e-12
    assert abs(a.r2 - b.r2) <= 1e-12


def test_fit_rate_excludes_nonpositive_rows():
    K = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    e = np.array([1e-1, 0.0, 1e-3, 1e-4])
    fit = fit_rate(K, e)
    assert fit.excluded == (1,)
    assert fit.n_used == 3
    assert fit.slope == pytest.approx(1.0, abs=1e-12)


def test_fit_rate_failure_modes():
    with pytest.raises(FitError, match="usable"):
        fit_rate([1e-1, 1e-2, 1e-3], [1.0, 0.0, 0.0])
    with pytest.raises(FitError, match="degenerate"):
        fit_rate([1e-2, 1e-2, 1e-2], [1.0, 2.0, 3.0])
    with pytest.raises(InputError):
        fit_rate([1e-1, 1e-2], [1.0])
    with pytest.raises(InputError):
        fit_rate([1e-1, -1e-2, 1e-3], [1.0, 1.0, 1.0])


def test_fit_rate_horizontal_line():
    fit = fit_rate(np.logspace(-3, -1, 4), np.full(4, 2.0))
    assert fit.slope == pytest.approx(0.0, abs=1e-13)
    assert fit.r2 == 1.0


# ----------------------------------------------------- trajectory errors


def fake_result(grid, c_u, c_phi, T=0.1):
    """Two-sample trajectory holding constants (c_u, c_phi)."""
    u = np.full((grid.nx, grid.ny), float(c_u))
    phi = SurfaceField(np.full(grid.nx, float(c_phi)),
                       np.full(grid.nx, float(c_phi)))
    states = [SolverState(t, u.copy(), phi.copy(), np.zeros_like(u),
                          grid.zeros_surface()) for t in (0.0, T)]
    return RunResult("robin", np.array([0.0, T]), [0, 1], states,
                     [phi.copy(), phi.copy()], [], np.zeros((1, 2)),
                     np.zeros((1, 2)))


def test_trajectory_errors_hand_values():
    g = StripGrid(nx=8, ny=9, lx=1.0, geometry="strip")
    T = 0.1
    a = fake_result(g, 0.5, 0.2, T)
    b = fake_result(g, 0.0, 0.0, T)
    err = trajectory_errors(g, a, b, identity_coupling())
    # constant differences: no gradient part, exact closed forms
    assert err.x_omega == pytest.approx(0.5 * (1.0 + math.sqrt(T)), rel=1e-12)
    assert err.x_gamma == pytest.approx(
        0.2 * (math.sqrt(2.0) + math.sqrt(2.0 * T)), rel=1e-12)
    assert err.boundary_mismatch == pytest.approx(
        abs(0.2 - 0.5) * math.sqrt(2.0 * T), rel=1e-12)


def test_trajectory_errors_self_are_exactly_zero(config_factory):
    cfg = config_factory(t_final=0.01)
    res = run(cfg)
    err = trajectory_errors(cfg.grid, res, res, cfg.coupling)
    assert err.x_omega == 0.0
    assert err.x_gamma == 0.0
    assert err.boundary_mismatch == 0.0


def test_trajectory_errors_reject_mismatched_times():
    g = StripGrid(nx=8, ny=9, lx=1.0, geometry="strip")
    with pytest.raises(InputError, match="sample times"):
        trajectory_errors(g, fake_result(g, 1, 1, T=0.1),
                          fake_result(g, 1, 1, T=0.2))


# ------------------------------------------------------------------ sweeps


def test_default_ks():
    assert len(DEFAULT_KS) == 7
    assert DEFAULT_KS[0] == 0.1
    assert DEFAULT_KS[-1] == pytest.approx(1e-4)
    assert all(b < a for a, b in zip(DEFAULT_KS, DEFAULT_KS[1:]))


def test_sweep_K_smoke(config_factory):
    cfg = config_factory(nx=16, ny=17, dt=1e-3, t_final=0.01,
                         u0=DataSpec(kind="random", amplitude=0.2, seed=2))
    table = sweep_K(cfg, Ks=[1e-1, 1e-2, 1e-3, 1e-4])
    assert table.parameter == "K"
    assert all(r is not None for r in table.rows)
    mism = table.column("boundary_mismatch")
    assert np.all(mism > 0.0)
    assert np.all(np.diff(mism) < 0.0)  # mismatch shrinks with K
    assert "boundary_mismatch" in table.fits
    assert 0.7 < table.fits["boundary_mismatch"].slope < 1.3


def test_sweep_K_guards(config_factory):
    cfg = config_factory()
    with pytest.raises(InputError, match="decreasing"):
        sweep_K(cfg, Ks=[1e-3, 1e-2])
    with pytest.raises(InputError, match="affine"):
        sweep_K(cfg.with_updates(coupling=tanh_coupling()))


def test_sweep_eps_reports_shrinking_gap(config_factory):
    cfg = config_factory(nx=16, ny=17, dt=1e-3, t_final=0.01,
                         u0=DataSpec(kind="random", amplitude=0.3, seed=6))
    table = sweep_eps(cfg, epss=[0.5, 0.1, 0.02])
    xo = table.column("x_omega")
    assert np.all(xo > 0.0)
    assert np.all(np.diff(xo) < 0.0)
    assert table.fits["x_omega"].slope > 0.0


def test_sweep_eps_guards(config_factory):
    cfg = config_factory()
    with pytest.raises(InputError, match="positive"):
        sweep_eps(cfg, epss=[0.5, 0.0])
    with pytest.raises(InputError, match="decreasing"):
        sweep_eps(cfg, epss=[0.1, 0.5])


# ------------------------------------------------------------ perturbation


def test_profiles_have_unit_norm():
    g = StripGrid(nx=16, ny=17, lx=1.0, geometry="strip")
    assert integrate_bulk(g, _bulk_profile(g) ** 2) == pytest.approx(
        1.0, rel=1e-12)
    q = _surface_profile(g)
    assert integrate_surface(g, q.map(np.square)) == pytest.approx(
        1.0, rel=1e-12)


def test_perturbed_conventions(config_factory):
    cfg = config_factory(nx=16, ny=17)
    p = _perturbed(cfg, "u0", 0.25)
    diff = p.u0.bulk(cfg.grid) - cfg.u0.bulk(cfg.grid)
    assert integrate_bulk(cfg.grid, diff**2) == pytest.approx(0.25**2,
                                                              rel=1e-12)
    # limit mode: a phi0 shift enters through the boundary rows times alpha
    lim = config_factory(nx=16, ny=17, mode="limit", K=None, alpha=2.0)
    pl = _perturbed(lim, "phi0", 0.5)
    diff = pl.u0.bulk(lim.grid) - lim.u0.bulk(lim.grid)
    assert np.allclose(diff[:, 1:-1], 0.0, atol=0.0)
    assert np.allclose(diff[:, 0],
                       2.0 * 0.5 * _surface_profile(lim.grid).bottom,
                       rtol=1e-13)


def test_ctsdep_ratios_are_stable(config_factory):
    cfg = config_factory(nx=16, ny=17, dt=1e-3, t_final=0.01,
                         u0=DataSpec(kind="random", amplitude=0.2, seed=3))
    rep = ctsdep(cfg, deltas=[1e-1, 1e-2, 1e-3], which="u0")
    assert rep.which == "u0"
    assert all(math.isfinite(r) and r > 0 for r in rep.ratios)
    assert rep.ratio_band < 1.5
    repf = ctsdep(cfg, deltas=[1e-1, 1e-2], which="fGamma")
    assert repf.ratio_band < 1.5


def test_ctsdep_limit_mode_phi0(config_factory):
    cfg = config_factory(nx=16, ny=17, dt=1e-3, t_final=0.01, mode="limit",
                         K=None,
                         u0=DataSpec(kind="random", amplitude=0.2, seed=3))
    rep = ctsdep(cfg, deltas=[1e-1, 1e-2], which="phi0")
    assert all(math.isfinite(r) and r > 0 for r in rep.ratios)
    assert rep.ratio_band < 1.5


def test_ctsdep_guards(config_factory):
    cfg = config_factory()
    with pytest.raises(InputError, match="unknown datum"):
        ctsdep(cfg, deltas=[1e-1, 1e-2], which="K")
    with pytest.raises(InputError, match="positive"):
        ctsdep(cfg, deltas=[1e-1, 0.0], which="u0")
    tdep = config_factory(f=DataSpec(kind="sinusoidal", decay=1.0))
    with pytest.raises(InputError, match="time-independent"):
        ctsdep(tdep, deltas=[1e-1, 1e-2], which="f")
