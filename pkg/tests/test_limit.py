"""Limit solver: transmitted boundary rows, coupled implicit solve against
a dense oracle, self-convergence, agreement with small-K Robin runs."""

import math

import numpy as np
import pytest

from bsac import (DataSpec, run, run_limit, stationary_residual,
                  steady_state, step_limit)
from bsac.errors import InputError
from bsac.graphs import compose_affine_domain, obstacle_graph, polynomial_graph
from bsac.grid import trace
from bsac.limit import (LimitState, initial_state, reconstruct_phi, state_phi)
from bsac.model import affine_coupling, obstacle_split, zero_pi_split
from bsac.stepping import LimitWorkspace
from bsac.grid import SurfaceField


def limit_cfg(config_factory, **kw):
    kw.setdefault("mode", "limit")
    kw.setdefault("K", None)
    return config_factory(**kw)


# ------------------------------------------------------- transmitted state


def test_reconstruct_phi_values():
    ug = SurfaceField(np.full(4, 3.0), np.full(4, 3.0))
    phi = reconstruct_phi(ug, 2.0, 1.0)
    assert np.all(phi.bottom == 1.0)
    with pytest.raises(InputError):
        reconstruct_phi(ug, 0.0, 1.0)


def test_phi_is_not_stored():
    st = LimitState(0.0, np.zeros((2, 3)), np.zeros((2, 3)),
                    SurfaceField(np.zeros(2), np.zeros(2)))
    with pytest.raises(AttributeError, match="derived"):
        st.phi


def test_transmission_holds_bitwise_for_dyadic_alpha(config_factory):
    cfg = limit_cfg(config_factory, alpha=2.0, eta=0.0, t_final=0.01)
    res = run_limit(cfg)
    for s, phi in zip(res.samples, res.sample_phis):
        ug = trace(s.u)
        assert np.array_equal(phi.bottom * 2.0, ug.bottom)
        assert np.array_equal(phi.top * 2.0, ug.top)


def test_transmission_tight_for_generic_alpha(config_factory):
    cfg = limit_cfg(config_factory, alpha=3.0, eta=0.1, t_final=0.01)
    res = run_limit(cfg)
    s = res.final
    phi = state_phi(s, cfg)
    ug = trace(s.u)
    err = np.max(np.abs(phi.bottom * 3.0 + 0.1 - ug.bottom))
    assert err <= 4e-16 * (1.0 + np.max(np.abs(ug.bottom)))


# -------------------------------------------------- coupled implicit solve


def dense_coupled_solve(cfg, rhs):
    """Assemble the unreduced coupled system densely and solve it."""
    g = cfg.grid
    nx, ny, hx, hy = g.nx, g.ny, g.hx, g.hy
    dt = cfg.dt
    alpha = cfg.coupling.affine[0]
    v = dt * cfg.viscosity
    ca = dt * alpha**2 / hy
    Dxx = (np.roll(np.eye(nx), 1, 1) + np.roll(np.eye(nx), -1, 1)
           - 2.0 * np.eye(nx)) / hx**2
    A = np.zeros((nx * ny, nx * ny))
    idx = lambda i, j: i * ny + j
    for i in range(nx):
        for j in range(ny):
            k = idx(i, j)
            A[k, k] += 1.0 + v
            for i2 in range(nx):             # periodic x stencil rows
                if Dxx[i, i2] != 0.0:
                    A[k, idx(i2, j)] -= dt * Dxx[i, i2]
            if 0 < j < ny - 1:
                A[k, idx(i, j - 1)] -= dt / hy**2
                A[k, idx(i, j + 1)] -= dt / hy**2
                A[k, k] += 2.0 * dt / hy**2
            elif j == 0:                     # one-sided implicit flux
                A[k, idx(i, 0)] += 1.5 * ca
                A[k, idx(i, 1)] -= 2.0 * ca
                A[k, idx(i, 2)] += 0.5 * ca
            else:
                A[k, idx(i, ny - 1)] += 1.5 * ca
                A[k, idx(i, ny - 2)] -= 2.0 * ca
                A[k, idx(i, ny - 3)] += 0.5 * ca
    return np.linalg.solve(A, rhs.ravel()).reshape(nx, ny)


@pytest.mark.parametrize("alpha,eta,visc", [(1.0, 0.0, 0.0),
                                            (2.0, 0.5, 0.0),
                                            (1.0, 0.0, 0.3)])
def test_coupled_solve_matches_dense_oracle(config_factory, alpha, eta, visc):
    cfg = limit_cfg(config_factory, nx=8, ny=7, alpha=alpha, eta=eta,
                    dt=2e-3, viscosity=visc)
    rng = np.random.default_rng(5)
    rhs = rng.standard_normal((8, 7))
    got = LimitWorkspace(cfg).solve_coupled(rhs)
    want = dense_coupled_solve(cfg, rhs)
    assert np.allclose(got, want, atol=1e-12)


# ------------------------------------------------------------- full runs


def test_constant_minimum_is_a_fixed_point(config_factory):
    cfg = limit_cfg(config_factory, alpha=1.0, eta=0.0, t_final=0.02,
                    u0=DataSpec(kind="constant", value=1.0))
    res = run_limit(cfg)
    for s in res.samples:
        assert np.max(np.abs(s.u - 1.0)) < 1e-13
    assert np.all(res.final.xi[:, 0] == 0.0)
    assert np.all(res.final.xi[:, -1] == 0.0)


def test_zero_data_stays_exactly_zero(config_factory):
    cfg = limit_cfg(config_factory, u0=DataSpec(kind="zero"), t_final=0.01)
    res = run_limit(cfg)
    assert np.all(res.final.u == 0.0)


def test_energy_decreases_without_forcing(config_factory):
    cfg = limit_cfg(config_factory, t_final=0.05, dt=1e-3)
    E = run_limit(cfg).energy_arrays()["energy"]
    assert np.all(np.isfinite(E))
    assert np.all(np.diff(E) <= 1e-8 * (1.0 + np.abs(E[:-1])))


def test_mode_guard(config_factory):
    with pytest.raises(InputError, match="mode"):
        run_limit(config_factory(mode="robin"))


def test_matches_small_K_robin_run(config_factory):
    common = dict(nx=16, ny=17, dt=1e-3, t_final=0.02, alpha=1.0, eta=0.0,
                  u0=DataSpec(kind="random", amplitude=0.2, seed=9))
    lim = run_limit(limit_cfg(config_factory, **common))
    rob = run(config_factory(K=1e-6, **common))
    du = np.max(np.abs(lim.final.u - rob.final.u))
    dphi = (lim.sample_phis[-1] - rob.sample_phis[-1]).max_abs()
    assert du < 2e-3
    assert dphi < 2e-3


def test_first_order_in_time_self_convergence(config_factory):
    def final_u(dt):
        cfg = limit_cfg(config_factory, nx=16, ny=17, dt=dt, t_final=0.02,
                        u0=DataSpec(kind="random", amplitude=0.3, seed=4))
        return run_limit(cfg).final.u

    ref = final_u(2.5e-4)
    e1 = np.max(np.abs(final_u(2e-3) - ref))
    e2 = np.max(np.abs(final_u(1e-3) - ref))
    # first order: errors scale with (dt - dt_ref), ratio 1.75/0.75
    assert 1.5 < e1 / e2 < 3.4


def test_second_order_in_space_self_convergence(config_factory):
    def final_u(ny):
        cfg = limit_cfg(config_factory, nx=16, ny=ny, dt=1e-4, t_final=0.02,
                        u0=DataSpec(kind="sinusoidal", amplitude=0.3,
                                    offset=0.1))
        return run_limit(cfg).final.u

    u9, u17, u33 = final_u(9), final_u(17), final_u(33)
    e1 = np.max(np.abs(u9 - u33[:, ::4]))
    e2 = np.max(np.abs(u17 - u33[:, ::2]))
    assert e1 / e2 > 2.5


def test_obstacle_boundary_rows_project_exactly(config_factory):
    graph_cfg = limit_cfg(
        config_factory, alpha=2.0, eta=0.5, t_final=0.05, dt=1e-3,
        bulk=obstacle_split(), surface=obstacle_split(),
        u0=DataSpec(kind="constant", value=3.0))
    res = run_limit(graph_cfg)
    lo, hi = compose_affine_domain(obstacle_graph(-1.0, 1.0), 2.0, 0.5)
    assert (lo, hi) == (-1.5, 2.5)
    assert np.all(res.reaction_boundary_range[:, 0] >= lo)
    assert np.all(res.reaction_boundary_range[:, 1] <= hi)
    assert np.all(res.reaction_bulk_range[:, 0] >= -1.0)
    assert np.all(res.reaction_bulk_range[:, 1] <= 1.0)


def test_viscosity_decays_constants_exactly(config_factory):
    free = zero_pi_split(polynomial_graph(3, 0.0))
    rho = 2.0
    cfg = limit_cfg(config_factory, bulk=free, surface=free, viscosity=rho,
                    dt=1e-3, t_final=0.02,
                    u0=DataSpec(kind="constant", value=0.7))
    res = run_limit(cfg)
    n = len(res.times) - 1
    want = 0.7 / (1.0 + cfg.dt * rho) ** n
    assert np.allclose(res.final.u, want, rtol=1e-12)


def test_viscosity_rejected_in_robin_mode(config_factory):
    with pytest.raises(InputError, match="viscosity"):
        run(config_factory(viscosity=0.1))


def test_step_limit_single_step(config_factory):
    cfg = limit_cfg(config_factory)
    s0 = initial_state(cfg)
    s1 = step_limit(s0, cfg)
    assert s1.t == cfg.dt
    assert s1.u.shape == s0.u.shape


def test_stationary_residual_limit_branch(config_factory):
    cfg = limit_cfg(config_factory,
                    u0=DataSpec(kind="constant", value=1.0),
                    dt=1e-3, t_final=2e-3)
    rep = stationary_residual(run_limit(cfg).final, cfg)
    assert rep.bulk_res < 1e-12
    assert rep.surface_res < 1e-12
    assert rep.robin_res == 0.0

    wiggly = limit_cfg(config_factory,
                       u0=DataSpec(kind="random", amplitude=0.3, seed=5),
                       dt=1e-3, t_final=2e-3)
    rep2 = stationary_residual(run_limit(wiggly).final, wiggly)
    assert rep2.bulk_res > 1e-3
    assert rep2.surface_res > 1e-3


def test_steady_state_rejects_limit_mode(config_factory):
    with pytest.raises(InputError, match="Robin"):
        steady_state(limit_cfg(config_factory), tol=1e-6)
