import pytest

from bsac import (DataSpec, ModelConfig, StripGrid, affine_coupling,
                  double_well_split)


@pytest.fixture
def config_factory():
    """Small double-well configs for solver tests; override via kwargs."""

    def make(nx=16, ny=16, mode="robin", K=0.1, dt=1e-3, t_final=0.01,
             alpha=1.0, eta=0.0, **kw):
        grid = StripGrid(nx=nx, ny=ny, lx=1.0, geometry="strip")
        base = dict(
            grid=grid, bulk=double_well_split(), surface=double_well_split(),
            coupling=affine_coupling(alpha, eta), dt=dt, t_final=t_final,
            mode=mode, K=K, eps=0.0, viscosity=0.0, sample_every=1,
            f=DataSpec(), f_gamma=DataSpec(),
            u0=DataSpec(kind="random", amplitude=0.2, seed=3),
            phi0=DataSpec(kind="trace"))
        base.update(kw)
        return ModelConfig(**base)

    return make
