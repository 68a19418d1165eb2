"""Kernel backends: tridiagonal and resolvent solves against library
oracles, and bit-level agreement between the compiled and reference
implementations."""

import numpy as np
import pytest
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from bsac import backends
from bsac.errors import InputError


def random_bands(m, n, seed):
    """Strictly diagonally dominant batched bands."""
    rng = np.random.default_rng(seed)
    dl = -rng.uniform(0.1, 1.0, (m, n))
    du = -rng.uniform(0.1, 1.0, (m, n))
    d = 1.0 + np.abs(dl) + np.abs(du) + rng.uniform(0.0, 1.0, (m, n))
    return dl, d, du


def banded_solve(dl, d, du, b):
    """scipy oracle, one system at a time."""
    m, n = d.shape
    out = np.empty((m, n), dtype=b.dtype)
    for i in range(m):
        ab = np.zeros((3, n), dtype=complex if np.iscomplexobj(b) else float)
        ab[0, 1:] = du[i, :-1]
        ab[1, :] = d[i]
        ab[2, :-1] = dl[i, 1:]
        out[i] = solve_banded((1, 1), ab, b[i])
    return out


def test_thomas_matches_scipy():
    dl, d, du = random_bands(12, 40, seed=0)
    b = np.random.default_rng(1).standard_normal((12, 40))
    x = backends.thomas_batch(dl, d, du, b)
    assert np.allclose(x, banded_solve(dl, d, du, b), rtol=1e-12, atol=1e-12)


def test_thomas_complex_rhs_splits_into_real_solves():
    dl, d, du = random_bands(5, 17, seed=2)
    rng = np.random.default_rng(3)
    b = rng.standard_normal((5, 17)) + 1j * rng.standard_normal((5, 17))
    x = backends.thomas_batch(dl, d, du, b)
    xr = backends.thomas_batch(dl, d, du, np.ascontiguousarray(b.real))
    xi = backends.thomas_batch(dl, d, du, np.ascontiguousarray(b.imag))
    assert np.array_equal(x, xr + 1j * xi)
    assert np.allclose(x, banded_solve(dl, d, du, b), rtol=1e-12, atol=1e-12)


def test_thomas_ignores_out_of_band_corners():
    dl, d, du = random_bands(3, 9, seed=4)
    b = np.random.default_rng(5).standard_normal((3, 9))
    x1 = backends.thomas_batch(dl, d, du, b)
    dl2, du2 = dl.copy(), du.copy()
    dl2[:, 0] = 1e9
    du2[:, -1] = -1e9
    assert np.array_equal(x1, backends.thomas_batch(dl2, d, du2, b))


def test_poly_resolvent_root_and_parity():
    rng = np.random.default_rng(6)
    x = rng.uniform(-50.0, 50.0, 2000)
    y = backends.poly_resolvent(x, 0.1, 3)
    resid = np.abs(y + 0.1 * y**3 - x)
    assert np.all(resid <= 1e-12 * (1.0 + np.abs(x)))
    assert np.all(np.sign(y) == np.sign(x))
    assert np.all(np.abs(y) <= np.abs(x) + 1e-15)


def test_poly_resolvent_matches_brentq():
    rng = np.random.default_rng(7)
    for a, p in ((0.5, 3), (1e-4, 3), (2.0, 5), (0.01, 7)):
        for x in rng.uniform(-8.0, 8.0, 20):
            got = backends.poly_resolvent(x, a, p)
            lo, hi = min(x, 0.0), max(x, 0.0)
            want = brentq(lambda y: y + a * y**p - x, lo, hi,
                          xtol=1e-15, rtol=8.9e-16)
            assert got == pytest.approx(want, abs=1e-12, rel=1e-12)


def test_poly_resolvent_fast_paths_are_exact():
    x = np.array([-3.0, 0.0, 0.7, 41.5])
    assert np.array_equal(backends.poly_resolvent(x, 0.0, 3), x)
    assert np.array_equal(backends.poly_resolvent(x, 0.25, 1), x / 1.25)


def test_poly_resolvent_fixed_point_is_exact():
    # the step map must hold the double-well minimum exactly: the root of
    # y + a*y^3 = 1 + a is y = 1 and Newton stagnates on it
    for a in (1e-4, 1e-3, 0.1):
        assert backends.poly_resolvent(1.0 + a, a, 3) == 1.0
        assert backends.poly_resolvent(-1.0 - a, a, 3) == -1.0


def test_poly_resolvent_scalar_in_scalar_out():
    y = backends.poly_resolvent(2.0, 1.0, 3)
    assert isinstance(y, float)
    assert y + y**3 == pytest.approx(2.0, abs=1e-14)


@pytest.mark.skipif(backends.COMPILED is None,
                    reason="compiled extension not built")
def test_compiled_and_reference_agree_bitwise():
    dl, d, du = random_bands(20, 65, seed=8)
    b = np.random.default_rng(9).standard_normal((20, 65))
    xr = backends.REFERENCE.thomas_batch_impl(dl, d, du, b)
    xc = backends.COMPILED.thomas_batch_impl(dl, d, du, b)
    assert np.array_equal(xr, xc)

    x = np.ascontiguousarray(np.random.default_rng(10).uniform(-20, 20, 4096))
    for a, p in ((1e-4, 3), (0.3, 3), (1.5, 5)):
        outr = np.empty_like(x)
        outc = np.empty_like(x)
        nr = backends.REFERENCE.poly_resolvent_impl(x, a, p, outr)
        nc = backends.COMPILED.poly_resolvent_impl(x, a, p, outc)
        assert nr == nc == 0
        assert np.array_equal(outr, outc)


def test_kernel_env_override(monkeypatch):
    monkeypatch.setenv("BSAC_KERNELS", "reference")
    assert backends._select().name == "reference"
    monkeypatch.setenv("BSAC_KERNELS", "quantum")
    with pytest.raises(InputError):
        backends._select()
