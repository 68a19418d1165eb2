"""Kernel backends: compiled extension with a pure-NumPy fallback.

The two hot routines (batched Thomas solve, polynomial resolvent Newton)
exist twice: in the optional Cython extension ``bsac._kernels`` and as
vectorized NumPy code below. The active implementation is chosen once at
import time; set ``BSAC_KERNELS=reference`` or ``BSAC_KERNELS=compiled``
to force a choice (the latter raises if the extension is missing).

Both implementations follow the same low-level contract so they can be
compared element-for-element by the test suite and the benchmark script:

``thomas_batch_impl(dl, d, du, b)``
    Solve m independent real tridiagonal systems of size n, all inputs
    (m, n) float64, ``dl[:, 0]``/``du[:, n-1]`` ignored, no pivoting.

``poly_resolvent_impl(x, a, power, out)``
    Solve ``y + a*y**power = x`` elementwise (power odd, a >= 0) into
    ``out``; returns the count of elements whose residual exceeds
    ``1e-12*(1+|x|)``.
"""

import os

import numpy as np

from .errors import InputError, NumericalError

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def _thomas_batch_ref(dl, d, du, b):
    m, n = d.shape
    cp = np.empty((m, n))
    x = np.empty((m, n))
    cp[:, 0] = du[:, 0] / d[:, 0]
    x[:, 0] = b[:, 0] / d[:, 0]
    for j in range(1, n):
        denom = d[:, j] - dl[:, j] * cp[:, j - 1]
        cp[:, j] = du[:, j] / denom
        x[:, j] = (b[:, j] - dl[:, j] * x[:, j - 1]) / denom
    for j in range(n - 2, -1, -1):
        x[:, j] -= cp[:, j] * x[:, j + 1]
    return x


def _ipow(base, e):
    """Integer power by squaring, multiplication-order identical to the
    compiled kernel (plain ``**`` routes through libm pow and rounds
    differently)."""
    r = np.ones_like(base)
    b = base.copy()
    while e > 0:
        if e & 1:
            r = r * b
        b = b * b
        e >>= 1
    return r


def _poly_resolvent_ref(x, a, power, out):
    if a == 0.0:
        out[...] = x
        return 0
    if power == 1:
        out[...] = x / (1.0 + a)
        return 0
    xi = np.abs(x)
    y = xi.copy()
    for _ in range(200):
        f = y + a * _ipow(y, power) - xi
        df = 1.0 + a * power * _ipow(y, power - 1)
        ynew = np.where(f == 0.0, y, y - f / df)
        if np.array_equal(ynew, y):
            break
        y = ynew
    out[...] = np.where(x >= 0.0, y, -y)
    resid = np.abs(y + a * _ipow(y, power) - xi)
    return int(np.count_nonzero(resid > 1e-12 * (1.0 + xi)))


class _Reference:
    name = "reference"
    thomas_batch_impl = staticmethod(_thomas_batch_ref)
    poly_resolvent_impl = staticmethod(_poly_resolvent_ref)


class _Compiled:
    name = "compiled"

    @staticmethod
    def thomas_batch_impl(dl, d, du, b):
        return _compiled.thomas_batch(
            np.ascontiguousarray(dl), np.ascontiguousarray(d),
            np.ascontiguousarray(du), np.ascontiguousarray(b))

    @staticmethod
    def poly_resolvent_impl(x, a, power, out):
        return _compiled.poly_resolvent(np.ascontiguousarray(x), a, power, out)


REFERENCE = _Reference
COMPILED = _Compiled if _compiled is not None else None


def _select():
    forced = os.environ.get("BSAC_KERNELS", "").strip().lower()
    if forced == "reference":
        return REFERENCE
    if forced == "compiled":
        if COMPILED is None:
            raise ImportError(
                "BSAC_KERNELS=compiled but the bsac._kernels extension is "
                "not built; reinstall with a C compiler available")
        return COMPILED
    if forced:
        raise InputError(f"unknown BSAC_KERNELS value {forced!r}")
    return COMPILED if COMPILED is not None else REFERENCE


_ACTIVE = _select()


def backend_name():
    """Name of the active kernel backend ('compiled' or 'reference')."""
    return _ACTIVE.name


def thomas_batch(dl, d, du, b):
    """Batched tridiagonal solve; real diagonals, real or complex rhs.

    Complex right-hand sides are split into two real solves so both
    backends produce bit-identical results.
    """
    if np.iscomplexobj(b):
        xr = _ACTIVE.thomas_batch_impl(dl, d, du, np.ascontiguousarray(b.real))
        xi = _ACTIVE.thomas_batch_impl(dl, d, du, np.ascontiguousarray(b.imag))
        return xr + 1j * xi
    return _ACTIVE.thomas_batch_impl(dl, d, du, b)


def poly_resolvent(x, a, power):
    """Solve ``y + a*y**power = x`` elementwise for scalar or array x."""
    arr = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(arr.reshape(-1))
    out = np.empty_like(flat)
    nfail = _ACTIVE.poly_resolvent_impl(flat, float(a), int(power), out)
    if nfail:
        bad = np.abs(out + a * out**power - flat) > 1e-12 * (1.0 + np.abs(flat))
        idx = int(np.argmax(bad))
        raise NumericalError(
            f"polynomial resolvent failed on {nfail} of {flat.size} points; "
            f"first at x={flat[idx]!r} (a={a!r}, power={power})")
    res = out.reshape(arr.shape)
    if np.isscalar(x) or arr.ndim == 0:
        return float(res)
    return res
