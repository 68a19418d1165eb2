# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-path kernels.

Two routines dominate a time step: a batch of independent tridiagonal
solves (one per Fourier mode of the implicit diffusion operator) and an
elementwise Newton solve of y + a*y**p = x for the polynomial-graph
resolvent. Both have pure-NumPy twins in :mod:`bsac.backends`; this
module must match them to rounding error.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double ipow(double base, long e):
    # exponentiation by squaring; e >= 0
    cdef double r = 1.0
    cdef double b = base
    cdef long k = e
    while k > 0:
        if k & 1:
            r *= b
        b *= b
        k >>= 1
    return r


def thomas_batch(double[:, ::1] dl, double[:, ::1] d, double[:, ::1] du,
                 double[:, ::1] b):
    """Solve ``m`` independent tridiagonal systems of size ``n``.

    Parameters
    ----------
    dl, d, du : (m, n) arrays
        Sub-, main and super-diagonal per system; ``dl[:, 0]`` and
        ``du[:, n-1]`` are ignored.
    b : (m, n) array
        Right-hand sides.

    Returns
    -------
    (m, n) array with the solutions. No pivoting: callers guarantee
    diagonally dominant systems.
    """
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t n = d.shape[1]
    if dl.shape[0] != m or dl.shape[1] != n or du.shape[0] != m \
            or du.shape[1] != n or b.shape[0] != m or b.shape[1] != n:
        raise ValueError("diagonal/rhs shapes disagree")
    xarr = np.empty((m, n))
    cparr = np.empty((m, n))
    cdef double[:, ::1] x = xarr
    cdef double[:, ::1] cp = cparr
    cdef Py_ssize_t i, j
    cdef double w, denom
    for i in range(m):
        denom = d[i, 0]
        cp[i, 0] = du[i, 0] / denom
        x[i, 0] = b[i, 0] / denom
        for j in range(1, n):
            w = dl[i, j]
            denom = d[i, j] - w * cp[i, j - 1]
            cp[i, j] = du[i, j] / denom
            x[i, j] = (b[i, j] - w * x[i, j - 1]) / denom
        for j in range(n - 2, -1, -1):
            x[i, j] = x[i, j] - cp[i, j] * x[i, j + 1]
    return xarr


def poly_resolvent(double[::1] x, double a, long power, double[::1] out):
    """Solve ``y + a*y**power = x`` elementwise into ``out``.

    ``power`` is an odd positive integer and ``a >= 0``, so the left side
    is strictly increasing and odd; the root is solved for |x| and
    mirrored. Newton from y = |x| descends monotonically (the map is
    convex on [0, inf)) and is iterated to floating-point stagnation.

    Returns the number of elements whose final residual exceeded
    1e-12*(1 + |x|), which callers treat as a hard failure.
    """
    cdef Py_ssize_t n = x.shape[0]
    if out.shape[0] != n:
        raise ValueError("out has wrong length")
    cdef Py_ssize_t i
    cdef long p = power
    cdef long nfail = 0
    cdef double xi, s, y, f, df, ynew
    cdef int it
    if a == 0.0:
        for i in range(n):
            out[i] = x[i]
        return 0
    if p == 1:
        for i in range(n):
            out[i] = x[i] / (1.0 + a)
        return 0
    for i in range(n):
        xi = x[i]
        s = 1.0 if xi >= 0.0 else -1.0
        xi = fabs(xi)
        y = xi
        for it in range(200):
            f = y + a * ipow(y, p) - xi
            if f == 0.0:
                break
            df = 1.0 + a * p * ipow(y, p - 1)
            ynew = y - f / df
            if ynew == y:
                break
            y = ynew
        out[i] = s * y
        if fabs(y + a * ipow(y, p) - xi) > 1e-12 * (1.0 + xi):
            nfail += 1
    return nfail
