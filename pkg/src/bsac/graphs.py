"""Scalar maximal monotone graphs and their regularization calculus.

A graph here is beta = subdifferential of a convex antiderivative
beta_hat with beta_hat(0) = 0 and beta_hat >= 0 (so 0 in beta(0)). Three
kinds are supported:

``polynomial``
    beta(r) = coeff * r**power with odd positive integer power and
    coeff >= 0; beta_hat(r) = coeff * |r|**(power+1) / (power+1).

``obstacle``
    beta = subdifferential of the indicator of [lower, upper] with
    lower <= 0 <= upper: {0} inside, vertical rays at the endpoints.
    The minimal section is 0 at the endpoints as well (0 belongs to
    both rays); that endpoint convention is ours and is relied on by
    the |yosida| <= |minimal_section| comparison.

``custom``
    A user-supplied single-valued continuous nondecreasing ``beta`` with
    ``beta(0) = 0`` plus its convex antiderivative ``beta_hat``, on an
    optional closed domain containing 0. Resolvents are solved with a
    bracketed Brent iteration; the bracket [min(x, 0), max(x, 0)] is
    valid because beta is monotone with beta(0) = 0.

All operations accept scalars or NumPy arrays in ``x`` and return the
matching shape. Root-finds aim for relative residuals near machine
precision and fail loudly beyond 1e-12*(1+|x|).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import backends
from .errors import DomainError, InputError


@dataclass(frozen=True)
class MonotoneGraph:
    """Immutable description of a scalar maximal monotone graph."""

    kind: str
    power: int = 3
    coeff: float = 1.0
    lower: float = -math.inf
    upper: float = math.inf
    beta_fn: Optional[Callable] = field(default=None, repr=False)
    beta_hat_fn: Optional[Callable] = field(default=None, repr=False)

    @property
    def domain(self):
        """Effective domain of beta as a closed interval (lo, hi)."""
        return (self.lower, self.upper)

    def beta_hat(self, x):
        """Convex antiderivative; +inf outside the effective domain."""
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            out = self.coeff * np.abs(x) ** (self.power + 1) / (self.power + 1)
        elif self.kind == "obstacle":
            out = np.where((x >= self.lower) & (x <= self.upper), 0.0, np.inf)
        else:
            out = np.asarray(self.beta_hat_fn(x), dtype=float)
            out = np.where((x >= self.lower) & (x <= self.upper), out, np.inf)
        if x.ndim == 0:
            return float(out)
        return out


def polynomial_graph(power=3, coeff=1.0):
    """Odd-power monomial graph beta(r) = coeff * r**power."""
    power = int(power)
    if power < 1 or power % 2 == 0:
        raise InputError(f"power must be an odd positive integer, got {power}")
    if not (np.isfinite(coeff) and coeff >= 0):
        raise InputError(f"coeff must be finite and >= 0, got {coeff}")
    return MonotoneGraph(kind="polynomial", power=power, coeff=float(coeff))


def obstacle_graph(lower=-1.0, upper=1.0):
    """Subdifferential of the indicator of [lower, upper]."""
    lower, upper = float(lower), float(upper)
    if not (lower <= 0.0 <= upper):
        raise InputError(
            f"obstacle interval must contain 0, got [{lower}, {upper}]")
    return MonotoneGraph(kind="obstacle", lower=lower, upper=upper)


def custom_graph(beta, beta_hat, lower=-math.inf, upper=math.inf):
    """Single-valued monotone graph from callables (beta, its antiderivative)."""
    lower, upper = float(lower), float(upper)
    if not (lower <= 0.0 <= upper):
        raise InputError("custom domain must contain 0")
    b0 = float(beta(0.0))
    if abs(b0) > 1e-12:
        raise InputError(f"custom graph needs beta(0) = 0, got {b0}")
    return MonotoneGraph(kind="custom", lower=lower, upper=upper,
                         beta_fn=beta, beta_hat_fn=beta_hat)


def zero_graph():
    """The zero graph (resolvent is the identity)."""
    return polynomial_graph(power=1, coeff=0.0)


def _check_x(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError("non-finite input to graph operation")
    return arr


def _scalarize(x, out):
    if np.asarray(x).ndim == 0:
        return float(out)
    return out


def _custom_resolvent(g, eps, arr):
    out = np.empty_like(arr)
    flat = arr.reshape(-1)
    res = out.reshape(-1)
    for i, xv in enumerate(flat):
        a = max(min(xv, 0.0), g.lower)
        b = min(max(xv, 0.0), g.upper)

        def fun(y, xv=xv):
            return y + eps * float(g.beta_fn(y)) - xv

        if fun(a) >= 0.0:
            res[i] = a
        elif fun(b) <= 0.0:
            res[i] = b
        else:
            res[i] = brentq(fun, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    return out


def resolvent(g, eps, x):
    """Resolvent (I + eps*beta)^{-1}(x); 1-Lipschitz, defined for all x.

    For the obstacle graph this is the projection onto [lower, upper];
    for single-valued graphs the residual |y + eps*beta(y) - x| stays
    below 1e-12*(1+|x|).
    """
    if not (eps > 0):
        raise InputError(f"eps must be positive, got {eps}")
    arr = _check_x(x)
    if g.kind == "obstacle":
        return _scalarize(x, np.clip(arr, g.lower, g.upper))
    if g.kind == "polynomial":
        out = backends.poly_resolvent(arr, eps * g.coeff, g.power)
        return _scalarize(x, np.asarray(out))
    return _scalarize(x, _custom_resolvent(g, eps, arr))


def yosida(g, eps, x):
    """Yosida approximation beta_eps(x) = (x - resolvent(x)) / eps."""
    arr = _check_x(x)
    res = np.asarray(resolvent(g, eps, arr))
    return _scalarize(x, (arr - res) / eps)


def moreau_envelope(g, eps, x):
    """Smoothed antiderivative beta_hat(J_eps(x)) + |x - J_eps(x)|^2/(2 eps)."""
    arr = _check_x(x)
    res = np.asarray(resolvent(g, eps, arr))
    out = g.beta_hat(res) + (arr - res) ** 2 / (2.0 * eps)
    return _scalarize(x, out)


def minimal_section(g, x):
    """Element of beta(x) with least absolute value; x must lie in D(beta)."""
    arr = _check_x(x)
    inside = (arr >= g.lower) & (arr <= g.upper)
    if not np.all(inside):
        bad = np.asarray(arr)[~np.asarray(inside, dtype=bool)].reshape(-1)
        raise DomainError(
            f"point {bad[0]!r} outside effective domain [{g.lower}, {g.upper}]")
    if g.kind == "polynomial":
        out = g.coeff * arr**g.power
    elif g.kind == "obstacle":
        out = np.zeros_like(arr)
    else:
        out = np.asarray(g.beta_fn(arr), dtype=float)
    return _scalarize(x, out)


def resolvent_of_yosida(g, eps, lam, x):
    """Resolvent of the regularized graph: solves y + lam*beta_eps(y) = x.

    Closed form (eps*x + lam*resolvent(g, eps+lam, x)) / (eps+lam). With
    eps = 0 this collapses to the plain resolvent, which is how the time
    steppers call it uniformly.
    """
    if eps < 0:
        raise InputError(f"eps must be >= 0, got {eps}")
    if not (lam > 0):
        raise InputError(f"lam must be positive, got {lam}")
    arr = _check_x(x)
    inner = np.asarray(resolvent(g, eps + lam, arr))
    if eps == 0:
        return _scalarize(x, inner)
    return _scalarize(x, (eps * arr + lam * inner) / (eps + lam))


def compose_affine_domain(g, alpha, eta):
    """Effective domain of beta composed with g(s) = (s - eta)/alpha.

    Returns the closed interval {s : (s - eta)/alpha in D(beta)}, i.e.
    [alpha*a + eta, alpha*b + eta] for alpha > 0 and the endpoint-swapped
    interval for alpha < 0; unbounded domains map to unbounded intervals.
    """
    alpha, eta = float(alpha), float(eta)
    if alpha == 0 or not np.isfinite(alpha) or not np.isfinite(eta):
        raise InputError(f"alpha must be finite and nonzero, got {alpha}")
    a = alpha * g.lower + eta if np.isfinite(g.lower) else math.inf * -alpha
    b = alpha * g.upper + eta if np.isfinite(g.upper) else math.inf * alpha
    if alpha > 0:
        return (a, b)
    return (b, a)
