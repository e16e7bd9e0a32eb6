"""Quadrature helpers: cached Gauss rules and panel integrators."""

from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss

from .errors import QuadratureFailure


@lru_cache(maxsize=64)
def hermite_rule(m):
    x, w = hermgauss(m)
    return x, w


@lru_cache(maxsize=64)
def laguerre_rule(m):
    x, w = laggauss(m)
    return x, w


@lru_cache(maxsize=64)
def legendre_rule(m):
    x, w = leggauss(m)
    return x, w


def hermite_nodes(dim, m):
    """Tensorstack of Hermite nodes/weights in `dim` dimensions.

    Returns (points (M, dim), weights (M,)) for integrals against
    exp(-|xi|^2) d xi.
    """
    x, w = hermite_rule(m)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.ones(pts.shape[0])
    for axis in range(dim):
        wts *= w[np.unravel_index(np.arange(pts.shape[0]),
                                  (len(x),) * dim)[axis]]
    return pts, wts


def hermite_log_nodes(dim, m):
    """hermite_nodes with log-weights.

    For integrands that grow like exp(c*|xi|^2) with c < 1 the plain
    weight * value product can hit inf * 0; summing exp(logw + logf)
    per node stays finite because the combined exponent is negative.
    """
    x, w = hermite_rule(m)
    lw = np.log(w)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    lwts = np.zeros(pts.shape[0])
    for axis in range(dim):
        lwts += lw[np.unravel_index(np.arange(pts.shape[0]),
                                    (len(x),) * dim)[axis]]
    return pts, lwts


def hermite_order_for(alpha, cap=150):
    """Node count so that Gauss-Hermite resolves exp(-alpha*x^2) factors.

    alpha < 1 widens the integrand relative to the weight; the error of
    an m-point rule on such profiles decays like ((1-alpha)/(1+alpha))^m,
    so m is chosen to push that below 1e-12.
    """
    alpha = float(alpha)
    if alpha >= 1.0:
        return 40
    r = (1.0 - alpha) / (1.0 + alpha)
    if r >= 0.999:
        return cap
    m = int(np.ceil(np.log(1e-12) / np.log(r))) + 10
    return min(max(m, 40), cap)


def log_panel_integrate(f, a, b, n_panels=8, order=24):
    """Integrate f on (a, b), 0 < a < b, with Gauss-Legendre in log t.

    f must be vectorized.  Returns (value, crude_error) where the error
    is estimated by comparing with a rule of half the order.
    """
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    edges = np.exp(np.linspace(np.log(a), np.log(b), n_panels + 1))
    total = 0.0
    total_lo = 0.0
    x_hi, w_hi = legendre_rule(order)
    x_lo, w_lo = legendre_rule(max(order // 2, 4))
    for left, right in zip(edges[:-1], edges[1:]):
        la, lb = np.log(left), np.log(right)
        mid, half = 0.5 * (la + lb), 0.5 * (lb - la)
        t = np.exp(mid + half * x_hi)
        total += half * np.sum(w_hi * t * f(t))
        t2 = np.exp(mid + half * x_lo)
        total_lo += half * np.sum(w_lo * t2 * f(t2))
    return total, abs(total - total_lo)


def adaptive_log_integrate(f, a, b, tol=1e-12, max_panels=64):
    """log_panel_integrate with panel doubling until the estimate settles."""
    n = 8
    val, err = log_panel_integrate(f, a, b, n_panels=n)
    scale = max(abs(val), 1.0)
    while err > tol * scale and n < max_panels:
        n *= 2
        val, err = log_panel_integrate(f, a, b, n_panels=n)
        scale = max(abs(val), 1.0)
    if err > tol * scale * 100:
        raise QuadratureFailure(
            f"panel integration stalled at error {err:.3e}")
    return val, err
