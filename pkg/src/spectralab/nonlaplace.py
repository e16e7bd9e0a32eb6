"""Gaussian symbol integrals for non-scalar leading symbols.

The leading coefficient of the heat trace of L = -d_mu a^{mu nu} d_nu + Q
with constant matrix coefficients is an integral of tr exp(-H(xi)) over
the cotangent fiber, H(xi) = a^{mu nu} xi_mu xi_nu.  The order-t
coefficient couples Q through the Volterra simplex integral
int_0^1 exp(-(1-tau)H) Q exp(-tau H) d tau, a divided difference of the
exponential in the eigenbasis of H.  The order-t^(1/2) interior term is
an odd integrand and vanishes.

With a Dirichlet boundary the t^(1/2) coefficient survives and needs
Psi(xi_hat): the fiber resolvent Phi(lambda), assembled from residues of
(H(omega, xi_hat) - lambda)^(-1) over the upper half omega-plane, enters
a contour integral of exp(-lambda) against d log det Phi.  The contour
runs from a real anchor just left of the spectral edge, up by delta, and
then parallel to the cut; log det Phi is branch-tracked along it and the
imaginary part of the integral gives Psi.
"""

import math

import numpy as np

from ._quad import hermite_log_nodes, legendre_rule
from .errors import (ContourTooShort, ContourWinding, NotElliptic,
                     NumericalError, QuadratureFailure, ValidationError)

__all__ = ["ConstantSymbol", "a0_density", "a1_density", "a2_density",
           "dirichlet_psi", "dirichlet_a1_density"]

_CHUNK = 262144
_DELTA = 1e-2
_GAP = 0.1


class ConstantSymbol:
    """Constant-coefficient second-order symbol a^{mu nu} and potential Q.

    a has shape (n, n, N, N), symmetric in the first two indices, with
    each a[mu, nu] self-adjoint on the fiber; Q defaults to zero.
    """

    def __init__(self, n, N, a, Q=None):
        n = int(n)
        fib = int(N)
        if n < 1 or fib < 1:
            raise ValidationError("need n >= 1 and N >= 1")
        a = np.asarray(a, dtype=complex)
        if a.shape != (n, n, fib, fib):
            raise ValidationError("a must have shape (n, n, N, N)")
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(a - a.transpose(1, 0, 2, 3)).max() > 1e-12 * scale:
            raise ValidationError("a must be symmetric in mu, nu")
        if np.abs(a - a.conj().transpose(0, 1, 3, 2)).max() > 1e-12 * scale:
            raise ValidationError("each a[mu, nu] must be self-adjoint")
        if Q is None:
            q = np.zeros((fib, fib), dtype=complex)
        else:
            q = np.asarray(Q, dtype=complex)
            if q.shape != (fib, fib):
                raise ValidationError("Q must be N x N")
            if np.abs(q - q.conj().T).max() > 1e-12 * max(
                    1.0, float(np.abs(q).max())):
                raise ValidationError("Q must be self-adjoint")
        self.n = n
        self.N = fib
        self.a = a
        self.Q = q
        self._alpha = None

    def h_of(self, xi):
        """H(xi) for a batch of covectors xi with shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        return np.einsum("...u,...v,uvij->...ij", xi, xi, self.a)


def _unit_sphere(dim, h):
    """Mesh of the unit sphere in R^dim and a provable distance margin."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if dim == 2:
        m = int(np.ceil(2.0 * math.pi / h))
        ang = 2.0 * math.pi * np.arange(m) / m
        return np.stack([np.cos(ang), np.sin(ang)], axis=1), h
    if dim == 3:
        nt = int(np.ceil(math.pi / h)) + 1
        theta = np.linspace(0.0, math.pi, nt)
        m = int(np.ceil(2.0 * math.pi / h))
        phi = 2.0 * math.pi * np.arange(m) / m
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        pts = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp),
                        np.cos(tt)], axis=-1).reshape(-1, 3)
        return pts, h
    if dim == 4:
        h = max(h, 0.1)
        nt = int(np.ceil(math.pi / h)) + 1
        t1 = np.linspace(0.0, math.pi, nt)
        t2 = np.linspace(0.0, math.pi, nt)
        m = int(np.ceil(2.0 * math.pi / h))
        t3 = 2.0 * math.pi * np.arange(m) / m
        a, b, c = np.meshgrid(t1, t2, t3, indexing="ij")
        pts = np.stack([np.cos(a), np.sin(a) * np.cos(b),
                        np.sin(a) * np.sin(b) * np.cos(c),
                        np.sin(a) * np.sin(b) * np.sin(c)],
                       axis=-1).reshape(-1, 4)
        return pts, 2.0 * h
    raise ValidationError("symbol certification needs dimension <= 4")


def _certify(sym):
    """Certified ellipticity: min eig of H on the sphere, mesh + margin.

    Returns the mesh minimum (used for isotropic scaling); raises
    NotElliptic when positivity is not provable.
    """
    if sym._alpha is not None:
        return sym._alpha
    pts, margin = _unit_sphere(sym.n, 0.05)
    ev = np.linalg.eigvalsh(sym.h_of(pts))
    mesh_min = float(ev.min())
    # ||H(u) - H(v)|| <= ||a||_F,op |u x u - v x v|_F <= 2 ||a|| |u - v|
    lip = 2.0 * math.sqrt(sum(
        float(np.linalg.norm(sym.a[u, v], 2)) ** 2
        for u in range(sym.n) for v in range(sym.n)))
    if mesh_min - lip * margin <= 0.0:
        raise NotElliptic(
            f"certified sphere minimum {mesh_min - lip * margin:.6f} <= 0")
    sym._alpha = mesh_min
    return mesh_min


def _gauss_grid(sym, order):
    """Scaled Gauss-Hermite grid: points xi, effective weights, |eta|^2."""
    s = _certify(sym) ** -0.5
    pts, lwts = hermite_log_nodes(sym.n, order)
    r2 = np.einsum("pa,pa->p", pts, pts)
    return s * pts, lwts, r2, s


def _a0_value(sym, order):
    xi, lwts, r2, s = _gauss_grid(sym, order)
    total = 0.0
    for lo in range(0, xi.shape[0], _CHUNK):
        h = np.linalg.eigvalsh(sym.h_of(xi[lo:lo + _CHUNK]))
        expo = (lwts[lo:lo + _CHUNK] + r2[lo:lo + _CHUNK])[:, None] - h
        total += float(np.exp(expo).sum())
    return total * s ** sym.n * math.pi ** (-0.5 * sym.n)


def _dd_kernel(h):
    """Divided difference (e^{-h_a} - e^{-h_b})/(h_b - h_a) over an
    eigenvalue batch (..., N), series below |h_a - h_b| = 1e-6."""
    ha = h[..., :, None]
    hb = h[..., None, :]
    diff = hb - ha
    small = np.abs(diff) < 1e-6
    safe = np.where(small, 1.0, diff)
    return np.where(small,
                    np.exp(-0.5 * (ha + hb)) * (1.0 + diff * diff / 24.0),
                    (np.exp(-ha) - np.exp(-hb)) / safe)


def _simplex_trace(h, v, ins):
    """tr of int_0^1 e^{-(1-tau)H} T e^{-tau H} d tau for a batch of
    insertions T, in the eigenbasis (v, h) of H.

    The matrix of the simplex integral is the divided-difference kernel
    times the transformed insertion entrywise; only its diagonal reaches
    the trace.
    """
    tt = np.einsum("pai,pij,pjb->pab", v.conj().swapaxes(-1, -2), ins, v)
    kern = _dd_kernel(h)
    return np.einsum("paa,paa->p", kern, tt).real


def a0_density(sym):
    """Leading density int d xi pi^(-n/2) tr exp(-H(xi)).

    Gauss-Hermite after isotropic scaling; two node counts must agree to
    1e-7 relative or the order ladder escalates.
    """
    ladder = [(40, 48), (64, 72)] if sym.n <= 3 else [(40, 48), (48, 56)]
    for m_lo, m_hi in ladder:
        lo = _a0_value(sym, m_lo)
        hi = _a0_value(sym, m_hi)
        if abs(lo - hi) <= 1e-7 * max(abs(hi), 1e-300):
            return hi
    raise QuadratureFailure("symbol integral did not stabilize at 1e-7")


def _a2_value(sym, order):
    xi, lwts, r2, s = _gauss_grid(sym, order)
    total = 0.0
    for lo in range(0, xi.shape[0], _CHUNK):
        h, v = np.linalg.eigh(sym.h_of(xi[lo:lo + _CHUNK]))
        ins = np.broadcast_to(sym.Q, h.shape[:-1] + sym.Q.shape)
        tr = _simplex_trace(h, v, ins)
        w_eff = np.exp(lwts[lo:lo + _CHUNK] + r2[lo:lo + _CHUNK])
        total += float(np.dot(w_eff, tr))
    return -total * s ** sym.n * math.pi ** (-0.5 * sym.n)


def a2_density(sym):
    """Order-t density -int d xi pi^(-n/2) tr of the Volterra integral."""
    ladder = [(40, 48), (64, 72)] if sym.n <= 3 else [(40, 48), (48, 56)]
    for m_lo, m_hi in ladder:
        lo = _a2_value(sym, m_lo)
        hi = _a2_value(sym, m_hi)
        if abs(lo - hi) <= 1e-7 * max(abs(hi), 1e-12):
            return hi
    raise QuadratureFailure("symbol integral did not stabilize at 1e-7")


def a1_density(sym, k=None):
    """Order-t^(1/2) interior density with insertion T(xi) = xi_mu k^mu.

    For constant coefficients the canonical insertion is zero; any
    self-adjoint k integrates to zero anyway because the integrand is
    odd in xi.  The quadrature value (numerically zero) is returned.
    """
    if k is None:
        return 0.0
    mats = np.asarray(k, dtype=complex)
    if mats.shape != (sym.n, sym.N, sym.N):
        raise ValidationError("k must have shape (n, N, N)")
    for m in mats:
        if np.abs(m - m.conj().T).max() > 1e-12 * max(
                1.0, float(np.abs(mats).max())):
            raise ValidationError("insertion matrices must be self-adjoint")
    xi, lwts, r2, s = _gauss_grid(sym, 40)
    total = 0.0
    for lo in range(0, xi.shape[0], _CHUNK):
        h, v = np.linalg.eigh(sym.h_of(xi[lo:lo + _CHUNK]))
        ins = np.einsum("pu,uij->pij", xi[lo:lo + _CHUNK], mats)
        tr = _simplex_trace(h, v, ins)
        w_eff = np.exp(lwts[lo:lo + _CHUNK] + r2[lo:lo + _CHUNK])
        total += float(np.dot(w_eff, tr))
    return -total * s ** sym.n * math.pi ** (-0.5 * sym.n)


def _boundary_pencil(sym, xi_hat):
    """Quadratic omega-pencil of H(omega, xi_hat), normal = last axis."""
    xi_hat = np.asarray(xi_hat, dtype=float)
    if xi_hat.shape != (sym.n - 1,):
        raise ValidationError("xi_hat must have shape (n - 1,)")
    if float(np.dot(xi_hat, xi_hat)) == 0.0:
        raise ValidationError("xi_hat must be nonzero")
    nrm = sym.n - 1
    a2 = sym.a[nrm, nrm]
    a1 = sum(xi_hat[j] * (sym.a[nrm, j] + sym.a[j, nrm])
             for j in range(nrm))
    a0 = np.einsum("j,k,jkab->ab", xi_hat, xi_hat, sym.a[:nrm, :nrm])
    return a2, np.asarray(a1, dtype=complex), a0


def _band_edges(a2, a1, a0):
    """Minimum over real omega of each eigenvalue band of H(omega).

    These are the branch points of log det Phi; the contour panels must
    resolve the delta-scale behavior around every one of them.
    """
    al2 = float(np.linalg.eigvalsh(a2).min())
    big = max(float(np.linalg.norm(a1, 2)), 1e-30)
    wid = (big + math.sqrt(big * big
                           + 4.0 * al2 * float(np.linalg.norm(a0, 2)))) \
        / (2.0 * al2) + 1.0
    om = np.linspace(-wid, wid, 1601)
    hh = (np.multiply.outer(om * om, a2) + np.multiply.outer(om, a1)
          + a0[None, :, :])
    ev = np.linalg.eigvalsh(hh)
    edges = []
    for j in range(ev.shape[1]):
        band = ev[:, j]
        i = int(np.argmin(band))
        best = float(band[i])
        if 0 < i < len(om) - 1:
            y0, y1, y2 = band[i - 1], band[i], band[i + 1]
            den = y0 - 2.0 * y1 + y2
            if den > 0:
                w = om[i] + 0.5 * (y0 - y2) / den * (om[1] - om[0])
                h1 = w * w * a2 + w * a1 + a0
                best = min(best,
                           float(np.linalg.eigvalsh(h1)[j]))
        edges.append(best)
    out = []
    for e in sorted(edges):
        if not out or e - out[-1] > 1e-6 * (1.0 + abs(e)):
            out.append(e)
    return out


def _phi(a2, a1, a0, lam, fib):
    """Phi(lambda) = i sum of residues of (H(omega) - lambda)^(-1) over
    the upper half plane, clusters handled through their null spaces."""
    eye = np.eye(fib)
    a2inv = np.linalg.solve(a2, eye)
    comp = np.zeros((2 * fib, 2 * fib), dtype=complex)
    comp[:fib, fib:] = eye
    comp[fib:, :fib] = -a2inv @ (a0 - lam * eye)
    comp[fib:, fib:] = -a2inv @ a1
    roots = np.linalg.eigvals(comp)
    upper = np.sort_complex(roots[roots.imag > 0.0])
    if len(upper) != fib:
        raise NumericalError(
            f"expected {fib} upper-half roots, found {len(upper)}")
    out = np.zeros((fib, fib), dtype=complex)
    used = 0
    while used < fib:
        w0 = upper[used]
        m = 1
        while (used + m < fib
               and abs(upper[used + m] - w0) <= 1e-8 * (1.0 + abs(w0))):
            m += 1
        center = upper[used:used + m].mean()
        pmat = center * center * a2 + center * a1 + (a0 - lam * eye)
        u, sv, vh = np.linalg.svd(pmat)
        scale = (abs(center) ** 2 * np.linalg.norm(a2, 2)
                 + abs(center) * np.linalg.norm(a1, 2)
                 + np.linalg.norm(a0, 2) + abs(lam) + 1e-300)
        if m < fib and sv[fib - m - 1] <= 1e-6 * scale:
            raise NumericalError("could not separate omega root cluster")
        if sv[fib - m] > 1e-6 * scale:
            raise NumericalError("omega root cluster is not semisimple")
        v0 = vh[fib - m:].conj().T
        w0v = u[:, fib - m:]
        pprime = 2.0 * center * a2 + a1
        core = w0v.conj().T @ pprime @ v0
        out += v0 @ np.linalg.solve(core, w0v.conj().T)
        used += m
    return 1j * out


def _contour_nodes(c_min, edges, length, refine=1):
    """Gauss-Legendre nodes along [c_min, c_min + i delta, Lambda + i delta],
    panels clustered at scale delta around every band edge."""
    x, w = legendre_rule(20 * refine)
    xv, wv = legendre_rule(12 * refine)
    nodes = []
    weights = []
    # vertical riser
    for t, ww in zip(xv, wv):
        u = 0.5 * _DELTA * (t + 1.0)
        nodes.append(c_min + 1j * u)
        weights.append(1j * 0.5 * _DELTA * ww)
    # horizontal panel knots: a fixed pattern at delta scale around each
    # edge plus geometric fill in both directions, merged and deduped
    lam_end = c_min + length
    knots = {c_min, lam_end}
    for e in edges:
        if e >= lam_end:
            continue
        for u in (0.01, 0.02, 0.05, 0.12):
            for k in (e - u, e + u):
                if c_min + 0.004 < k < lam_end - 0.004:
                    knots.add(k)
        u = 0.12 * 1.6
        while u < length:
            for k in (e - u, e + u):
                if c_min + 0.004 < k < lam_end - 0.004:
                    knots.add(k)
            u *= 1.6
    breaks = [c_min]
    for k in sorted(knots):
        if k - breaks[-1] > 0.004:
            breaks.append(k)
    breaks[-1] = lam_end
    for a, b in zip(breaks, breaks[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        for t, ww in zip(x, w):
            nodes.append(mid + half * t + 1j * _DELTA)
            weights.append(half * ww)
    return np.array(nodes), np.array(weights)


def _tracked_log_det(phi_at, nodes):
    """log det Phi along the path, argument unwrapped node to node.

    The first node sits just above the real anchor where det Phi is real
    positive, so the principal angle there fixes the branch globally.
    Returns None when consecutive steps are too large to unwrap safely.
    """
    dets = np.empty(len(nodes), dtype=complex)
    for i, lam in enumerate(nodes):
        dets[i] = np.linalg.det(phi_at(lam))
    if np.any(dets == 0.0):
        raise NumericalError("det Phi vanished on the contour")
    args = np.unwrap(np.angle(dets))
    if len(nodes) > 1 and np.abs(np.diff(args)).max() > 2.5:
        return None
    return np.log(np.abs(dets)) + 1j * args


def dirichlet_psi(sym, xi_hat, contour_length=45.0):
    """Boundary weight Psi(xi_hat) from the lambda-contour integral.

    Psi = (1/pi) Im int_path exp(-lambda) log det Phi(lambda) d lambda,
    path anchored on the real axis left of the spectral edge where
    log det Phi is real, so no boundary term survives.  The scalar
    symbol gives Psi = exp(-|xi_hat|^2)/2.
    """
    a2, a1, a0 = _boundary_pencil(sym, xi_hat)
    _certify(sym)
    edges = _band_edges(a2, a1, a0)
    c_min = edges[0] - _GAP
    fib = sym.N

    def phi_at(lam):
        return _phi(a2, a1, a0, lam, fib)

    g = None
    for refine in (1, 2):
        nodes, weights = _contour_nodes(c_min, edges, contour_length,
                                        refine)
        g = _tracked_log_det(phi_at, nodes)
        if g is not None:
            break
    if g is None:
        raise ContourWinding("det Phi winds too fast along the contour")
    integral = np.sum(weights * np.exp(-nodes) * g)
    tail = math.exp(-(c_min + contour_length)) * (abs(g[-1]) + 2.0 * fib
                                                  + 1.0) / math.pi
    scale = max(abs(integral) / math.pi, math.exp(-edges[0]))
    if tail > 1e-10 * scale:
        raise ContourTooShort(
            f"tail bound {tail:.3e} exceeds 1e-10 of scale {scale:.3e}")
    return float(integral.imag / math.pi)


def _direction_floor(sym):
    """Rough minimum of the spectral edge over boundary directions."""
    pts, _ = _unit_sphere(sym.n - 1, 0.3)
    best = math.inf
    for u in pts:
        a2, a1, a0 = _boundary_pencil(sym, u)
        best = min(best, _band_edges(a2, a1, a0)[0])
    return best


def dirichlet_a1_density(sym, order=40):
    """Dirichlet boundary density A_1 = -sqrt(pi) int d xi_hat
    pi^(-(n-1)/2) Psi(xi_hat), Gauss-Hermite after isotropic scaling."""
    if sym.n < 2:
        raise ValidationError("a boundary needs n >= 2")
    d = sym.n - 1
    s = _direction_floor(sym) ** -0.5
    cache = {}

    def psi_at(xi_hat):
        # Psi is even in xi_hat: H(omega, -xi_hat) = H(-omega, xi_hat)
        flip = xi_hat[np.argmax(np.abs(xi_hat) > 1e-14)] < 0.0
        key = tuple(np.round(-xi_hat if flip else xi_hat, 13))
        if key not in cache:
            cache[key] = dirichlet_psi(sym, np.array(key))
        return cache[key]

    vals = []
    for m in (order - 8, order):
        pts, lwts = hermite_log_nodes(d, m)
        r2 = np.einsum("pa,pa->p", pts, pts)
        total = 0.0
        for p in range(pts.shape[0]):
            psi = psi_at(s * pts[p])
            if psi > 0.0:
                total += math.exp(lwts[p] + r2[p] + math.log(psi))
        vals.append(total * s ** d * math.pi ** (-0.5 * d))
    if abs(vals[0] - vals[1]) > 1e-6 * max(abs(vals[1]), 1e-300):
        raise QuadratureFailure("boundary assembly did not stabilize")
    return -math.sqrt(math.pi) * vals[1]
