"""Closed-form catalog of low-order heat-trace coefficients.

For a second-order operator on an n-manifold with boundary the trace
expands as (4 pi t)^(-n/2) * (A_0 + A_1 t^(1/2) + A_2 t + ...), with A_0
the bulk volume term, A_1 the boundary term weighted by the projector
onto the non-Dirichlet subbundle, and A_2 collecting curvature,
potential, mean-curvature and Robin data.  When the boundary condition
has an oblique (tangential-derivative) part the projector weight in A_1
is replaced by a Gaussian matrix integral gamma over the cotangent
sphere of the boundary; ggs_gamma evaluates it by metric-whitened
Gauss-Hermite quadrature, or in closed form when the symbol matrices
commute or anticommute.
"""

import math

import numpy as np

from ._matfun import spd_sqrt
from ._quad import hermite_log_nodes, hermite_order_for
from .errors import NotElliptic, ValidationError, WrongAlgebraicStructure
from .mellin import AsymptoticSeries, SeriesTerm

__all__ = ["BoundaryData", "GeometryData", "ObliqueSymbol",
           "predicted_trace_coeffs", "ggs_gamma", "ggs_a1"]

_KINDS = ("Mixed", "Zaremba_Dirichlet", "Zaremba_Robin")
_MESH_H = 0.05


class BoundaryData:
    """One boundary component: volume, projector trace, curvature data.

    tr_Pi is the fiberwise trace of the projector onto the Robin/Neumann
    subbundle (constant over the component), int_K the integrated mean
    curvature, int_trPiS the integrated trace of Pi S Pi.  kind selects
    the A_1 weighting: "Mixed" uses tr_Pi, the Zaremba kinds force the
    pure Dirichlet / pure Robin weight on their part of the boundary.
    """

    def __init__(self, vol, tr_Pi=0.0, int_K=0.0, int_trPiS=0.0,
                 kind="Mixed"):
        if vol <= 0:
            raise ValidationError("boundary volume must be positive")
        if kind not in _KINDS:
            raise ValidationError(f"kind must be one of {_KINDS}")
        self.vol = float(vol)
        self.tr_Pi = float(tr_Pi)
        self.int_K = float(int_K)
        self.int_trPiS = float(int_trPiS)
        self.kind = kind


class GeometryData:
    """Integrated interior data plus one BoundaryData per component."""

    def __init__(self, n, N, vol_M, int_R=0.0, int_trQ=0.0,
                 boundary_components=(), sigma0_vol=0.0, zaremba_alpha=-1):
        n = int(n)
        fib = int(N)
        if n < 1 or fib < 1:
            raise ValidationError("need n >= 1 and N >= 1")
        if vol_M <= 0:
            raise ValidationError("vol_M must be positive")
        if zaremba_alpha not in (-1, 7):
            raise ValidationError("zaremba_alpha must be -1 or 7")
        if sigma0_vol < 0:
            raise ValidationError("sigma0_vol must be nonnegative")
        comps = tuple(boundary_components)
        for b in comps:
            if not 0.0 <= b.tr_Pi <= fib + 1e-12:
                raise ValidationError("component tr_Pi must lie in [0, N]")
        self.n = n
        self.N = fib
        self.vol_M = float(vol_M)
        self.int_R = float(int_R)
        self.int_trQ = float(int_trQ)
        self.boundary_components = comps
        self.sigma0_vol = float(sigma0_vol)
        self.zaremba_alpha = int(zaremba_alpha)


class ObliqueSymbol:
    """Tangential boundary symbol T(xi) = xi^j Gamma_j on the flat fiber.

    Gammas must be anti-self-adjoint; boundary_metric defaults to the
    identity; Pi is only needed by the anticommuting closed form.
    """

    def __init__(self, n, Gammas, boundary_metric=None, Pi=None):
        n = int(n)
        if n < 2:
            raise ValidationError("oblique symbols need dimension n >= 2")
        gam = np.asarray(Gammas, dtype=complex)
        if (gam.ndim != 3 or gam.shape[0] != n - 1
                or gam.shape[1] != gam.shape[2]):
            raise ValidationError(
                "Gammas must be n-1 square matrices of a common size")
        fib = gam.shape[1]
        scale = max(1.0, float(np.abs(gam).max()))
        for g in gam:
            if np.linalg.norm(g + g.conj().T, 2) > 1e-12 * scale:
                raise ValidationError(
                    "Gamma matrices must be anti-self-adjoint")
        if boundary_metric is None:
            met = np.eye(n - 1)
        else:
            met = np.asarray(boundary_metric, dtype=float)
            if met.shape != (n - 1, n - 1):
                raise ValidationError("boundary metric has wrong shape")
            if np.linalg.norm(met - met.T) > 1e-12 * max(
                    1.0, float(np.abs(met).max())):
                raise ValidationError("boundary metric must be symmetric")
            if np.any(np.linalg.eigvalsh(met) <= 0):
                raise ValidationError(
                    "boundary metric must be positive definite")
        pi = None
        if Pi is not None:
            pi = np.asarray(Pi, dtype=complex)
            if pi.shape != (fib, fib):
                raise ValidationError("projector has wrong shape")
            if (np.linalg.norm(pi - pi.conj().T, 2) > 1e-10
                    or np.linalg.norm(pi @ pi - pi, 2) > 1e-10):
                raise ValidationError("Pi must be an orthogonal projector")
        self.n = n
        self.N = fib
        self.Gammas = gam
        self.boundary_metric = met
        self.Pi = pi

    def whitened(self):
        """Gamma stack in coordinates where the boundary metric is 1."""
        _, w_inv = spd_sqrt(self.boundary_metric)
        return np.einsum("ja,jkl->akl", w_inv, self.Gammas)


def predicted_trace_coeffs(geom):
    """Catalog A_0, A_1, A_2 packaged as a short-time series in t.

    The returned series carries the (4 pi)^(-n/2) prefactor in its
    coefficients (powers (k - n)/2); the bare A_k are attached as .raw.
    """
    rt_pi = math.sqrt(math.pi)
    a0 = geom.N * geom.vol_M
    a1 = 0.0
    a2 = geom.N * geom.int_R / 6.0 - geom.int_trQ
    for b in geom.boundary_components:
        if b.kind == "Mixed":
            a1 += rt_pi / 2.0 * (2.0 * b.tr_Pi - geom.N) * b.vol
        elif b.kind == "Zaremba_Dirichlet":
            a1 -= rt_pi / 2.0 * geom.N * b.vol
        else:
            a1 += rt_pi / 2.0 * geom.N * b.vol
        a2 += geom.N * b.int_K / 3.0 + 2.0 * b.int_trPiS
    a2 += geom.zaremba_alpha * (math.pi / 4.0) * geom.N * geom.sigma0_vol
    pref = (4.0 * math.pi) ** (-0.5 * geom.n)
    terms = [SeriesTerm((k - geom.n) / 2.0, 0, pref * ak, "ClosedForm")
             for k, ak in enumerate((a0, a1, a2))]
    ser = AsymptoticSeries(terms, variable="t")
    ser.raw = {0: a0, 1: a1, 2: a2}
    return ser


def _sphere_mesh(d):
    """Unit-sphere mesh with geodesic resolution _MESH_H, plus that h."""
    if d == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if d == 2:
        m = int(np.ceil(2.0 * math.pi / _MESH_H))
        ang = 2.0 * math.pi * np.arange(m) / m
        return np.stack([np.cos(ang), np.sin(ang)], axis=1), _MESH_H
    if d == 3:
        nt = int(np.ceil(math.pi / _MESH_H)) + 1
        theta = np.linspace(0.0, math.pi, nt)
        m = int(np.ceil(2.0 * math.pi / _MESH_H))
        phi = 2.0 * math.pi * np.arange(m) / m
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        pts = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp),
                        np.cos(tt)], axis=-1).reshape(-1, 3)
        return pts, _MESH_H
    raise ValidationError(
        "ellipticity certification needs boundary dimension <= 3")


def _certified_margin(gt):
    """Certified lower bound on 1 - wmax^2 over the unit sphere.

    wmax is the largest spectral radius of T(eta) over |eta| = 1; the
    mesh value is inflated by a Lipschitz term so the bound is provable.
    Returns exactly 1.0 only for the zero symbol.
    """
    z = 1j * gt
    # |w(u) - w(v)| <= ||Z(u - v)|| <= sqrt(sum_a ||Z_a||^2) |u - v|
    lip = math.sqrt(sum(float(np.linalg.norm(zi, 2)) ** 2 for zi in z))
    if lip == 0.0:
        return 1.0
    pts, h = _sphere_mesh(gt.shape[0])
    zs = np.einsum("pa,aij->pij", pts, z)
    w = np.linalg.eigvalsh(zs)
    bound = float(np.abs(w).max()) + lip * h
    if bound >= 1.0:
        raise NotElliptic(
            f"certified symbol bound {bound:.6f} >= 1 on the unit sphere")
    return 1.0 - bound * bound


def _gamma_quadrature(gt, margin):
    d = gt.shape[0]
    order = hermite_order_for(margin)
    pts, lwts = hermite_log_nodes(d, order)
    z = 1j * gt
    total = 0.0
    for lo in range(0, pts.shape[0], 262144):
        zs = np.einsum("pa,aij->pij", pts[lo:lo + 262144], z)
        w = np.linalg.eigvalsh(zs)
        total += float(np.exp(lwts[lo:lo + 262144, None] + w * w).sum())
    return total * math.pi ** (-0.5 * d)


def _gamma_commuting(gt):
    d, fib = gt.shape[0], gt.shape[1]
    scale = max(1.0, max(float(np.linalg.norm(g, 2)) for g in gt) ** 2)
    for a in range(d):
        for b in range(a + 1, d):
            comm = gt[a] @ gt[b] - gt[b] @ gt[a]
            if np.linalg.norm(comm, 2) > 1e-12 * scale:
                raise WrongAlgebraicStructure(
                    "symbol matrices do not commute")
    m = np.eye(fib) + sum(g @ g for g in gt)
    ev = np.linalg.eigvalsh(m)
    if np.any(ev <= 0.0):
        raise NotElliptic("I + Gamma^2 is not positive definite")
    return float(np.sum(ev ** -0.5))


def _gamma_clifford(gt, pi, fib):
    if pi is None:
        raise WrongAlgebraicStructure(
            "the anticommuting closed form needs the projector Pi")
    d = gt.shape[0]
    tr_pi = float(np.real(np.trace(pi)))
    if tr_pi < 1e-12:
        kappa = 0.0
    else:
        kappa = -float(np.real(np.trace(gt[0] @ gt[0]))) / tr_pi
    kappa = max(kappa, 0.0)
    scale = max(1.0, 2.0 * kappa)
    zero = np.zeros_like(pi)
    for a in range(d):
        for b in range(a, d):
            anti = gt[a] @ gt[b] + gt[b] @ gt[a]
            target = -2.0 * kappa * pi if a == b else zero
            if np.linalg.norm(anti - target, 2) > 1e-10 * scale:
                raise WrongAlgebraicStructure(
                    "anticommutators are not -2 kappa Pi delta^{ab}")
    if kappa >= 1.0:
        raise NotElliptic(f"anticommutator strength {kappa:.6f} >= 1")
    return tr_pi * (1.0 - kappa) ** (-0.5 * d) + (fib - tr_pi)


def ggs_gamma(symbol, method="quadrature"):
    """Gaussian matrix integral gamma over the whitened cotangent sphere.

    gamma = pi^(-(n-1)/2) * int d eta  tr exp(-|eta|^2 - T(eta)^2)
    with T(eta) the whitened tangential symbol.  "quadrature" integrates
    directly (tensor Gauss-Hermite, order chosen from the certified
    ellipticity margin); "commuting" returns tr (I + Gamma^2)^(-1/2);
    "clifford" returns tr Pi (1-kappa)^(-(n-1)/2) + (N - tr Pi) when the
    whitened matrices satisfy {G_a, G_b} = -2 kappa Pi delta_ab.
    Ellipticity is certified before any evaluation.
    """
    if method not in ("quadrature", "commuting", "clifford"):
        raise ValidationError(
            "method must be quadrature, commuting or clifford")
    gt = symbol.whitened()
    margin = _certified_margin(gt)
    if method == "commuting":
        return _gamma_commuting(gt)
    if method == "clifford":
        return _gamma_clifford(gt, symbol.Pi, symbol.N)
    if margin >= 1.0:
        return float(symbol.N)
    return _gamma_quadrature(gt, margin)


def ggs_a1(symbol, N, boundary_vol, tr_Pi):
    """Boundary A_1 for an oblique condition: sqrt(pi)/2 (2 tr Pi - 3N + 2 gamma) vol."""
    if int(N) != symbol.N:
        raise ValidationError("fiber dimension does not match the symbol")
    if boundary_vol <= 0:
        raise ValidationError("boundary volume must be positive")
    if not 0.0 <= tr_Pi <= N + 1e-12:
        raise ValidationError("tr Pi must lie between 0 and N")
    gam = ggs_gamma(symbol, method="quadrature")
    return (boundary_vol * math.sqrt(math.pi) / 2.0
            * (2.0 * tr_Pi - 3.0 * N + 2.0 * gam))
