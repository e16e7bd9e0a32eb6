"""Spectra: closed forms, root finding, counting, serialization."""

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from spectralab import (BC, AboveCutoff, Circle, CutoffTooSmall, DiracCircle,
                        FlatTorus, Interval, Landau, Sphere2, Spectrum,
                        UnsupportedModel, ValidationError, counting_function,
                        dirac_eigenvalues, eigenvalues)


def as_pairs(spec):
    return [(float(l), int(m)) for l, m in zip(spec.lambdas, spec.mults)]


def test_circle_spectrum():
    spec = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=0.0), 10.0)
    assert as_pairs(spec) == [(0.0, 1), (1.0, 2), (4.0, 2), (9.0, 2)]


def test_circle_twist_and_mass():
    spec = eigenvalues(Circle(radius=2.0, twist=0.25, mass2=1.5), 5.0)
    want = sorted(((k + 0.25) / 2.0) ** 2 + 1.5 for k in range(-5, 6))
    want = [w for w in want if w <= 5.0]
    assert np.allclose(spec.lambdas, want)
    assert all(m == 1 for m in spec.mults)


def test_twist_gauge_periodicity():
    # dyadic twist: the shift by one is exact in floating point
    a = eigenvalues(Circle(radius=1.0, twist=1.25, mass2=0.0), 80.0)
    b = eigenvalues(Circle(radius=1.0, twist=0.25, mass2=0.0), 80.0)
    assert np.array_equal(a.lambdas, b.lambdas)
    assert np.array_equal(a.mults, b.mults)
    c = eigenvalues(Circle(radius=1.0, twist=-2.7, mass2=0.0), 80.0)
    d = eigenvalues(Circle(radius=1.0, twist=0.3, mass2=0.0), 80.0)
    assert np.max(np.abs(c.lambdas - d.lambdas)) <= 1e-13 * 80.0


def test_twist_reflection_symmetry():
    a = eigenvalues(Circle(radius=1.0, twist=0.3, mass2=0.0), 200.0)
    b = eigenvalues(Circle(radius=1.0, twist=0.7, mass2=0.0), 200.0)
    assert np.max(np.abs(a.lambdas - b.lambdas)) <= 1e-14 * 200.0


def test_interval_dirichlet():
    iv = Interval(length=np.pi, bc_left=BC("dirichlet"), bc_right=BC("dirichlet"))
    spec = eigenvalues(iv, 10.0)
    assert as_pairs(spec) == [(1.0, 1), (4.0, 1), (9.0, 1)]


def test_interval_neumann_and_mixed():
    nn = eigenvalues(Interval(length=np.pi, bc_left=BC("neumann"),
                              bc_right=BC("neumann")), 10.0)
    assert as_pairs(nn) == [(0.0, 1), (1.0, 1), (4.0, 1), (9.0, 1)]
    dn = eigenvalues(Interval(length=np.pi, bc_left=BC("dirichlet"),
                              bc_right=BC("neumann")), 10.0)
    want = [(m + 0.5) ** 2 for m in range(3)]
    assert np.allclose(dn.lambdas, want)


def robin_fd_eigenvalues(L, sl, sr, npts, k):
    # second-order ghost-cell discretization of -u'' with
    # u'(0) = -sl u(0), u'(L) = +sr u(L)
    h = L / npts
    d = np.full(npts, 2.0 / h ** 2)
    e = np.full(npts - 1, -1.0 / h ** 2)
    ql, qr = h * sl / 2.0, h * sr / 2.0
    d[0] = (2.0 - (1.0 + ql) / (1.0 - ql)) / h ** 2
    d[-1] = (2.0 - (1.0 + qr) / (1.0 - qr)) / h ** 2
    vals = eigh_tridiagonal(d, e, select="i",
                            select_range=(0, k - 1), eigvals_only=True)
    return vals


def test_robin_roots_match_finite_differences():
    iv = Interval(length=1.3, bc_left=BC("robin", s=0.4),
                  bc_right=BC("robin", s=-0.7))
    spec = eigenvalues(iv, 400.0)
    fd = robin_fd_eigenvalues(1.3, 0.4, -0.7, 6000, 4)
    assert np.allclose(spec.lambdas[:4], fd, rtol=0, atol=2e-3)


def test_robin_roots_satisfy_secular_equation():
    sl, sr, L = 0.9, 2.3, 0.8
    iv = Interval(length=L, bc_left=BC("robin", s=sl), bc_right=BC("robin", s=sr))
    spec = eigenvalues(iv, 2000.0)
    k = np.sqrt(spec.lambdas[spec.lambdas > 1e-8])
    resid = (k * k - sl * sr) * np.sin(k * L) + k * (sl + sr) * np.cos(k * L)
    scale = (k * k + abs(sl * sr)) + k * (abs(sl) + abs(sr))
    assert np.max(np.abs(resid) / scale) < 1e-9


def test_robin_weyl_count():
    L = 2.0
    iv = Interval(length=L, bc_left=BC("robin", s=1.1), bc_right=BC("robin", s=0.2))
    spec = eigenvalues(iv, 900.0)
    expect = L * np.sqrt(900.0) / np.pi
    assert abs(spec.total_mult - expect) <= 2.5


def test_robin_bound_state():
    # positive coefficients pull an eigenvalue below zero
    iv = Interval(length=1.0, bc_left=BC("robin", s=1.0), bc_right=BC("robin", s=1.0))
    spec = eigenvalues(iv, 50.0)
    assert spec.lambdas[0] < 0
    kappa = np.sqrt(-spec.lambdas[0])
    # (sl+sr) kappa cosh(kappa L) = (kappa^2 + sl*sr) sinh(kappa L)
    resid = 2 * kappa * np.cosh(kappa) - (kappa ** 2 + 1) * np.sinh(kappa)
    assert abs(resid) < 1e-9 * np.cosh(kappa) * max(1.0, kappa ** 2)
    fd = robin_fd_eigenvalues(1.0, 1.0, 1.0, 6000, 1)
    assert abs(fd[0] - spec.lambdas[0]) < 2e-3


def test_sphere_spectrum():
    spec = eigenvalues(Sphere2(radius=1.0), 10.0)
    assert as_pairs(spec) == [(0.0, 1), (2.0, 3), (6.0, 5)]


def test_sphere_against_finite_difference_legendre():
    # axisymmetric modes: -d/dx[(1-x^2) du/dx] on (-1,1) has the same
    # eigenvalues, discretized with a conservative half-cell scheme
    n = 4000
    h = 2.0 / n
    xh = -1.0 + h * np.arange(1, n)          # interior half nodes
    p = 1.0 - xh ** 2
    d = np.empty(n)
    d[0] = p[0] / h ** 2
    d[-1] = p[-1] / h ** 2
    d[1:-1] = (p[:-1] + p[1:]) / h ** 2
    e = -p / h ** 2
    vals = eigh_tridiagonal(d, e, select="i", select_range=(0, 3),
                            eigvals_only=True)
    assert np.allclose(vals, [0.0, 2.0, 6.0, 12.0], rtol=0, atol=5e-3)


def test_landau_levels():
    spec = eigenvalues(Landau(field=2.0, mass2=0.5), 15.0)
    assert np.allclose(spec.lambdas, [2.5, 6.5, 10.5, 14.5])
    assert np.allclose(spec.mults, 2.0 / (2 * np.pi))
    assert spec.density


def test_landau_needs_density_flag():
    with pytest.raises(ValidationError):
        Landau(field=1.0, mass2=0.0, per_unit_area=False)


def test_torus_weyl_law():
    tor = FlatTorus(inverse_metric=[[1.0, 0.2], [0.2, 1.5]])
    cut = 1e4
    spec = eigenvalues(tor, cut)
    n_of_cut = spec.total_mult
    weyl = tor.volume * cut / (4 * np.pi)
    assert abs(n_of_cut - weyl) / weyl < 0.02


def test_torus_rejects_bad_metric():
    with pytest.raises(ValidationError):
        FlatTorus(inverse_metric=[[1.0, 2.0], [2.0, 1.0]])


def test_dirac_signed_spectrum():
    dc = DiracCircle(frame=2.0, twist=0.25)
    spec = dirac_eigenvalues(dc, 5.0)
    want = sorted(2.0 * (k + 0.25) for k in range(-3, 3)
                  if abs(2.0 * (k + 0.25)) <= 5.0)
    assert np.allclose(spec.lambdas, want)
    assert spec.signed
    assert all(m == 1 for m in spec.mults)
    sq = eigenvalues(dc, 25.0)
    assert not sq.signed
    assert np.allclose(np.repeat(sq.lambdas, sq.mults.astype(int)),
                       sorted(w ** 2 for w in want))


def test_cutoff_too_small():
    with pytest.raises(CutoffTooSmall):
        eigenvalues(Circle(radius=1.0, twist=0.0, mass2=5.0), 1.0)
    with pytest.raises(CutoffTooSmall):
        eigenvalues(Landau(field=3.0, mass2=0.0), 2.0)
    with pytest.raises(CutoffTooSmall):
        eigenvalues(Sphere2(radius=1.0), -1.0)


def test_counting_function():
    c = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=0.0), 50.0)
    assert counting_function(c, 4.0) == 5.0
    s = eigenvalues(Sphere2(radius=1.0), 50.0)
    assert counting_function(s, 6.0) == 9.0
    with pytest.raises(AboveCutoff):
        counting_function(c, 51.0)


def test_bc_validation():
    with pytest.raises(ValidationError):
        BC("periodic")
    with pytest.raises(ValidationError):
        BC("dirichlet", s=0.5)


def test_spectrum_roundtrip_and_helpers():
    spec = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=0.0), 10.0)
    back = Spectrum.from_json(spec.to_json())
    assert np.array_equal(back.lambdas, spec.lambdas)
    assert np.array_equal(back.mults, spec.mults)
    assert back.cutoff == spec.cutoff and back.dim == spec.dim
    assert spec.zero_mult() == 1.0
    pos = spec.positive_part()
    assert pos.lambda_min == 1.0 and pos.total_mult == 6.0
