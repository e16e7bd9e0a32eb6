import json
import math

import numpy as np
import pytest
from scipy.special import kv, gamma as gamma_fn, zeta as hurwitz

from spectralab.models import (BC, Circle, FlatTorus, Interval, Landau,
                               Sphere2, Spectrum, eigenvalues)
from spectralab.mellin import (AsymptoticSeries, SeriesTerm, a_q,
                               aq_derivative, expansion_fit, log_det,
                               mellin_barnes_series, zeta)
from spectralab.traces import relativistic_trace
from spectralab.errors import (IllConditioned, InsufficientOrder,
                               NonPositiveShiftedOperator, PoleOfZeta,
                               RankDeficient, UnsupportedModel,
                               ValidationError)


def bessel_reference(q, mass):
    # independent closed form for the unit circle: a plane-wave main term
    # plus a Bessel-function image sum
    total = 2.0 * np.pi * mass ** (2 * q)
    tail = 0.0
    for j in range(1, 400):
        term = (mass / (np.pi * j)) ** q * kv(q, 2 * np.pi * j * mass)
        tail += term
        if abs(term) < 1e-20 * max(abs(tail), 1e-300):
            break
    return total + 8.0 * np.pi / gamma_fn(-q) * tail


class TestAq:
    def test_circle_integer_values_frozen(self):
        m = Circle(mass2=1.0)
        for k in (0.0, 1.0, 2.0):
            r = a_q(m, k)
            assert abs(r.value - 6.2831853071795864769) < 1e-12
            assert r.error < 1e-10

    def test_circle_half_frozen(self):
        r = a_q(Circle(mass2=1.0), 0.5)
        assert abs(r.value - 6.2794469300261163227) < 1e-12

    def test_bessel_reference_sweep(self):
        m = Circle(mass2=1.0)
        for q in (0.3, 0.8, 1.4, 1.7, 2.6):
            mine = a_q(m, q).value
            ref = bessel_reference(q, 1.0)
            assert abs(mine - ref) <= 1e-12 * abs(ref)

    def test_normalization_property(self):
        # (-1)^k/k! A_k should match the plain expansion coefficient
        m = Circle(mass2=2.0)
        for k in range(4):
            std = (-1.0) ** k / math.factorial(k) * a_q(m, float(k)).value
            exact = 2.0 * np.pi * (-2.0) ** k / math.factorial(k)
            assert abs(std - exact) <= 1e-12 * abs(exact)

    def test_entire_through_integer(self):
        m = Circle(mass2=2.0)
        lo = a_q(m, 1.0 - 1e-7).value
        mid = a_q(m, 1.0).value
        hi = a_q(m, 1.0 + 1e-7).value
        slope = (hi - lo) / 2e-7
        assert abs(lo - mid) < 1e-5 * abs(mid)
        assert abs(hi + lo - 2 * mid) < 1e-9 * abs(mid)
        fd = (bessel_reference(1 + 1e-6, np.sqrt(2))
              - bessel_reference(1 - 1e-6, np.sqrt(2))) / 2e-6
        assert abs(slope - fd) < 1e-4 * max(1.0, abs(fd))

    def test_landau_closed_coefficients(self):
        lan = Landau(1.7, 0.9)
        assert abs(a_q(lan, 0.0).value - 1.0) < 1e-12
        assert abs(a_q(lan, 1.0).value - 0.9) < 1e-12

    def test_derivative_matches_reference(self):
        m = Circle(mass2=1.0)
        for k in (0, 1):
            cs = aq_derivative(m, k)
            h = 1e-6
            fd = (bessel_reference(k + h, 1.0)
                  - bessel_reference(k - h, 1.0)) / (2 * h)
            assert abs(cs - fd) < 1e-8 * max(1.0, abs(fd))

    def test_insufficient_order(self):
        with pytest.raises(InsufficientOrder):
            a_q(Circle(mass2=1.0), 3.0, series_order=4)

    def test_zero_mode_rejected(self):
        with pytest.raises(NonPositiveShiftedOperator):
            a_q(Circle(), 0.5)

    def test_unsupported_models(self):
        with pytest.raises(UnsupportedModel):
            a_q(Sphere2(), 0.5)

    def test_interval_boundary_pole(self):
        with pytest.raises(PoleOfZeta):
            a_q(Interval(1.0), 0.5)

    def test_derivative_validation(self):
        with pytest.raises(ValidationError):
            aq_derivative(Circle(mass2=1.0), 0.5)


class TestZeta:
    def test_massless_circle_frozen(self):
        c = Circle()
        assert abs(zeta(c, 1.0, exclude_zero=True)
                   - 3.2898681336964528729) < 1e-12
        assert abs(zeta(c, 2.0, exclude_zero=True)
                   - 2.164646467422276383) < 1e-12

    def test_dual_paths_circle(self):
        rng = np.random.default_rng(3)
        for _ in range(8):
            m = Circle(radius=float(rng.uniform(0.5, 2.0)),
                       twist=float(rng.uniform(0.0, 1.0)),
                       mass2=float(rng.uniform(0.3, 3.0)))
            s = float(rng.uniform(0.55, 1.5))
            zm = zeta(m, s)
            zd = zeta(m, s, method="direct")
            assert abs(zm - zd) <= 1e-8 * abs(zd)

    def test_direct_needs_large_re_s(self):
        with pytest.raises(ValidationError):
            zeta(Circle(mass2=1.0), 0.4, method="direct")

    def test_landau_hurwitz_reference(self):
        B, m2 = 1.7, 0.9
        lan = Landau(B, m2)
        for s in (1.05, 1.6, 2.4):
            ref = B / (2 * np.pi) * (2 * B) ** (-s) \
                * hurwitz(s, 0.5 + m2 / (2 * B))
            assert abs(zeta(lan, s) - ref) <= 1e-12 * abs(ref)

    def test_torus_brute_force(self):
        G = np.array([[1.3, 0.2], [0.2, 0.9]])
        tor = FlatTorus(G, twist=[0.3, 0.1], mass2=1.5)
        K = 120
        k1, k2 = np.meshgrid(np.arange(-K, K + 1), np.arange(-K, K + 1),
                             indexing="ij")
        pts = np.stack([k1.ravel() + 0.3, k2.ravel() + 0.1], -1)
        lam = np.einsum("ki,ij,kj->k", pts, G, pts) + 1.5
        brute = float(np.sum(lam ** -3.0))
        assert abs(zeta(tor, 3.0) - brute) <= 3e-8 * abs(brute)

    def test_interval_closed_form(self):
        # Dirichlet spectrum (pi k / L)^2 gives (L/pi)^(2s) zeta_R(2s)
        iv = Interval(1.3)
        for s in (0.8, 1.5):
            ref = (1.3 / np.pi) ** (2 * s) * hurwitz(2 * s, 1.0)
            assert abs(zeta(iv, s) - ref) <= 1e-12 * abs(ref)

    def test_finite_spectrum_half_power(self):
        sp = Spectrum(np.array([4.0]), np.array([1]), 10.0, 1)
        assert zeta(sp, 0.5) == 0.5

    def test_poles_raise(self):
        with pytest.raises(PoleOfZeta):
            zeta(Landau(1.7, 0.9), 1.0)
        with pytest.raises(PoleOfZeta):
            zeta(Circle(mass2=1.0), 0.5)

    def test_zero_mode_guard(self):
        with pytest.raises(NonPositiveShiftedOperator):
            zeta(Circle(), 1.0)
        with pytest.raises(NonPositiveShiftedOperator):
            zeta(Circle(mass2=1.0), 1.0, lambda_shift=2.0)

    def test_shift_moves_spectrum(self):
        # zeta of mass 2 circle shifted by 1 equals zeta of mass 1 circle
        a = zeta(Circle(mass2=2.0), 1.2, lambda_shift=1.0)
        b = zeta(Circle(mass2=1.0), 1.2)
        assert abs(a - b) <= 1e-12 * abs(b)

    def test_near_zero_argument_stable(self):
        c = Circle(mass2=1.0)
        lo = zeta(c, -1e-4)
        hi = zeta(c, 1e-4)
        mid = zeta(c, 1e-9)
        assert abs(0.5 * (lo + hi) - mid) < 1e-7 * max(1.0, abs(mid))


class TestLogDet:
    def test_massless_circle_frozen(self):
        ld = log_det(Circle(), exclude_zero=True)
        assert abs(ld - 3.6757541328186909671) < 1e-9
        assert abs(np.exp(ld) - 39.478417604357434475) < 1e-7

    def test_interval_dirichlet(self):
        # det of the Dirichlet Laplacian on [0, L] is 2L
        for L in (0.7, 1.3):
            ld = log_det(Interval(L))
            assert abs(ld - np.log(2 * L)) < 1e-9

    def test_landau_lgamma_reference(self):
        B, m2 = 1.7, 0.9
        a = 0.5 + m2 / (2 * B)
        zp0 = B / (2 * np.pi) * (-np.log(2 * B) * (0.5 - a)
                                 + (math.lgamma(a)
                                    - 0.5 * np.log(2 * np.pi)))
        ld = log_det(Landau(B, m2))
        assert abs(ld + zp0) < 1e-9

    def test_finite_spectrum_product(self):
        sp = Spectrum(np.array([2.0, 3.0]), np.array([1, 1]), 10.0, 1)
        assert abs(np.exp(log_det(sp)) - 6.0) < 1e-9


class TestExpansionFit:
    def test_recovers_polynomial(self):
        ts = np.geomspace(1e-3, 1e-1, 12)
        vals = 2.0 / ts + ts / 6.0 - ts ** 3 / 360.0
        ser = expansion_fit(zip(ts, vals), [(-1.0, 0), (1.0, 0), (3.0, 0)])
        assert abs(ser.coefficient(-1.0) - 2.0) < 1e-10
        assert abs(ser.coefficient(1.0) - 1.0 / 6.0) < 1e-8
        assert ser.residual < 1e-10

    def test_log_column(self):
        ts = np.geomspace(1e-3, 1e-1, 14)
        vals = 0.7 * ts + 1.3 * ts * np.log(ts)
        ser = expansion_fit(zip(ts, vals), [(1.0, 0), (1.0, 1)])
        assert abs(ser.coefficient(1.0, 0) - 0.7) < 1e-9
        assert abs(ser.coefficient(1.0, 1) - 1.3) < 1e-9

    def test_needs_enough_samples(self):
        with pytest.raises(ValidationError):
            expansion_fit([(0.1, 1.0), (0.2, 2.0)], [(0.0, 0), (1.0, 0)])

    def test_needs_decade_span(self):
        ts = np.linspace(0.10, 0.2, 8)
        with pytest.raises(ValidationError):
            expansion_fit([(t, t) for t in ts], [(1.0, 0)])

    def test_rank_deficient(self):
        ts = np.geomspace(1e-3, 1e-1, 10)
        with pytest.raises((RankDeficient, IllConditioned)):
            expansion_fit([(t, t) for t in ts], [(1.0, 0), (1.0, 0)])

    def test_ill_conditioned(self):
        ts = np.geomspace(1e-2, 1e-1, 16)
        template = [(p / 8.0, 0) for p in range(12)]
        with pytest.raises((IllConditioned, RankDeficient)):
            expansion_fit([(t, 1.0 + t) for t in ts], template)


class TestAsymptoticSeries:
    def test_json_round_trip(self):
        ser = AsymptoticSeries([SeriesTerm(-0.5, 0, 1.77, "ClosedForm"),
                                SeriesTerm(1.0, 1, -0.3, "Residue")])
        back = AsymptoticSeries.from_json(ser.to_json())
        assert [(-0.5, 0), (1.0, 1)] == [(t.power, t.log_power)
                                         for t in back.terms]
        assert back.terms[0].provenance == "ClosedForm"
        parsed = json.loads(ser.to_json())
        assert set(parsed) == {"terms", "variable"}

    def test_duplicate_rejected(self):
        with pytest.raises(ValidationError):
            AsymptoticSeries([SeriesTerm(0.0, 0, 1.0, "Fitted"),
                              SeriesTerm(0.0, 0, 2.0, "Fitted")])

    def test_evaluate_with_log(self):
        ser = AsymptoticSeries([SeriesTerm(1.0, 1, 2.0, "Fitted")])
        x = 0.3
        assert abs(ser.evaluate(x) - 2.0 * x * np.log(x)) < 1e-15


class TestResidueSeries:
    def test_matches_relativistic_trace(self):
        m = Circle(mass2=2.0)
        ser = mellin_barnes_series(m, n_terms=3)
        assert abs(ser.coefficient(-1.0) - 2.0) < 1e-12
        beta = 0.05
        spec = eigenvalues(m, (54.0 / beta) ** 2)
        exact = relativistic_trace(spec, beta)
        assert abs(ser.evaluate(beta) - exact) < 3e-7
