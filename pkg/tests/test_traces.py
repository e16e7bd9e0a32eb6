"""Trace evaluation: kernels, dual paths, occupation sums."""

import numpy as np
import pytest
from scipy.integrate import quad

from spectralab import (BC, BoseDivergence, Circle, DiracCircle, FlatTorus,
                        Interval, KernelFamily, Landau, NonPositiveOperator,
                        Sphere2, Spectrum, TailTooLarge, UnsupportedModel,
                        ValidationError, classical_trace, eigenvalues,
                        kernel_eval, quantum_trace, relativistic_trace,
                        theta_trace)
from spectralab.traces import _li_neg

CIRCLE = Circle(radius=1.0, twist=0.0, mass2=0.0)


def test_classical_circle():
    spec = eigenvalues(CIRCLE, 60.0)
    val, bound = classical_trace(spec, 1.0)
    assert abs(val - 1.772637204826652153) < 1e-12
    assert 0 < bound < 1e-12


def test_classical_small_time():
    spec = eigenvalues(CIRCLE, 4600.0)
    val, _ = classical_trace(spec, 0.01, tol=1e-10)
    assert abs(val - 17.724538509055160088) < 1e-9


def test_classical_tail_guard():
    spec = eigenvalues(CIRCLE, 10.0)
    with pytest.raises(TailTooLarge):
        classical_trace(spec, 0.01)


def test_theta_trace_matches_direct():
    cases = [
        (Circle(radius=1.3, twist=0.2, mass2=0.7), 0.4, 900.0),
        (FlatTorus([[1.0, 0.3], [0.3, 2.0]], twist=[0.2, 0.7], mass2=0.5),
         0.3, 3000.0),
        (Interval(length=np.pi, bc_left=BC("dirichlet"),
                  bc_right=BC("dirichlet")), 0.5, 4000.0),
        (Interval(length=1.0, bc_left=BC("neumann"),
                  bc_right=BC("neumann")), 0.2, 9000.0),
        (Interval(length=2.0, bc_left=BC("dirichlet"),
                  bc_right=BC("neumann")), 0.7, 2000.0),
        (Sphere2(radius=1.0), 0.3, 2500.0),
        (Landau(field=2.0, mass2=0.3), 0.5, 500.0),
        (DiracCircle(frame=2.0, twist=0.25), 0.2, 900.0),
    ]
    for model, t, cut in cases:
        direct, _ = classical_trace(eigenvalues(model, cut), t, tol=1e-7)
        dual = theta_trace(model, t)
        assert abs(direct - dual) <= 1e-12 * abs(direct), type(model).__name__


def test_theta_trace_no_closed_form_for_robin():
    iv = Interval(length=1.0, bc_left=BC("robin", s=0.3), bc_right=BC("neumann"))
    with pytest.raises(UnsupportedModel):
        theta_trace(iv, 0.5)


def test_kernel_validation():
    with pytest.raises(ValidationError):
        KernelFamily("h_x", 1.0)
    with pytest.raises(ValidationError):
        KernelFamily("h_b", -1.0)
    with pytest.raises(ValidationError):
        KernelFamily("h_0", 1.0, beta_mu=0.3)


def test_kernel_laplace_transforms():
    # integrating h(t, a) exp(-t z^2) over t > 0 gives the occupation factor
    cases = [
        ("h_f", 0.3, 1.2, 1.0 / (np.exp(1.2 - 0.3) + 1.0)),
        ("h_b", -0.4, 0.9, 1.0 / (np.exp(0.9 + 0.4) - 1.0)),
        ("h_0", 0.0, 0.7, 1.0 / (2.0 * np.sinh(0.7))),
    ]
    for variant, a, z, want in cases:
        val, _ = quad(lambda t: kernel_eval(KernelFamily(variant, t, a))
                      * np.exp(-t * z * z), 0, np.inf, limit=200)
        assert abs(val - want) < 1e-12


def test_kernel_identities():
    # h_b - h_f = (1/2) h_b(t/4, 2a);  h_b/h_f split through h_0 at a = 0
    rng = np.random.default_rng(11)
    for _ in range(100):
        t = rng.uniform(0.01, 10.0)
        a = rng.uniform(-1.0, 1.0)
        hb = kernel_eval(KernelFamily("h_b", t, a))
        hf = kernel_eval(KernelFamily("h_f", t, a))
        hb4 = kernel_eval(KernelFamily("h_b", t / 4.0, 2.0 * a))
        assert abs(hb - hf - 0.5 * hb4) <= 1e-12 * abs(hb)
        h0 = kernel_eval(KernelFamily("h_0", t))
        hb0 = kernel_eval(KernelFamily("h_b", t, 0.0))
        hf0 = kernel_eval(KernelFamily("h_f", t, 0.0))
        hb04 = kernel_eval(KernelFamily("h_b", t / 4.0, 0.0))
        assert abs(hb0 - h0 - 0.25 * hb04) <= 1e-12 * abs(hb0)
        assert abs(hf0 - h0 + 0.25 * hb04) <= 1e-12 * abs(hb0)


def test_polylog_values():
    # Li_{-1}(-e^a) = -e^a/(1+e^a)^2; Li_{-3}(-1) = 1/8
    for a in (-1.2, -0.3, 0.0, 0.4, 1.5):
        want = -np.exp(a) / (1.0 + np.exp(a)) ** 2
        assert abs(_li_neg(1, a) - want) < 1e-14 * abs(want)
    assert abs(_li_neg(3, 0.0) - 0.125) < 1e-15


def test_polylog_against_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 60
    rng = np.random.default_rng(5)
    for _ in range(24):
        n = 2 * rng.integers(0, 25) + 1
        a = rng.uniform(-1.5, 1.5)
        ref = float(mp.polylog(-int(n), -mp.e ** float(a)))
        assert abs(_li_neg(int(n), float(a)) - ref) <= 1e-12 * abs(ref)


def test_relativistic_circle_closed_form():
    # the massless circle sums to coth(beta/2), zero mode included
    for beta in (0.5, 1.0, 2.0):
        spec = eigenvalues(CIRCLE, (54.0 / beta) ** 2)
        want = np.cosh(beta / 2) / np.sinh(beta / 2)
        d = relativistic_trace(spec, beta, method="direct")
        s = relativistic_trace(spec, beta, method="subordination")
        assert abs(d - want) < 1e-10 * want
        assert abs(s - want) < 1e-10 * want


def test_relativistic_frozen_value():
    spec = eigenvalues(CIRCLE, 54.0 ** 2)
    val = relativistic_trace(spec, 1.0, method="subordination")
    assert abs(val - 2.1639534137386528488) < 1e-11


def test_relativistic_rejects_negative():
    spec = Spectrum([-0.5, 1.0], [1.0, 1.0], 10.0, 1)
    with pytest.raises(NonPositiveOperator):
        relativistic_trace(spec, 1.0)


def test_relativistic_tail_guard():
    spec = eigenvalues(CIRCLE, 30.0)
    with pytest.raises(TailTooLarge):
        relativistic_trace(spec, 0.5)


def test_quantum_single_mode():
    one = Spectrum([1.0], [1.0], 2.0, 1)
    assert abs(quantum_trace(one, 1.0, 0.0, "bose", tol=np.inf)
               - 0.58197670686932642439) < 1e-15
    assert abs(quantum_trace(one, 1.0, 0.0, "fermi", tol=np.inf)
               - 0.26894142136999512075) < 1e-15


def test_quantum_circle_frozen():
    spec = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=1.0), 54.0 ** 2)
    for method in ("direct", "kernel"):
        val = quantum_trace(spec, 1.0, 0.0, "fermi", method=method)
        assert abs(val - 0.9856733267801890263) < 1e-12


def test_quantum_dual_paths():
    grid = [(0.0, "bose"), (0.0, "fermi"), (0.5, "bose"), (0.5, "fermi")]
    models = [Circle(radius=1.0, twist=0.0, mass2=1.0),
              FlatTorus([[1.0, 0.3], [0.3, 2.0]], mass2=1.0)]
    for model in models:
        for beta in (0.2, 1.0):
            spec = eigenvalues(model, (56.0 / beta) ** 2)
            for mu, stat in grid:
                d = quantum_trace(spec, beta, mu, stat, method="direct")
                k = quantum_trace(spec, beta, mu, stat, method="kernel")
                assert abs(d - k) <= 1e-8 * abs(d), (stat, mu, beta)


def test_quantum_near_divergence():
    spec = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=1.0), 56.0 ** 2)
    mu = 0.9
    d = quantum_trace(spec, 1.0, mu, "bose", method="direct")
    k = quantum_trace(spec, 1.0, mu, "bose", method="kernel")
    assert abs(d - k) <= 1e-8 * abs(d)


def test_quantum_guards():
    massless = eigenvalues(CIRCLE, 3000.0)
    with pytest.raises(NonPositiveOperator):
        quantum_trace(massless, 1.0, 0.0, "bose")
    spec = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=1.0), 3000.0)
    with pytest.raises(BoseDivergence):
        quantum_trace(spec, 1.0, 5.0, "bose")
    with pytest.raises(ValidationError):
        quantum_trace(spec, 1.0, 1.5, "fermi", method="kernel")
    # direct Fermi path has no pole, any mu is fine
    val = quantum_trace(spec, 1.0, 1.5, "fermi", method="direct", tol=1e-6)
    assert np.isfinite(val)
    with pytest.raises(ValidationError):
        quantum_trace(spec, 1.0, 0.0, "boltzmann")
    with pytest.raises(ValidationError):
        quantum_trace(spec, -1.0, 0.0, "bose")


def test_quantum_tail_guard():
    spec = eigenvalues(Circle(radius=1.0, twist=0.0, mass2=1.0), 50.0)
    with pytest.raises(TailTooLarge):
        quantum_trace(spec, 0.3, 0.0, "fermi")
