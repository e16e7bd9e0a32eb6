"""Mellin-side analysis of heat traces.

a_q interpolates the short-time trace coefficients in the order q through

    A_q = (4 pi)^(n/2) / Gamma(-q) * int_0^inf t^(n/2 - q - 1) Theta(t) dt,

split at a model-dependent point: below it the known series terms are
integrated in closed form (each power p contributes c / (p + n/2 - q))
and only the cancellation-free remainder is quadratured; above it the
trace itself decays exponentially.  1/Gamma(-q) is expanded as an exact
finite product, so its zero at integer q cancels the matching series
pole algebraically; the value is therefore accurate to machine precision
arbitrarily close to (and on) the integers, and q may be complex, which
is what the derivative extraction uses.

zeta continues the spectral zeta function the same way with kernel
t^(s-1); log_det is -zeta'(0) by Richardson-extrapolated central
differences.  expansion_fit recovers expansion coefficients from trace
samples by least squares on a power/log template.
"""

import json
import math

import numpy as np
from scipy.special import bernoulli, digamma, gamma as gamma_fn

from .models import (Circle, FlatTorus, Interval, Landau, Spectrum,
                     eigenvalues)
from .traces import theta_trace
from ._quad import adaptive_log_integrate
from .errors import (CutoffTooSmall, IllConditioned, InsufficientOrder,
                     NonPositiveShiftedOperator, PoleOfZeta, RankDeficient,
                     UnsupportedModel, ValidationError)

__all__ = ["SeriesTerm", "AsymptoticSeries", "AqResult", "a_q",
           "aq_derivative", "zeta", "log_det", "expansion_fit",
           "mellin_barnes_series"]

_PROVENANCES = ("Fitted", "ClosedForm", "Residue")
_T_MIN = 1e-8


class SeriesTerm:
    __slots__ = ("power", "log_power", "coefficient", "provenance")

    def __init__(self, power, log_power, coefficient, provenance):
        if log_power not in (0, 1):
            raise ValidationError("log_power must be 0 or 1")
        if provenance not in _PROVENANCES:
            raise ValidationError(f"unknown provenance {provenance!r}")
        self.power = float(power)
        self.log_power = int(log_power)
        self.coefficient = float(coefficient)
        self.provenance = provenance

    def __repr__(self):
        return (f"SeriesTerm({self.power}, {self.log_power}, "
                f"{self.coefficient}, {self.provenance!r})")


class AsymptoticSeries:
    """Sorted expansion sum of c * x^power * log(x)^log_power terms."""

    def __init__(self, terms, variable="eps"):
        terms = sorted(terms, key=lambda u: (u.power, u.log_power))
        for a, b in zip(terms, terms[1:]):
            if a.power == b.power and a.log_power == b.log_power:
                raise ValidationError(
                    f"duplicate term at power {a.power}, log {a.log_power}")
        self.terms = terms
        self.variable = variable

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def coefficient(self, power, log_power=0):
        for u in self.terms:
            if abs(u.power - power) < 1e-12 and u.log_power == log_power:
                return u.coefficient
        raise KeyError(f"no term at power {power}, log {log_power}")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for u in self.terms:
            piece = u.coefficient * x ** u.power
            if u.log_power:
                piece = piece * np.log(x)
            out = out + piece
        return out if out.ndim else float(out)

    def to_json(self):
        return json.dumps({
            "variable": self.variable,
            "terms": [{"power": u.power, "log_power": u.log_power,
                       "coefficient": u.coefficient,
                       "provenance": u.provenance} for u in self.terms],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls([SeriesTerm(u["power"], u["log_power"], u["coefficient"],
                               u["provenance"]) for u in d["terms"]],
                   d.get("variable", "eps"))


class AqResult:
    __slots__ = ("q", "value", "error", "split_point")

    def __init__(self, q, value, error, split_point):
        self.q = q
        self.value = value
        self.error = float(error)
        self.split_point = float(split_point)

    def __repr__(self):
        return (f"AqResult(q={self.q}, value={self.value}, "
                f"error={self.error:.2e}, split_point={self.split_point})")


# ---------------------------------------------------------------------------
# per-model short-time series and stable remainders

def _exp_tail(x, order):
    """sum_{j > order} x^j / j!, summed as a genuine tail (vectorized)."""
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    for j in range(1, order + 1):
        term = term * x / j
    out = np.zeros_like(x)
    for j in range(order + 1, order + 400):
        term = term * x / j
        out = out + term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(out), 1e-300)):
            break
    return out


def _circle_image(model, t, mass2):
    t = np.asarray(t, dtype=float)
    r = model.radius
    out = np.zeros_like(t)
    for j in range(1, 80):
        piece = 2.0 * np.exp(-np.pi ** 2 * j * j * r * r / t) \
            * np.cos(2.0 * np.pi * j * model.twist)
        out = out + piece
        if np.all(np.abs(piece) < 1e-22):
            break
    return r * np.sqrt(np.pi / t) * out * np.exp(-mass2 * t)


def _torus_image(model, t, mass2):
    t = np.asarray(t, dtype=float)
    g = np.linalg.inv(model.inverse_metric)
    gmin = np.linalg.eigvalsh(g)[0]
    M = int(np.ceil(np.sqrt(42.0 * np.max(t) / (np.pi ** 2 * gmin)))) + 1
    axes = [np.arange(-M, M + 1)] * model.n
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gg.ravel() for gg in grids], axis=-1)
    pts = pts[np.any(pts != 0, axis=1)]
    quad = np.einsum("ki,ij,kj->k", pts, g, pts)
    phase = np.cos(2.0 * np.pi * pts @ model.twist)
    img = (np.exp(-np.pi ** 2 * quad[None, :] / t[..., None])
           * phase).sum(-1)
    pref = model.volume * (4.0 * np.pi * t) ** (-model.n / 2.0)
    return pref * img * np.exp(-mass2 * t)


def _x_over_sinh_coeffs(nmax):
    # x/sinh x = sum b_k x^(2k) with b_k = (2 - 4^k) B_{2k} / (2k)!
    B = bernoulli(2 * nmax)
    out = np.zeros(nmax + 1)
    out[0] = 1.0
    for k in range(1, nmax + 1):
        out[k] = (2.0 - 4.0 ** k) * B[2 * k] / math.factorial(2 * k)
    return out


def _series_data(model, shift, order):
    """Powers, coefficients, remainder callable, and split point.

    The series covers Theta(t) * exp(shift * t) up to index `order`;
    remainder(t) evaluates the rest without cancellation for t up to the
    split point.  Models with no closed dual sum are rejected.
    """
    if isinstance(model, Circle):
        m2 = model.mass2 - shift
        r = model.radius
        powers = np.arange(order + 1) - 0.5
        coeffs = r * np.sqrt(np.pi) * np.array(
            [(-m2) ** j / math.factorial(j) for j in range(order + 1)])

        def remainder(t):
            t = np.asarray(t, dtype=float)
            return (r * np.sqrt(np.pi / t) * _exp_tail(-m2 * t, order)
                    + _circle_image(model, t, m2))

        return powers, coeffs, remainder, 1.0

    if isinstance(model, FlatTorus):
        m2 = model.mass2 - shift
        n = model.n
        pref = model.volume * (4.0 * np.pi) ** (-n / 2.0)
        powers = np.arange(order + 1) - n / 2.0
        coeffs = pref * np.array(
            [(-m2) ** j / math.factorial(j) for j in range(order + 1)])

        def remainder(t):
            t = np.asarray(t, dtype=float)
            return (pref * t ** (-n / 2.0) * _exp_tail(-m2 * t, order)
                    + _torus_image(model, t, m2))

        return powers, coeffs, remainder, 1.0

    if isinstance(model, Interval):
        kinds = (model.bc_left.kind, model.bc_right.kind)
        if "robin" in kinds:
            raise UnsupportedModel("no closed series for Robin ends")
        L = model.length
        half_c = L / (2.0 * np.sqrt(np.pi))
        end = {"dirichlet": -0.25, "neumann": 0.25}
        zero_c = end[kinds[0]] + end[kinds[1]]
        # two base powers times the exp(shift t) series, kept to the same
        # reach (order - 1)/2 in t as the other models
        top = (order - 1) / 2.0 + 0.01
        k_half = int(np.floor(top + 0.5))
        k_zero = int(np.floor(top))
        acc = {}
        for j in range(k_half + 1):
            acc[j - 0.5] = half_c * shift ** j / math.factorial(j)
        for j in range(k_zero + 1):
            acc[float(j)] = acc.get(float(j), 0.0) \
                + zero_c * shift ** j / math.factorial(j)
        pairs = sorted(acc.items())
        powers = np.array([p for p, _ in pairs])
        coeffs = np.array([c for _, c in pairs])
        alternating = kinds[0] != kinds[1]

        def remainder(t):
            t = np.asarray(t, dtype=float)
            jmax = int(np.ceil(np.sqrt(42.0 * np.max(t)) / L)) + 1
            j = np.arange(1, jmax + 1, dtype=float)
            ex = np.exp(-L ** 2 * j[None, :] ** 2 / t[..., None])
            if alternating:
                img = (L / np.sqrt(np.pi * t)) \
                    * (((-1.0) ** j)[None, :] * ex).sum(-1)
            else:
                img = (L / np.sqrt(np.pi * t)) * ex.sum(-1)
            return (img * np.exp(shift * t)
                    + half_c * t ** -0.5 * _exp_tail(shift * t, k_half)
                    + zero_c * _exp_tail(shift * t, k_zero))

        return powers, coeffs, remainder, 1.0

    if isinstance(model, Landau):
        B = model.field
        m2 = model.mass2 - shift
        nmax = max(order + 2, 20)
        bsh = _x_over_sinh_coeffs(nmax)
        full = np.zeros(2 * nmax + 2)
        for k in range(nmax + 1):
            for l in range(0, 2 * nmax + 2 - 2 * k):
                full[2 * k + l] += bsh[k] * B ** (2 * k) \
                    * (-m2) ** l / math.factorial(l)
        full = full / (4.0 * np.pi)
        powers = np.arange(order + 1) - 1.0
        coeffs = full[:order + 1].copy()
        # the composed series converges for t B < pi; stay well inside so
        # the truncated remainder polynomial is itself machine-accurate
        split = min(1.0, np.pi / (4.0 * B))

        def remainder(t):
            t = np.asarray(t, dtype=float)
            hi = np.zeros_like(t)
            for j in range(len(full) - 1, order, -1):
                hi = hi * t + full[j]
            return hi * t ** float(order)

        return powers, coeffs, remainder, split

    raise UnsupportedModel(
        f"no Mellin series for {type(model).__name__}")


def _lambda_min_positive(model, shift):
    """Smallest positive shifted eigenvalue and the shifted zero-mode mass."""
    cutoff = max(10.0, 4.0 * abs(shift) + 10.0)
    for _ in range(12):
        try:
            spec = eigenvalues(model, cutoff)
        except CutoffTooSmall:
            cutoff *= 4.0
            continue
        lam = spec.lambdas - shift
        tol = 1e-10 * max(1.0, cutoff)
        pos = lam > tol
        if np.any(pos):
            m0 = float(spec.mults[np.abs(lam) <= tol].sum())
            return float(lam[pos][0]), m0
        cutoff *= 4.0
    raise NonPositiveShiftedOperator("no positive eigenvalue after shift")


def _check_shifted_positive(model, shift, allow_zero):
    cutoff = max(10.0, 4.0 * abs(shift) + 10.0)
    for _ in range(12):
        try:
            spec = eigenvalues(model, cutoff)
            break
        except CutoffTooSmall:
            cutoff *= 4.0
    else:
        raise NonPositiveShiftedOperator("could not resolve the lowest mode")
    lam = spec.lambdas - shift
    scale = max(1.0, abs(spec.cutoff))
    if lam[0] < -1e-10 * scale:
        raise NonPositiveShiftedOperator(
            f"shifted eigenvalue {lam[0]:.6g} is negative")
    if not allow_zero and lam[0] <= 1e-10 * scale:
        raise NonPositiveShiftedOperator(
            "zero mode present; pass exclude_zero=True")


def _maybe_real(z):
    if isinstance(z, complex) or np.iscomplexobj(z):
        if abs(np.imag(z)) <= 1e-12 * max(1.0, abs(np.real(z))):
            return float(np.real(z))
        return complex(z)
    return float(z)


# ---------------------------------------------------------------------------
# interpolated coefficients

def a_q(model, q, series_order=None):
    """Interpolated trace coefficient of (possibly complex) order q.

    Returns an AqResult.  At nonnegative integers the value reduces to the
    closed expansion coefficient; in between it is the analytic
    interpolation.  The spectrum must be strictly positive.
    """
    n = model.dim
    qr = float(np.real(q))
    if series_order is None:
        series_order = max(8, 2 * int(np.ceil(max(qr, 0.0))) + 4)
    min_order = int(np.ceil(2.0 * qr + 1.0))
    if series_order < min_order:
        raise InsufficientOrder(
            f"series_order {series_order} cannot resolve q = {q}; "
            f"need at least {min_order}")
    powers, coeffs, remainder, split = _series_data(model, 0.0, series_order)
    _check_shifted_positive(model, 0.0, allow_zero=False)
    lam1, _ = _lambda_min_positive(model, 0.0)
    T = 45.0 / lam1 + 1.0
    half = n / 2.0

    complex_q = isinstance(q, complex)
    value = 0.0 + 0.0j if complex_q else 0.0
    bracket = 0.0 + 0.0j if complex_q else 0.0
    for p, c in zip(powers, coeffs):
        if c == 0.0:
            continue
        pk = p + half
        D = pk - q
        k_int = int(round(pk))
        if abs(pk - k_int) < 1e-9 and k_int >= 0 and abs(D) < 0.4:
            # 1/Gamma(-q)/(k - q) = prod_{l<k}(l - q) / Gamma(k + 1 - q)
            prod = 1.0 + 0.0j if complex_q else 1.0
            for l in range(k_int):
                prod = prod * (l - q)
            value = value + c * split ** D * prod / gamma_fn(k_int + 1 - q)
            continue
        if abs(D) < 1e-8:
            raise PoleOfZeta(f"interpolation pole at q = {q}")
        bracket = bracket + c * split ** D / D

    i0, e0 = adaptive_log_integrate(
        lambda ts: ts ** (half - q - 1.0) * remainder(ts),
        _T_MIN, split, tol=1e-13)

    def tail_part(ts):
        th = np.array([theta_trace(model, t) for t in np.atleast_1d(ts)])
        return ts ** (half - q - 1.0) * th

    i1, e1 = adaptive_log_integrate(tail_part, split, T, tol=1e-13)
    bracket = bracket + i0 + i1

    # 1/Gamma(-q) = prod_{l=0..k}(l - q) / Gamma(k + 1 - q), exact
    k_ref = max(0, int(round(qr)))
    rg = 1.0 + 0.0j if complex_q else 1.0
    for l in range(k_ref + 1):
        rg = rg * (l - q)
    rg = rg / gamma_fn(k_ref + 1 - q)
    value = (4.0 * np.pi) ** half * (value + rg * bracket)

    cut = _T_MIN ** ((series_order + 1) / 2.0 - qr)
    err = (4.0 * np.pi) ** half * (abs(e0) + abs(e1) + abs(cut))
    # a complex q signals derivative extraction: the tiny imaginary part
    # is the payload, so it must survive
    out = complex(value) if complex_q else float(np.real(value))
    return AqResult(q, out, err, split)


def aq_derivative(model, k, series_order=None, step=1e-20):
    """d A_q / dq at integer k, by complex step (noise-free)."""
    if k != int(k) or k < 0:
        raise ValidationError(
            "derivative point must be a nonnegative integer")
    res = a_q(model, complex(float(k), step), series_order=series_order)
    return float(np.imag(complex(res.value)) / step)


# ---------------------------------------------------------------------------
# zeta function and determinant

def _zeta_spectrum(spec, s, shift, exclude_zero):
    lam = spec.lambdas - shift
    mult = spec.mults
    scale = max(1.0, abs(spec.cutoff))
    if np.any(lam < -1e-10 * scale):
        raise NonPositiveShiftedOperator("negative shifted eigenvalue")
    zero = np.abs(lam) <= 1e-10 * scale
    if np.any(zero):
        if not exclude_zero:
            raise NonPositiveShiftedOperator(
                "zero mode present; pass exclude_zero=True")
        lam, mult = lam[~zero], mult[~zero]
    if isinstance(s, complex):
        return complex(np.sum(mult * np.exp(-s * np.log(lam))))
    return float(np.sum(mult * lam ** (-s)))


def _zeta_circle_direct(model, s, shift, exclude_zero):
    """Lattice sum with two-sided Euler-Maclaurin closure, Re s > 1/2."""
    if np.real(s) <= 0.5:
        raise ValidationError("direct sum needs Re s > 1/2")
    m2 = model.mass2 - shift
    th = model.twist
    r = model.radius
    K = max(120, int(np.ceil(5.0 * r * np.sqrt(abs(m2)))) + 20)
    k = np.arange(-K, K + 1)
    lam = ((k + th) / r) ** 2 + m2
    if np.any(lam < -1e-14):
        raise NonPositiveShiftedOperator("negative shifted eigenvalue")
    keep = lam > 1e-14
    if not exclude_zero and np.any(~keep):
        raise NonPositiveShiftedOperator(
            "zero mode present; pass exclude_zero=True")
    total = float(np.sum(lam[keep] ** (-s)))

    def g(u):
        return (u * u + m2) ** (-s)

    def g1(u):
        return -2.0 * s * u * (u * u + m2) ** (-s - 1)

    def g3(u):
        y = u * u + m2
        return (-12.0 * s * (s + 1) * u * y ** (-s - 2)
                + 8.0 * s * (s + 1) * (s + 2) * u ** 3 * y ** (-s - 3))

    def g_integral(X):
        # int_X^inf (u^2 + m2)^(-s) du, binomial series in m2 / u^2;
        # the coefficient recurrence avoids gamma-function edge cases
        out = 0.0
        cj = 1.0
        for j in range(0, 80):
            term = cj * X ** (1 - 2 * s - 2 * j) / (2 * s + 2 * j - 1)
            out += term
            cj *= -(s + j) / (j + 1.0) * m2
            if cj == 0.0 or abs(term) < 1e-18 * max(abs(out), 1e-300):
                break
        return out

    # sum_{k>K} F(k) = int_{K+1} F + F(K+1)/2 - F'/12 + F'''/720 with
    # F(k) = g((k + th)/r); same closure on the descending side
    for edge in ((K + 1 + th) / r, (K + 1 - th) / r):
        total += (r * g_integral(edge) + 0.5 * g(edge)
                  - g1(edge) / (12.0 * r) + g3(edge) / (720.0 * r ** 3))
    return total


def zeta(arg, s, lambda_shift=0.0, exclude_zero=False, method="auto"):
    """Spectral zeta value: sum of mult * (lambda - lambda_shift)^(-s).

    arg is a model or an explicit finite Spectrum (summed literally).
    method 'mellin' continues through the heat trace and is valid at any s
    away from the pole set; 'direct' sums the spectrum and needs
    Re s > n/2 (circle models); 'auto' picks 'mellin' for models.
    """
    if isinstance(arg, Spectrum):
        return _zeta_spectrum(arg, s, lambda_shift, exclude_zero)
    if method == "direct":
        if isinstance(arg, Circle):
            return _zeta_circle_direct(arg, s, lambda_shift, exclude_zero)
        raise ValidationError("direct path is implemented for circle models")
    if method not in ("auto", "mellin"):
        raise ValidationError(f"unknown method {method!r}")

    model = arg
    sr = float(np.real(s))
    n = model.dim
    order = max(8, 2 * int(np.ceil(max(-sr, 0.0) + n / 2.0)) + 4)
    powers, coeffs, remainder, split = _series_data(model, lambda_shift,
                                                    order)
    _check_shifted_positive(model, lambda_shift, allow_zero=exclude_zero)
    lam1, m0 = _lambda_min_positive(model, lambda_shift)

    if exclude_zero and m0 > 0:
        # zero modes contribute m0 * exp(shift t) to the shifted trace;
        # remove that function from both the series and the remainder
        agg = {}
        for p, c in zip(powers, coeffs):
            agg[float(p)] = agg.get(float(p), 0.0) + c
        for j in range(order + 1):
            agg[float(j)] = agg.get(float(j), 0.0) \
                - m0 * lambda_shift ** j / math.factorial(j)
        pairs = sorted(agg.items())
        powers = np.array([p for p, _ in pairs])
        coeffs = np.array([c for _, c in pairs])
        base_remainder = remainder

        def remainder(t):
            return base_remainder(t) \
                - m0 * _exp_tail(lambda_shift * np.asarray(t), order)

        def theta_eff(t):
            return (theta_trace(model, t) - m0) * np.exp(lambda_shift * t)
    else:
        def theta_eff(t):
            return theta_trace(model, t) * np.exp(lambda_shift * t)

    T = 45.0 / lam1 + 1.0
    complex_s = isinstance(s, complex)
    value = 0.0 + 0.0j if complex_s else 0.0
    bracket = 0.0 + 0.0j if complex_s else 0.0
    for p, c in zip(powers, coeffs):
        if c == 0.0:
            continue
        D = s + p
        k_int = int(round(float(p)))
        # the bracket pole at s = -p is canceled by the 1/Gamma(s) zero
        # only for nonnegative integer p; negative p are genuine poles
        if abs(p - k_int) < 1e-9 and k_int >= 0 and abs(D) < 0.4:
            # 1/Gamma(s)/(s + k) = prod_{l<k}(s + l) / Gamma(s + k + 1)
            prod = 1.0 + 0.0j if complex_s else 1.0
            for l in range(k_int):
                prod = prod * (s + l)
            value = value + c * split ** D * prod / gamma_fn(s + k_int + 1)
            continue
        if abs(D) < 1e-8:
            raise PoleOfZeta(f"zeta pole at s = {s}")
        bracket = bracket + c * split ** D / D

    i0, _ = adaptive_log_integrate(
        lambda ts: ts ** (s - 1.0) * remainder(ts), _T_MIN, split, tol=1e-13)

    def tail_part(ts):
        th = np.array([theta_eff(t) for t in np.atleast_1d(ts)])
        return ts ** (s - 1.0) * th

    i1, _ = adaptive_log_integrate(tail_part, split, T, tol=1e-13)
    bracket = bracket + i0 + i1

    # 1/Gamma(s) = prod_{l=0..k}(s + l) / Gamma(s + k + 1), exact
    k_ref = max(0, int(round(-sr)))
    rg = 1.0 + 0.0j if complex_s else 1.0
    for l in range(k_ref + 1):
        rg = rg * (s + l)
    rg = rg / gamma_fn(s + k_ref + 1)
    value = value + rg * bracket
    return _maybe_real(value)


def log_det(arg, lambda_shift=0.0, exclude_zero=False, step=1e-4):
    """log det of the (shifted) operator, -zeta'(0).

    Central differences with one Richardson sweep; the continued zeta is
    analytic through s = 0, so the extrapolation is clean.
    """
    def zv(s):
        return zeta(arg, s, lambda_shift=lambda_shift,
                    exclude_zero=exclude_zero)

    d1 = (zv(step) - zv(-step)) / (2.0 * step)
    h = step / 2.0
    d2 = (zv(h) - zv(-h)) / (2.0 * h)
    return -float((4.0 * d2 - d1) / 3.0)


# ---------------------------------------------------------------------------
# least-squares recovery of expansion coefficients

def expansion_fit(samples, template):
    """Fit sampled values to a sum of c * x^power * log(x)^log_power.

    samples: iterable of (x, value); template: iterable of (power,
    log_power).  Columns are normalized before solving; condition number
    above 1e12 raises IllConditioned, exact dependence RankDeficient.
    The returned series has Fitted provenance, its rms residual in
    .residual, and the design condition number in .condition.
    """
    samples = [(float(e), float(v)) for e, v in samples]
    template = [(float(p), int(lp)) for p, lp in template]
    if len(samples) < len(template) + 2:
        raise ValidationError(
            f"need at least {len(template) + 2} samples for "
            f"{len(template)} template terms")
    xs = np.array([e for e, _ in samples])
    vals = np.array([v for _, v in samples])
    if np.any(xs <= 0):
        raise ValidationError("sample abscissas must be positive")
    if xs.max() / xs.min() < 10.0:
        raise ValidationError("samples must span at least a decade")
    cols = []
    for p, lp in template:
        col = xs ** p
        if lp:
            col = col * np.log(xs)
        cols.append(col)
    X = np.stack(cols, axis=1)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0.0):
        raise RankDeficient("zero template column")
    Xn = X / norms
    u, sv, vt = np.linalg.svd(Xn, full_matrices=False)
    if sv[-1] <= sv[0] * 1e-15:
        raise RankDeficient("template columns are linearly dependent")
    if sv[0] / sv[-1] > 1e12:
        raise IllConditioned(
            f"design condition number {sv[0] / sv[-1]:.2e}")
    coef = (vt.T @ ((u.T @ vals) / sv)) / norms
    resid = float(np.sqrt(np.mean((X @ coef - vals) ** 2)))
    series = AsymptoticSeries(
        [SeriesTerm(p, lp, c, "Fitted")
         for (p, lp), c in zip(template, coef)])
    series.residual = resid
    series.condition = float(sv[0] / sv[-1])
    return series


# ---------------------------------------------------------------------------
# residue series for the inverse-square-root transform

def mellin_barnes_series(model, n_terms=3, series_order=None):
    """Small-argument expansion of the relativistic trace from A_q data.

    The simple pole at q = 0 gives A_0 / (pi beta); each double pole at
    integer k >= 1 gives a beta^(2k-1) pair carrying log(beta), the
    digamma combination, and the coefficient derivative.  Returns an
    AsymptoticSeries in beta with Residue provenance.
    """
    terms = []
    a0 = a_q(model, 0.0, series_order=series_order).value
    terms.append(SeriesTerm(-1.0, 0, a0 / np.pi, "Residue"))
    for k in range(1, n_terms):
        ak = a_q(model, float(k), series_order=series_order).value
        akp = aq_derivative(model, k, series_order=series_order)
        pref = 1.0 / (2.0 ** (2 * k - 1) * 2.0 * np.pi
                      * math.factorial(k) * math.factorial(k - 1))
        c_log = pref * 2.0 * ak
        c_plain = pref * (-2.0 * np.log(2.0) * ak
                          - (digamma(k + 1) + digamma(k)) * ak + akp)
        terms.append(SeriesTerm(2 * k - 1.0, 1, c_log, "Residue"))
        terms.append(SeriesTerm(2 * k - 1.0, 0, c_plain, "Residue"))
    return AsymptoticSeries(terms, variable="beta")
