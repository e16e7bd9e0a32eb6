"""Heat-type traces over explicit spectra.

Four evaluation families:

* classical_trace: sum of exp(-t lambda) with a certified truncation bound;
* theta_trace: dual (image-sum) evaluation of the same quantity for models
  whose heat trace has a closed transform, used to cross-check the direct
  sum to near machine precision;
* relativistic_trace: sum of exp(-beta sqrt(lambda)), either directly or
  through the inverse-square-root subordination integral;
* quantum_trace: Bose or Fermi occupation sums, either directly or through
  the matching convolution kernels h_b, h_f.

The kernels are represented by fast theta-type series

    h(t, a) = (4 pi)^(-1/2) t^(-3/2) S(1/(4t), a),

with S one of

    S_b(x, a) = sum_{k>=1} k exp(k a - k^2 x)
    S_f(x, a) = sum_{k>=1} (-1)^(k+1) k exp(k a - k^2 x)
    S_0(x)    = sum_{odd j>=1} j exp(-j^2 x)

so that integrating h against exp(-t z^2) produces the occupation factors
1/(exp(z - a) -/+ 1) and 1/(2 sinh z).  S_b and S_0 have positive terms and
are summed directly at every argument (with the overall exponential scale
split off to avoid overflow).  S_f alternates; for (pi^2 - a^2) t >= 36 the
cancellation is avoided by the factorially divergent expansion

    S_f(x, a) = sum_m (-1)^(m+1) Li_{-2m-1}(-e^a) x^m / m!

truncated at its smallest term, with Li_{-n} evaluated as a rational
function of w = -1/(1 + e^(-a)).  Relative accuracy is ~1e-12 for
|a| <= 1.5; direct summation loses digits beyond that when t is large.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn, gammaincc

from .models import (Circle, DiracCircle, FlatTorus, Interval, Landau,
                     Sphere2)
from ._quad import adaptive_log_integrate
from .errors import (BoseDivergence, NonPositiveOperator, TailTooLarge,
                     UnsupportedModel, ValidationError)

__all__ = ["KernelFamily", "kernel_eval", "classical_trace", "theta_trace",
           "relativistic_trace", "quantum_trace"]

_SQRT4PI = np.sqrt(4.0 * np.pi)


def _upper_gamma(a, x):
    """Upper incomplete gamma function (unnormalized)."""
    return float(gamma_fn(a) * gammaincc(a, x))


# ---------------------------------------------------------------------------
# theta-type series with split exponential scale

def _s_b(x, a):
    """S_b(x, a) as (mantissa, scale): value = mantissa * exp(scale)."""
    kpeak = max(1.0, a / (2.0 * x))
    khi = int(np.ceil(kpeak + np.sqrt(42.0 / x))) + 2
    k = np.arange(1, khi + 1, dtype=float)
    expo = k * a - k * k * x
    shift = float(expo.max())
    return float(np.sum(k * np.exp(expo - shift))), shift


def _s_0(x):
    """S_0(x) as (mantissa, scale), odd terms only."""
    jhi = int(np.ceil(np.sqrt(42.0 / x))) + 3
    j = np.arange(1, jhi + 1, 2, dtype=float)
    expo = -j * j * x
    shift = float(expo.max())
    return float(np.sum(j * np.exp(expo - shift))), shift


@lru_cache(maxsize=4096)
def _li_neg(n, a):
    """Li_{-n}(-exp(a)) for integer n >= 1.

    Pole expansion of the Fermi factor over odd k, with an Euler-Maclaurin
    closure of the tail (integral plus Bernoulli corrections, all explicit
    complex powers).  No term cancellation occurs; the direct rational form
    in w = -1/(1+e^(-a)) loses ~n/2 digits instead.
    """
    J = 20
    k = np.arange(1, 2 * J, 2, dtype=float)
    total = float(np.sum(((a - 1j * np.pi * k) ** (-(n + 1))).real))
    z = a - 1j * np.pi * (2 * J + 1)
    two_pi_i = 2j * np.pi
    tail = (-z ** (-n) / (two_pi_i * n)).real + 0.5 * (z ** (-(n + 1))).real
    # B_2/2!, B_4/4!, B_6/6!, B_8/8! odd-derivative corrections
    for r, coef in ((1, -1.0 / 12.0), (3, 1.0 / 720.0),
                    (5, -1.0 / 30240.0), (7, 1.0 / 1209600.0)):
        poch = math.factorial(n + r) / math.factorial(n)
        tail += coef * (poch * two_pi_i ** r * z ** (-(n + 1 + r))).real
    return -2.0 * (-1.0) ** n * math.factorial(n) * (total + tail)


def _s_f_asymptotic(x, a):
    # Truncate on the smooth envelope 2 (2m+1)! x^m / (m! R^(m+1)),
    # R = a^2 + pi^2: the Li values oscillate through near-zeros, so the
    # raw term magnitudes cannot drive the stopping rule.
    R = a * a + np.pi ** 2
    total = 0.0
    fact = 1.0
    xp = 1.0
    dfact = 1.0
    env_prev = np.inf
    for m in range(0, 64):
        if m > 0:
            fact *= m
            xp *= x
            dfact *= (2 * m) * (2 * m + 1)
        env = 2.0 * dfact * xp / (fact * R ** (m + 1))
        if env > env_prev:
            break
        total += (-1.0) ** (m + 1) * _li_neg(2 * m + 1, a) * xp / fact
        env_prev = env
        if env < 1e-18 * max(abs(total), 1e-300):
            break
    return total, 0.0


def _s_f(x, a):
    """S_f(x, a) as (mantissa, scale)."""
    t_eq = 1.0 / (4.0 * x)
    if abs(a) < np.pi - 0.1 and (np.pi ** 2 - a * a) * t_eq >= 36.0:
        return _s_f_asymptotic(x, a)
    kpeak = max(1.0, a / (2.0 * x))
    khi = int(np.ceil(kpeak + np.sqrt(42.0 / x))) + 2
    k = np.arange(1, khi + 1, dtype=float)
    expo = k * a - k * k * x
    shift = float(expo.max())
    signs = np.where(k.astype(int) % 2 == 1, 1.0, -1.0)
    return float(np.sum(signs * k * np.exp(expo - shift))), shift


class KernelFamily:
    """One evaluation point of a subordination kernel.

    variant is 'h_b', 'h_f' or 'h_0'; beta_mu is the chemical argument
    a = beta*mu (must be 0 for h_0).
    """

    __slots__ = ("variant", "t", "beta_mu")

    def __init__(self, variant, t, beta_mu=0.0):
        if variant not in ("h_b", "h_f", "h_0"):
            raise ValidationError(f"unknown kernel variant {variant!r}")
        if t <= 0:
            raise ValidationError("kernel argument t must be positive")
        if variant == "h_0" and beta_mu != 0.0:
            raise ValidationError("h_0 does not take a chemical argument")
        self.variant = variant
        self.t = float(t)
        self.beta_mu = float(beta_mu)


def _kernel_scaled(variant, t, a):
    x = 1.0 / (4.0 * t)
    if variant == "h_b":
        m, e = _s_b(x, a)
    elif variant == "h_f":
        m, e = _s_f(x, a)
    else:
        m, e = _s_0(x)
    return m / (_SQRT4PI * t ** 1.5), e


def kernel_eval(family):
    """Value of the kernel described by a KernelFamily."""
    m, e = _kernel_scaled(family.variant, family.t, family.beta_mu)
    return m * np.exp(e)


# ---------------------------------------------------------------------------
# classical heat trace

def _weyl_prefactor(spec):
    return 2.0 * spec.total_mult / spec.cutoff ** (spec.dim / 2.0)


def classical_trace(spec, t, tol=1e-9):
    """Sum of mult * exp(-t lambda) plus a certified truncation bound.

    Returns (value, bound).  The bound majorizes the dropped tail above the
    spectrum cutoff using the counting function at the cutoff with a factor
    two of headroom; TailTooLarge signals that it exceeds tol relative to
    the value.
    """
    if t <= 0:
        raise ValidationError("t must be positive")
    if spec.signed:
        raise ValidationError("classical_trace expects a squared spectrum")
    value = float(np.dot(spec.mults, np.exp(-t * spec.lambdas)))
    if not spec.complete_below_cutoff:
        raise TailTooLarge("spectrum is not certified complete below cutoff")
    half = spec.dim / 2.0
    bound = (_weyl_prefactor(spec) * t ** (-half)
             * _upper_gamma(half + 1.0, t * spec.cutoff))
    if bound > tol * max(abs(value), 1e-300):
        raise TailTooLarge(
            f"truncation bound {bound:.3e} exceeds tol*value at t={t}")
    return value, bound


def _circle_theta(radius, twist, mass2, t):
    jmax = int(np.ceil(np.sqrt(42.0 * t) / (np.pi * radius))) + 1
    j = np.arange(1, jmax + 1, dtype=float)
    img = 2.0 * np.sum(np.exp(-np.pi ** 2 * j ** 2 * radius ** 2 / t)
                       * np.cos(2.0 * np.pi * j * twist))
    return radius * np.sqrt(np.pi / t) * (1.0 + img) * np.exp(-mass2 * t)


def theta_trace(model, t):
    """Heat trace by the dual image sum; exact closed forms per model.

    Supports lattice models, interval Dirichlet/Neumann combinations, the
    sphere and the Landau plane.  Robin intervals have no closed transform.
    """
    if t <= 0:
        raise ValidationError("t must be positive")
    if isinstance(model, Circle):
        return float(_circle_theta(model.radius, model.twist, model.mass2, t))
    if isinstance(model, DiracCircle):
        return float(_circle_theta(1.0 / model.frame, model.twist, 0.0, t))
    if isinstance(model, FlatTorus):
        g = np.linalg.inv(model.inverse_metric)
        gmin = np.linalg.eigvalsh(g)[0]
        M = int(np.ceil(np.sqrt(42.0 * t / (np.pi ** 2 * gmin)))) + 1
        axes = [np.arange(-M, M + 1)] * model.n
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([gg.ravel() for gg in grids], axis=-1)
        quad = np.einsum("ki,ij,kj->k", pts, g, pts)
        phase = np.cos(2.0 * np.pi * pts @ model.twist)
        vol = model.volume
        return float(vol * (4.0 * np.pi * t) ** (-model.n / 2.0)
                     * np.sum(np.exp(-np.pi ** 2 * quad / t) * phase)
                     * np.exp(-model.mass2 * t))
    if isinstance(model, Interval):
        kinds = (model.bc_left.kind, model.bc_right.kind)
        if "robin" in kinds:
            raise UnsupportedModel("no closed dual sum for Robin ends")
        L = model.length
        jmax = int(np.ceil(np.sqrt(42.0 * t) / L)) + 1
        j = np.arange(1, jmax + 1, dtype=float)
        img = np.exp(-L ** 2 * j ** 2 / t)
        full = (L / np.sqrt(np.pi * t)) * (1.0 + 2.0 * np.sum(img))
        if kinds in (("dirichlet", "dirichlet"), ("neumann", "neumann")):
            base = 0.5 * full
            return float(base - 0.5 if kinds[0] == "dirichlet" else base + 0.5)
        alt = np.exp(-L ** 2 * j ** 2 / t) * ((-1.0) ** np.arange(1, jmax + 1))
        return float(0.5 * (L / np.sqrt(np.pi * t)) * (1.0 + 2.0 * np.sum(alt)))
    if isinstance(model, Sphere2):
        tau = t / model.radius ** 2
        m, e = _s_0(tau / 4.0)
        return float(m * np.exp(e + tau / 4.0))
    if isinstance(model, Landau):
        B = model.field
        return float(B * np.exp(-t * model.mass2) / (4.0 * np.pi * np.sinh(t * B)))
    raise UnsupportedModel(f"no dual sum for {type(model).__name__}")


# ---------------------------------------------------------------------------
# relativistic trace

def _split_zero(spec):
    scale = max(1.0, abs(spec.cutoff))
    lam = spec.lambdas
    if len(lam) and lam[0] < -1e-12 * scale:
        raise NonPositiveOperator(
            f"negative eigenvalue {lam[0]} in the spectrum")
    ztol = 1e-10 * scale
    zero = np.abs(lam) <= ztol
    m0 = float(spec.mults[zero].sum())
    keep = lam > ztol
    return m0, lam[keep], spec.mults[keep]


def _relativistic_tail(spec, beta, shift=0.0):
    n = spec.dim
    arg = beta * (np.sqrt(spec.cutoff) - shift)
    if arg <= 0:
        return np.inf
    return 2.0 * _weyl_prefactor(spec) * beta ** (-n) * _upper_gamma(n + 1.0, arg)


def relativistic_trace(spec, beta, method="direct", tol=1e-10):
    """Sum of mult * exp(-beta sqrt(lambda)) for lambda >= 0.

    method 'direct' sums occupation factors; 'subordination' evaluates the
    inverse-square-root transform of the heat trace by adaptive panel
    quadrature (zero modes are split off exactly, each contributing 1).
    """
    if beta <= 0:
        raise ValidationError("beta must be positive")
    if spec.signed:
        raise ValidationError("relativistic_trace expects a squared spectrum")
    m0, lam, mult = _split_zero(spec)
    if not spec.complete_below_cutoff:
        raise TailTooLarge("spectrum is not certified complete below cutoff")

    if method == "direct":
        value = m0 + float(np.dot(mult, np.exp(-beta * np.sqrt(lam))))
    elif method == "subordination":
        if len(lam) == 0:
            value = m0
        else:
            lam1 = lam[0]
            b2 = beta * beta

            def f(ts):
                block = np.exp(-np.outer(ts * b2, lam)) @ mult
                return ts ** (-1.5) * np.exp(-0.25 / ts) * block

            t_lo = 3.2e-4
            t_hi = max(46.0 / (b2 * lam1), 4.0 * t_lo)
            val, _ = adaptive_log_integrate(f, t_lo, t_hi, tol=1e-12)
            value = m0 + val / (2.0 * np.sqrt(np.pi))
    else:
        raise ValidationError(f"unknown method {method!r}")

    bound = _relativistic_tail(spec, beta)
    if bound > tol * max(abs(value), 1e-300):
        raise TailTooLarge(
            f"spectrum cutoff too low: tail bound {bound:.3e}")
    return value


# ---------------------------------------------------------------------------
# quantum statistics trace

def _theta_scaled(lam, mult, tau):
    """Heat sum as (mantissa, scale) with scale = -tau*lambda_min."""
    shift = -tau * lam[0]
    mant = float(np.dot(mult, np.exp(-tau * (lam - lam[0]))))
    return mant, shift


def quantum_trace(spec, beta, mu, statistics, method="direct", tol=1e-9):
    """Occupation-number trace at inverse temperature beta.

    statistics 'bose' -> sum mult / (exp(beta(omega - mu)) - 1) and
    'fermi' -> sum mult / (exp(beta(omega - mu)) + 1), omega = sqrt(lambda).
    The spectrum must be strictly positive (shift the mass to arrange it).
    Bose statistics require mu < sqrt(lambda_min).  method 'kernel'
    integrates the matching subordination kernel against the heat trace and
    additionally needs mu < sqrt(lambda_min) for Fermi statistics.
    """
    if beta <= 0:
        raise ValidationError("beta must be positive")
    if statistics not in ("bose", "fermi"):
        raise ValidationError(f"unknown statistics {statistics!r}")
    if spec.signed:
        raise ValidationError("quantum_trace expects a squared spectrum")
    if not spec.complete_below_cutoff:
        raise TailTooLarge("spectrum is not certified complete below cutoff")
    scale = max(1.0, abs(spec.cutoff))
    lam = spec.lambdas
    mult = spec.mults
    if len(lam) == 0:
        raise ValidationError("empty spectrum")
    if lam[0] <= 1e-12 * scale:
        raise NonPositiveOperator(
            "quantum_trace needs a strictly positive spectrum; "
            "shift the mass term")
    omega1 = np.sqrt(lam[0])
    if statistics == "bose" and mu >= omega1 - 1e-12 * max(1.0, omega1):
        raise BoseDivergence(
            f"chemical potential {mu} reaches sqrt(lambda_min) = {omega1}")

    if method == "direct":
        arg = beta * (np.sqrt(lam) - mu)
        if statistics == "bose":
            value = float(np.dot(mult, 1.0 / np.expm1(arg)))
        else:
            value = float(np.dot(mult, 1.0 / (np.exp(arg) + 1.0)))
    elif method == "kernel":
        if statistics == "fermi" and mu >= omega1 - 1e-12 * max(1.0, omega1):
            raise ValidationError(
                "kernel path needs mu < sqrt(lambda_min); use direct")
        a = beta * mu
        b2 = beta * beta
        gap = b2 * lam[0] - a * a
        variant = "h_b" if statistics == "bose" else "h_f"

        def f(ts):
            out = np.empty_like(ts)
            for i, t in enumerate(ts):
                mk, ek = _kernel_scaled(variant, t, a)
                mt, et = _theta_scaled(lam, mult, t * b2)
                out[i] = mk * mt * np.exp(ek + et)
            return out

        t_lo = 3.2e-4
        t_hi = max(52.0 / gap, 4.0 * t_lo)
        value, _ = adaptive_log_integrate(f, t_lo, t_hi, tol=1e-11)
    else:
        raise ValidationError(f"unknown method {method!r}")

    bound = 2.0 * _relativistic_tail(spec, beta, shift=mu)
    if bound > tol * max(abs(value), 1e-300):
        raise TailTooLarge(
            f"spectrum cutoff too low: tail bound {bound:.3e}")
    return value
