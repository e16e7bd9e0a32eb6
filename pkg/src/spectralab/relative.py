"""Relative spectral invariants of commuting operator pairs.

A TracePair holds two constant-coefficient operators diagonal in one
Fourier basis: scalar Laplacians (Circle or FlatTorus members on a
shared lattice) or two DiracCircle operators with a common twist.  Every
quantity here is an explicit lattice sum:

    X(t,s)   = sum_k exp(-t lam+(k) - s lam-(k))
    Y(t,s)   = sum_k d+(k) d-(k) exp(-t d+(k)^2 - s d-(k)^2)
    Psi(t,s) = sum_k (e^{-t lam+} - e^{-t lam-})(e^{-s lam+} - e^{-s lam-})
    Phi(t,s) = the same with d-weighted brackets

Psi equals Theta+(t+s) + Theta-(t+s) - X(t,s) - X(s,t); the product form
is used because it never cancels four large terms against each other and
it evaluates on a whole quadrature grid as a single matrix product.

The Bogolyubov invariants come in two routes that must agree.  The
spectral route sums occupation-number differences over modes with
omega = sqrt(lam + m^2).  The kernel route integrates the relative
invariants against subordination kernels,

    B_b = iint h_f(t) h_b(s) e^{-m^2 b^2 (t+s)} Psi(b^2 t, b^2 s) dt ds
    B_f = 4 iint h_0(t) h_0(s) e^{-m^2 b^2 (t+s)}
              b^2 [Phi(b^2 t, b^2 s) + m^2 Psi(b^2 t, b^2 s)] dt ds

with b = beta; the factor 4 compensates the two factors of 1/2 in
h_0 -> 1/(2 sinh).  The mass keeps both integrals convergent at large
times, and the kernels die double-exponentially at small times.
"""

import math

import numpy as np

from ._quad import legendre_rule
from .errors import (NonCommutingPair, QuadratureFailure,
                     SpectralSymmetryRequired, TailTooLarge, ValidationError)
from .mellin import expansion_fit
from .models import Circle, DiracCircle, FlatTorus
from .traces import KernelFamily, kernel_eval

__all__ = ["TracePair", "EffectiveMetric", "combined_trace_X",
           "combined_trace_Y", "relative_psi", "relative_phi",
           "theorem1_leading_fit", "bogolyubov"]

_MODE_CAP = 4_000_000
_LOG_TAIL = 46.0


def _scalar_form(model):
    """(G, twist, mass2) with Circle folded into the 1-d torus form."""
    if isinstance(model, Circle):
        return (np.array([[model.radius ** -2.0]]),
                np.array([model.twist]), model.mass2)
    return model.inverse_metric, model.twist, model.mass2


class TracePair:
    """Two commuting operators on a shared torus, plus a mass shift.

    Scalar members may mix Circle and one-dimensional FlatTorus; both
    are folded into the quadratic-form parametrization.  Dirac members
    must share the twist so the modes pair up under k -> -k - 2 theta.
    Commutation is structural: both members are diagonal in the same
    Fourier basis or the pair is rejected outright.
    """

    def __init__(self, plus, minus, mass=0.0):
        self.mass = float(mass)
        if self.mass < 0:
            raise ValidationError("mass must be nonnegative")
        dirac = (isinstance(plus, DiracCircle), isinstance(minus, DiracCircle))
        scalar = (isinstance(plus, (Circle, FlatTorus)),
                  isinstance(minus, (Circle, FlatTorus)))
        if all(dirac):
            if abs(plus.twist - minus.twist) > 1e-12:
                raise NonCommutingPair("Dirac members must share the twist")
            self.kind = "dirac"
            self.dim = 1
        elif all(scalar):
            fp, fm = _scalar_form(plus), _scalar_form(minus)
            if fp[0].shape != fm[0].shape:
                raise NonCommutingPair("members live on different lattices")
            self.kind = "scalar"
            self.dim = fp[0].shape[0]
            self._forms = (fp, fm)
        else:
            raise NonCommutingPair(
                "members must both be scalar or both be Dirac operators")
        self.plus = plus
        self.minus = minus

    def _decay_floor(self):
        if self.kind == "dirac":
            return min(self.plus.frame, self.minus.frame) ** 2
        return min(float(np.linalg.eigvalsh(f[0])[0]) for f in self._forms)

    def __repr__(self):
        return f"TracePair({self.plus!r}, {self.minus!r}, mass={self.mass})"


class EffectiveMetric:
    """Interpolated metric of a pair at times (t, s).

    The combined inverse metric is t G+ + s G-; g_ts is its inverse,
    positive definite for positive times and homogeneous of degree -1
    under joint scaling of (t, s).  Integrating sqrt(det g_ts) over the
    2 pi lattice gives the leading relative-trace coefficient.
    """

    def __init__(self, pair, t, s):
        if t <= 0 or s <= 0:
            raise ValidationError("t and s must be positive")
        if pair.kind == "dirac":
            gp = np.array([[pair.plus.frame ** 2.0]])
            gm = np.array([[pair.minus.frame ** 2.0]])
        else:
            gp, gm = pair._forms[0][0], pair._forms[1][0]
        self.t = float(t)
        self.s = float(s)
        self.inverse = self.t * gp + self.s * gm
        self.g_ts = np.linalg.inv(self.inverse)

    def sqrt_det_g(self):
        return 1.0 / math.sqrt(float(np.linalg.det(self.inverse)))


def _axis_width(rate, dim, extra=0.0):
    # half-width making the dropped exp(-rate k^2) tail ~1e-20 per term;
    # +2 absorbs the twist offset
    if rate <= 0:
        raise ValidationError("decay rate must be positive")
    k = int(math.ceil(math.sqrt((_LOG_TAIL + extra) / rate))) + 2
    if (2 * k + 1) ** dim > _MODE_CAP:
        raise TailTooLarge(
            f"lattice sum needs about {(2 * k + 1) ** dim:.2e} modes")
    return k


def _scalar_lambdas(pair, kmax):
    (gp, twp, m2p), (gm, twm, m2m) = pair._forms
    ax = np.arange(-kmax, kmax + 1, dtype=float)
    grids = np.meshgrid(*([ax] * pair.dim), indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=-1)
    lp = np.einsum("ki,ij,kj->k", k + twp, gp, k + twp) + m2p
    lm = np.einsum("ki,ij,kj->k", k + twm, gm, k + twm) + m2m
    return lp, lm


def _dirac_d(pair, kmax):
    k = np.arange(-kmax, kmax + 1, dtype=float) + pair.plus.twist
    return pair.plus.frame * k, pair.minus.frame * k


def _pair_lambdas(pair, rate, extra=0.0):
    kmax = _axis_width(rate, pair.dim, extra)
    if pair.kind == "dirac":
        dp, dm = _dirac_d(pair, kmax)
        return dp * dp, dm * dm
    return _scalar_lambdas(pair, kmax)


def combined_trace_X(pair, t, s):
    """Tr exp(-t L+) exp(-s L-) as an explicit lattice sum.

    For Dirac pairs the squared operators enter.  Positive; swapping
    (t, s) together with the members leaves it unchanged.
    """
    if t <= 0 or s <= 0:
        raise ValidationError("t and s must be positive")
    if pair.kind == "dirac":
        rate = t * pair.plus.frame ** 2 + s * pair.minus.frame ** 2
    else:
        # eigmin is superadditive, so this underestimates the true rate
        rate = (t * float(np.linalg.eigvalsh(pair._forms[0][0])[0])
                + s * float(np.linalg.eigvalsh(pair._forms[1][0])[0]))
    lp, lm = _pair_lambdas(pair, rate)
    return float(np.sum(np.exp(-t * lp - s * lm)))


def combined_trace_Y(pair, t, s):
    """Tr D+ exp(-t D+^2) D- exp(-s D-^2) for a Dirac pair."""
    if pair.kind != "dirac":
        raise ValidationError("Y is defined for Dirac pairs")
    if t <= 0 or s <= 0:
        raise ValidationError("t and s must be positive")
    rate = t * pair.plus.frame ** 2 + s * pair.minus.frame ** 2
    # extra margin covers the k^2 prefactor
    dp, dm = _dirac_d(pair, _axis_width(rate, 1, extra=12.0))
    return float(np.sum(dp * dm * np.exp(-t * dp * dp - s * dm * dm)))


def relative_psi(pair, t, s):
    """Tr (e^{-tL+} - e^{-tL-})(e^{-sL+} - e^{-sL-}).

    Equals Theta+(t+s) + Theta-(t+s) - X(t,s) - X(s,t); the product form
    sums per-mode brackets directly.  Nonnegative on the diagonal t = s,
    symmetric in (t, s), and exactly zero for identical members.
    """
    if t <= 0 or s <= 0:
        raise ValidationError("t and s must be positive")
    lp, lm = _pair_lambdas(pair, (t + s) * pair._decay_floor())
    bt = np.exp(-t * lp) - np.exp(-t * lm)
    bs = np.exp(-s * lp) - np.exp(-s * lm)
    return float(np.dot(bt, bs))


def relative_phi(pair, t, s):
    """Tr (D+e^{-tD+^2} - D-e^{-tD-^2})(D+e^{-sD+^2} - D-e^{-sD-^2})."""
    if pair.kind != "dirac":
        raise ValidationError("Phi is defined for Dirac pairs")
    if t <= 0 or s <= 0:
        raise ValidationError("t and s must be positive")
    kmax = _axis_width((t + s) * pair._decay_floor(), 1, extra=12.0)
    dp, dm = _dirac_d(pair, kmax)
    bt = dp * np.exp(-t * dp * dp) - dm * np.exp(-t * dm * dm)
    bs = dp * np.exp(-s * dp * dp) - dm * np.exp(-s * dm * dm)
    return float(np.dot(bt, bs))


def theorem1_leading_fit(pair, t, s, epsilons):
    """Fit the scaled small-time trace and compare with the closed form.

    Scalar pairs fit X(eps t, eps s) (4 pi eps)^{n/2} to c0 + c1 eps; the
    constant estimates B0 = (2 pi)^n det(t G+ + s G-)^{-1/2}.  Dirac
    pairs fit eps Y(eps t, eps s) (4 pi eps)^{1/2} whose constant
    estimates C0 = pi e+ e- (t e+^2 + s e-^2)^{-3/2}.  Needs at least
    four epsilon samples spanning a decade.  Returns (fitted, predicted).
    """
    samples = []
    for e in epsilons:
        e = float(e)
        if e <= 0:
            raise ValidationError("epsilon samples must be positive")
        if pair.kind == "dirac":
            v = e * combined_trace_Y(pair, e * t, e * s) \
                * math.sqrt(4.0 * math.pi * e)
        else:
            v = combined_trace_X(pair, e * t, e * s) \
                * (4.0 * math.pi * e) ** (pair.dim / 2.0)
        samples.append((e, v))
    series = expansion_fit(samples, [(0.0, 0), (1.0, 0)])
    fitted = series.coefficient(0.0)
    if pair.kind == "dirac":
        ep, em = pair.plus.frame, pair.minus.frame
        predicted = math.pi * ep * em * (t * ep ** 2 + s * em ** 2) ** -1.5
    else:
        metric = EffectiveMetric(pair, t, s)
        predicted = (2.0 * math.pi) ** pair.dim * metric.sqrt_det_g()
    return fitted, predicted


# ---------------------------------------------------------------------------
# Bogolyubov invariants

def _bogo_spectral(pair, beta, m, statistics):
    # occupation differences decay like exp(-beta omega); size the box
    # from the slowest linear growth of omega in k
    rate = beta * math.sqrt(pair._decay_floor())
    kmax = int(math.ceil(_LOG_TAIL / rate)) + 2
    if (2 * kmax + 1) ** pair.dim > _MODE_CAP:
        raise TailTooLarge(
            f"mode sum needs about {(2 * kmax + 1) ** pair.dim:.2e} modes")
    if statistics == "fermi":
        dp, dm = _dirac_d(pair, kmax)
        wp = np.sqrt(dp * dp + m * m)
        wm = np.sqrt(dm * dm + m * m)
        sp, sm = np.sinh(beta * wp), np.sinh(beta * wm)
        da = dp / sp - dm / sm
        db = 1.0 / sp - 1.0 / sm
        return float(beta * beta * np.sum(da * da + m * m * db * db))
    if pair.kind == "dirac":
        dp, dm = _dirac_d(pair, kmax)
        lp, lm = dp * dp, dm * dm
    else:
        lp, lm = _scalar_lambdas(pair, kmax)
    xp, xm = beta * np.sqrt(lp + m * m), beta * np.sqrt(lm + m * m)
    nf = 1.0 / (np.exp(xp) + 1.0) - 1.0 / (np.exp(xm) + 1.0)
    nb = 1.0 / np.expm1(xp) - 1.0 / np.expm1(xm)
    return float(np.dot(nf, nb))


def _log_gauss_grid(breaks, order):
    x, w = legendre_rule(order)
    ts, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (math.log(lo) + math.log(hi))
        half = 0.5 * (math.log(hi) - math.log(lo))
        t = np.exp(mid + half * x)
        ts.append(t)
        ws.append(w * half * t)
    return np.concatenate(ts), np.concatenate(ws)


def _bracket_grids(pair, u, want_phi):
    # brackets on the smallest heat time set the mode box
    kmax = _axis_width(float(u[0]) * pair._decay_floor(),
                       pair.dim, extra=12.0)
    if pair.kind == "dirac":
        dp, dm = _dirac_d(pair, kmax)
        lp, lm = dp * dp, dm * dm
    else:
        lp, lm = _scalar_lambdas(pair, kmax)
    psi = np.zeros((u.size, u.size))
    phi = np.zeros((u.size, u.size)) if want_phi else None
    step = 32768
    for lo in range(0, lp.size, step):
        sl = slice(lo, lo + step)
        ep = np.exp(-np.outer(u, lp[sl]))
        em = np.exp(-np.outer(u, lm[sl]))
        bs = ep - em
        psi += bs @ bs.T
        if want_phi:
            bd = dp[sl] * ep - dm[sl] * em
            phi += bd @ bd.T
    return psi, phi


def _bogo_kernel(pair, beta, m, statistics, order):
    mb2 = (m * beta) ** 2
    t_hi = max(50.0 / mb2, 2e-3)
    # kernels vanish double-exponentially below t ~ 1e-2; the split at
    # t = 1 keeps each log-panel short
    breaks = [1e-3, 1.0, t_hi] if t_hi > 1.0 else [1e-3, t_hi]
    tn, wn = _log_gauss_grid(breaks, order)
    u = beta * beta * tn
    damp = wn * np.exp(-mb2 * tn)
    psi, phi = _bracket_grids(pair, u, statistics == "fermi")
    if statistics == "bose":
        hf = np.array([kernel_eval(KernelFamily("h_f", t)) for t in tn])
        hb = np.array([kernel_eval(KernelFamily("h_b", t)) for t in tn])
        return float((damp * hf) @ psi @ (damp * hb))
    h0 = np.array([kernel_eval(KernelFamily("h_0", t)) for t in tn])
    v0 = damp * h0
    return float(4.0 * beta * beta * (v0 @ (phi + m * m * psi) @ v0))


def bogolyubov(pair, beta, m=None, statistics="bose", method="spectral"):
    """Bose or Fermi Bogolyubov invariant of a commuting pair.

    The spectral route sums occupation-number differences per mode with
    omega = sqrt(lam + m^2); the Fermi case reduces per mode to
    beta^2 [(d+/sinh(beta w+) - d-/sinh(beta w-))^2
    + m^2 (1/sinh(beta w+) - 1/sinh(beta w-))^2] and needs a symmetric
    Dirac spectrum (twist 0 or 1/2).  The kernel route evaluates the
    double subordination integral on a tensor Gauss grid in log time,
    split at t = 1, doubled once; the two resolutions must agree to 1e-7
    relative.  m defaults to the pair's mass and must be positive.
    """
    if beta <= 0:
        raise ValidationError("beta must be positive")
    m = pair.mass if m is None else float(m)
    if m <= 0:
        raise ValidationError("need a positive mass for convergence")
    if statistics not in ("bose", "fermi"):
        raise ValidationError(f"unknown statistics {statistics!r}")
    if method not in ("spectral", "kernel"):
        raise ValidationError(f"unknown method {method!r}")
    if statistics == "fermi":
        if pair.kind != "dirac":
            raise ValidationError("the Fermi invariant needs a Dirac pair")
        tw = pair.plus.twist
        if min(abs(tw), abs(tw - 0.5), abs(tw - 1.0)) > 1e-12:
            raise SpectralSymmetryRequired(
                "Fermi invariant needs a symmetric spectrum "
                "(twist 0 or 1/2)")
    if method == "spectral":
        return _bogo_spectral(pair, beta, m, statistics)
    coarse = _bogo_kernel(pair, beta, m, statistics, 48)
    fine = _bogo_kernel(pair, beta, m, statistics, 96)
    if abs(fine - coarse) > 1e-7 * max(abs(fine), 1e-300):
        raise QuadratureFailure(
            f"kernel quadrature did not settle: {coarse!r} vs {fine!r}")
    return fine
