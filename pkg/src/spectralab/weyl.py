"""Gaussian heat kernels of quadratic symbols and their exact convolution.

A model is a constant metric g together with a constant antisymmetric
curvature R.  Its heat kernel is an explicit Gaussian

    U(t; x, y) = (4 pi)^{-n/2} Omega(t)
                 exp(-(1/4) <x-y, D(t)(x-y)> + (i/2) <x, R y>)

where D(t) applies b coth(t b) to each rotation block of the pencil
g^{-1/2} R g^{-1/2} (so D(t) -> g/t as t -> 0) and Omega(t) collects
b / sinh(t b) per block with t^{-1/2} per kernel direction.

The convolution of two such kernels with different (g, R) closes in the
same family: integrating out the middle point of

    int U_+(t; x, y) U_-(s; y, x') dy

gives (4 pi)^{-n/2} Omega(t, s) exp(-(1/4)<x, A+ x> - (1/4)<x', A- x'>
+ (1/2)<x, B x'>) with, writing D = D+(t) + D-(s) and T+- = D+- + i R+-,

    A+ = D+ - T+ D^{-1} T+^T      A- = D- - T-^T D^{-1} T-
    B  = T+ D^{-1} T-             Omega(t, s) = Omega+ Omega- det(D)^{-1/2}

so det B = Omega(t, s)^2 exactly.  The off-diagonal blocks are complex
whenever the curvatures fail to commute with the rest of the pencil;
validity is certified per call by requiring Re H > 0 for the auxiliary
form H = (1/4)(D - Z^T D^{-1} Z), Z = D+ - D- - 2 i R-, and positive
semidefiniteness of the real block form [[Re A+, -Re B], [-Re B^T,
Re A-]], erroring instead of extrapolating.
"""

import math

import numpy as np

from ._matfun import (even_matrix_function, log_sinh_ratio, skew_blocks,
                      spd_sqrt, x_coth_x)
from .errors import (NonIntegrableDiagonal, PositivityCertificateFailed,
                     SingularD, ValidationError)

__all__ = ["WeylModel", "WeylPair", "PairMatrices", "d_matrix",
           "omega_single", "pair_matrices", "convolution_kernel",
           "trace_density"]


class WeylModel:
    """Constant quadratic symbol: SPD metric g and antisymmetric R."""

    def __init__(self, n, metric, curv=None):
        self.n = int(n)
        if self.n < 1:
            raise ValidationError("dimension must be positive")
        g = np.asarray(metric, dtype=float)
        if g.shape != (self.n, self.n):
            raise ValidationError("metric shape does not match n")
        if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise ValidationError("metric must be symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise ValidationError("metric must be positive definite")
        if curv is None:
            R = np.zeros((self.n, self.n))
        else:
            R = np.asarray(curv, dtype=float)
        if R.shape != (self.n, self.n):
            raise ValidationError("curvature shape does not match n")
        if np.max(np.abs(R + R.T)) > 1e-12 * max(1.0, np.max(np.abs(R))):
            raise ValidationError("curvature must be antisymmetric")
        self.metric = 0.5 * (g + g.T)
        self.curv = 0.5 * (R - R.T)
        self._ghalf, self._ginvhalf = spd_sqrt(self.metric)
        self._pencil = self._ginvhalf @ self.curv @ self._ginvhalf
        _, self._rates, self._null_dim = skew_blocks(self._pencil)

    def __repr__(self):
        return f"WeylModel(n={self.n})"


class WeylPair:
    """Two models on the same space, convolved left (plus) to right."""

    def __init__(self, plus, minus):
        if plus.n != minus.n:
            raise ValidationError("members must share the dimension")
        self.plus = plus
        self.minus = minus
        self.n = plus.n

    @property
    def cross_curv(self):
        return 0.5 * (self.plus.curv + self.minus.curv)

    def __repr__(self):
        return f"WeylPair(n={self.n})"


class PairMatrices:
    """Closed-form blocks of a convolved kernel at fixed (t, s)."""

    __slots__ = ("T_plus", "T_minus", "D", "Z", "H", "A_plus", "A_minus",
                 "B", "Omega")

    def __init__(self, T_plus, T_minus, D, Z, H, A_plus, A_minus, B, Omega):
        self.T_plus = T_plus
        self.T_minus = T_minus
        self.D = D
        self.Z = Z
        self.H = H
        self.A_plus = A_plus
        self.A_minus = A_minus
        self.B = B
        self.Omega = Omega

    def __repr__(self):
        return f"PairMatrices(n={self.D.shape[0]}, Omega={self.Omega:.6g})"


def d_matrix(model, t):
    """Gaussian width matrix D(t): b coth(t b) per block, g/t at R=0."""
    if t <= 0:
        raise ValidationError("t must be positive")
    E = even_matrix_function(t * model._pencil, x_coth_x)
    D = model._ghalf @ E @ model._ghalf / t
    return 0.5 * (D + D.T)


def omega_single(model, t):
    """Normalizer Omega(t) = det(g^{-1} sinh(t P)/P)^{-1/2}, P the pencil."""
    if t <= 0:
        raise ValidationError("t must be positive")
    ln = 0.5 * np.linalg.slogdet(model.metric)[1]
    ln -= 0.5 * model._null_dim * math.log(t)
    for b in model._rates:
        ln -= math.log(t) + float(log_sinh_ratio(np.array([t * b]))[0])
    return math.exp(ln)


def _real_if_tiny(M, scale):
    if np.max(np.abs(M.imag)) <= 1e-12 * scale:
        return np.ascontiguousarray(M.real)
    return M


def pair_matrices(pair, t, s):
    """All closed-form blocks, with the positivity certificates."""
    if t <= 0 or s <= 0:
        raise ValidationError("t and s must be positive")
    Dp = d_matrix(pair.plus, t)
    Dm = d_matrix(pair.minus, s)
    D = Dp + Dm
    scale = float(np.max(np.abs(D)))
    if np.min(np.linalg.eigvalsh(D)) < 1e-14 * scale:
        raise SingularD("width matrix sum is numerically singular")
    Di = np.linalg.inv(D)
    Rp, Rm = pair.plus.curv, pair.minus.curv
    Tp = Dp + 1j * Rp
    Tm = Dm + 1j * Rm
    A_plus = Dp - Tp @ Di @ Tp.T
    A_minus = Dm - Tm.T @ Di @ Tm
    B = Tp @ Di @ Tm
    Z = Dp - Dm - 2j * Rm
    H = 0.25 * (D - Z.T @ Di @ Z)
    A_plus = 0.5 * (A_plus + A_plus.T)
    A_minus = 0.5 * (A_minus + A_minus.T)
    H = 0.5 * (H + H.T)
    omega = (omega_single(pair.plus, t) * omega_single(pair.minus, s)
             / math.sqrt(np.linalg.det(D)))
    h_min = float(np.min(np.linalg.eigvalsh(H.real)))
    if h_min < -1e-10 * max(scale, 1.0):
        raise PositivityCertificateFailed(
            f"Re H has eigenvalue {h_min:.3e}")
    n = D.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = A_plus.real
    block[n:, n:] = A_minus.real
    block[:n, n:] = -B.real
    block[n:, :n] = -B.real.T
    b_min = float(np.min(np.linalg.eigvalsh(block)))
    if b_min < -1e-10 * max(scale, 1.0):
        raise PositivityCertificateFailed(
            f"kernel block form has eigenvalue {b_min:.3e}")
    tidy = lambda M: _real_if_tiny(M, max(scale, 1.0))
    return PairMatrices(tidy(Tp), tidy(Tm), D, tidy(Z), tidy(H),
                        tidy(A_plus), tidy(A_minus), tidy(B), omega)


def convolution_kernel(pair, t, s, x, x_prime):
    """Closed value of int U_+(t; x, y) U_-(s; y, x') dy.

    Real when the phase vanishes, complex otherwise.
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    if x.shape != (pair.n,) or xp.shape != (pair.n,):
        raise ValidationError("points must be vectors of length n")
    pm = pair_matrices(pair, t, s)
    expo = (-0.25 * x @ pm.A_plus @ x - 0.25 * xp @ pm.A_minus @ xp
            + 0.5 * x @ pm.B @ xp)
    val = (4.0 * math.pi) ** (-pair.n / 2.0) * pm.Omega * np.exp(expo)
    val = complex(val)
    if abs(val.imag) <= 1e-13 * abs(val):
        return float(val.real)
    return val


def trace_density(pair, t, s, mode="auto"):
    """Integrated (or per-volume) diagonal of the convolved kernel.

    full: int dx of the diagonal, defined when the diagonal Gaussian is
    integrable, which fails exactly for translation-invariant pairs.
    per_volume: the diagonal value at x = 0.  auto picks full when the
    diagonal form is positive definite, per_volume otherwise.
    """
    if mode not in ("auto", "full", "per_volume"):
        raise ValidationError("mode must be auto, full or per_volume")
    pm = pair_matrices(pair, t, s)
    n = pair.n
    per_volume = (4.0 * math.pi) ** (-n / 2.0) * pm.Omega
    if mode == "per_volume":
        return per_volume
    M = np.asarray(pm.A_plus + pm.A_minus - pm.B - pm.B.T, dtype=complex)
    scale = max(float(np.max(np.abs(pm.D))), 1.0)
    integrable = float(np.min(np.linalg.eigvalsh(M.real))) > 1e-12 * scale
    if not integrable:
        if mode == "full":
            raise NonIntegrableDiagonal(
                "diagonal Gaussian is flat along some direction")
        return per_volume
    sign, logabs = np.linalg.slogdet(M)
    val = pm.Omega * complex(sign) ** -0.5 * math.exp(-0.5 * logabs)
    return float(np.real(val))
