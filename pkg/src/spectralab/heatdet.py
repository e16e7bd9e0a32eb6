"""Heat determinant from eigenfunction gradient correlators.

The object is K(t) = (1/n!) sum |Psi|^2 exp(-t(lam_k1 + ... + lam_ln)),
summed over n-tuples of Fourier modes, where Psi integrates the wedge
product of the n gradient 1-forms d phi_l against the n conjugated
eigenfunctions.  On flat models the correlators are explicit and
coordinate free:

    n=1:  Psi^k_l = i (l + theta) sqrt(G) delta_{kl}
    n=2:  Psi^{k1 k2}_{l1 l2}
          = -((l1+theta) x (l2+theta)) det(G) delta_{k1+k2, l1+l2}/(2 pi)^2

with G the inverse metric on the 2 pi lattice; the L^2 normalization of
the modes supplies the metric factors.  The zero mode drops out through
its vanishing gradient weight, with no special casing.

heat_det evaluates n=1 by the closed mode sum sum_k lam~_k e^{-2 t
lam_k} (lam~ the massless eigenvalue) and n=2 by grouping the quadruple
sum over the conserved total momentum, which is quadratic in the mode
count and therefore gated behind an explicit budget.
"""

import math

import numpy as np

from .errors import (BudgetExceeded, TailTooLarge, UnsupportedModel,
                     ValidationError)
from .models import Circle, FlatTorus

__all__ = ["CorrelatorSet", "correlators", "heat_det", "heat_det_leading"]


class CorrelatorSet:
    """Nonzero gradient correlators of flat eigenmodes below a cutoff.

    psi maps (k_tuple, l_tuple) to a complex value; each side lists n
    mode labels, integers for n=1 and integer 2-tuples for n=2, all with
    entries bounded by mode_cutoff.  Only nonzero values are stored, so
    missing keys read as exact zeros (orthogonality, broken momentum
    conservation, vanishing cross products).
    """

    __slots__ = ("mode_cutoff", "psi")

    def __init__(self, mode_cutoff, psi):
        self.mode_cutoff = int(mode_cutoff)
        self.psi = psi

    def __repr__(self):
        return (f"CorrelatorSet(mode_cutoff={self.mode_cutoff}, "
                f"entries={len(self.psi)})")


def _flat_data(model):
    if isinstance(model, Circle):
        return (np.array([[model.radius ** -2.0]]),
                np.array([model.twist]), model.mass2)
    if isinstance(model, FlatTorus):
        return model.inverse_metric, model.twist, model.mass2
    raise UnsupportedModel(
        "correlators need a flat model with a Fourier eigenbasis")


def correlators(model, cutoff, budget=2_000_000):
    """Explicit correlator map for a flat model, labels in [-c, c]."""
    cutoff = int(cutoff)
    if cutoff < 0:
        raise ValidationError("cutoff must be nonnegative")
    G, tw, _ = _flat_data(model)
    n = G.shape[0]
    if n == 1:
        root = math.sqrt(G[0, 0])
        psi = {}
        for k in range(-cutoff, cutoff + 1):
            val = (k + tw[0]) * root
            if val != 0.0:
                psi[((k,), (k,))] = 1j * val
        return CorrelatorSet(cutoff, psi)
    if n != 2:
        raise UnsupportedModel("correlators cover one and two dimensions")
    side = np.arange(-cutoff, cutoff + 1)
    k1g, k2g = np.meshgrid(side, side, indexing="ij")
    labels = [(int(a), int(b)) for a, b in
              zip(k1g.ravel(), k2g.ravel())]
    if len(labels) ** 2 > budget:
        raise BudgetExceeded(
            f"{len(labels) ** 2} mode pairs exceed the budget {budget}")
    by_total = {}
    for a in labels:
        for b in labels:
            key = (a[0] + b[0], a[1] + b[1])
            by_total.setdefault(key, []).append((a, b))
    if sum(len(v) ** 2 for v in by_total.values()) > budget:
        raise BudgetExceeded("correlator support exceeds the budget")
    scale = float(np.linalg.det(G)) / (2.0 * math.pi) ** 2
    psi = {}
    for pairs in by_total.values():
        for la, lb in pairs:
            cross = ((la[0] + tw[0]) * (lb[1] + tw[1])
                     - (la[1] + tw[1]) * (lb[0] + tw[0]))
            if cross == 0.0:
                continue
            val = complex(-cross * scale)
            for ka, kb in pairs:
                psi[((ka, kb), (la, lb))] = val
    return CorrelatorSet(cutoff, psi)


def _heat_det_1d(G, tw, m2, t, cutoff):
    g = G[0, 0]
    k = np.arange(-cutoff, cutoff + 1, dtype=float) + tw[0]
    lam0 = g * k * k
    value = float(np.sum(lam0 * np.exp(-2.0 * t * (lam0 + m2))))
    # past the peak the terms decay geometrically with ratio q
    edge = g * (cutoff + 0.5) ** 2
    if 2.0 * t * edge < 1.0:
        raise TailTooLarge("cutoff sits before the summand peak")
    q = ((cutoff + 2.0) / (cutoff + 1.0)) ** 2 \
        * math.exp(-2.0 * t * g * (2.0 * cutoff + 3.0))
    if q >= 0.999:
        raise TailTooLarge("tail terms barely decay at this cutoff")
    bound = 2.0 * g * (cutoff + 1.5) ** 2 \
        * math.exp(-2.0 * t * (edge + m2)) / (1.0 - q)
    if bound > 1e-10 * max(value, 1e-300):
        raise TailTooLarge(
            f"truncation bound {bound:.3e} too large for value {value:.3e}")
    return value


def _heat_det_2d(G, tw, m2, t, cutoff, budget):
    gmin = float(np.linalg.eigvalsh(G)[0])
    if t * gmin * (cutoff + 0.5) ** 2 < 40.0:
        raise TailTooLarge("cutoff too small for this t in two dimensions")
    side = np.arange(-cutoff, cutoff + 1, dtype=float)
    k1g, k2g = np.meshgrid(side, side, indexing="ij")
    kv = np.stack([k1g.ravel(), k2g.ravel()], axis=-1)
    if kv.shape[0] ** 2 > budget:
        raise BudgetExceeded(
            f"{kv.shape[0] ** 2} mode pairs exceed the budget {budget}")
    shifted = kv + tw
    lam = np.einsum("ki,ij,kj->k", shifted, G, shifted) + m2
    w = np.exp(-t * lam)
    # group the quadruple sum by the conserved total momentum
    width = 4 * cutoff + 1
    s_k = np.zeros((width, width))
    s_l = np.zeros((width, width))
    idx = (kv + 2 * cutoff).astype(int)
    for i in range(kv.shape[0]):
        rows = idx[i, 0] + idx[:, 0] - 2 * cutoff
        cols = idx[i, 1] + idx[:, 1] - 2 * cutoff
        ww = w[i] * w
        cross = shifted[i, 0] * shifted[:, 1] - shifted[i, 1] * shifted[:, 0]
        np.add.at(s_k, (rows, cols), ww)
        np.add.at(s_l, (rows, cols), cross * cross * ww)
    det = float(np.linalg.det(G))
    return 0.5 * det ** 2 / (2.0 * math.pi) ** 4 * float(np.sum(s_k * s_l))


def heat_det(model, t, cutoff, budget=4_000_000):
    """Truncated spectral sum for the heat determinant K(t).

    cutoff bounds the mode labels per axis.  The one-dimensional sum
    carries a certified geometric tail bound; the two-dimensional sum
    requires the edge weight to be negligible and its quadratic pair
    count to fit the budget.
    """
    if t <= 0:
        raise ValidationError("t must be positive")
    cutoff = int(cutoff)
    if cutoff < 1:
        raise ValidationError("cutoff must be at least 1")
    G, tw, m2 = _flat_data(model)
    if G.shape[0] == 1:
        return _heat_det_1d(G, tw, m2, t, cutoff)
    if G.shape[0] == 2:
        return _heat_det_2d(G, tw, m2, t, cutoff, budget)
    raise UnsupportedModel("heat_det covers one and two dimensions")


def heat_det_leading(n, N, vol_m):
    """Coefficient of t^{-n(n+1/2)} in the small-t expansion of K(t)."""
    n = int(n)
    N = int(N)
    if n < 1 or N < 1:
        raise ValidationError("n and N must be positive integers")
    if vol_m <= 0:
        raise ValidationError("volume must be positive")
    return (0.5 * N ** n * (4.0 * math.pi) ** (-n * n)
            * (math.pi / (2.0 * n)) ** (n / 2.0) * vol_m)
