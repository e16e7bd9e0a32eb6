"""Model operators and their exact spectra.

Each model is a small dataclass describing a constant-coefficient elliptic
operator whose eigenvalues are known in closed form or as roots of a scalar
secular equation.  ``eigenvalues`` returns a :class:`Spectrum` that is
complete below the requested cutoff, with multiplicities grouped.

Robin conditions use the inward-normal convention (d/dn + s)phi = 0 at both
endpoints, i.e. phi'(0) = -s_l phi(0) and phi'(L) = +s_r phi(L).  Under this
convention positive s lowers eigenvalues and sufficiently positive s binds
negative modes; the opposite convention flips the sign of s.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (AboveCutoff, CutoffTooSmall, UnsupportedModel,
                     ValidationError)

__all__ = [
    "BC", "Circle", "FlatTorus", "Interval", "Sphere2", "Landau",
    "DiracCircle", "Spectrum", "eigenvalues", "dirac_eigenvalues",
    "counting_function",
]


@dataclass(frozen=True)
class BC:
    """Boundary condition at one interval endpoint.

    kind is 'dirichlet', 'neumann' or 'robin'; s is the Robin coefficient
    (real, 1/length).  robin with s = 0 coincides with neumann.
    """

    kind: str
    s: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "robin"):
            raise ValidationError(f"unknown boundary condition {self.kind!r}")
        if self.kind != "robin" and self.s != 0.0:
            raise ValidationError("s is only meaningful for robin conditions")


def _norm_twist(theta):
    # normalizing at construction makes theta -> theta + 1 exactly gauge
    # periodic in floating point as well
    t = float(theta) % 1.0
    return 0.0 if t == 1.0 else t


@dataclass(frozen=True)
class Circle:
    """Laplacian plus mass^2 on a circle of the given radius.

    Modes are ((k + twist)/radius)^2 + mass2 for integer k; physics is
    periodic in the gauge twist with period 1.
    """

    radius: float = 1.0
    twist: float = 0.0
    mass2: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError("radius must be positive")
        object.__setattr__(self, "twist", _norm_twist(self.twist))

    @property
    def dim(self):
        return 1

    @property
    def volume(self):
        return 2.0 * np.pi * self.radius


class FlatTorus:
    """Laplacian plus mass^2 on R^n / (2 pi Z)^n.

    inverse_metric is the positive matrix G acting on integer modes:
    lambda_k = <k + twist, G (k + twist)> + mass2.
    """

    def __init__(self, inverse_metric, twist=None, mass2=0.0):
        G = np.asarray(inverse_metric, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValidationError("inverse_metric must be a square matrix")
        if not np.allclose(G, G.T, atol=1e-13):
            raise ValidationError("inverse_metric must be symmetric")
        evals = np.linalg.eigvalsh(G)
        if evals[0] <= 0:
            raise ValidationError("inverse_metric must be positive definite")
        self.inverse_metric = G
        self.n = G.shape[0]
        if twist is None:
            twist = np.zeros(self.n)
        tw = np.asarray(twist, dtype=float)
        if tw.shape != (self.n,):
            raise ValidationError("twist length must match dimension")
        self.twist = np.array([_norm_twist(x) for x in tw])
        self.mass2 = float(mass2)
        self._gmin = float(evals[0])

    @property
    def dim(self):
        return self.n

    @property
    def volume(self):
        return (2.0 * np.pi) ** self.n / np.sqrt(np.linalg.det(self.inverse_metric))

    def __repr__(self):
        return (f"FlatTorus({self.inverse_metric.tolist()}, "
                f"twist={self.twist.tolist()}, mass2={self.mass2})")


@dataclass(frozen=True)
class Interval:
    """Laplacian on [0, length] with independent endpoint conditions."""

    length: float
    bc_left: BC = field(default_factory=lambda: BC("dirichlet"))
    bc_right: BC = field(default_factory=lambda: BC("dirichlet"))

    def __post_init__(self):
        if self.length <= 0:
            raise ValidationError("length must be positive")

    @property
    def dim(self):
        return 1

    @property
    def volume(self):
        return self.length


@dataclass(frozen=True)
class Sphere2:
    """Laplace-Beltrami operator on the round 2-sphere."""

    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError("radius must be positive")

    @property
    def dim(self):
        return 2

    @property
    def volume(self):
        return 4.0 * np.pi * self.radius ** 2


@dataclass(frozen=True)
class Landau:
    """Magnetic Laplacian in the plane with uniform field B > 0.

    The plane has infinite area, so levels B(2k+1) + mass2 are recorded
    with density B / (2 pi) per unit area; per_unit_area documents that
    convention and must stay True.
    """

    field: float
    mass2: float = 0.0
    per_unit_area: bool = True

    def __post_init__(self):
        if self.field <= 0:
            raise ValidationError("field must be positive")
        if not self.per_unit_area:
            raise ValidationError(
                "plane Landau spectra are only represented per unit area")

    @property
    def dim(self):
        return 2


@dataclass(frozen=True)
class DiracCircle:
    """First-order operator -i e d/dx on the circle, frame factor e > 0.

    Signed eigenvalues e (k + twist); the square has modes e^2 (k + twist)^2.
    """

    frame: float = 1.0
    twist: float = 0.0

    def __post_init__(self):
        if self.frame <= 0:
            raise ValidationError("frame must be positive")
        object.__setattr__(self, "twist", _norm_twist(self.twist))

    @property
    def dim(self):
        return 1

    @property
    def volume(self):
        return 2.0 * np.pi


class Spectrum:
    """Eigenvalue list with multiplicities, complete below a cutoff.

    Landau models carry density multiplicities per unit area
    (density=True).  Signed spectra (DiracCircle) keep negative entries and
    are complete in |lambda| below the cutoff.
    """

    def __init__(self, lambdas, mults, cutoff, dim,
                 complete_below_cutoff=True, density=False, signed=False):
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.mults = np.asarray(mults, dtype=float)
        if self.lambdas.shape != self.mults.shape:
            raise ValidationError("lambdas and mults must have equal length")
        order = np.argsort(self.lambdas, kind="stable")
        self.lambdas = self.lambdas[order]
        self.mults = self.mults[order]
        self.cutoff = float(cutoff)
        self.dim = int(dim)
        self.complete_below_cutoff = bool(complete_below_cutoff)
        self.density = bool(density)
        self.signed = bool(signed)

    def __len__(self):
        return len(self.lambdas)

    @property
    def lambda_min(self):
        if len(self.lambdas) == 0:
            raise ValidationError("empty spectrum")
        return float(self.lambdas[0])

    @property
    def total_mult(self):
        return float(self.mults.sum())

    def zero_mult(self, tol=None):
        if tol is None:
            tol = 1e-10 * max(1.0, abs(self.cutoff))
        mask = np.abs(self.lambdas) <= tol
        return float(self.mults[mask].sum())

    def positive_part(self, tol=None):
        if tol is None:
            tol = 1e-10 * max(1.0, abs(self.cutoff))
        mask = self.lambdas > tol
        return Spectrum(self.lambdas[mask], self.mults[mask], self.cutoff,
                        self.dim, self.complete_below_cutoff, self.density,
                        self.signed)

    def to_json(self):
        return json.dumps({
            "entries": [[float(l), float(m)]
                        for l, m in zip(self.lambdas, self.mults)],
            "cutoff": self.cutoff,
            "dim": self.dim,
            "complete_below_cutoff": self.complete_below_cutoff,
            "density": self.density,
            "signed": self.signed,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        entries = d["entries"]
        lam = [e[0] for e in entries]
        mult = [e[1] for e in entries]
        return cls(lam, mult, d["cutoff"], d.get("dim", 1),
                   d.get("complete_below_cutoff", True),
                   d.get("density", False), d.get("signed", False))


def _group(vals, cutoff):
    """Sort and merge eigenvalues equal to within 1e-12 of the scale."""
    vals = np.sort(np.asarray(vals, dtype=float))
    if len(vals) == 0:
        return np.array([]), np.array([])
    scale = max(1.0, abs(cutoff))
    out_l, out_m = [vals[0]], [1.0]
    for v in vals[1:]:
        if abs(v - out_l[-1]) <= 1e-12 * scale:
            out_m[-1] += 1.0
        else:
            out_l.append(v)
            out_m.append(1.0)
    return np.array(out_l), np.array(out_m)


def _circle_eigenvalues(model, cutoff):
    r2 = model.radius ** 2
    lam_max = cutoff - model.mass2
    if lam_max < 0:
        return np.array([]), np.array([])
    kmax = int(np.floor(np.sqrt(lam_max * r2))) + 2
    k = np.arange(-kmax, kmax + 1)
    lam = ((k + model.twist) / model.radius) ** 2 + model.mass2
    lam = lam[lam <= cutoff * (1 + 1e-14)]
    return _group(lam, cutoff)


def _torus_eigenvalues(model, cutoff):
    lam_max = cutoff - model.mass2
    if lam_max < 0:
        return np.array([]), np.array([])
    K = int(np.ceil(np.sqrt(lam_max / model._gmin))) + 2
    axes = [np.arange(-K, K + 1)] * model.n
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1) + model.twist
    lam = np.einsum("ki,ij,kj->k", pts, model.inverse_metric, pts) + model.mass2
    lam = lam[lam <= cutoff * (1 + 1e-14)]
    return _group(lam, cutoff)


def _end_phase(bc, k):
    if bc.kind == "dirichlet":
        return np.full_like(k, np.pi / 2)
    if bc.kind == "neumann":
        return np.zeros_like(k)
    return np.arctan2(bc.s, k)


def _interval_positive_roots(model, kcut):
    """Positive wavenumbers k (lambda = k^2 <= kcut^2).

    Solutions of k L + delta_left(k) + delta_right(k) = m pi, where delta
    is the endpoint phase shift.  The phase is not monotone for weak Robin
    coefficients, so every branch is grid-scanned before bracketing.
    """
    L = model.length
    bl, br = model.bc_left, model.bc_right
    kinds = (bl.kind, br.kind)

    if "robin" not in kinds:
        if kinds in (("dirichlet", "dirichlet"), ("neumann", "neumann")):
            m = np.arange(1, int(np.floor(kcut * L / np.pi)) + 1)
            return (m * np.pi / L).tolist()
        m = np.arange(0, int(np.floor(kcut * L / np.pi - 0.5)) + 1)
        return (((m + 0.5) * np.pi) / L).tolist()

    def phase(k):
        k = np.asarray(k, dtype=float)
        return k * L + _end_phase(bl, k) + _end_phase(br, k)

    k_hi = kcut + 2 * np.pi / L
    npts = max(4000, int(16 * k_hi * L / np.pi))
    grid = np.linspace(1e-9, k_hi, npts)
    ph = phase(grid)
    roots = []
    m_lo = max(0, int(np.floor(ph.min() / np.pi)))
    m_hi = int(np.ceil(ph.max() / np.pi)) + 1
    for m in range(m_lo, m_hi + 1):
        dif = ph - m * np.pi
        hits = np.nonzero(dif[:-1] * dif[1:] < 0)[0]
        for i in hits:
            k = brentq(lambda kk, mm=m: float(phase(kk)) - mm * np.pi,
                       grid[i], grid[i + 1], xtol=1e-15, rtol=8.9e-16)
            if k > 1e-8:
                roots.append(k)
        for i in np.nonzero(dif == 0.0)[0]:
            if grid[i] > 1e-8:
                roots.append(float(grid[i]))
    return sorted(k for k in roots if k * k <= kcut * kcut * (1 + 1e-13))


def _interval_nonpositive(model):
    """Zero and negative eigenvalues of an interval model.

    Only Robin ends (inward-normal convention) can push modes to or below
    zero; lambda = -kappa^2 roots come from the hyperbolic secular equation.
    """
    L = model.length
    bl, br = model.bc_left, model.bc_right
    kinds = (bl.kind, br.kind)
    out = []

    if kinds == ("neumann", "neumann"):
        return [0.0]
    if "robin" not in kinds:
        return out

    sl = bl.s if bl.kind == "robin" else None
    sr = br.s if br.kind == "robin" else None

    def h(kappa):
        c, s = np.cosh(kappa * L), np.sinh(kappa * L)
        if sl is not None and sr is not None:
            return (sl + sr) * kappa * c - (kappa ** 2 + sl * sr) * s
        sv = sl if sl is not None else sr
        other = br.kind if sl is not None else bl.kind
        if other == "dirichlet":
            return sv * s - kappa * c
        return sv * c - kappa * s

    sabs = [abs(x) for x in (sl, sr) if x is not None]
    if sl is not None and sr is not None:
        zero = abs((sl + sr) - sl * sr * L) <= 1e-14 * max(1.0, sum(sabs))
    else:
        sv = sl if sl is not None else sr
        other = br.kind if sl is not None else bl.kind
        if other == "dirichlet":
            zero = abs(sv * L - 1.0) <= 1e-14 * max(1.0, abs(sv) * L)
        else:
            zero = sv == 0.0
    if zero:
        out.append(0.0)

    cross = np.sqrt(sl * sr) if (sl is not None and sr is not None
                                 and sl * sr > 0) else 0.0
    kappa_hi = sum(sabs) + cross + 2.0 / L
    grid = np.linspace(1e-9, kappa_hi, 600)
    vals = np.array([h(k) for k in grid])
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            continue
        if vals[i] * vals[i + 1] < 0:
            kappa = brentq(h, grid[i], grid[i + 1], xtol=1e-15, rtol=8.9e-16)
            if kappa > 1e-8:
                out.append(-kappa ** 2)
    return out


def _interval_eigenvalues(model, cutoff):
    kcut = np.sqrt(cutoff)
    lam = [k * k for k in _interval_positive_roots(model, kcut)]
    lam.extend(_interval_nonpositive(model))
    return _group(lam, cutoff)


def eigenvalues(model, cutoff):
    """Complete spectrum of the model below the cutoff."""
    if cutoff <= 0:
        raise CutoffTooSmall("cutoff must be positive")
    if isinstance(model, Circle):
        lam, mult = _circle_eigenvalues(model, cutoff)
        spec = Spectrum(lam, mult, cutoff, 1)
    elif isinstance(model, FlatTorus):
        lam, mult = _torus_eigenvalues(model, cutoff)
        spec = Spectrum(lam, mult, cutoff, model.n)
    elif isinstance(model, Interval):
        lam, mult = _interval_eigenvalues(model, cutoff)
        spec = Spectrum(lam, mult, cutoff, 1)
    elif isinstance(model, Sphere2):
        lmax = int(np.floor((-1 + np.sqrt(1 + 4 * cutoff * model.radius ** 2)) / 2)) + 1
        ls = np.arange(0, lmax + 1)
        lam = ls * (ls + 1) / model.radius ** 2
        mult = 2.0 * ls + 1.0
        keep = lam <= cutoff * (1 + 1e-14)
        spec = Spectrum(lam[keep], mult[keep], cutoff, 2)
    elif isinstance(model, Landau):
        B = model.field
        kmax = int(np.floor((cutoff - model.mass2) / (2 * B)))
        if kmax < 0:
            spec = Spectrum([], [], cutoff, 2, density=True)
        else:
            ks = np.arange(0, kmax + 1)
            lam = B * (2 * ks + 1) + model.mass2
            keep = lam <= cutoff * (1 + 1e-14)
            mult = np.full(int(keep.sum()), B / (2 * np.pi))
            spec = Spectrum(lam[keep], mult, cutoff, 2, density=True)
    elif isinstance(model, DiracCircle):
        signed = dirac_eigenvalues(model, np.sqrt(cutoff))
        lam, mult = _group(np.repeat(signed.lambdas ** 2,
                                     signed.mults.astype(int)), cutoff)
        spec = Spectrum(lam, mult, cutoff, 1)
    else:
        raise UnsupportedModel(f"no eigenvalue rule for {type(model).__name__}")
    if len(spec) == 0:
        raise CutoffTooSmall(f"no eigenvalue at or below cutoff {cutoff}")
    return spec


def dirac_eigenvalues(model, cutoff):
    """Signed first-order spectrum of a DiracCircle, |lambda| <= cutoff."""
    if not isinstance(model, DiracCircle):
        raise UnsupportedModel("signed spectra exist only for DiracCircle")
    if cutoff <= 0:
        raise CutoffTooSmall("cutoff must be positive")
    kmax = int(np.ceil(cutoff / model.frame)) + 1
    k = np.arange(-kmax, kmax + 1)
    lam = model.frame * (k + model.twist)
    lam = lam[np.abs(lam) <= cutoff * (1 + 1e-14)]
    if len(lam) == 0:
        raise CutoffTooSmall(f"no mode with |lambda| <= {cutoff}")
    lam, mult = _group(lam, cutoff)
    return Spectrum(lam, mult, cutoff, 1, signed=True)


def counting_function(spec, lam):
    """Number of eigenvalues (with multiplicity) at or below lam."""
    if lam > spec.cutoff * (1 + 1e-12):
        raise AboveCutoff(
            f"counting function queried at {lam} above cutoff {spec.cutoff}")
    idx = np.searchsorted(spec.lambdas, lam * (1 + 1e-14), side="right")
    return float(spec.mults[:idx].sum())
