"""Constant-field kernels checked against the level sum, and the
gradient-trace determinant with its leading small-time coefficient."""

import math

import numpy as np

from spectralab import (Circle, FlatTorus, MagneticModel, b2_leading,
                        correlators, expansion_fit, h_tensor, heat_det,
                        heat_det_leading, landau_check, u0_kernel)


def field_2d(B):
    return MagneticModel(np.array([[0.0, B], [-B, 0.0]]))


print("== closed diagonal vs Landau level sum ==")
for B, t in ((1.0, 1.0), (2.0, 0.3), (0.4, 2.5)):
    diag, levels, diff = landau_check(B, t)
    print(f"  B = {B:<4} t = {t:<4} diagonal = {diag:.12f}  "
          f"level sum gap = {diff:.2e}")

print()
print("== gauge-invariant envelope ==")
m = field_2d(1.0)
on = u0_kernel(m, 1.0, np.zeros(2), np.zeros(2))[0, 0]
print(f"  diagonal at B = 1, t = 1: {on:.15f}")
print(f"  1/(4 pi sinh 1)         : {1 / (4 * math.pi * math.sinh(1)):.15f}")
off = u0_kernel(m, 1.0, np.array([2.0, 0.0]), np.zeros(2))[0, 0]
print(f"  two units off diagonal  : {off:.6e} (field-sharpened decay)")

print()
print("== odd-order data ==")
H = h_tensor(m, 1e-6)
print(f"  H(1e-6) / 1e-6 =\n{np.array2string(H / 1e-6, precision=6)}")
print("  (slope F/3 at small times)")
print(f"  b2 at t = 0 with R = 0.5: {b2_leading(m, 0.5, 0.0)[0, 0]:.12f}"
      f"  (R/6 = {0.5 / 6:.12f})")

print()
print("== determinant of the gradient-trace matrix ==")
print(f"  circle correlators: {correlators(Circle(1.0), 5)!r}")
val = heat_det(Circle(1.0), 1.0, 9)
print(f"  K(1) on the circle = {val:.15f}")
samples = []
for t in np.geomspace(1e-4, 1e-3, 12):
    cutoff = int(math.sqrt(48.0 / (2.0 * t))) + 3
    samples.append((t, heat_det(Circle(1.0), t, cutoff) * t ** 1.5))
series = expansion_fit(samples, [(0.0, 0), (0.5, 0), (1.0, 0)])
lead = heat_det_leading(1, 1, 2.0 * math.pi)
print(f"  fitted t^-3/2 coefficient = {series.coefficient(0.0):.8f}")
print(f"  predicted                 = {lead:.8f}")
print(f"  fitted half-power residue = {series.coefficient(0.5):.2e}")
torus = heat_det(FlatTorus(np.eye(2)), 0.1, 20)
want = heat_det_leading(2, 1, (2.0 * math.pi) ** 2) / 0.1 ** 5
print(f"  square torus K(0.1) = {torus:.8f}  "
      f"leading term alone = {want:.8f}")
