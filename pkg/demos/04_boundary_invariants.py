"""Predicted expansion coefficients from geometry data, the oblique
boundary invariant by three routes, and non-scalar symbol densities."""

import math

import numpy as np

from spectralab import (BoundaryData, ConstantSymbol, GeometryData,
                        ObliqueSymbol, a0_density, dirichlet_a1_density,
                        ggs_gamma, predicted_trace_coeffs)

print("== interval with two Dirichlet ends ==")
geom = GeometryData(1, 1, 1.0, boundary_components=(
    BoundaryData(1.0), BoundaryData(1.0)))
series = predicted_trace_coeffs(geom)
for k, bare in sorted(series.raw.items()):
    packaged = (4.0 * math.pi) ** -0.5 * bare
    print(f"  k = {k}  bare = {bare:+.8f}  coefficient of "
          f"t^{(k - 1) / 2:+.1f} = {packaged:+.8f}")

print()
print("== oblique boundary term, scalar datum ==")
sym = ObliqueSymbol(2, np.array([[[0.6j]]]))
for method in ("quadrature", "commuting"):
    print(f"  {method:>10}: gamma = {ggs_gamma(sym, method):.12f}")
print(f"  closed form (1 - 0.36)^(-1/2) = {0.8 ** -1.0:.12f}")

print()
print("== anticommuting datum takes the Clifford route ==")
kappa = 0.2
paulis = [np.array([[0, 1], [1, 0]], complex),
          np.array([[0, -1j], [1j, 0]], complex)]
gam = np.array([math.sqrt(kappa) * 1j * p for p in paulis])
sym3 = ObliqueSymbol(3, gam, Pi=np.eye(2, dtype=complex))
print(f"  quadrature: {ggs_gamma(sym3, 'quadrature'):.10f}")
print(f"  clifford  : {ggs_gamma(sym3, 'clifford'):.10f}")
print(f"  (1 - kappa)^(-1) tr Pi = {2.0 / (1 - kappa):.10f}")

print()
print("== block symbol densities ==")
a = np.zeros((2, 2, 2, 2), dtype=complex)
for mu in range(2):
    a[mu, mu] = np.diag([1.0, 2.0])
block = ConstantSymbol(2, 2, a)
print(f"  A0 density = {a0_density(block):.10f}   (1 + 1/2 = 1.5)")

scalar = np.zeros((2, 2, 1, 1), dtype=complex)
scalar[0, 0] = scalar[1, 1] = 1.0
sym = ConstantSymbol(2, 1, scalar)
print(f"  Dirichlet boundary density = {dirichlet_a1_density(sym):.10f}"
      f"   (-sqrt(pi)/2 = {-math.sqrt(math.pi) / 2:.10f})")
