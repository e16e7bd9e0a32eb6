"""Mellin-side objects: the entire interpolation A_q of the heat
coefficients, zeta values, and the regularized determinant."""

import math

from spectralab import Circle, a_q, log_det, mellin_barnes_series, zeta

model = Circle(1.0, 0.0, 1.0)    # unit circle with m^2 = 1

print("== A_q against the closed form 2 pi m^(2q) ==")
for q in (0.0, 0.5, 1.0, 1.5, 2.0):
    res = a_q(model, q)
    print(f"q = {q:<4g} A_q = {res.value:.10f}  error <= {res.error:.1e}"
          f"  split at {res.split_point:g}")
print(f"closed form 2 pi = {2 * math.pi:.10f}"
      "  (half-integers carry dual-sum corrections)")

print()
print("== zeta values on the massless circle ==")
plain = Circle(1.0)
print(f"zeta(1), zero mode excluded  = {zeta(plain, 1.0, exclude_zero=True):.12f}")
print(f"pi^2/3                       = {math.pi ** 2 / 3.0:.12f}")
print(f"zeta(2), zero mode excluded  = {zeta(plain, 2.0, exclude_zero=True):.12f}")
print(f"pi^4/45                      = {math.pi ** 4 / 45.0:.12f}")

print()
print("== determinant ==")
ld = log_det(plain, exclude_zero=True)
print(f"log Det = {ld:.10f}   Det = {math.exp(ld):.8f}"
      f"   (4 pi^2 = {4 * math.pi ** 2:.8f})")

print()
print("== small-argument series of the square-root trace ==")
series = mellin_barnes_series(model, n_terms=3)
for term in series.terms:
    print(f"  power {term.power:+.1f}  coefficient {term.coefficient:+.8f}"
          f"  [{term.provenance}]")
