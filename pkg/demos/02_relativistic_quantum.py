"""Square-root and occupation-number traces: the circle identity
Theta_r(beta) = coth(beta/2), then Bose/Fermi sums evaluated two ways."""

import math

from spectralab import (Circle, eigenvalues, quantum_trace,
                        relativistic_trace)

spec = eigenvalues(Circle(1.0), 12000.0)
print("== relativistic trace, circle ==")
for beta in (0.5, 1.0, 2.0):
    want = 1.0 / math.tanh(beta / 2.0)
    direct = relativistic_trace(spec, beta, method="direct")
    subord = relativistic_trace(spec, beta, method="subordination")
    print(f"beta = {beta:<4g} direct = {direct:.12f}"
          f"  subordination = {subord:.12f}  coth(beta/2) = {want:.12f}")

print()
print("== quantum statistics, massive circle ==")
spec = eigenvalues(Circle(1.0, 0.0, 1.0), 120000.0)
for statistics in ("bose", "fermi"):
    for beta in (0.1, 1.0):
        direct = quantum_trace(spec, beta, 0.5, statistics,
                               method="direct")
        kernel = quantum_trace(spec, beta, 0.5, statistics,
                               method="kernel")
        rel = abs(kernel - direct) / direct
        print(f"{statistics:>5}  beta = {beta:<4g} mu = 0.5"
              f"  direct = {direct:.10f}  kernel rel diff = {rel:.1e}")

print()
print("the Bose sum needs mu below the spectral bottom:")
try:
    quantum_trace(spec, 1.0, 5.0, "bose")
except Exception as exc:
    print(f"  {type(exc).__name__}: {exc}")
