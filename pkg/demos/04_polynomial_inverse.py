"""A bounded odd polynomial that approximates 1/(2 c x) away from zero.

The inverse is expanded in Chebyshev polynomials, a smoothed step removes the
region near zero, and the product stays inside [-1, 1] as needed for
singular-value transformations.
Run with: python3 demos/04_polynomial_inverse.py
"""
import numpy as np

from waveprecond import polyapprox

c = 32
for eps in (1e-2, 1e-3, 1e-4):
    s = polyapprox.inverse_series(c, eps)
    print(f"eps = {eps:g}: terms {s.ell_max} (sqrt(2)-ratio count {s.ell_log}), "
          f"grid error {s.grid_error():.2e} vs target {s.target:.1e}")

s = polyapprox.inverse_series(c, 1e-3)
print(f"\ncoefficient ratio {s.ratio:.4f}; first coefficients {np.round(s.coeffs[:5], 4)}")

poly = polyapprox.matrix_inverse_polynomial_fn(c, 1e-3)
print(f"\ncombined polynomial degree {poly.degree}")
print(f"  sup error vs 1/(2cx) on [1/c, 1]: {poly.grid_error():.2e} (bound {1e-3 / c:.2e})")
print(f"  max |P| on [-1, 1]: {poly.max_magnitude():.4f}")
print(f"  oddness defect: {poly.oddness_error():.1e}")

A = np.diag([1.0, 0.5, 0.25, 1 / 16])
res = polyapprox.matrix_inverse_polynomial(A, 16, 1e-3)
print(f"\nmatrix evaluation on diag(1, 1/2, 1/4, 1/16), c = 16: error {res.error:.2e} (bound {res.bound:.2e})")

print("\nminimal number of terms against eps (c = 8):")
for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
    print(f"  eps = {eps:.0e}: {polyapprox.minimal_truncation(8, eps)}")
