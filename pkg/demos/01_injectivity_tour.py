"""A tour of injectivity checks: real, complex M = 2 and 3, and beyond.

Run with ``python demos/01_injectivity_tour.py``.
"""

import numpy as np

from phaselab import MeasurementEnsemble, check_injectivity, intensity_map
from phaselab.ensemble import fractional_dft_stack, injective_2x4_example, injective_3x8_example
from phaselab.injectivity import bounds_summary, span_condition

# Three vectors in R^2.  Every subset or its complement spans, so real
# intensity measurements determine x up to sign.
A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
real = MeasurementEnsemble(A, "real")
print("real {(1,0),(0,1),(1,1)}:", check_injectivity(real).status)

# The same vectors over C fail: (1, i) and (1, -i) collide.
cplx = MeasurementEnsemble(A, "complex")
v = check_injectivity(cplx)
print("complex, same vectors:   ", v.status, "via", v.method)
x, y = v.witness
print("  x =", np.round(x, 12), " A(x) =", intensity_map(x, cplx))
print("  y =", np.round(y, 12), " A(y) =", intensity_map(y, cplx))

# the span condition certifies the failure at u = x - y
print("  dim span{phi phi* u} at u = x - y:", span_condition(cplx, x - y), "(< 2M - 1 = 3)")

# M = 2 with four vectors: the super analysis operator is invertible
v = check_injectivity(injective_2x4_example())
print("\n2 x 4 example:", v.status, "nullity", v.nullity)

# M = 3: the HMW test decides.  A generic 3 x 8 ensemble is injective...
v = check_injectivity(injective_3x8_example())
print("3 x 8 example:", v.status, "nullity", v.nullity, "det ratio %.3g" % v.diagnostics["det_ratio"])

# ...while seven measurements never suffice.
rng = np.random.default_rng(7)
seven = MeasurementEnsemble(rng.standard_normal((3, 7)) + 1j * rng.standard_normal((3, 7)))
v = check_injectivity(seven)
print("random 3 x 7:", v.status, "nullity", v.nullity)

# The stacked fractional DFT [I F^1/2 F F^3/2].  With the principal branch
# of the fractional power the lifted measurements only span a 6-dimensional
# space, so the HMW test finds a collision.  Choosing the other logarithm of
# the -1 eigenvalue gives a different square root of F that is injective.
for branch in ("principal", "alternate"):
    v = check_injectivity(fractional_dft_stack(branch=branch))
    print(f"[I F^1/2 F F^3/2], {branch:9s} branch:", v.status, "nullity", v.nullity)

print("\nminimal N bounds:")
for M in range(2, 7):
    print("  ", bounds_summary(M))
