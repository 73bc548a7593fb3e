"""Average-case stability: Fisher information and the Cramer-Rao bound.

Compares the closed-form Fisher matrix with a Monte Carlo estimate, then shows
how the bound degrades near a degenerate signal.
"""

import numpy as np

from phaselab import MeasurementEnsemble
from phaselab.ensemble import canonicalize, injective_3x8_example
from phaselab.injectivity import complement_property
from phaselab.stability_avg import NoiseModel, degenerate_theta, fisher_matrix, monte_carlo_fisher

noise = NoiseModel(0.5)

# complex parameters: the last coordinate is real and positive after canonicalization
Phi = injective_3x8_example()
theta = canonicalize(np.array([0.3 + 0.4j, -1.0j, 0.9]))
rep = fisher_matrix(theta, Phi, noise)
print("reduced Fisher matrix 5 x 5, condition number %.2f" % rep.condition_number)
print("CRLB trace: %.6f" % rep.crlb_trace)

mc = monte_carlo_fisher(theta, Phi, noise, trials=100_000, seed=0)
print("Monte Carlo relative discrepancy: %.4f" % (np.linalg.norm(mc - rep.J) / np.linalg.norm(rep.J)))

# A real ensemble without the complement property: theta orthogonal to the
# vectors of the violating subset makes J singular.
A = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
bad = MeasurementEnsemble(A)
holds, w = complement_property(bad)
t = degenerate_theta(bad, w.S)
r = fisher_matrix(t, bad, noise)
print("\nCP holds:", holds, " witness S =", w.S)
print("theta =", t, " positive definite:", r.positive_definite, " reason:", r.reason)

# moving away from the degenerate point restores a finite bound
for eps in (1e-1, 1e-2, 1e-3):
    r = fisher_matrix(t + eps * np.array([1.0, 0.0]), bad, noise)
    print(f"  eps = {eps:g}: CRLB trace = {r.crlb_trace:.4g}")
