"""Worst-case stability of real phase retrieval.

Lipschitz bounds of the root-intensity map, the strong complement property,
and a self-localized frame that cannot be stable.
"""

import numpy as np

from phaselab import MeasurementEnsemble
from phaselab.stability_worst import (
    alpha_bounds,
    grid_infimum_ratio,
    holder_divergence_probe,
    lipschitz_report,
    localized_fourier_frame,
    localized_witness_subset,
    scp_bound_at_subset,
    scp_sigma,
)

rng = np.random.default_rng(3)
Phi = MeasurementEnsemble(rng.standard_normal((2, 5)))

rep = lipschitz_report(Phi, pairs=20_000, seed=1)
lo, hi = alpha_bounds(rep.scp)
print(f"beta = {rep.beta:.6f}   sigma = {rep.sigma:.6f}")
print(f"lower Lipschitz constant lies in [{lo:.6f}, {hi:.6f}]")
print(f"sampled ratios: min {rep.sampled_min_ratio:.6f}, max {rep.sampled_max_ratio:.6f}")
print(f"stability constant 2 beta / sigma <= {rep.stability_constant_upper:.4f}")

# In R^2 a two-angle search pins the infimum down much more tightly.
r, (x, y) = grid_infimum_ratio(Phi)
print(f"grid infimum: {r:.6f}  (pair x = {np.round(x, 4)}, y = {np.round(y, 4)})")

# Scaling the ensemble leaves the stability constant unchanged.
rep2 = lipschitz_report(Phi.scaled(10.0), pairs=100)
print("scale x10, constant:", rep2.stability_constant_upper)

# The intensity map itself is not Lipschitz: quotients blow up along a ray.
print("\nintensity-map quotients along (C+1) phi_0:")
for C, q in zip([1, 2, 4, 8, 16], holder_divergence_probe(Phi, 0, [1, 2, 4, 8, 16])):
    print(f"  C = {C:2d}: {q:10.4f}")

# A self-localized real frame: columns far apart in index are nearly
# orthogonal, so phi_0 + phi_{N/2} and phi_0 - phi_{N/2} are hard to tell apart.
F = localized_fourier_frame(16, 32)
S = localized_witness_subset(32)
print("\nlocalized frame M=16, N=32")
print("  bound at S = [8, 24):", scp_bound_at_subset(F, S).sigma ** 2, "<= 4N/M^2 =", 4 * 32 / 16**2)
print("  exact sigma:", scp_sigma(F).sigma, f"({scp_sigma(F).method})")
G = np.abs(F.matrix.T @ F.matrix) ** 2
far = [G[0, n] for n in range(8, 24)]
print("  max |<phi_0, phi_n>|^2 for n in S: %.4f" % max(far))
