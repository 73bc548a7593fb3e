"""Stability constants of Gaussian ensembles against their high-probability bound.

Writes ``gaussian_points.csv`` and ``gaussian_summary.csv`` in the working
directory, ready for plotting log10(2 beta / sigma) against redundancy.
"""

import math

from phaselab.stability_worst import (
    GaussianExperimentConfig,
    curve_a,
    curve_b,
    run_gaussian_experiment,
    theorem_sigma,
)

cfg = GaussianExperimentConfig(M=4, R_values=(2.5, 3.0, 3.5, 4.0), trials=30, base_seed=2024)
res = run_gaussian_experiment(cfg)

with open("gaussian_points.csv", "w") as fh:
    fh.write(res.points_csv())
with open("gaussian_summary.csv", "w") as fh:
    fh.write(res.summary_csv())

print(" R    N   mean log10(2b/s)   log10 a(R,4)   log10 b(R)")
for R, N, m, a, b in zip(cfg.R_values, res.N_values, res.means, res.curve_a, res.curve_b):
    print(f"{R:4.1f} {N:3d}   {m:16.4f}   {a:12.4f}   {b:10.4f}")

# the bound a(R, M) tends to b(R) from below as M grows
print("\nR = 3:", ["%.4f" % math.log10(curve_a(3, M)) for M in (2, 8, 32, 128)], "->", "%.4f" % math.log10(curve_b(3)))
print("sigma guaranteed for M=4, N=16, eps=1: %.4f" % theorem_sigma(4, 16, 1))
