"""Where the factored pipeline pays off.

Times the exact pipeline (materializes the n x n similarity and distance
matrices) against the factored one (never allocates n x n) across layer
widths. Small layers are dominated by the eigendecomposition overhead;
wide layers show the win. Single-threaded BLAS, medians over many runs.
"""

import numpy as np

import simprune as sp
from simprune.bench import time_pruning

print(f"{'n':>5} {'exact ms':>10} {'factored ms':>12} {'speedup':>8}")
for n in (16, 64, 128, 256, 512):
    rng = np.random.default_rng(n)
    layer = sp.FilterTensor.from_array("t", rng.standard_normal((n, 3, 3, 8)))
    reps = 400 if n <= 256 else 200
    exact = time_pruning(layer, "exact", repetitions=reps, warmup=5)
    approx = time_pruning(layer, "nystrom", m=9, k=9, repetitions=reps, warmup=5)
    print(f"{n:>5} {exact.mean_s * 1e3:>10.3f} {approx.mean_s * 1e3:>12.3f} "
          f"{exact.mean_s / approx.mean_s:>7.2f}x")

print("\nBoth pipelines start from precomputed representatives and end at the")
print("greedy split, so the comparison isolates the similarity/selection cost.")
