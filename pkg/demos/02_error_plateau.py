"""How many landmark columns does the approximation actually need?

Representatives live in d = w*h dimensions, so the similarity matrix has
rank at most d no matter how many filters a layer holds. This script sweeps
the landmark count m for a 256-filter layer with 3x3 kernels (d = 9) and
prints the approximation error: it collapses to machine precision the
moment m reaches the rank, which is why tiny budgets like m = k = 9 work.
"""

import numpy as np

import simprune as sp
from simprune.bench import sweep_delta

rng = np.random.default_rng(3)
layer = sp.FilterTensor.from_array("wide", rng.standard_normal((256, 3, 3, 12)))
reps = sp.build_representative_matrix(layer)

print(f"layer: n={reps.n} filters, representative dimension d={reps.d}\n")
print(f"{'m':>4} {'k':>4} {'delta (spectral)':>18} {'selection match':>16}")
for rec in sweep_delta(reps, [2, 4, 6, 8, 9, 10, 16, 64, 256], layer="wide"):
    print(f"{rec.m:>4} {rec.k:>4} {rec.delta:>18.3e} {str(rec.selection_match):>16}")

m, k, delta = sp.auto_select_budget(reps, threshold=1.0)
print(f"\nsmallest budget with delta < 1.0: m={m}, k={k} (delta={delta:.3e})")
m, k, delta = sp.auto_select_budget(reps, threshold=1e-6)
print(f"smallest budget with delta < 1e-6: m={m}, k={k} (delta={delta:.3e})")

# the same story in Frobenius norm, for comparison
exact = sp.to_distance(sp.exact_similarity(reps))
approx = sp.to_distance(sp.nystrom_similarity(reps, 9, 9))
print(f"\nat m=k=9: spectral {sp.approximation_error(exact, approx):.3e}, "
      f"frobenius {sp.approximation_error(exact, approx, norm='frobenius'):.3e}")
