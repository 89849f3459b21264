"""Why similarity-based selection differs from magnitude ranking.

Three filters: two near-identical high-norm filters and one low-norm filter
orthogonal to them. Keeping two filters by the sum-of-absolute-weights rule
retains both duplicates and discards the only filter that adds a new
direction; the similarity method keeps one duplicate plus the orthogonal
filter. The geometric-median baseline is shown for completeness.
"""

import numpy as np

import simprune as sp

base = np.ones(9) / 3.0
ortho = np.array([1.0, -1.0] * 4 + [0.0]) / np.sqrt(8.0)
tilted = base + 1e-3 * ortho
tilted /= np.linalg.norm(tilted)

filters = np.stack([
    5.0 * base,      # 0: high norm
    0.5 * ortho,     # 1: low norm, orthogonal direction
    5.001 * tilted,  # 2: near-duplicate of 0
]).reshape(3, 3, 3, 1)
layer = sp.FilterTensor.from_array("demo", filters)

print("filter 0: high-norm")
print("filter 1: LOW-norm but orthogonal to the other two")
print("filter 2: near-duplicate of filter 0\n")

l1 = sp.l1_ranking(layer)
print(f"l1 ranking (most important first): {l1}")
print(f"  keep 2 by l1: {sp.keep_top(l1, 2)}  <- both duplicates, no new direction")

gm = sp.gm_ranking(layer)
print(f"gm ranking: {gm}")
print(f"  keep 2 by gm: {sp.keep_top(gm, 2)}")

reps = sp.build_representative_matrix(layer)
outcome = sp.select_filters(sp.to_distance(sp.exact_similarity(reps)))
print(f"\nsimilarity selection: important={outcome.important}, "
      f"redundant={outcome.redundant}")
print("  pairwise distances drive the choice: the duplicate pair collapses")
print("  to one survivor and the orthogonal filter is kept")
for p in outcome.pairs:
    print(f"    pair {p.source} -> {p.target}: distance {p.distance:.6f}")
