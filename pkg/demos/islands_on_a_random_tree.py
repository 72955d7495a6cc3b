"""
Intermittent islands on a Galton-Watson tree
============================================

Sample a tree and a double-exponential potential, extract the vertices where
the potential is close to its maximum over the ball of radius ``r``, and look
at the islands they form.
"""

import math

import numpy as np

from pamtree.gw import OffspringLaw, growth_rate, sample_tree
from pamtree.potential import exceedance_threshold, island_size_cap, islands, potential_max_deviation, sample_potential

# offspring between 2 and 4 with geometric weights; the volume of a ball grows like e^{ϑ r}
law = OffspringLaw("truncated-geometric", {"p": 0.5, "d_min": 2, "d_max": 4})
theta = growth_rate(law)
r, rho, A, alpha = 8, 1.0, 0.5, 0.5

tree = sample_tree(law, r, seed=1)
field = sample_potential(tree.n, rho, seed=1)
print(f"tree with {tree.n} vertices, generation sizes {tree.generation_sizes().tolist()}")
print(f"growth rate ϑ = {theta:.4f}")

# the maximum of the potential over the ball sits near a_L = ϱ log log L
dev = potential_max_deviation(tree, field, r, theta)
print(f"max ξ on the ball {dev.max_xi:.3f}, a_L = {dev.a_Lr:.3f}, gap {dev.gap:.3f}")

# islands: components of the S_r-neighbourhood of {ξ > a_L - 2A}
isl = islands(tree, field, r, A, alpha).compute_eigenvalues(tree, field)
print(f"{len(isl.Pi)} high points, {len(isl.D)} island vertices, {len(isl.components)} islands")
print(f"S_r = {isl.S_r:.3f}, level a_L - 2A = {isl.level:.3f}")
for c in sorted(isl.components, key=lambda c: -c.eigenvalue)[:5]:
    print(f"  island of size {c.size:3d} with {c.pi_hits} high points, λ = {c.eigenvalue:.3f}")

# islands with many high points become rare as r grows; M_A is the limiting cap
print(f"M_A = {island_size_cap(rho, A)}, largest count here {isl.max_pi_hits}")

# the exceedance level for L vertices: one vertex in L exceeds it on average
for L in (100, 10**4, 10**6):
    a = exceedance_threshold(L, rho)
    print(f"L = {L:>7}: a_L = {a:.4f}, L·P(ξ > a_L) = {L * math.exp(-math.exp(a / rho)):.3f}")
