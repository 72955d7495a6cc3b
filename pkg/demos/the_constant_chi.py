"""
The variational constant χ
==========================

``χ_G(ϱ)`` is the smallest value of ``I_E(p) + ϱ J_V(p)`` over probability
vectors ``p`` on the vertices of ``G``.  It can also be written as minus the
largest principal eigenvalue of ``Δ + q`` over profiles ``q`` with
``Σ e^{q/ϱ} <= 1``.  This script computes both and then follows the
truncations of the homogeneous binary tree.
"""

import math

import numpy as np

from pamtree.checks import fixture_graph
from pamtree.variational import chi_dual, chi_primal, chi_tilde_regime, chi_tilde_truncated

rho = 1.0
for name in ("K2", "P3", "star4", "T2-ball2", "GW-ball2"):
    g = fixture_graph(name)
    primal = chi_primal(g, rho)
    dual = chi_dual(g, np.arange(g.n), rho)
    print(f"{name:9s} n={g.n:2d}  primal {primal.chi:.8f}  dual {dual.chi:.8f}  "
          f"difference {abs(primal.chi - dual.chi):.1e}")

# the two-vertex graph has χ = log 2, attained by the uniform measure
print(f"log 2 = {math.log(2):.8f}")

# truncations of the binary tree decrease towards χ of the infinite tree
print(f"ϱ = {rho} is in the regime where the binary tree is optimal: {chi_tilde_regime(2, rho)}")
prev = None
for R, value in chi_tilde_truncated(2, rho, list(range(8))):
    step = "" if prev is None else f"  change {value - prev:+.2e}"
    print(f"R = {R}: {value:.10f}{step}")
    prev = value
