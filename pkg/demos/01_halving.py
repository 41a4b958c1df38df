"""
Halving a sum of rank-one matrices
==================================

Given vectors u_1..u_M with ||u_i||^2 <= delta and A = sum u_i u_i^T, there is
a subset sigma of at most half the indices with

    || 2 sum_{i in sigma} u_i u_i^T - A || <= gamma(2 delta, ||A||).

For small M we find the best subset by exhaustive search.
"""

import numpy as np

from kssparse import RankOneEnsemble, gamma, halve
from kssparse.spectral_core import operator_norm

rng = np.random.default_rng(0)

# ten small random vectors in R^3
U = rng.standard_normal((10, 3)) / 4
ens = RankOneEnsemble(U)
A = ens.gram()
print("M =", len(ens), " delta =", round(ens.delta, 4), " ||A|| =", round(operator_norm(A), 4))

cert = halve(ens)
print("chosen subset:", cert.sigma)
print("achieved error: %.4f   target gamma: %.4f" % (cert.achieved, cert.gamma_target))
print("meets target:", cert.meets_gamma, " (subsets checked: %d)" % cert.candidates_evaluated)

# the target is the closed form ||A|| [(1 + sqrt(2 delta/||A||))^2 - 1]
print("gamma by hand: %.4f" % gamma(2 * ens.delta, operator_norm(A)))

# with many vectors exhaustive search is out of reach; a seeded random
# search plus local improvement takes over
big = RankOneEnsemble(rng.standard_normal((60, 3)) / 8)
cert = halve(big, budget=2000, seed=1)
print("\n60 vectors, randomized: |sigma| = %d, error %.4f vs gamma %.4f"
      % (len(cert.sigma), cert.achieved, cert.gamma_target))
