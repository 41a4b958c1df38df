"""
Spectral sparsification of a matrix
===================================

Pick a reweighted multiset of columns of A so that A D A^T stays close to
A A^T:  || A D A^T - A A^T || <= eps ||A||^2.
"""

import numpy as np

from kssparse import approx_membership, theorem1_sparsify

rng = np.random.default_rng(0)
A = rng.standard_normal((3, 12))

# best-effort mode: at most 12 pieces, exhaustive halving at every level
res = theorem1_sparsify(A, 0.75, M=12)
print("halving levels kept:", res.k_used, "  columns: 12 ->", res.size)
print("columns kept:", res.sigma)
print("weights:", np.round(res.D.weights, 3))

cert = res.certificate
print("sandwich [%.3f, %.3f], relative gap %.3f, meets eps: %s"
      % (cert.alpha_achieved, cert.beta_achieved, cert.gap, cert.meets_epsilon))

# the certificate can be recomputed from A and D alone
again = approx_membership(A, res.D.weights, 0.75)
print("recomputed gap: %.3f" % again.gap)

# a rank-one matrix collapses to one column
R = np.repeat([[1.0], [2.0]], 6, axis=1)
r = theorem1_sparsify(R, 1.0)
print("\nrank one: kept", r.sigma, "gap %.1e" % r.certificate.gap)
