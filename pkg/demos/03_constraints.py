"""
Sparsifying with linear constraints
===================================

Stack constraint vectors V under A, sparsify the stacked matrix, and the
reweighting keeps A D v_i close to (1 + eps) A v_i in the A A^T geometry.
"""

import numpy as np

from kssparse import schur_witness, stack, theorem1_sparsify, theorem2_verify

rng = np.random.default_rng(7)
A = rng.standard_normal((3, 8))
v = rng.standard_normal(8)
P = stack(A, v / np.linalg.norm(v))

eps = 0.8
D = theorem1_sparsify(P.B, eps, M=10).D
print("kept columns:", np.flatnonzero(D.weights))

res = theorem2_verify(P, D, eps)
print("A in Approx_eps D:", res.a_cert.meets_epsilon, "  V* in Approx_eps D:", res.v_cert.meets_epsilon)
for r, b in zip(res.residuals, res.bounds):
    print("residual %.4f <= bound %.4f" % (r, b))

# the same bound, encoded as positive semidefiniteness of a block matrix
K = schur_witness(P, D, eps)
print("smallest eigenvalue of K: %.3e" % np.linalg.eigvalsh(K)[0])
