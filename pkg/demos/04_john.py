"""
Sparsifying a John decomposition
================================

Contact points x_i with weights c_i satisfy sum c_i x_i x_i^T = I and
sum c_i x_i = 0.  We keep fewer points, recentre them at their barycenter u,
and check that the uniform reweighting is still close to the identity.
"""

import numpy as np

from kssparse import canonical_john, john_sparsify

for body, n in [("cube", 3), ("simplex", 4), ("cross_polytope", 4)]:
    J = canonical_john(body, n)
    res = john_sparsify(J, 0.9)
    print("%-15s n=%d  points %2d -> %2d   sandwich [%.3f, %.3f]   ||u|| = %.4f (bound %.4f)"
          % (body, n, len(J), res.size, res.alpha_achieved, res.beta_achieved,
             res.u_norm, res.u_bound))

# the barycenter equals A D v / sqrt(n)
print("identity check:", np.allclose(res.ADv, np.sqrt(n) * res.u, atol=1e-12))
