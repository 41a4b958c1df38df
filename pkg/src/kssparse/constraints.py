"""Constraint-preserving sparsification by stacking.

Linear constraints ``v_1, ..., v_k`` are appended under ``A`` as extra rows
(``B^* = (A^* | V)``).  Any ``D`` that approximates ``B`` then approximates
``A`` and ``V^*`` and keeps ``A D v_i`` close to ``(1 + eps) A v_i`` in the
``(AA^*)^{-1/2}`` geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral_core import (
    DEFAULT_TOL,
    ApproxCertificate,
    DiagonalReweighting,
    approx_membership,
    as_matrix,
    pinv_sqrt,
    range_sqrt_pinv,
)

__all__ = [
    "HypothesisViolated",
    "ConstraintProblem",
    "ConstraintResult",
    "stack",
    "theorem2_verify",
    "schur_witness",
    "witness_quadratic_form",
]


class HypothesisViolated(ValueError):
    """``B`` is not in Approx_eps D, so no conclusion is claimed."""


@dataclass(frozen=True)
class ConstraintProblem:
    A: np.ndarray
    V: np.ndarray
    B: np.ndarray

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def k(self):
        return self.V.shape[1]


@dataclass(frozen=True)
class ConstraintResult:
    b_cert: ApproxCertificate
    a_cert: ApproxCertificate
    v_cert: ApproxCertificate
    residuals: tuple
    bounds: tuple
    all_within: bool

    def to_dict(self):
        return {
            "b_cert": self.b_cert.to_dict(),
            "a_cert": self.a_cert.to_dict(),
            "v_cert": self.v_cert.to_dict(),
            "residuals": list(self.residuals),
            "bounds": list(self.bounds),
            "all_within": self.all_within,
        }


def stack(A, V):
    """Append the constraint columns of ``V`` (``m x k``) as rows under ``A``."""
    A = as_matrix(A, "A")
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    V = as_matrix(V, "V")
    if V.shape[0] != A.shape[1]:
        raise ValueError(f"V has {V.shape[0]} rows but A has {A.shape[1]} columns")
    B = np.vstack([A, V.T])
    n = A.shape[0]
    # the top-left block of BB* is AA*; the bottom rows are V*
    if not np.array_equal(B[:n], A) or not np.array_equal(B[n:], V.T):
        raise AssertionError("stacked blocks do not match")
    return ConstraintProblem(A, V, B)


def _weights(D):
    if isinstance(D, DiagonalReweighting):
        return D.weights
    return np.asarray(D, dtype=np.float64).ravel()


def _require(P, D, epsilon, tol, which=("B",)):
    w = _weights(D)
    certs = {
        "B": approx_membership(P.B, w, epsilon, tol),
        "A": approx_membership(P.A, w, epsilon, tol),
        "V*": approx_membership(P.V.T, w, epsilon, tol),
    }
    for name in which:
        if not certs[name].meets_epsilon:
            c = certs[name]
            raise HypothesisViolated(
                f"hypothesis violated: {name} not in Approx_eps D "
                f"(alpha={c.alpha_achieved:.6g}, beta={c.beta_achieved:.6g}, eps={epsilon:g})")
    return certs


def theorem2_verify(P, D, epsilon, tol=DEFAULT_TOL):
    """Check the transferred memberships and the per-constraint residual bounds.

    ``residual_i = ||(AA^*)^{-1/2} A (D - (1+eps) I_m) v_i||`` against ``2 eps ||v_i||``.
    Raises :class:`HypothesisViolated` unless ``B`` meets the ``eps`` sandwich.
    """
    w = _weights(D)
    if w.size != P.A.shape[1]:
        raise ValueError(f"D has dimension {w.size}, expected {P.A.shape[1]}")
    certs = _require(P, w, epsilon, tol)
    W, _ = range_sqrt_pinv(P.A @ P.A.T)
    R = W @ (P.A @ ((w - (1.0 + epsilon))[:, None] * P.V))
    residuals = np.sqrt(np.einsum("ij,ij->j", R, R))
    vnorms = np.sqrt(np.einsum("ij,ij->j", P.V, P.V))
    bounds = 2.0 * epsilon * vnorms
    within = residuals <= bounds + tol * np.maximum(1.0, bounds)
    return ConstraintResult(
        b_cert=certs["B"],
        a_cert=certs["A"],
        v_cert=certs["V*"],
        residuals=tuple(float(r) for r in residuals),
        bounds=tuple(float(b) for b in bounds),
        all_within=bool(np.all(within)),
    )


def schur_witness(P, D, epsilon, tol=DEFAULT_TOL):
    """Block matrix ``K`` whose positive semidefiniteness encodes the residual bound."""
    w = _weights(D)
    _require(P, w, epsilon, tol, which=("B", "A", "V*"))
    A, V = P.A, P.V
    off = (1.0 + epsilon) * (A @ V) - (A * w) @ V
    return np.block([
        [2.0 * epsilon * (A @ A.T), off],
        [off.T, 2.0 * epsilon * (V.T @ V)],
    ])


def witness_quadratic_form(P, K, w, i, lam):
    """``<K x, x>`` for ``x = ((AA^*)^{-1/2} w, lam e_i)``."""
    x = np.concatenate([pinv_sqrt(P.A @ P.A.T) @ np.asarray(w, dtype=np.float64), np.zeros(P.k)])
    x[P.n + i] = lam
    return float(x @ K @ x)
