"""John decompositions of the identity and their sparsification.

A John decomposition is a set of unit vectors ``x_i`` with weights ``c_i > 0``
such that ``sum c_i x_i x_i^T = I_n`` and ``sum c_i x_i = 0``.  The
sparsifier keeps a multiset of the ``x_i`` whose recentred, uniformly
reweighted sum still approximates the identity, with the barycenter of the
kept points controlled.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constraints import HypothesisViolated, stack
from .halving import EXHAUSTIVE_MAX
from .sparsifier import equal_weight_sparsify
from .spectral_core import (
    BEST_EFFORT,
    DEFAULT_TOL,
    STRICT,
    ApproxCertificate,
    DiagonalReweighting,
    approx_membership,
    as_matrix,
    as_vector,
    check_mode,
    operator_norm,
    relative_spectrum,
)

__all__ = [
    "JohnValidationError",
    "JohnDecomposition",
    "KernelDeflation",
    "JohnSparsification",
    "validate_john",
    "canonical_john",
    "simplex_vertices",
    "cor_kernel_deflate",
    "john_sparsify",
    "CROSS_POLYTOPE_MAX_DIM",
]

CROSS_POLYTOPE_MAX_DIM = 12


class JohnValidationError(ValueError):
    """Raised with ``failures``: a list of ``(invariant, measured, tol)`` triples."""

    def __init__(self, failures):
        self.failures = list(failures)
        lines = ", ".join(f"{name} = {val:.3e} > {tol:.1e}" for name, val, tol in self.failures)
        super().__init__(f"not a John decomposition: {lines}")


@dataclass(frozen=True)
class JohnDecomposition:
    points: np.ndarray  # m x n, one unit vector per row
    weights: np.ndarray
    tol: float = DEFAULT_TOL

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def to_dict(self):
        return {"dim": int(self.dim), "points": self.points.tolist(), "weights": self.weights.tolist()}


def _john_residuals(X, c):
    n = X.shape[1]
    frame = operator_norm((X.T * c) @ X - np.eye(n))
    bary = float(np.linalg.norm(c @ X))
    unit = float(np.max(np.abs(np.linalg.norm(X, axis=1) - 1.0)))
    trace = abs(float(c.sum()) - n)
    return {"identity": frame, "barycenter": bary, "unit_norm": unit, "trace": trace}


def validate_john(points, weights, tol=DEFAULT_TOL):
    """Return a :class:`JohnDecomposition` or raise :class:`JohnValidationError`."""
    X = np.array(points, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("points must be a non-empty list of equal-length vectors")
    c = as_vector(weights, "weights").copy()
    if c.size != X.shape[0]:
        raise ValueError(f"{X.shape[0]} points but {c.size} weights")
    if np.any(c <= 0):
        raise ValueError("weights must be positive")
    if not np.all(np.isfinite(X)):
        raise ValueError("points have non-finite entries")
    res = _john_residuals(X, c)
    failures = [(k, v, tol) for k, v in res.items() if v > tol]
    if failures:
        raise JohnValidationError(failures)
    X.setflags(write=False)
    c.setflags(write=False)
    return JohnDecomposition(X, c, float(tol))


def simplex_vertices(n):
    """``n+1`` unit vectors in R^n with pairwise inner products ``-1/n``; first is ``e_1``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return np.array([[1.0], [-1.0]])
    inner = simplex_vertices(n - 1)
    first = np.zeros((1, n))
    first[0, 0] = 1.0
    rest = np.hstack([np.full((n, 1), -1.0 / n), math.sqrt(1.0 - 1.0 / n ** 2) * inner])
    return np.vstack([first, rest])


def canonical_john(body, n):
    """Contact points and weights for the cube, regular simplex or cross-polytope in John position."""
    body = body.replace("-", "_")
    if n < 1:
        raise ValueError("n must be at least 1")
    if body == "cube":
        X = np.vstack([np.eye(n), -np.eye(n)])
        c = np.full(2 * n, 0.5)
    elif body == "simplex":
        X = simplex_vertices(n)
        c = np.full(n + 1, n / (n + 1))
    elif body == "cross_polytope":
        if n > CROSS_POLYTOPE_MAX_DIM:
            raise ValueError(f"cross_polytope limited to n <= {CROSS_POLYTOPE_MAX_DIM} (2^n contact points)")
        X = np.array(list(itertools.product((1.0, -1.0), repeat=n))) / math.sqrt(n)
        c = np.full(2 ** n, n / 2 ** n)
    else:
        raise ValueError(f"unknown body {body!r}; expected cube, simplex or cross_polytope")
    return validate_john(X, c, tol=1e-10)


@dataclass(frozen=True)
class KernelDeflation:
    """``C = A D^{1/2} - ADv (D^{1/2} v)^T / ||D^{1/2} v||^2`` and its sandwich against ``AA^*``."""

    C: np.ndarray
    alpha_achieved: float
    beta_achieved: float
    lower_bound: float
    upper_bound: float
    kernel_residual: float

    @property
    def bounds(self):
        return self.alpha_achieved, self.beta_achieved

    @property
    def within_bounds(self):
        return (self.alpha_achieved >= self.lower_bound - DEFAULT_TOL
                and self.beta_achieved <= self.upper_bound + DEFAULT_TOL)


def cor_kernel_deflate(A, v, D, epsilon, tol=DEFAULT_TOL):
    """Rank-one correction of ``A D^{1/2}`` that puts ``D^{1/2} v`` back in the kernel.

    Needs ``Av = 0``, ``(A; v^T)`` in Approx_eps D and ``D^{1/2} v != 0``.  The
    returned sandwich is guaranteed to lie in
    ``[1 - eps - 4 eps^2/(1-eps), 1 + eps]``.
    """
    A = as_matrix(A, "A")
    v = as_vector(v, "v")
    w = D.weights if isinstance(D, DiagonalReweighting) else np.asarray(D, dtype=np.float64).ravel()
    if v.size != A.shape[1] or w.size != A.shape[1]:
        raise ValueError("v and D must match the number of columns of A")
    a_norm, v_norm = operator_norm(A), float(np.linalg.norm(v))
    if np.linalg.norm(A @ v) > 1e-10 * a_norm * v_norm:
        raise ValueError("hypothesis failed: v is not in ker A")
    sqrt_w = np.sqrt(w)
    dv = sqrt_w * v
    dv_sq = float(dv @ dv)
    if dv_sq == 0.0:
        raise ValueError("hypothesis failed: D^{1/2} v = 0")
    b_cert = approx_membership(stack(A, v).B, w, epsilon, tol)
    if not b_cert.meets_epsilon:
        raise HypothesisViolated(
            f"hypothesis violated: stacked matrix not in Approx_eps D "
            f"(alpha={b_cert.alpha_achieved:.6g}, beta={b_cert.beta_achieved:.6g})")
    ADv = A @ (w * v)
    C = A * sqrt_w - np.outer(ADv, dv) / dv_sq
    kernel_residual = float(np.linalg.norm(C @ dv))
    scale = max(1.0, a_norm * float(np.linalg.norm(dv)))
    if kernel_residual > 1e-10 * scale:
        raise AssertionError(f"deflation left ||C D^1/2 v|| = {kernel_residual:.3e}")
    lo, hi = relative_spectrum(A @ A.T, C @ C.T)
    lower = 1.0 - epsilon - 4.0 * epsilon ** 2 / (1.0 - epsilon) if epsilon < 1 else -math.inf
    return KernelDeflation(C, lo, hi, lower, 1.0 + epsilon, kernel_residual)


@dataclass(frozen=True)
class JohnSparsification:
    multiplicities: np.ndarray
    u: np.ndarray
    alpha_achieved: float
    beta_achieved: float
    u_norm: float
    u_bound: float
    certificate: ApproxCertificate
    stacked_certificate: ApproxCertificate
    D: DiagonalReweighting
    ADv: np.ndarray
    v: np.ndarray
    deflation: Optional[KernelDeflation] = None
    k_used: int = 0
    notes: tuple = field(default=())

    @property
    def sigma(self):
        return {int(i): int(k) for i, k in enumerate(self.multiplicities) if k > 0}

    @property
    def size(self):
        return int(self.multiplicities.sum())

    @property
    def u_within_bound(self):
        return self.u_norm <= self.u_bound + 1e-10

    def to_dict(self):
        return {
            "sigma": {str(i): k for i, k in self.sigma.items()},
            "size": self.size,
            "multiplicities": self.multiplicities.tolist(),
            "u": self.u.tolist(),
            "u_norm": self.u_norm,
            "u_bound": self.u_bound,
            "u_within_bound": self.u_within_bound,
            "alpha_achieved": self.alpha_achieved,
            "beta_achieved": self.beta_achieved,
            "certificate": self.certificate.to_dict(),
            "stacked_certificate": self.stacked_certificate.to_dict(),
            "D": self.D.to_dict(),
            "k_used": self.k_used,
            "notes": list(self.notes),
        }


def john_sparsify(J, epsilon, mode=BEST_EFFORT, budget=20000, seed=0,
                  exhaustive_max=EXHAUSTIVE_MAX, tol=DEFAULT_TOL):
    """Sparsify a John decomposition while keeping the kept points nearly balanced.

    Stacks ``b_i = (sqrt(c_i) x_i, sqrt(c_i/n))`` (an identity decomposition of
    R^{n+1}), sparsifies it with uniform weights at ``eps/3``, and recentres the
    kept points at their barycenter ``u``.  The sandwich of
    ``(n/|sigma|) sum kappa_i (x_i - u)(x_i - u)^T`` is reported against
    ``[1-eps, 1+eps]`` together with ``||u||`` against ``2 eps / (3 sqrt n)``.
    """
    mode = check_mode(mode)
    X, c = J.points, J.weights
    m, n = X.shape
    A = (X * np.sqrt(c)[:, None]).T
    v = np.sqrt(c / n)
    B = stack(A, v).B
    res = equal_weight_sparsify(B, epsilon / 3.0, mode, budget, seed, exhaustive_max, tol=tol)
    kappa = res.multiplicities
    size = int(kappa.sum())
    d = kappa * n / (c * size)
    D = DiagonalReweighting(d, kappa)
    u = (kappa @ X) / size
    ADv = A @ (d * v)
    stacked = approx_membership(B, d, epsilon / 3.0, tol, mode, res.certificate.theory_constants_respected)
    notes = []
    deflation = None
    try:
        deflation = cor_kernel_deflate(A, v, D, epsilon / 3.0, tol)
    except HypothesisViolated as exc:
        if mode == STRICT:
            raise
        notes.append(str(exc))
    # columns of C are sqrt(n/|sigma|) sqrt(kappa_i) (x_i - u)
    Cmat = math.sqrt(n / size) * (np.sqrt(kappa)[:, None] * (X - u)).T
    lo, hi = relative_spectrum(A @ A.T, Cmat @ Cmat.T)
    meets = lo >= 1.0 - epsilon - tol and hi <= 1.0 + epsilon + tol
    gap = float(np.max(np.abs(np.linalg.eigvalsh(Cmat @ Cmat.T - np.eye(n)))))
    u_norm = float(np.linalg.norm(u))
    u_bound = 2.0 * epsilon / (3.0 * math.sqrt(n))
    cert = ApproxCertificate(
        epsilon=float(epsilon),
        alpha_achieved=float(lo),
        beta_achieved=float(hi),
        gap=gap,
        meets_epsilon=bool(meets),
        mode=mode,
        theory_constants_respected=res.certificate.theory_constants_respected,
        gap_within_epsilon=bool(gap <= epsilon + tol),
        tol=float(tol),
    )
    if mode == STRICT and not (meets and u_norm <= u_bound + 1e-10):
        raise HypothesisViolated("strict John sparsification did not meet its certificate")
    return JohnSparsification(
        multiplicities=kappa,
        u=u,
        alpha_achieved=float(lo),
        beta_achieved=float(hi),
        u_norm=u_norm,
        u_bound=u_bound,
        certificate=cert,
        stacked_certificate=stacked,
        D=D,
        ADv=ADv,
        v=v,
        deflation=deflation,
        k_used=res.k_used,
        notes=tuple(notes),
    )
