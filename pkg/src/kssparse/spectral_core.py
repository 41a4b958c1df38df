"""Dense linear-algebra primitives: operator norm, stable rank, Loewner order,
and the (alpha, beta, D) approximation certificate.

Matrices are plain ``numpy.ndarray`` objects of dtype float64; ``as_matrix``
is the single validation gate used by the rest of the package.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "RANK_CUTOFF",
    "STRICT",
    "BEST_EFFORT",
    "SymmetricSpectrum",
    "DiagonalReweighting",
    "ApproxCertificate",
    "as_matrix",
    "as_vector",
    "sym_eig",
    "operator_norm",
    "stable_rank",
    "loewner_leq",
    "range_sqrt_pinv",
    "pinv_sqrt",
    "relative_spectrum",
    "approx_membership",
    "check_mode",
]

DEFAULT_TOL = 1e-8
RANK_CUTOFF = 1e-10
SYMMETRY_TOL = 1e-12

STRICT = "strict"
BEST_EFFORT = "best_effort"


def check_mode(mode):
    mode = mode.replace("-", "_")
    if mode not in (STRICT, BEST_EFFORT):
        raise ValueError(f"unknown mode {mode!r}; expected 'strict' or 'best_effort'")
    return mode


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array (a copy is made only if needed)."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2 or M.shape[0] == 0 or M.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_vector(v, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


class SymmetricSpectrum(NamedTuple):
    """Eigenvalues in non-increasing order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        Q, lam = self.eigenvectors, self.eigenvalues
        return (Q * lam) @ Q.T


def _symmetric_scale(S):
    return max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0


def _check_symmetric(S, name="matrix"):
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    asym = float(np.max(np.abs(S - S.T)))
    if asym > SYMMETRY_TOL * _symmetric_scale(S):
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


def sym_eig(S):
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending."""
    S = as_matrix(S)
    _check_symmetric(S)
    lam, Q = np.linalg.eigh(0.5 * (S + S.T))
    return SymmetricSpectrum(lam[::-1].copy(), Q[:, ::-1].copy())


def _gram_small(M):
    n, m = M.shape
    return M @ M.T if n <= m else M.T @ M


def operator_norm(M):
    """Largest singular value, from the eigendecomposition of the smaller Gram matrix."""
    M = as_matrix(M)
    lam = np.linalg.eigvalsh(_gram_small(M))
    return float(np.sqrt(max(lam[-1], 0.0)))


def stable_rank(A):
    """``||A||_HS^2 / ||A||^2``; raises for the zero matrix."""
    A = as_matrix(A)
    norm = operator_norm(A)
    if norm == 0.0:
        raise ValueError("undefined stable rank: zero matrix")
    # ratio of Gram eigenvalues keeps srank(I) exactly n
    lam = np.linalg.eigvalsh(_gram_small(A))
    return float(np.sum(np.clip(lam, 0.0, None)) / lam[-1])


def loewner_leq(P, Q, tol=DEFAULT_TOL):
    """True iff ``P <= Q`` in the Loewner order, up to ``tol`` times the scale."""
    P, Q = as_matrix(P, "P"), as_matrix(Q, "Q")
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {Q.shape}")
    _check_symmetric(P, "P")
    _check_symmetric(Q, "Q")
    scale = max(1.0, operator_norm(P), operator_norm(Q))
    lam_min = np.linalg.eigvalsh(0.5 * ((Q - P) + (Q - P).T))[0]
    return bool(lam_min >= -tol * scale)


def range_sqrt_pinv(G, cutoff=RANK_CUTOFF):
    """Return ``(W, rank)`` with ``W = diag(lam^-1/2) Q_r^T`` on the numerical range of PSD ``G``.

    ``W.T @ W`` is the pseudo-inverse of ``G`` and ``W @ G @ W.T`` is the identity on
    the retained range.  Eigenvalues below ``cutoff * lam_max`` are discarded.
    """
    spec = sym_eig(G)
    lam = spec.eigenvalues
    if lam.size == 0 or lam[0] <= 0.0:
        return np.zeros((0, G.shape[0])), 0
    keep = lam > cutoff * lam[0]
    W = spec.eigenvectors[:, keep].T / np.sqrt(lam[keep])[:, None]
    return W, int(keep.sum())


def pinv_sqrt(G, cutoff=RANK_CUTOFF):
    """Symmetric ``G^{+1/2}``: inverse square root on range(G), zero on its kernel."""
    W, r = range_sqrt_pinv(G, cutoff)
    if r == 0:
        return np.zeros_like(np.asarray(G, dtype=np.float64))
    lam_inv_sqrt = np.linalg.norm(W, axis=1)
    Q = W / lam_inv_sqrt[:, None]
    return (Q.T * lam_inv_sqrt) @ Q


def relative_spectrum(G, H, cutoff=RANK_CUTOFF):
    """Extreme eigenvalues of ``G^{+1/2} H G^{+1/2}`` on range(G) as ``(lo, hi)``.

    Returns ``(1.0, 1.0)`` when ``G`` is zero (the sandwich is vacuous).
    """
    W, r = range_sqrt_pinv(G, cutoff)
    if r == 0:
        return 1.0, 1.0
    R = W @ H @ W.T
    lam = np.linalg.eigvalsh(0.5 * (R + R.T))
    return float(lam[0]), float(lam[-1])


@dataclass(frozen=True)
class DiagonalReweighting:
    """Non-negative diagonal ``D`` together with the multiplicities behind it."""

    weights: np.ndarray
    multiplicities: np.ndarray
    unit_weight: Optional[float] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        k = np.array(self.multiplicities).ravel()
        if w.shape != k.shape:
            raise ValueError("weights and multiplicities must have equal length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        if np.any(k < 0) or not np.all(k == np.round(k)):
            raise ValueError("multiplicities must be non-negative integers")
        k = k.astype(np.int64)
        if np.any((w > 0) != (k > 0)):
            raise ValueError("d_ii = 0 must coincide with multiplicity 0")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "multiplicities", k)
        w.setflags(write=False)
        k.setflags(write=False)
        if self.unit_weight is None:
            nz = w[w > 0]
            if nz.size and np.all(np.abs(nz - nz[0]) <= 1e-12 * nz[0]):
                object.__setattr__(self, "unit_weight", float(nz[0]))

    @classmethod
    def from_weights(cls, weights):
        """Build from weights alone; every positive weight gets multiplicity one."""
        w = np.asarray(weights, dtype=np.float64).ravel()
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        return cls(w, (w > 0).astype(np.int64))

    @classmethod
    def identity(cls, m):
        return cls(np.ones(m), np.ones(m, dtype=np.int64))

    @property
    def dim(self):
        return int(self.weights.size)

    @property
    def support(self):
        return np.flatnonzero(self.weights > 0)

    @property
    def support_size(self):
        return int(np.count_nonzero(self.weights > 0))

    def matrix(self):
        return np.diag(self.weights)

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "multiplicities": self.multiplicities.tolist(),
            "unit_weight": self.unit_weight,
        }


@dataclass(frozen=True)
class ApproxCertificate:
    """Achieved sandwich ``alpha AA* <= ADA* <= beta AA*`` and the operator-norm gap."""

    epsilon: float
    alpha_achieved: float
    beta_achieved: float
    gap: float
    meets_epsilon: bool
    mode: str = BEST_EFFORT
    theory_constants_respected: bool = True
    gap_within_epsilon: bool = True
    tol: float = DEFAULT_TOL

    def to_dict(self):
        return asdict(self)

    def with_flags(self, **changes):
        d = asdict(self)
        d.update(changes)
        return ApproxCertificate(**d)


def approx_membership(A, D, epsilon, tol=DEFAULT_TOL, mode=BEST_EFFORT,
                      theory_constants_respected=True):
    """Certificate for ``(1-eps) AA* <= ADA* <= (1+eps) AA*``, evaluated on range(AA*).

    ``D`` may be a :class:`DiagonalReweighting` or a plain weight vector.
    """
    A = as_matrix(A, "A")
    w = D.weights if isinstance(D, DiagonalReweighting) else np.asarray(D, dtype=np.float64).ravel()
    if w.size != A.shape[1]:
        raise ValueError(f"D has dimension {w.size}, A has {A.shape[1]} columns")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    G = A @ A.T
    H = (A * w) @ A.T
    alpha, beta = relative_spectrum(G, H)
    alpha = min(alpha, beta)
    norm2 = operator_norm(A) ** 2
    diff = H - G
    gap = float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.T))).max()) / norm2 if norm2 > 0 else 0.0
    meets = alpha >= 1.0 - epsilon - tol and beta <= 1.0 + epsilon + tol
    return ApproxCertificate(
        epsilon=float(epsilon),
        alpha_achieved=alpha,
        beta_achieved=beta,
        gap=gap,
        meets_epsilon=bool(meets),
        mode=check_mode(mode),
        theory_constants_respected=bool(theory_constants_respected),
        gap_within_epsilon=bool(gap <= epsilon + tol),
        tol=float(tol),
    )
