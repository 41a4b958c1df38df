"""Column-selection sparsification by repeated halving.

Pipeline: split the columns of ``A`` into rank-one pieces of comparable weight,
choose how many halving levels the constants allow, halve the piece ensemble
level by level, and map the surviving pieces back to a diagonal reweighting
``D`` with ``ADA^* ~ AA^*``.  The equal-weight variant does the same for an
identity decomposition and then replaces the weights by ``n/|sigma|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .halving import EXHAUSTIVE_MAX, RankOneEnsemble, halve, HalvingCertificate
from .spectral_core import (
    BEST_EFFORT,
    DEFAULT_TOL,
    STRICT,
    ApproxCertificate,
    DiagonalReweighting,
    approx_membership,
    as_matrix,
    check_mode,
    operator_norm,
    relative_spectrum,
)

__all__ = [
    "M_BIG_CONSTANT",
    "K_CHOICE_CONSTANT",
    "MAX_STRICT_PIECES",
    "InfeasibleError",
    "SplitPlan",
    "LevelRecord",
    "SparsifyResult",
    "strict_M",
    "split_equalize",
    "choose_k",
    "theorem1_sparsify",
    "equal_weight_sparsify",
]

M_BIG_CONSTANT = 72.0
K_CHOICE_CONSTANT = 144.0 / (math.sqrt(2.0) - 1.0) ** 2
MAX_STRICT_PIECES = 2_000_000
_REL = 1e-12


class InfeasibleError(ValueError):
    """The strict-mode constants cannot be honoured for this input."""


@dataclass(frozen=True)
class SplitPlan:
    M: int
    kappa: float
    pieces: tuple  # (source column, piece weight) pairs
    epsilon: float
    requested_M: int = 0

    @property
    def sources(self):
        return np.array([p[0] for p in self.pieces], dtype=np.int64)

    @property
    def piece_weights(self):
        return np.array([p[1] for p in self.pieces], dtype=np.float64)

    def ensemble(self, A):
        """Piece vectors ``sqrt(w) a_i / ||a_i||`` as a :class:`RankOneEnsemble`."""
        A = as_matrix(A)
        src = self.sources
        cols = A[:, src]
        norms = np.sqrt(np.einsum("ij,ij->j", cols, cols))
        U = (cols * (np.sqrt(self.piece_weights) / norms)).T
        return RankOneEnsemble(U, src, dim=A.shape[0])


@dataclass(frozen=True)
class LevelRecord:
    level: int
    size: int
    halving: HalvingCertificate
    alpha: float
    beta: float
    accepted: bool

    def to_dict(self):
        return {
            "level": self.level,
            "size": self.size,
            "alpha": self.alpha,
            "beta": self.beta,
            "accepted": self.accepted,
            "halving": self.halving.to_dict(),
        }


@dataclass(frozen=True)
class SparsifyResult:
    """Selected multiset (as multiplicities), the reweighting ``D`` and its certificate."""

    multiplicities: np.ndarray
    D: DiagonalReweighting
    k_used: int
    beta_trace: tuple
    certificate: ApproxCertificate
    effective_c: float
    plan: SplitPlan
    piece_sigma: tuple  # surviving piece indices, nested chain end
    chain: tuple = field(default=())  # piece index sets sigma_0 ... sigma_k
    levels: tuple = field(default=())
    k_theory: Optional[int] = None
    scale: float = 1.0  # common factor applied to surviving piece weights

    @property
    def sigma(self):
        """The multiset as ``{column: multiplicity}``."""
        return {int(i): int(k) for i, k in enumerate(self.multiplicities) if k > 0}

    @property
    def size(self):
        return int(self.multiplicities.sum())

    def to_dict(self):
        return {
            "sigma": {str(i): k for i, k in self.sigma.items()},
            "size": self.size,
            "D": self.D.to_dict(),
            "k_used": self.k_used,
            "k_theory": self.k_theory,
            "beta_trace": list(self.beta_trace),
            "effective_c": self.effective_c,
            "scale": self.scale,
            "M": self.plan.M,
            "kappa": self.plan.kappa,
            "certificate": self.certificate.to_dict(),
            "levels": [lv.to_dict() for lv in self.levels],
        }


def strict_M(trace_B, norm_B, epsilon):
    """Smallest ``M`` meeting both the splitting bound and the level-count bound."""
    srank = trace_B / norm_B
    return int(math.ceil(max(M_BIG_CONSTANT, K_CHOICE_CONSTANT) * srank / epsilon ** 2 * (1 - _REL)))


def _pieces_for(c, kappa):
    counts = np.zeros(c.size, dtype=np.int64)
    nz = c > 0
    counts[nz] = np.ceil(c[nz] / kappa * (1 - _REL)).astype(np.int64)
    return np.maximum(counts, nz.astype(np.int64))


def _kappa_for_cap(c, cap):
    """Smallest kappa among ``c_i / j`` whose piece count fits in ``cap``."""
    nz = c[c > 0]
    if cap < nz.size:
        raise ValueError(f"M cap {cap} is below the number of non-zero columns ({nz.size})")
    cands = np.unique((nz[:, None] / np.arange(1, cap + 1)[None, :]).ravel())
    counts = np.array([_pieces_for(nz, k).sum() for k in cands])
    ok = cands[counts <= cap]
    return float(ok.min())


def split_equalize(A, epsilon, mode=BEST_EFFORT, M=None):
    """Split the columns of ``A`` into pieces of weight at most ``kappa``.

    ``B = AA^* = sum_i c_i x_i x_i^T`` with ``c_i = ||a_i||^2``.  Strict mode uses
    ``M = ceil(max(72, 144/(sqrt2-1)^2) srank(A) / eps^2)`` and ``kappa = Tr(B)/M``;
    each column becomes ``ceil(c_i/kappa)`` equal pieces.  In best-effort mode
    ``M`` is a cap on the number of pieces (default: the number of non-zero
    columns) and ``kappa`` is the smallest value whose split fits under it.
    """
    A = as_matrix(A, "A")
    mode = check_mode(mode)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = np.einsum("ij,ij->j", A, A)
    trace = float(c.sum())
    norm_B = operator_norm(A) ** 2
    if trace == 0.0:
        raise ValueError("cannot split the zero matrix")
    if mode == STRICT:
        M_req = strict_M(trace, norm_B, epsilon) if M is None else int(M)
        if M_req < strict_M(trace, norm_B, epsilon):
            raise InfeasibleError("M below the strict splitting threshold")
        kappa = trace / M_req
        if trace / kappa > MAX_STRICT_PIECES:
            raise InfeasibleError(f"strict constants need {M_req} pieces (limit {MAX_STRICT_PIECES})")
    else:
        M_req = int(np.count_nonzero(c > 0)) if M is None else int(M)
        kappa = _kappa_for_cap(c, M_req)
    counts = _pieces_for(c, kappa)
    if mode == STRICT and counts.sum() > MAX_STRICT_PIECES:
        raise InfeasibleError(f"split needs {counts.sum()} pieces (limit {MAX_STRICT_PIECES})")
    pieces = []
    for i in np.flatnonzero(counts):
        w = float(c[i] / counts[i])
        pieces.extend([(int(i), w)] * int(counts[i]))
    return SplitPlan(M=len(pieces), kappa=float(kappa), pieces=tuple(pieces),
                     epsilon=float(epsilon), requested_M=M_req)


def choose_k(M, trace_B, norm_B, epsilon):
    """Largest ``k >= 0`` with ``M / 2^k >= 144/(eps^2 (sqrt2 - 1)^2) * Tr(B)/||B||``."""
    if epsilon <= 0 or norm_B <= 0:
        raise ValueError("epsilon and norm_B must be positive")
    threshold = K_CHOICE_CONSTANT * (trace_B / norm_B) / epsilon ** 2
    if M < threshold * (1 - _REL):
        raise ValueError("M below iteration threshold")
    k = 0
    while M / 2 ** (k + 1) >= threshold * (1 - _REL):
        k += 1
    return k


def _alpha(kappa, norm_prev):
    return (1.0 + math.sqrt(2.0 * kappa / norm_prev)) ** 2 if norm_prev > 0 else math.inf


def _chain(ensemble, k_max, budget, seed, exhaustive_max, kappa, accept):
    """Run up to ``k_max`` halving levels; ``accept(piece_idx, level)`` may stop early."""
    current = np.arange(len(ensemble))
    chain = [tuple(current.tolist())]
    levels = []
    beta = 1.0
    beta_trace = []
    norm_prev = operator_norm(ensemble.gram())
    all_met = True
    level = 0
    ss = np.random.SeedSequence(int(seed))
    child_seeds = [int(s.generate_state(1, dtype=np.uint64)[0] >> 1) for s in ss.spawn(64)]
    while (k_max is None or level < k_max) and current.size >= 2:
        level += 1
        sub = ensemble.subset(current)
        lvl_seed = child_seeds[(level - 1) % 64] + (level - 1) // 64
        cert = halve(sub, budget=budget, seed=lvl_seed, exhaustive_max=exhaustive_max)
        nxt = current[list(cert.sigma)]
        a = _alpha(kappa, norm_prev)
        ok = accept(nxt, level)
        levels.append(LevelRecord(level, int(nxt.size), cert, a, beta * a, bool(ok)))
        if not ok:
            break
        all_met &= cert.meets_gamma
        beta *= a
        beta_trace.append(beta)
        current = nxt
        chain.append(tuple(current.tolist()))
        norm_prev = operator_norm(ensemble.subset(current).gram()) if current.size else 0.0
    return current, chain, levels, beta_trace, all_met


def _column_weights(plan, piece_idx, piece_factor, m):
    """Aggregate surviving pieces into per-column multiplicities and ``d_ii``."""
    src = plan.sources[piece_idx]
    w = plan.piece_weights[piece_idx] * piece_factor
    mult = np.bincount(src, minlength=m).astype(np.int64)
    mass = np.bincount(src, weights=w, minlength=m)
    return mult, mass


def theorem1_sparsify(A, epsilon, mode=BEST_EFFORT, budget=20000, seed=0,
                      exhaustive_max=EXHAUSTIVE_MAX, M=None, tol=DEFAULT_TOL):
    """Select a reweighted multiset of columns with ``||ADA^* - AA^*|| <= eps ||A||^2``.

    Strict mode runs exactly ``choose_k`` levels with the ``2^k`` piece weights.
    Best-effort mode keeps halving while the rescaled result still meets the
    ``eps`` sandwich and rescales the survivors by the best common factor; the
    certificate records whether the theoretical constants were respected.
    """
    A = as_matrix(A, "A")
    mode = check_mode(mode)
    n, m = A.shape
    plan = split_equalize(A, epsilon, mode, M)
    ens = plan.ensemble(A)
    c = np.einsum("ij,ij->j", A, A)
    G = A @ A.T
    trace_B, norm_B = float(c.sum()), operator_norm(A) ** 2
    try:
        k_theory = choose_k(plan.M, trace_B, norm_B, epsilon)
    except ValueError:
        if mode == STRICT:
            raise InfeasibleError("M below iteration threshold")
        k_theory = None

    def weights_for(piece_idx, factor):
        mult, mass = _column_weights(plan, piece_idx, factor, m)
        d = np.zeros(m)
        d[c > 0] = mass[c > 0] / c[c > 0]
        return mult, d

    def best_scale(piece_idx):
        _, d = weights_for(piece_idx, 1.0)
        lo, hi = relative_spectrum(G, (A * d) @ A.T)
        return 2.0 / (lo + hi) if lo + hi > 0 else 0.0

    if mode == STRICT:
        final, chain, levels, beta_trace, all_met = _chain(
            ens, k_theory, budget, seed, exhaustive_max, plan.kappa, lambda idx, lvl: True)
        k_used = len(chain) - 1
        factor = float(2 ** k_used)
        respected = all_met
    else:
        def accept(idx, lvl):
            if idx.size == 0:
                return False
            t = best_scale(idx)
            _, d = weights_for(idx, t)
            return approx_membership(A, d, epsilon, tol).meets_epsilon

        final, chain, levels, beta_trace, all_met = _chain(
            ens, None, budget, seed, exhaustive_max, plan.kappa, accept)
        k_used = len(chain) - 1
        factor = best_scale(final)
        respected = k_theory is not None and k_used == k_theory and all_met

    mult, d = weights_for(final, factor)
    D = DiagonalReweighting(d, mult)
    cert = approx_membership(A, D, epsilon, tol, mode, respected)
    eff_c = factor * plan.kappa / (epsilon ** 2 * norm_B)
    return SparsifyResult(
        multiplicities=mult,
        D=D,
        k_used=k_used,
        beta_trace=tuple(beta_trace),
        certificate=cert,
        effective_c=float(eff_c),
        plan=plan,
        piece_sigma=tuple(int(i) for i in final),
        chain=tuple(chain),
        levels=tuple(levels),
        k_theory=k_theory,
        scale=float(factor),
    )


def equal_weight_sparsify(vectors, epsilon, mode=BEST_EFFORT, budget=20000, seed=0,
                          exhaustive_max=EXHAUSTIVE_MAX, M=None, tol=DEFAULT_TOL):
    """Sparsify an identity decomposition ``sum_i v_i v_i^T = I_n`` with equal weights.

    ``vectors`` holds the ``v_i`` as columns (``n x m``).  The result reweights the
    normalised selected vectors uniformly by ``n/|sigma|``; ``D`` is expressed on
    the original ``v_i``.  Equal-norm inputs are never split, so the selection is
    a set.
    """
    A = as_matrix(vectors, "vectors")
    mode = check_mode(mode)
    n, m = A.shape
    resid = operator_norm(A @ A.T - np.eye(n))
    if resid > 1e-8:
        raise ValueError(f"input is not an identity decomposition (||sum v v^T - I|| = {resid:.3e})")
    c = np.einsum("ij,ij->j", A, A)
    nz = c > 0
    equal_norm = bool(np.all(np.abs(c[nz] - c[nz][0]) <= 1e-10 * c[nz][0]))
    trace_B = float(c.sum())
    if equal_norm and M is None:
        # already equalised: one piece per column
        plan = split_equalize(A, epsilon, BEST_EFFORT, int(nz.sum()))
    else:
        plan = split_equalize(A, epsilon, mode, M)
    ens = plan.ensemble(A)
    strict_ok = plan.M >= strict_M(trace_B, 1.0, epsilon)
    try:
        k_theory = choose_k(plan.M, trace_B, 1.0, epsilon)
    except ValueError:
        k_theory = None
    if mode == STRICT and (k_theory is None or not strict_ok):
        raise InfeasibleError("strict constants need more pieces than this decomposition has")

    def uniform(idx):
        mult = np.bincount(plan.sources[idx], minlength=m).astype(np.int64)
        size = int(mult.sum())
        d = np.zeros(m)
        d[nz] = mult[nz] * n / (size * c[nz]) if size else 0.0
        return mult, d

    if mode == STRICT:
        final, chain, levels, beta_trace, all_met = _chain(
            ens, k_theory, budget, seed, exhaustive_max, plan.kappa, lambda idx, lvl: True)
        respected = all_met
    else:
        def accept(idx, lvl):
            if idx.size == 0:
                return False
            return approx_membership(A, uniform(idx)[1], epsilon, tol).meets_epsilon

        final, chain, levels, beta_trace, all_met = _chain(
            ens, None, budget, seed, exhaustive_max, plan.kappa, accept)
        respected = strict_ok and k_theory is not None and len(chain) - 1 == k_theory and all_met

    mult, d = uniform(final)
    if equal_norm and M is None and mult.max() > 1:
        raise AssertionError("equal-norm input produced a repeated column")
    k_used = len(chain) - 1
    D = DiagonalReweighting(d, mult)
    cert = approx_membership(A, D, epsilon, tol, mode, respected)
    size = int(mult.sum())
    return SparsifyResult(
        multiplicities=mult,
        D=D,
        k_used=k_used,
        beta_trace=tuple(beta_trace),
        certificate=cert,
        effective_c=float(n / (size * epsilon ** 2)) if size else 0.0,
        plan=plan,
        piece_sigma=tuple(int(i) for i in final),
        chain=tuple(chain),
        levels=tuple(levels),
        k_theory=k_theory,
        scale=float(n / size) if size else 0.0,
    )
