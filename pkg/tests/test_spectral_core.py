import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kssparse.spectral_core import (
    DiagonalReweighting,
    approx_membership,
    loewner_leq,
    operator_norm,
    stable_rank,
    sym_eig,
    pinv_sqrt,
)

from oracles import jacobi_eigvals, sandwich, svd2x2


def test_operator_norm_examples():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)
    assert operator_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
    M = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert svd2x2(M)[0] == 1.0
    assert operator_norm(M) == pytest.approx(1.0, rel=1e-12)
    assert operator_norm(np.zeros((2, 3))) == 0.0


def test_operator_norm_matches_closed_form_2x2():
    rng = np.random.default_rng(3)
    for _ in range(50):
        M = rng.standard_normal((2, 2))
        assert operator_norm(M) == pytest.approx(svd2x2(M)[0], rel=1e-10)


def test_operator_norm_transpose_invariant():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n, m = rng.integers(1, 9), rng.integers(1, 13)
        M = rng.standard_normal((n, m))
        assert operator_norm(M) == pytest.approx(operator_norm(M.T), rel=1e-10)


def test_stable_rank_examples():
    assert stable_rank(np.eye(4)) == 4.0
    col = np.zeros((3, 5))
    col[:, 2] = [1.0, -2.0, 0.5]
    assert stable_rank(col) == pytest.approx(1.0, abs=1e-12)
    assert stable_rank(np.diag([2.0, 1.0, 1.0])) == pytest.approx(1.5, abs=1e-12)
    with pytest.raises(ValueError, match="undefined stable rank"):
        stable_rank(np.zeros((2, 2)))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (3, 4), elements=st.floats(-5, 5)),
       st.floats(0.01, 100) | st.floats(-100, -0.01))
def test_stable_rank_scale_invariant(A, c):
    if operator_norm(A) < 1e-3:
        return
    assert stable_rank(c * A) == pytest.approx(stable_rank(A), rel=1e-10)
    r = np.linalg.matrix_rank(A)
    assert 1.0 - 1e-12 <= stable_rank(A) <= r + 1e-12


def test_sym_eig_sorted_and_reconstructs():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((6, 6))
    S = X + X.T
    spec = sym_eig(S)
    assert np.all(np.diff(spec.eigenvalues) <= 0)
    assert np.linalg.norm(spec.reconstruct() - S, 2) <= 1e-9 * max(1.0, operator_norm(S))
    assert np.allclose(spec.eigenvalues[::-1], jacobi_eigvals(S), atol=1e-10)
    assert np.allclose(spec.eigenvectors.T @ spec.eigenvectors, np.eye(6), atol=1e-12)


def test_loewner_examples():
    I = np.eye(3)
    assert loewner_leq(I, 2 * I)
    P = np.array([[2.0, 1.0], [1.0, 3.0]])
    assert loewner_leq(P, P)
    # lambda_min(diag(2,1) - diag(1,2)) = -1
    assert not loewner_leq(np.diag([1.0, 2.0]), np.diag([2.0, 1.0]))
    with pytest.raises(ValueError, match="not symmetric"):
        loewner_leq(np.array([[0.0, 1.0], [0.0, 0.0]]), I[:2, :2])


def _random_psd(rng, n):
    X = rng.standard_normal((n, n))
    return X @ X.T


def test_loewner_partial_order_properties():
    rng = np.random.default_rng(7)
    for _ in range(50):
        P, E1, E2 = (_random_psd(rng, 4) for _ in range(3))
        Q = P + E1
        R = Q + E2
        assert loewner_leq(P, P)
        assert loewner_leq(P, Q) and loewner_leq(Q, R) and loewner_leq(P, R)
        if loewner_leq(Q, P):
            assert np.allclose(P, Q, atol=1e-6)
        S = rng.standard_normal((4, 4))
        S = S + S.T
        if loewner_leq(P, S) and loewner_leq(S, P):
            assert np.linalg.norm(P - S, 2) <= 1e-6 * max(1, operator_norm(P))


def test_approx_membership_identity_is_exact():
    rng = np.random.default_rng(2)
    for _ in range(20):
        A = rng.standard_normal((3, 7))
        cert = approx_membership(A, np.ones(7), 0.0)
        assert cert.gap == 0.0
        assert cert.meets_epsilon
        assert cert.alpha_achieved == pytest.approx(1.0, abs=1e-12)
        assert cert.beta_achieved == pytest.approx(1.0, abs=1e-12)


def test_approx_membership_small_support_fails():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((3, 6))
    d = np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    cert = approx_membership(A, d, 0.9)
    assert not cert.meets_epsilon
    assert cert.alpha_achieved == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("eps, meets", [(0.5, False), (0.999, False), (1.0, True), (1.5, True)])
def test_approx_membership_doubled_weights(eps, meets):
    A = np.random.default_rng(5).standard_normal((3, 5))
    cert = approx_membership(A, 2 * np.ones(5), eps)
    assert cert.alpha_achieved == pytest.approx(2.0, abs=1e-10)
    assert cert.beta_achieved == pytest.approx(2.0, abs=1e-10)
    assert cert.meets_epsilon is meets


def test_approx_membership_matches_independent_sandwich():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n, m = rng.integers(1, 5), rng.integers(5, 10)
        A = rng.standard_normal((n, m))
        d = rng.uniform(0, 3, size=m)
        cert = approx_membership(A, d, 0.5)
        lo, hi = sandwich(A, d)
        assert cert.alpha_achieved == pytest.approx(lo, abs=1e-9)
        assert cert.beta_achieved == pytest.approx(hi, abs=1e-9)


def test_approx_membership_rank_deficient_uses_range():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((2, 6))
    A = np.vstack([A, A[0] + A[1]])  # rank 2 in R^3
    cert = approx_membership(A, np.full(6, 1.1), 0.2)
    assert cert.alpha_achieved == pytest.approx(1.1, abs=1e-9)
    assert cert.beta_achieved == pytest.approx(1.1, abs=1e-9)
    assert cert.meets_epsilon


def test_approx_membership_dimension_mismatch():
    with pytest.raises(ValueError):
        approx_membership(np.eye(3), np.ones(4), 0.1)


def test_approx_membership_zero_matrix_vacuous():
    cert = approx_membership(np.zeros((1, 3)), np.zeros(3), 0.1)
    assert cert.meets_epsilon and cert.gap == 0.0


def test_diagonal_reweighting_invariants():
    D = DiagonalReweighting([0.0, 2.0, 2.0], [0, 1, 3])
    assert D.dim == 3 and D.support_size == 2 and D.unit_weight == 2.0
    assert DiagonalReweighting([1.0, 2.0], [1, 1]).unit_weight is None
    with pytest.raises(ValueError):
        DiagonalReweighting([0.0, 1.0], [1, 1])
    with pytest.raises(ValueError):
        DiagonalReweighting([-1.0, 1.0], [1, 1])
    w = np.array([1.0, 0.0])
    DiagonalReweighting.from_weights(w)
    w[0] = 5.0  # caller's array stays writable


def test_pinv_sqrt_on_range():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((4, 2))
    G = X @ X.T
    R = pinv_sqrt(G)
    P = R @ G @ R
    # projector onto range(G)
    assert np.allclose(P @ P, P, atol=1e-10)
    assert np.trace(P) == pytest.approx(2.0, abs=1e-10)
