import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import projection_product_block, random_psd_contraction, random_unitary
from poscontract.canonical import CanonicalForm, analyze_spectrum
from poscontract.config import DEFAULT_TOLERANCES
from poscontract.dilation import build_dilation, cross_validate, is_projection_product, projection_dilations
from poscontract.errors import ConditionCViolated
from poscontract.factors import Decomposition, decompose, measure
from poscontract.kernel import principal_sqrt
from poscontract.reference_cases import FIVE_A11, FIVE_A12, SEVEN_A11, SEVEN_A12, THREE_A11, upper_block
from strategies import seeds

DIL_TOL = DEFAULT_TOLERANCES.dil_tol

# contraction with A11 U = U diag(0.15, 0.15, 0.2)
THREE_U = np.array([[1.0, 0.0, 0.0], [0.0, 5.0, 3.0], [0.0, 0.0, 4.0]]) / np.array([1.0, np.sqrt(40), np.sqrt(40)])
THREE_D = np.array([0.15, 0.15, 0.2])


def _canonical(A11, A12, p=0):
    """Canonical form of ``I_p (+) [[A11, A12], [0, 0]]`` in its own basis."""
    A11 = np.asarray(A11, dtype=complex)
    A12 = np.asarray(A12, dtype=complex)
    m, q = A11.shape[0], A12.shape[1]
    n = p + m + q
    block = np.zeros((n, n), dtype=complex)
    block[:p, :p] = np.eye(p)
    block[p:p + m, p:p + m] = A11
    block[p:p + m, p + m:] = A12
    return CanonicalForm(np.eye(n), p, q, A11, A12, analyze_spectrum(block), block)


def _direct_sum(p, zeros, alphas, perturb=None):
    n = p + zeros + 2 * len(alphas)
    T = np.zeros((n, n))
    T[:p, :p] = np.eye(p)
    for i, a in enumerate(alphas):
        k = p + zeros + 2 * i
        T[k:k + 2, k:k + 2] = projection_product_block(a)
    if perturb is not None:
        i, delta = perturb
        k = p + zeros + 2 * i
        T[k, k + 1] += delta
    return T


def _nonzero_eigs(M, tol=1e-6):
    w = np.linalg.eigvals(M)
    return np.sort(w[np.abs(w) > tol].real)


class TestBuildDilation:
    def test_equality_case(self):
        d = np.array([0.7, 0.3])
        canon = _canonical(np.diag(d), np.diag(np.sqrt(d - d * d)))
        dil = build_dilation(canon, np.eye(2), d)
        assert np.allclose(dil.R, 0) and np.allclose(dil.C, 0)
        assert dil.T_tilde.shape == (8, 8)
        assert is_projection_product(dil.T_tilde)

    def test_three_by_three_contraction(self):
        # exact A12 for which U D U* = A11 A11* + A12 A12*
        H = THREE_U @ np.diag(THREE_D) @ THREE_U.T
        A12 = principal_sqrt(H - THREE_A11 @ THREE_A11.T)
        canon = _canonical(THREE_A11, A12)
        dil = build_dilation(canon, THREE_U, THREE_D)
        assert np.linalg.norm(dil.C) <= 1e-6
        R_ref = principal_sqrt(np.linalg.inv(THREE_U @ THREE_U.T) - np.eye(3))
        assert np.allclose(dil.R, R_ref, atol=1e-12)
        assert dil.rr_residual(THREE_U) <= DIL_TOL
        assert is_projection_product(dil.T_tilde)
        assert np.allclose(_nonzero_eigs(dil.T_tilde), _nonzero_eigs(canon.block_matrix()), atol=1e-9)

    def test_rejects_non_intertwining(self):
        canon = _canonical(np.diag([0.7, 0.3]), np.diag([0.4, 0.4]))
        with pytest.raises(ConditionCViolated):
            build_dilation(canon, random_unitary(np.random.default_rng(1), 2), [0.7, 0.3])

    def test_rejects_condition_c_failure(self):
        # U D U* = D < A11 A11* + A12 A12* once A12 is too large
        canon = _canonical(np.diag([0.7, 0.3]), np.diag([0.6, 0.6]))
        with pytest.raises(ConditionCViolated):
            build_dilation(canon, np.eye(2), [0.7, 0.3])

    @pytest.mark.parametrize("A11, A12", [(FIVE_A11, FIVE_A12), (SEVEN_A11, SEVEN_A12)], ids=["five", "seven"])
    def test_from_solver(self, A11, A12):
        A = upper_block(A11, A12)
        dec = decompose(A)
        dil = build_dilation(dec.canonical, dec.U, dec.basis.alphas)
        H = dec.canonical.A11 @ dec.canonical.A11.conj().T + dec.canonical.A12 @ dec.canonical.A12.conj().T
        A11c = dec.canonical.A11
        cc = H + A11c @ dil.C @ dil.C.conj().T @ A11c.conj().T
        assert np.linalg.norm(cc - dec.U @ np.diag(dec.basis.alphas) @ dec.U.conj().T) <= DIL_TOL
        assert dil.rr_residual(dec.U) <= DIL_TOL
        assert is_projection_product(dil.T_tilde)
        assert np.allclose(_nonzero_eigs(dil.T_tilde), _nonzero_eigs(A), atol=1e-8)
        assert np.linalg.matrix_rank(dil.T_tilde, tol=1e-8) == np.linalg.matrix_rank(A, tol=1e-8)


class TestIsProjectionProduct:
    def test_orthogonal_projection(self, rng):
        S = random_unitary(rng, 4)
        v = is_projection_product(S @ np.diag([1.0, 1.0, 0.0, 0.0]) @ S.conj().T)
        assert v and v.S.shape[1] == 0

    def test_canonical_block(self):
        assert is_projection_product(projection_product_block(0.5))

    def test_intro_matrix(self):
        v = is_projection_product([[0.36, 0.12], [0.0, 0.64]])
        assert not v and v.reasons

    def test_non_reducing_one_eigenspace(self):
        assert not is_projection_product([[1.0, 0.3], [0.0, 0.5]])

    @given(seeds, st.integers(0, 2), st.integers(0, 2), st.lists(st.floats(0.05, 0.95), min_size=0, max_size=3))
    def test_canonical_oracle(self, seed, p, zeros, alphas):
        assume(p + zeros + len(alphas) > 0)
        S = random_unitary(np.random.default_rng(seed), p + zeros + 2 * len(alphas))
        assert is_projection_product(S @ _direct_sum(p, zeros, alphas) @ S.conj().T)

    @given(seeds, st.integers(0, 2), st.lists(st.floats(0.05, 0.95), min_size=1, max_size=3), st.data())
    def test_perturbed_oracle(self, seed, p, alphas, data):
        i = data.draw(st.integers(0, len(alphas) - 1))
        delta = data.draw(st.sampled_from([-0.05, 0.05]))
        T = _direct_sum(p, 0, alphas, perturb=(i, delta))
        S = random_unitary(np.random.default_rng(seed), T.shape[0])
        assert not is_projection_product(S @ T @ S.conj().T)


class TestCrossValidate:
    def test_projections(self, rng):
        S = random_unitary(rng, 3)
        P = S @ np.diag([1.0, 0.0, 0.0]) @ S.conj().T
        dec = measure(P, P, P)
        rep = cross_validate(P, dec)
        assert rep.passed
        Pt, _ = projection_dilations(P, P)
        # sqrt(P - P^2) of a projection is only roundoff-sized
        assert np.allclose(Pt[3:6, :3], 0, atol=1e-8)

    def test_half_identity(self):
        P, Q = 0.5 * np.eye(2), np.eye(2)
        Pt, Qt = projection_dilations(P, Q)
        assert np.allclose(Pt[:2, 2:4], 0.5 * np.eye(2))
        assert np.allclose(Qt[:2, 4:], 0)
        assert cross_validate(P, measure(P, P, Q)).passed

    def test_five_by_five(self):
        A = upper_block(FIVE_A11, FIVE_A12)
        rep = cross_validate(A, decompose(A), tol=1e-10)
        assert rep.passed, rep.violations

    def test_wrong_product_fails(self):
        P, Q = 0.5 * np.eye(2), np.eye(2)
        rep = cross_validate(np.eye(2), measure(0.5 * np.eye(2), P, Q))
        assert not rep.passed
        assert any("A" in v for v in rep.violations)

    def test_non_contraction_fails(self):
        P = 2.0 * np.eye(2)
        rep = cross_validate(P, measure(P, P, np.eye(2)))
        assert not rep.passed

    @given(seeds, st.integers(2, 5))
    def test_soundness_on_round_trips(self, seed, n):
        rng = np.random.default_rng(seed)
        A = random_psd_contraction(rng, n) @ random_psd_contraction(rng, n)
        assume(np.linalg.svd(A, compute_uv=False)[-1] ** 2 > DEFAULT_TOLERANCES.pd_tol)
        dec = decompose(A)
        assert isinstance(dec, Decomposition)
        assert cross_validate(A, dec).passed
        dil = build_dilation(dec.canonical, dec.U, dec.basis.alphas)
        assert is_projection_product(dil.T_tilde)
