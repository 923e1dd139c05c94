import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian, random_unitary
from poscontract.canonical import analyze_spectrum, canonicalize
from poscontract.config import SolverConfig
from poscontract.factors import Decomposition, decompose
from poscontract.feasibility import (
    EigenBasis,
    FeasibilityProblem,
    SolveStatus,
    balance_weights,
    build_eigenbasis,
    build_problem,
    feasibility_error,
    initial_gamma,
    lower_gamma,
    project_omega0,
    project_omega1,
    project_omega2,
    rescale,
    solve,
    solve_balanced,
)
from poscontract.errors import DefectiveBlock, SingularOperand
from poscontract.kernel import lambda_min
from poscontract.reference_cases import (
    BOUNDARY_A,
    BOUNDARY_ACCEPT,
    BOUNDARY_B,
    FIVE_A11,
    FIVE_A12,
    FIVE_ALPHAS,
    FIVE_GAMMA,
    FIVE_V,
    SEVEN_A11,
    SEVEN_A12,
    SEVEN_ALPHAS,
    SEVEN_GAMMA,
    SEVEN_V,
    THREE_A11,
    THREE_A12,
    THREE_ALPHAS,
    THREE_V,
    THREE_X,
    THREE_Y_OFF,
    align_to_reference,
    input_eigenvectors,
    upper_block,
)
from strategies import seeds

EIG_TOL = 1e-9


def _basis(A11):
    return build_eigenbasis(A11, analyze_spectrum(A11))


def _three_problem():
    return build_problem(EigenBasis.from_columns(THREE_V, THREE_ALPHAS), THREE_A11, THREE_A12)


def _block_diag_psd(rng, blocks, low=2.0, high=3.0):
    m = sum(size for _, size in blocks)
    G = np.zeros((m, m), dtype=complex)
    for off, size in blocks:
        u = random_unitary(rng, size)
        G[off:off + size, off:off + size] = (u * rng.uniform(low, high, size)) @ u.conj().T
    return G


def _random_psd(rng, m, high=1.0):
    u = random_unitary(rng, m)
    return (u * rng.uniform(0.0, high, m)) @ u.conj().T


def _blocks_from_sizes(sizes):
    out, off = [], 0
    for s in sizes:
        out.append((off, s))
        off += s
    return tuple(out)


@st.composite
def sandwiched_problems(draw):
    """Feasible instance ``Y = G* - E <= G* <= G* + F = X`` with ``G*`` known."""
    rng = np.random.default_rng(draw(seeds))
    blocks = _blocks_from_sizes(draw(st.lists(st.integers(1, 3), min_size=1, max_size=3)))
    star = _block_diag_psd(rng, blocks)
    m = star.shape[0]
    X = star + _random_psd(rng, m)
    Y = star - _random_psd(rng, m)
    return FeasibilityProblem(0.5 * (X + X.conj().T), 0.5 * (Y + Y.conj().T), blocks), star


class TestEigenbasis:
    def test_diagonal(self):
        b = _basis(np.diag([0.9, 0.4]))
        assert np.allclose(np.abs(b.V), np.eye(2))
        assert np.allclose(b.alphas, [0.9, 0.4])

    def test_three_by_three_eigenspaces(self):
        b = _basis(THREE_A11)
        assert np.allclose(b.alphas, [0.2, 0.15, 0.15])
        assert b.blocks == ((0, 1), (1, 2))
        assert b.residual(THREE_A11) <= 1e-12
        group = b.V[:, 1:]
        assert np.allclose(group.conj().T @ group, np.eye(2), atol=1e-12)
        # same eigenspaces as the printed basis
        ref = THREE_V[:, :2]
        assert np.allclose(ref @ ref.T @ group, group, atol=1e-12)
        assert abs(abs(np.vdot(b.V[:, 0], THREE_V[:, 2])) - 1.0) <= 1e-12

    def test_five_by_five(self):
        A = upper_block(FIVE_A11, FIVE_A12)
        c = canonicalize(A)
        b = build_eigenbasis(c.A11, c.spectrum)
        assert np.allclose(np.linalg.norm(b.V, axis=0), 1.0)
        for off, size in b.blocks:
            g = b.V[:, off:off + size]
            assert np.allclose(g.conj().T @ g, np.eye(size), atol=1e-12)
        assert sorted(size for _, size in b.blocks) == [1, 2, 2]

    def test_defective_block(self):
        A11 = np.array([[0.5, 0.4], [0.0, 0.5]])
        with pytest.raises(DefectiveBlock):
            _basis(A11)

    def test_from_columns_groups_runs(self):
        b = EigenBasis.from_columns(np.eye(4), [0.3, 0.3, 0.2, 0.3])
        assert b.blocks == ((0, 2), (2, 1), (3, 1))


class TestBuildProblem:
    def test_three_by_three(self):
        prob = _three_problem()
        assert np.allclose(prob.X, THREE_X, atol=1e-3)
        assert np.allclose(prob.Y[[0, 1], [2, 2]], [THREE_Y_OFF, -THREE_Y_OFF], atol=1e-3)
        assert np.allclose(np.diag(prob.Y), 1.0)

    def test_normal_block_is_trivially_feasible(self, rng):
        u = random_unitary(rng, 3)
        d = np.array([0.7, 0.4, 0.2])
        A11 = (u * d) @ u.conj().T
        prob = build_problem(EigenBasis.from_columns(u, d), A11, np.zeros((3, 3)))
        assert np.allclose(prob.X, np.diag(1 / d), atol=1e-12)
        assert np.allclose(prob.Y, np.eye(3), atol=1e-12)
        assert feasibility_error(np.eye(3), prob) <= 1e-14

    def test_boundary_pair(self):
        a, b, p = BOUNDARY_A, BOUNDARY_B, BOUNDARY_ACCEPT
        A11 = np.array([[a, p], [0.0, b]])
        basis = _basis(A11)
        g = np.hypot(a - b, p)
        V_ref = np.array([[1.0, p / g], [0.0, (b - a) / g]])
        assert np.allclose(np.abs(basis.V), np.abs(V_ref), atol=1e-12)
        prob = build_problem(basis, A11, np.zeros((2, 2)))
        assert np.allclose(np.abs(prob.Y), [[1, p / g], [p / g, 1]], atol=1e-12)
        # A11^{-1} V = V D^{-1} turns X into D^{-1/2} Y D^{-1/2}
        scale = 1 / np.sqrt(basis.alphas)
        assert np.allclose(prob.X, scale[:, None] * prob.Y * scale[None, :], atol=1e-12)

    def test_singular(self):
        # sigma_min(A11)^2 = 1e-14 is below pd_tol
        A11 = np.diag([0.5, 1e-7])
        with pytest.raises(SingularOperand):
            build_problem(_basis(A11), A11, np.zeros((2, 1)))


class TestProjections:
    def test_omega0_examples(self):
        G = np.diag([2.0, 1.0])
        assert np.allclose(project_omega0(G, ((0, 1), (1, 1))), G)
        assert np.allclose(project_omega0([[1.0, 5.0], [5.0, -1.0]], ((0, 1), (1, 1))), np.diag([1.0, 0.0]))
        assert np.allclose(project_omega0([[0.0, 1.0], [1.0, 0.0]], ((0, 2),)), 0.5 * np.ones((2, 2)))

    def test_omega1_examples(self):
        X = np.diag([1.0, 2.0])
        assert np.allclose(project_omega1(0.5 * X, X), 0.5 * X)
        assert np.allclose(project_omega1(X + np.eye(2), X), X)
        assert np.allclose(project_omega1(2 * X, X), X)

    def test_omega2_examples(self):
        Y = np.array([[1.0, 0.3], [0.3, 1.0]])
        assert np.allclose(project_omega2(Y, Y), Y)
        assert np.allclose(project_omega2(Y + np.eye(2), Y), Y + np.eye(2))
        assert np.allclose(project_omega2(Y - np.eye(2), Y), Y)

    @given(seeds, st.lists(st.integers(1, 3), min_size=1, max_size=3))
    def test_membership_idempotence_nonexpansive(self, seed, sizes):
        rng = np.random.default_rng(seed)
        blocks = _blocks_from_sizes(sizes)
        m = sum(sizes)
        X, Y = random_hermitian(rng, m), random_hermitian(rng, m)
        G1, G2 = random_hermitian(rng, m, 3.0), random_hermitian(rng, m, 3.0)
        maps = [
            lambda G: project_omega0(G, blocks),
            lambda G: project_omega1(G, X),
            lambda G: project_omega2(G, Y),
        ]
        p0 = maps[0](G1)
        off = p0.copy()
        for o, s in blocks:
            off[o:o + s, o:o + s] = 0
        assert np.all(off == 0)
        assert lambda_min(p0) >= -EIG_TOL
        assert lambda_min(X - maps[1](G1)) >= -EIG_TOL
        assert lambda_min(maps[2](G1) - Y) >= -EIG_TOL
        for proj in maps:
            once = proj(G1)
            assert np.linalg.norm(proj(once) - once) <= EIG_TOL
            assert np.linalg.norm(proj(G1) - proj(G2)) <= np.linalg.norm(G1 - G2) + EIG_TOL


class TestInitialGammaAndError:
    def test_identity(self):
        prob = FeasibilityProblem(np.eye(2), np.eye(2), ((0, 1), (1, 1)))
        assert np.allclose(initial_gamma(prob), np.eye(2))

    def test_three_by_three(self):
        g0 = initial_gamma(_three_problem())
        expected = [[1.15, -0.15, 0.0], [-0.15, 1.15, 0.0], [0.0, 0.0, 1.3]]
        assert np.allclose(g0, expected, atol=1e-3)

    def test_two_by_two_distinct(self):
        prob = build_problem(_basis(np.array([[0.6, 0.1], [0.0, 0.2]])), [[0.6, 0.1], [0.0, 0.2]], np.zeros((2, 2)))
        assert np.allclose(initial_gamma(prob), np.diag((np.diag(prob.X) + 1) / 2))

    def test_lower_start_is_identity_for_unit_columns(self):
        assert np.allclose(lower_gamma(_three_problem()), np.eye(3), atol=1e-12)

    def test_error_examples(self):
        prob = FeasibilityProblem(np.diag([3.0, 3.0]), np.eye(2), ((0, 2),))
        assert feasibility_error(2 * np.eye(2), prob) == 0.0
        assert feasibility_error(prob.Y - np.eye(2), prob) >= 1.0

    @given(st.floats(1.001, 1.299), st.floats(1.001, 1.299), st.floats(1.001, 1.299), st.floats(-0.2, 0.2))
    def test_three_by_three_has_no_interior_solution(self, mu1, mu2, mu3, c):
        prob = _three_problem()
        G = np.array([[mu1, c, 0.0], [c, mu2, 0.0], [0.0, 0.0, mu3]])
        assert feasibility_error(G, prob) > 0


class TestSolve:
    def _reference(self, A11, A12, V_ref, alphas_ref, gamma_ref, tol):
        dec = decompose(upper_block(A11, A12))
        assert isinstance(dec, Decomposition)
        out = dec.outcome
        assert out.status is SolveStatus.FEASIBLE
        assert out.residual <= 1e-10
        g = align_to_reference(input_eigenvectors(dec), dec.basis.alphas, V_ref, alphas_ref, out.gamma).real
        assert np.max(np.abs(g - gamma_ref)) <= tol

    def test_five_by_five(self):
        self._reference(FIVE_A11, FIVE_A12, FIVE_V, FIVE_ALPHAS, FIVE_GAMMA, 1e-2)

    def test_seven_by_seven(self):
        self._reference(SEVEN_A11, SEVEN_A12, SEVEN_V, SEVEN_ALPHAS, SEVEN_GAMMA, 1e-2)

    def test_three_by_three_does_not_converge(self):
        out = solve(_three_problem())
        assert out.status in (SolveStatus.STALLED, SolveStatus.MAX_ITER)
        assert out.residual > 1e-5

    def test_history_is_recorded(self):
        out = solve(_three_problem(), SolverConfig(max_iter=50, stall_window=1000))
        assert out.status is SolveStatus.MAX_ITER
        assert out.iterations == 50
        assert list(out.history_iterations) == list(range(1, 51))
        assert out.error_history[-1] == out.residual

    def test_deterministic(self):
        prob = _three_problem()
        cfg = SolverConfig(max_iter=2000)
        a, b = solve(prob, cfg), solve(prob, cfg)
        assert np.array_equal(a.error_history, b.error_history)
        assert np.array_equal(a.gamma, b.gamma)

    def test_explicit_start(self):
        prob = _three_problem()
        cfg = SolverConfig(max_iter=1)
        a = solve(prob, cfg, lower_gamma(prob))
        b = solve(prob, cfg)
        assert not np.allclose(a.gamma, b.gamma)
        g = project_omega0(project_omega1(lower_gamma(prob), prob.X), prob.blocks)
        assert np.allclose(a.gamma, g, atol=1e-12)

    @given(sandwiched_problems())
    def test_soundness(self, case):
        prob, _ = case
        cfg = SolverConfig()
        out = solve(prob, cfg)
        assert out.feasible
        scale = max(1.0, np.linalg.norm(prob.X, 2), np.linalg.norm(prob.Y, 2))
        slack = cfg.feas_tol * scale + EIG_TOL
        assert lambda_min(out.gamma - prob.Y) >= -slack
        assert lambda_min(prob.X - out.gamma) >= -slack
        assert np.allclose(project_omega0(out.gamma, prob.blocks), out.gamma, atol=EIG_TOL)

    @given(sandwiched_problems())
    def test_fejer_monotone(self, case):
        prob, star = case
        dists = []
        for k in range(1, 25):
            out = solve(prob, SolverConfig(max_iter=k))
            dists.append(np.linalg.norm(out.gamma - star))
            if out.feasible:
                break
        d0 = np.linalg.norm(initial_gamma(prob) - star)
        dists = [d0] + dists
        assert all(b <= a + 1e-10 * max(1.0, a) for a, b in zip(dists, dists[1:]))


class TestBalancing:
    def test_unit_weights_when_traces_match(self):
        prob = FeasibilityProblem(np.eye(3), np.eye(3), ((0, 1), (1, 2)))
        assert np.allclose(balance_weights(prob), 1.0)

    def test_weights_equalize_traces(self):
        X = np.diag([16.0, 4.0, 4.0])
        prob = FeasibilityProblem(X, np.eye(3), ((0, 1), (1, 2)))
        s = balance_weights(prob)
        assert np.allclose(s, [0.5, 1 / np.sqrt(2), 1 / np.sqrt(2)])
        scaled = rescale(prob, s)
        assert np.allclose(np.diag(scaled.X) * np.diag(scaled.Y), 1.0)

    @given(sandwiched_problems())
    def test_rescaling_preserves_solutions(self, case):
        prob, star = case
        s = balance_weights(prob)
        assert feasibility_error(star * np.outer(s, s), rescale(prob, s)) <= 1e-12

    @given(sandwiched_problems())
    def test_balanced_gamma_in_original_coordinates(self, case):
        prob, _ = case
        out = solve_balanced(prob)
        assert out.balanced
        assert out.residual == pytest.approx(feasibility_error(out.gamma, prob), abs=1e-15)
        assert out.feasible
        assert out.residual <= 1e-9
