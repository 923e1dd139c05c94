"""The block-diagonal feasibility problem and its alternating-projection solver.

Given the canonical blocks ``A11``, ``A12`` and an eigenbasis ``V`` of
``A11`` (``A11 V = V D``, orthonormal columns inside each eigenspace), the
matrix is a product of two positive contractions exactly when some
block-diagonal ``Gamma`` satisfies ``Y <= Gamma <= X`` with

    X = D^{1/2} V* (A11 A11* + A12 A12*)^{-1} V D^{1/2},    Y = V* V.

The solver cycles between the three convex sets

    Omega0 = block-diagonal PSD matrices,
    Omega1 = {G : G <= X},
    Omega2 = {G : G >= Y},

visiting Omega1 and Omega2 alternately and projecting onto Omega0 after each.
"""

from __future__ import annotations

import dataclasses
import enum
from collections import deque
from dataclasses import dataclass

import numpy as np

from .canonical import SpectrumReport
from .config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, ToleranceConfig
from .errors import DefectiveBlock, DimensionMismatch
from .kernel import _eigh, _lambda_min, _psd_part, as_matrix, hermitian_view, psd_inverse

HISTORY_FULL = 10_000
HISTORY_STRIDE = 10


@dataclass(frozen=True)
class EigenBasis:
    """Columns of ``V`` are eigenvectors of ``A11``; ``alphas[i]`` is the
    eigenvalue of column ``i`` and ``blocks`` lists ``(offset, size)`` of the
    runs of equal eigenvalues."""

    V: np.ndarray
    alphas: np.ndarray
    blocks: tuple

    @classmethod
    def from_columns(cls, V, alphas) -> "EigenBasis":
        """Wrap a caller-supplied basis; runs of equal ``alphas`` become blocks."""
        V = as_matrix(V, square=True)
        alphas = np.asarray(alphas, dtype=float)
        if alphas.shape != (V.shape[0],):
            raise DimensionMismatch("need one eigenvalue per column of V")
        blocks, start = [], 0
        for i in range(1, len(alphas) + 1):
            if i == len(alphas) or alphas[i] != alphas[start]:
                blocks.append((start, i - start))
                start = i
        return cls(V, alphas, tuple(blocks))

    @property
    def m(self) -> int:
        return self.V.shape[0]

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.alphas).astype(complex)

    def residual(self, A11) -> float:
        return float(np.linalg.norm(A11 @ self.V - self.V * self.alphas))


def _is_upper_triangular(a: np.ndarray, tol: float) -> bool:
    return np.linalg.norm(np.tril(a, -1)) <= tol


def _triangular_eigvecs(T: np.ndarray, alpha: float, positions: list, ctol: float) -> list:
    # back substitution; rows inside the same cluster are set to zero, which is
    # exact when the eigenvalue is semisimple
    m = T.shape[0]
    vecs = []
    for i in positions:
        x = np.zeros(m, dtype=complex)
        x[i] = 1.0
        for r in range(i - 1, -1, -1):
            d = T[r, r] - alpha
            if abs(d) <= ctol:
                continue
            x[r] = -(T[r, r + 1:i + 1] @ x[r + 1:i + 1]) / d
        vecs.append(x)
    return vecs


def _gram_schmidt(vecs: list) -> list:
    out = []
    for x in vecs:
        for _ in range(2):
            for u in out:
                x = x - (u.conj() @ x) * u
        out.append(x / np.linalg.norm(x))
    return out


def build_eigenbasis(A11, spectrum: SpectrumReport, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> EigenBasis:
    """Eigenbasis of ``A11`` grouped by the interior eigenvalue clusters.

    For upper triangular ``A11`` (the canonical case) each eigenvector is
    obtained by back substitution with a unit pivot, and the vectors of each
    cluster are orthonormalized in pivot order. Otherwise each eigenspace is
    taken from the right singular vectors of ``A11 - alpha I``.

    Raises
    ------
    DefectiveBlock
        If an eigenspace dimension differs from its cluster multiplicity or
        the assembled basis is singular.
    """
    A11 = as_matrix(A11, square=True)
    m = A11.shape[0]
    if m != spectrum.interior_count:
        raise DimensionMismatch(f"A11 is {m}x{m} but the spectrum has {spectrum.interior_count} interior eigenvalues")
    scale = max(1.0, np.linalg.norm(A11, 2)) if m else 1.0
    ctol = tol.cluster_tol * max(1.0, spectrum.norm)
    triangular = _is_upper_triangular(A11, tol.basis_tol * scale)
    diag = np.diag(A11)

    cols, alphas, blocks = [], [], []
    for alpha, mult in spectrum.interior_groups:
        positions = [i for i in range(m) if abs(diag[i] - alpha) <= ctol]
        if triangular and len(positions) == mult:
            vecs = _gram_schmidt(_triangular_eigvecs(A11, alpha, positions, ctol))
        else:
            _, s, vh = np.linalg.svd(A11 - alpha * np.eye(m))
            null = int(np.sum(s <= tol.diag_rank_tol * scale))
            if null != mult:
                raise DefectiveBlock(f"eigenspace of {alpha:.6g} has dimension {null}, expected {mult}")
            vecs = list(vh[m - mult:].conj())
        blocks.append((len(cols), mult))
        cols.extend(vecs)
        alphas.extend([alpha] * mult)

    V = np.array(cols, dtype=complex).T.reshape(m, m)
    basis = EigenBasis(V, np.array(alphas, dtype=float), tuple(blocks))
    if m:
        res = basis.residual(A11)
        if res > tol.basis_tol * scale:
            raise DefectiveBlock(f"||A11 V - V D|| = {res:.3e} exceeds {tol.basis_tol:.1e}")
        smin = np.linalg.svd(V, compute_uv=False)[-1]
        if smin <= tol.basis_tol:
            raise DefectiveBlock(f"eigenbasis is singular (sigma_min = {smin:.3e})")
    return basis


@dataclass(frozen=True)
class FeasibilityProblem:
    """Find block-diagonal PSD ``Gamma`` (blocks per ``blocks``) with
    ``Y <= Gamma <= X``."""

    X: np.ndarray
    Y: np.ndarray
    blocks: tuple

    @property
    def m(self) -> int:
        return self.X.shape[0]


def build_problem(basis: EigenBasis, A11, A12, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> FeasibilityProblem:
    """Assemble ``X = D^{1/2} V* (A11 A11* + A12 A12*)^{-1} V D^{1/2}`` and
    ``Y = V* V``.

    Raises
    ------
    SingularOperand
        If ``A11 A11* + A12 A12*`` is not positive definite.
    """
    A11 = as_matrix(A11, square=True)
    A12 = np.asarray(A12, dtype=complex).reshape(A11.shape[0], -1)
    V = basis.V
    H = A11 @ A11.conj().T + A12 @ A12.conj().T
    Hinv = psd_inverse(hermitian_view(H), pd_tol=tol.pd_tol)
    dh = np.sqrt(basis.alphas)
    X = (dh[:, None] * (V.conj().T @ Hinv @ V)) * dh[None, :]
    Y = V.conj().T @ V
    return FeasibilityProblem(
        X=0.5 * (X + X.conj().T),
        Y=0.5 * (Y + Y.conj().T),
        blocks=basis.blocks,
    )


def project_omega0(G, blocks) -> np.ndarray:
    """Nearest block-diagonal PSD matrix: keep the diagonal blocks, replace
    each by its PSD part, drop everything else."""
    G = np.asarray(G, dtype=complex)
    out = np.zeros_like(G)
    for off, size in blocks:
        if size == 1:
            out[off, off] = max(G[off, off].real, 0.0)
        else:
            sl = slice(off, off + size)
            out[sl, sl] = _psd_part(G[sl, sl])
    return out


def project_omega1(G, X) -> np.ndarray:
    """Nearest ``G'`` with ``G' <= X``: ``X - (X - G)^+``."""
    return X - _psd_part(X - G)


def project_omega2(G, Y) -> np.ndarray:
    """Nearest ``G'`` with ``G' >= Y``: ``(G - Y)^+ + Y``."""
    return _psd_part(G - Y) + Y


def initial_gamma(problem: FeasibilityProblem) -> np.ndarray:
    """Block-diagonal average of the diagonal blocks of ``X`` and ``Y``."""
    avg = 0.5 * (problem.X + problem.Y)
    out = np.zeros_like(avg)
    for off, size in problem.blocks:
        sl = slice(off, off + size)
        out[sl, sl] = avg[sl, sl]
    return out


def lower_gamma(problem: FeasibilityProblem) -> np.ndarray:
    """Block-diagonal part of ``Y``, the lower end of the sandwich."""
    out = np.zeros_like(problem.Y)
    for off, size in problem.blocks:
        sl = slice(off, off + size)
        out[sl, sl] = problem.Y[sl, sl]
    return out


def feasibility_error(G, problem: FeasibilityProblem) -> float:
    """``max(0, -lambda_min(G - Y)) + max(0, -lambda_min(X - G))``."""
    return max(0.0, -_lambda_min(G - problem.Y)) + max(0.0, -_lambda_min(problem.X - G))


class SolveStatus(str, enum.Enum):
    FEASIBLE = "feasible"
    STALLED = "stalled"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class SolveOutcome:
    """Result of :func:`solve`.

    ``gamma`` is the last block-diagonal iterate (the solution when
    ``status`` is FEASIBLE) and ``residual`` its feasibility error.
    ``error_history[i]`` is the error after iteration ``history_iterations[i]``.
    """

    status: SolveStatus
    gamma: np.ndarray
    residual: float
    iterations: int
    error_history: np.ndarray
    history_iterations: np.ndarray
    balanced: bool = False

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


def solve(problem: FeasibilityProblem, config: SolverConfig = DEFAULT_SOLVER, gamma0=None) -> SolveOutcome:
    """Alternating projections for ``Omega0 & Omega1 & Omega2``.

    Starting from ``gamma0`` (default :func:`initial_gamma`), iteration ``k`` projects onto
    Omega1 (odd ``k``) or Omega2 (even ``k``) and then onto Omega0. The run
    stops as FEASIBLE once the error of the Omega0 iterate is at most
    ``feas_tol * max(1, ||X||, ||Y||)``; as STALLED when, for both parities, the error changed by
    at most ``stall_rel_change`` (relative) over the last ``stall_window``
    iterations; and as MAX_ITER otherwise.
    """
    X, Y, blocks = problem.X, problem.Y, problem.blocks
    w, rel = config.stall_window, config.stall_rel_change
    recent: deque = deque(maxlen=w + 2)
    hist, hist_it = [], []

    # one-by-one blocks sit on the diagonal; handle them without eigensolves
    scalar_idx = np.array([off for off, size in blocks if size == 1], dtype=int)
    matrix_blocks = [slice(off, off + size) for off, size in blocks if size > 1]

    def to_omega0(G):
        out = np.zeros_like(G)
        if scalar_idx.size:
            out[scalar_idx, scalar_idx] = np.maximum(G[scalar_idx, scalar_idx].real, 0.0)
        for sl in matrix_blocks:
            out[sl, sl] = _psd_part(G[sl, sl])
        return out

    def psd(H):
        ev, vec = _eigh(H)
        out = (vec * np.maximum(ev, 0.0)) @ vec.conj().T
        return 0.5 * (out + out.conj().T)

    # eigenvalue roundoff on the set boundaries grows with the operand scale
    tol = config.feas_tol * max(1.0, float(np.linalg.norm(X, 2)), float(np.linalg.norm(Y, 2))) if X.size else config.feas_tol

    gamma = initial_gamma(problem) if gamma0 is None else np.asarray(gamma0, dtype=complex)
    status = SolveStatus.MAX_ITER
    err = feasibility_error(gamma, problem)
    k = 0
    for k in range(1, config.max_iter + 1):
        if k % 2:
            hat = X - psd(X - gamma)
        else:
            hat = psd(gamma - Y) + Y
        gamma = to_omega0(hat)
        err = max(0.0, -_lambda_min(gamma - Y)) + max(0.0, -_lambda_min(X - gamma))
        if k <= HISTORY_FULL or k % HISTORY_STRIDE == 0:
            hist.append(err)
            hist_it.append(k)
        recent.append(err)
        if err <= tol:
            status = SolveStatus.FEASIBLE
            break
        if len(recent) == w + 2:
            if abs(recent[-1] - recent[1]) <= rel * recent[-1] and abs(recent[-2] - recent[0]) <= rel * recent[-2]:
                status = SolveStatus.STALLED
                break
    if hist_it and hist_it[-1] != k:
        hist.append(err)
        hist_it.append(k)
    return SolveOutcome(
        status=status,
        gamma=gamma,
        residual=float(err),
        iterations=k,
        error_history=np.array(hist),
        history_iterations=np.array(hist_it, dtype=int),
    )


def balance_weights(problem: FeasibilityProblem) -> np.ndarray:
    """Per-block scale ``s_j = (tr Y_jj / tr X_jj)^{1/4}``, one entry per row.

    Congruence by ``diag(s)`` maps ``Y <= Gamma <= X`` onto an equivalent
    problem whose diagonal blocks of ``X`` and ``Y`` have comparable traces.
    """
    s = np.ones(problem.m)
    for off, size in problem.blocks:
        sl = slice(off, off + size)
        tx = float(np.trace(problem.X[sl, sl]).real)
        ty = float(np.trace(problem.Y[sl, sl]).real)
        if tx > 0 and ty > 0:
            s[sl] = (ty / tx) ** 0.25
    return s


def rescale(problem: FeasibilityProblem, s) -> FeasibilityProblem:
    """The problem for ``diag(s) Gamma diag(s)``."""
    s = np.asarray(s, dtype=float)
    outer = s[:, None] * s[None, :]
    return FeasibilityProblem(problem.X * outer, problem.Y * outer, problem.blocks)


def solve_balanced(problem: FeasibilityProblem, config: SolverConfig = DEFAULT_SOLVER, start=initial_gamma) -> SolveOutcome:
    """Run :func:`solve` on the problem rescaled by :func:`balance_weights`,
    starting from ``start(rescaled_problem)``.

    The returned ``gamma`` and ``residual`` are in the original coordinates;
    the status and history refer to the rescaled run.
    """
    s = balance_weights(problem)
    scaled = rescale(problem, s)
    inner = solve(scaled, config, start(scaled))
    gamma = inner.gamma / (s[:, None] * s[None, :])
    return dataclasses.replace(
        inner,
        gamma=gamma,
        residual=feasibility_error(gamma, problem),
        balanced=True,
    )
