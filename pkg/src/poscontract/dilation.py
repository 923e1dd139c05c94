"""Independent checks based on products of two orthogonal projections.

Two routes are provided. :func:`build_dilation` turns an intertwining
contraction ``U11`` into a matrix ``T~`` of size ``n + 2m`` that must be a
product of two orthogonal projections, which :func:`is_projection_product`
tests directly. :func:`cross_validate` embeds a decomposition ``A = PQ`` into
orthogonal projections of size ``3n`` and checks them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .canonical import CanonicalForm, analyze_spectrum
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .errors import ConditionCViolated, NotPSD
from .factors import Decomposition
from .kernel import as_matrix, hermitian_eig, hermitian_view, principal_sqrt


@dataclass(frozen=True)
class DilationData:
    R: np.ndarray
    C: np.ndarray
    T_tilde: np.ndarray
    p: int
    m: int

    def rr_residual(self, U11) -> float:
        """``||(I + R*R) U11 U11* - I||``."""
        m = self.m
        return float(np.linalg.norm((np.eye(m) + self.R.conj().T @ self.R) @ U11 @ U11.conj().T - np.eye(m)))


def build_dilation(
    canon: CanonicalForm,
    U11,
    D,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
) -> DilationData:
    """Assemble the dilation ``T~`` from an invertible contraction ``U11`` with
    ``A11 U11 = U11 D`` and ``U11 D U11* >= A11 A11* + A12 A12*``.

    ``R = ((U11 U11*)^{-1} - I)^{1/2}`` and
    ``C = A11^{-1} (U11 D U11* - A11 A11* - A12 A12*)^{1/2}``.

    Raises
    ------
    ConditionCViolated
        If the intertwining relation fails or either square-root argument is
        not positive semidefinite.
    """
    A11, A12 = canon.A11, canon.A12
    m = A11.shape[0]
    U11 = as_matrix(U11, square=True)
    D = np.asarray(D, dtype=complex)
    if D.ndim == 1:
        D = np.diag(D)
    scale = max(1.0, np.linalg.norm(A11))
    inter = np.linalg.norm(A11 @ U11 - U11 @ D)
    if inter > tol.dil_tol * scale * max(1.0, np.linalg.norm(U11)):
        raise ConditionCViolated(f"||A11 U11 - U11 D|| = {inter:.3e}")
    H = A11 @ A11.conj().T + A12 @ A12.conj().T
    try:
        R = principal_sqrt(hermitian_view(np.linalg.inv(U11 @ U11.conj().T) - np.eye(m)), tol.psd_tol)
    except NotPSD as exc:
        raise ConditionCViolated(f"U11 is not a contraction: {exc}") from exc
    try:
        S = principal_sqrt(hermitian_view(U11 @ D @ U11.conj().T - H), tol.psd_tol)
    except NotPSD as exc:
        raise ConditionCViolated(f"U11 D U11* - A11 A11* - A12 A12* is not PSD: {exc}") from exc
    C = np.linalg.solve(A11, S)

    n, p = canon.n, canon.p
    z = n - p - m
    N = n + 2 * m
    T = np.zeros((N, N), dtype=complex)
    T[:p, :p] = np.eye(p)
    r1 = slice(p, p + m)  # A11 rows
    c2 = slice(p + m, p + m + z)  # zero block
    r3 = slice(n, n + m)  # R rows
    c4 = slice(n + m, N)  # trailing C columns
    T[r1, r1] = A11
    T[r1, c2] = A12
    T[r1, c4] = A11 @ C
    T[r3, r1] = R @ A11
    T[r3, c2] = R @ A12
    T[r3, c4] = R @ A11 @ C
    return DilationData(R=R, C=C, T_tilde=T, p=p, m=m)


@dataclass
class ProjectionProductVerdict:
    """Outcome of :func:`is_projection_product`; truthy when it holds.

    ``S`` has orthonormal eigenvector columns (one group per interior
    eigenvalue) expressed in the basis ``complement`` of the orthogonal
    complement of the eigenvalue-one eigenspace.
    """

    holds: bool
    S: np.ndarray | None = None
    complement: np.ndarray | None = None
    reasons: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds


def _null_space(a: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    _, s, vh = np.linalg.svd(a)
    k = a.shape[1]
    return vh[k - dim:].conj().T, vh[: k - dim].conj().T


def is_projection_product(T, tol: float = DEFAULT_TOLERANCES.dil_tol, tolerances: ToleranceConfig = DEFAULT_TOLERANCES) -> ProjectionProductVerdict:
    """Test whether ``T`` is a product of two orthogonal projections.

    ``T`` qualifies when its spectrum is real in [0, 1] and semisimple, its
    eigenvalue-one eigenspace reduces it (``T*u = u`` for ``Tu = u``), and on
    the complement ``A1`` the interior eigenvectors ``S`` satisfy
    ``A1 A1* S = A1 S = S diag(a_j)`` with ``S`` of full column rank.
    """
    T = as_matrix(T, square=True)
    n = T.shape[0]
    scale = max(1.0, np.linalg.norm(T, 2)) if n else 1.0
    thr = tol * scale
    spec = analyze_spectrum(T, tolerances)
    verdict = ProjectionProductVerdict(False)
    if not spec.in_unit_interval:
        verdict.reasons.append("spectrum not contained in [0, 1]")
        return verdict
    if not spec.diagonalizable:
        verdict.reasons.append("not diagonalizable")
        return verdict

    p = spec.ones_count
    if p:
        ones, comp = _null_space(T - np.eye(n), p)
        reduce_err = float(np.linalg.norm(T.conj().T @ ones - ones))
        verdict.checks["eigenvalue-one reducing"] = reduce_err
        if reduce_err > thr:
            verdict.reasons.append(f"eigenvalue-one eigenspace does not reduce T ({reduce_err:.3e})")
            return verdict
    else:
        comp = np.eye(n, dtype=complex)
    A1 = comp.conj().T @ T @ comp

    cols, alphas = [], []
    k = A1.shape[0]
    for alpha, mult in spec.interior_groups:
        vecs, _ = _null_space(A1 - alpha * np.eye(k), mult)
        cols.append(vecs)
        alphas.extend([alpha] * mult)
    S = np.hstack(cols) if cols else np.zeros((k, 0), dtype=complex)
    alphas = np.array(alphas)
    verdict.S, verdict.complement = S, comp
    if S.shape[1]:
        eig_err = float(np.linalg.norm(A1 @ S - S * alphas))
        gram_err = float(np.linalg.norm(A1 @ A1.conj().T @ S - S * alphas))
        smin = float(np.linalg.svd(S, compute_uv=False)[-1])
        verdict.checks.update({"A1 S = S diag(a)": eig_err, "A1 A1* S = S diag(a)": gram_err, "sigma_min(S)": smin})
        if eig_err > thr:
            verdict.reasons.append(f"eigenvector residual {eig_err:.3e}")
        if gram_err > thr:
            verdict.reasons.append(f"A1 A1* S != S diag(a) ({gram_err:.3e})")
        if smin <= thr:
            verdict.reasons.append("S is rank deficient")
    verdict.holds = not verdict.reasons
    return verdict


@dataclass
class ValidationReport:
    """Named residuals from :func:`cross_validate`; ``passed`` when every one
    is within ``tol``."""

    tol: float
    checks: dict = field(default_factory=dict)

    @property
    def violations(self) -> list[str]:
        return [f"{k} = {v:.3e}" for k, v in self.checks.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"tol": self.tol, "passed": self.passed, "checks": dict(self.checks)}


def _defect_sqrt(H: np.ndarray, psd_tol: float) -> np.ndarray:
    # sqrt(H - H^2) from the eigenbasis of H itself: it then commutes with H
    # exactly, which a fresh eigensolve of H - H^2 cannot guarantee once the
    # eigenvalues 0 and 1 of H both map near 0
    w, v = hermitian_eig(H)
    d = w - w * w
    if d.size and d.min() < -psd_tol:
        raise NotPSD(f"lambda_min(H - H^2) = {d.min():.3e} below -{psd_tol:.1e}")
    return (v * np.sqrt(np.maximum(d, 0.0))) @ v.conj().T


def projection_dilations(P, Q, psd_tol: float = DEFAULT_TOLERANCES.psd_tol) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projections of size ``3n`` whose product has ``PQ`` as its
    leading ``n x n`` block."""
    P = hermitian_view(P)
    Q = hermitian_view(Q)
    n = P.shape[0]
    eye = np.eye(n)
    sp = _defect_sqrt(P, psd_tol)
    sq = _defect_sqrt(Q, psd_tol)
    Pt = np.zeros((3 * n, 3 * n), dtype=complex)
    Qt = np.zeros_like(Pt)
    a, b, c = slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n)
    Pt[a, a], Pt[a, b], Pt[b, a], Pt[b, b] = P, sp, sp, eye - P
    Qt[a, a], Qt[a, c], Qt[c, a], Qt[c, c] = Q, sq, sq, eye - Q
    return Pt, Qt


def cross_validate(A, dec: Decomposition, tol: float = DEFAULT_TOLERANCES.dil_tol) -> ValidationReport:
    """Check that ``dec`` dilates to a product of two orthogonal projections
    whose leading block is ``A``."""
    A = as_matrix(A, square=True)
    n = A.shape[0]
    report = ValidationReport(tol)
    try:
        Pt, Qt = projection_dilations(dec.P, dec.Q)
    except NotPSD as exc:
        report.checks["P - P^2, Q - Q^2 PSD"] = float("inf")
        report.checks[str(exc)] = float("inf")
        return report
    for name, M in (("P~", Pt), ("Q~", Qt)):
        report.checks[f"||{name}^2 - {name}||"] = float(np.linalg.norm(M @ M - M))
        report.checks[f"||{name} - {name}*||"] = float(np.linalg.norm(M - M.conj().T))
    report.checks["||(P~Q~)_11 - A||"] = float(np.linalg.norm((Pt @ Qt)[:n, :n] - A))
    return report
