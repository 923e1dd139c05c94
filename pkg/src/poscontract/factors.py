"""Factor construction, certification and the closed-form two-point tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .canonical import CanonicalForm, SpectrumReport, analyze_spectrum, canonicalize
from .config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, ToleranceConfig
from .errors import (
    CertificationFailure,
    CharacterizationError,
    DefectiveBlock,
    DimensionMismatch,
    DomainError,
    GammaNotPD,
    NotTwoPointSpectrum,
    SingularOperand,
)
from .feasibility import (
    EigenBasis,
    SolveOutcome,
    build_eigenbasis,
    build_problem,
    lower_gamma,
    solve,
    solve_balanced,
)
from .kernel import _eigh, _lambda_min, as_matrix, hermitian_view, inverse_sqrt_pd, spectral_norm


@dataclass(frozen=True)
class Decomposition:
    """``A = P Q`` with ``P``, ``Q`` positive contractions, plus the measured
    quantities that certify it."""

    P: np.ndarray
    Q: np.ndarray
    product_residual: float
    p_norm: float
    q_norm: float
    p_min_eig: float
    q_min_eig: float
    gamma: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None
    canonical: Optional[CanonicalForm] = field(default=None, repr=False)
    basis: Optional[EigenBasis] = field(default=None, repr=False)
    outcome: Optional[SolveOutcome] = field(default=None, repr=False)
    nudged: bool = False

    def violations(self, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> list[str]:
        out = []
        if self.p_min_eig < -tol.psd_tol:
            out.append(f"P not PSD (lambda_min = {self.p_min_eig:.3e})")
        if self.q_min_eig < -tol.psd_tol:
            out.append(f"Q not PSD (lambda_min = {self.q_min_eig:.3e})")
        if self.p_norm > 1.0 + tol.norm_tol:
            out.append(f"P not a contraction (||P|| - 1 = {self.p_norm - 1:.3e})")
        if self.q_norm > 1.0 + tol.norm_tol:
            out.append(f"Q not a contraction (||Q|| - 1 = {self.q_norm - 1:.3e})")
        if not self.product_residual <= tol.decomp_tol:
            out.append(f"||PQ - A||_F = {self.product_residual:.3e} exceeds {tol.decomp_tol:.1e}")
        return out


def measure(A, P, Q, hermitian_tol: float = DEFAULT_TOLERANCES.hermitian_tol, **extra) -> Decomposition:
    """Compute the certification quantities for a candidate pair.

    Raises
    ------
    NotHermitian
        If ``P`` or ``Q`` is not Hermitian within ``hermitian_tol``.
    """
    A = as_matrix(A, square=True)
    P = hermitian_view(P, hermitian_tol)
    Q = hermitian_view(Q, hermitian_tol)
    if P.shape != A.shape or Q.shape != A.shape:
        raise DimensionMismatch(f"shapes {A.shape}, {P.shape}, {Q.shape} differ")
    if not A.size:
        return Decomposition(P, Q, 0.0, 0.0, 0.0, 0.0, 0.0, **extra)
    return Decomposition(
        P=P,
        Q=Q,
        product_residual=float(np.linalg.norm(P @ Q - A)),
        p_norm=spectral_norm(P),
        q_norm=spectral_norm(Q),
        p_min_eig=_lambda_min(P),
        q_min_eig=_lambda_min(Q),
        **extra,
    )


def certify(A, P, Q, tol: ToleranceConfig = DEFAULT_TOLERANCES, **extra) -> Decomposition:
    """Measure ``(P, Q)`` against ``A`` and raise if any check fails.

    Raises
    ------
    CertificationFailure
        Carrying the measured decomposition and the list of violations.
    """
    dec = measure(A, P, Q, tol.hermitian_tol, **extra)
    bad = dec.violations(tol)
    if bad:
        raise CertificationFailure("; ".join(bad), decomposition=dec, violations=bad)
    return dec


def _blockwise_inverse_sqrt(gamma: np.ndarray, blocks, pd_tol: float) -> np.ndarray:
    out = np.zeros_like(gamma)
    for off, size in blocks:
        sl = slice(off, off + size)
        out[sl, sl] = inverse_sqrt_pd(gamma[sl, sl], pd_tol=pd_tol)
    return out


def _clip_roundoff(H: np.ndarray, slack: float) -> np.ndarray:
    # eigenvalues at most ``slack`` outside [0, 1] are roundoff from the
    # assembly; larger excursions are left for certification to reject
    w, v = _eigh(H)
    if w.min() >= 0.0 and w.max() <= 1.0:
        return H
    if w.min() < -slack or w.max() > 1.0 + slack:
        return H
    # subtract only the excursions so the rest of H keeps its accuracy
    excess = w - np.clip(w, 0.0, 1.0)
    out = (excess != 0.0)
    return H - (v[:, out] * excess[out]) @ v[:, out].conj().T


def construct_factors(
    canon: CanonicalForm,
    basis: EigenBasis,
    gamma,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
    feas_tol: float = DEFAULT_SOLVER.feas_tol,
    outcome: Optional[SolveOutcome] = None,
) -> Decomposition:
    """Build ``P`` and ``Q`` from a feasible block-diagonal ``gamma``.

    With ``U = V gamma^{-1/2}`` the canonical factors are
    ``P = I_p (+) UU* (+) 0`` and
    ``Q = I_p (+) [[U^{-*} D U^{-1}, (UU*)^{-1} A12], [A12* (UU*)^{-1}, A12* (U D U*)^{-1} A12]]``;
    both are mapped back with ``W``. If ``gamma - V*V`` has a (tiny) negative
    eigenvalue ``-e``, ``max(feas_tol, 2e) * I`` is added to ``gamma`` first.
    Eigenvalues of ``P`` or ``Q`` that land within ``norm_tol`` outside
    [0, 1] are clipped onto it before certification.

    Raises
    ------
    GammaNotPD
        If a block of ``gamma`` is numerically singular.
    CertificationFailure
        If the assembled factors are not PSD contractions with ``PQ = A``.
    """
    V, alphas, blocks = basis.V, basis.alphas, basis.blocks
    m = basis.m
    gamma = hermitian_view(gamma, tol.hermitian_tol)
    Y = V.conj().T @ V
    nudged = False
    shortfall = -_lambda_min(gamma - Y) if m else 0.0
    if shortfall > 0:
        gamma = gamma + max(feas_tol, 2.0 * shortfall) * np.eye(m)
        nudged = True
    try:
        g_inv_half = _blockwise_inverse_sqrt(gamma, blocks, tol.pd_tol)
    except SingularOperand as exc:
        raise GammaNotPD(str(exc)) from exc

    U = V @ g_inv_half
    U_inv = np.linalg.inv(U) if m else U
    A12 = canon.A12
    UU_inv = U_inv.conj().T @ U_inv
    top = U @ U.conj().T
    q11 = U_inv.conj().T @ (alphas[:, None] * U_inv)
    q12 = UU_inv @ A12
    q22 = A12.conj().T @ (U_inv.conj().T @ ((1.0 / alphas)[:, None] * U_inv)) @ A12

    n, p = canon.n, canon.p
    Pc = np.zeros((n, n), dtype=complex)
    Qc = np.zeros((n, n), dtype=complex)
    Pc[:p, :p] = np.eye(p)
    Qc[:p, :p] = np.eye(p)
    s, e = p, p + m
    Pc[s:e, s:e] = top
    Qc[s:e, s:e] = q11
    Qc[s:e, e:] = q12
    Qc[e:, s:e] = q12.conj().T
    Qc[e:, e:] = q22

    W = canon.W
    P = W @ Pc @ W.conj().T
    Q = W @ Qc @ W.conj().T
    P = _clip_roundoff(0.5 * (P + P.conj().T), tol.norm_tol)
    Q = _clip_roundoff(0.5 * (Q + Q.conj().T), tol.norm_tol)
    return certify(
        canon.source,
        P,
        Q,
        tol,
        gamma=gamma,
        U=U,
        canonical=canon,
        basis=basis,
        outcome=outcome,
        nudged=nudged,
    )


@dataclass(frozen=True)
class TwoByTwoVerdict:
    """Closed-form test ``|p| <= |sqrt(a) - sqrt(b)| sqrt((1 - a)(1 - b))``."""

    a: float
    b: float
    p_abs: float
    bound: float
    feasible: bool

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "p_abs": self.p_abs, "bound": self.bound, "feasible": self.feasible}


def two_point_bound(a: float, b: float) -> float:
    return abs(math.sqrt(a) - math.sqrt(b)) * math.sqrt((1.0 - a) * (1.0 - b))


def decide_2x2(a: float, b: float, p: complex, boundary_tol: float = DEFAULT_TOLERANCES.boundary_tol) -> TwoByTwoVerdict:
    """Decide whether ``[[a, p], [0, b]]`` is a product of two positive
    contractions, for ``a, b`` in [0, 1]."""
    a, b = float(a), float(b)
    for name, v in (("a", a), ("b", b)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} = {v!r} is outside [0, 1]")
    bound = two_point_bound(a, b)
    p_abs = abs(complex(p))
    return TwoByTwoVerdict(a, b, p_abs, bound, p_abs <= bound + boundary_tol)


def decide_two_point_spectrum(
    B,
    a: float,
    b: float,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
) -> TwoByTwoVerdict:
    """Closed-form test for a diagonalizable ``B`` with spectrum in ``{a, b}``.

    ``B`` is a product of two positive contractions iff
    ``sqrt(||B||^2 - (a^2 + b^2) + (ab/||B||)^2)`` does not exceed the
    two-point bound. The left side equals the largest off-diagonal entry of
    the 2x2 blocks in the unitary normal form of ``B``; it is returned as
    ``p_abs``.

    Raises
    ------
    NotTwoPointSpectrum
        If ``(B - aI)(B - bI) != 0`` within tolerance.
    """
    B = as_matrix(B, square=True)
    a, b = float(a), float(b)
    for name, v in (("a", a), ("b", b)):
        if not 0.0 < v <= 1.0:
            raise DomainError(f"{name} = {v!r} is outside (0, 1]")
    n = B.shape[0]
    eye = np.eye(n)
    s = spectral_norm(B)
    annihilation = spectral_norm((B - a * eye) @ (B - b * eye))
    if annihilation > tol.canon_tol * max(1.0, s * s):
        raise NotTwoPointSpectrum(f"||(B - aI)(B - bI)|| = {annihilation:.3e}")
    lhs2 = s * s - (a * a + b * b) + (a * b / s) ** 2 if s > 0 else 0.0
    p_abs = math.sqrt(max(lhs2, 0.0))
    bound = two_point_bound(a, b)
    return TwoByTwoVerdict(a, b, p_abs, bound, p_abs <= bound + tol.boundary_tol)


@dataclass(frozen=True)
class RejectionReport:
    """Why :func:`decompose` did not return factors.

    ``provable`` is True when the rejection rests on a violated necessary
    condition or on the closed-form two-point test, and False when it only
    reflects that the solver could not find a solution.
    """

    stage: str
    reason: str
    provable: bool
    spectrum: Optional[SpectrumReport] = None
    outcome: Optional[SolveOutcome] = None
    decomposition: Optional[Decomposition] = None
    closed_form: Optional[TwoByTwoVerdict] = None
    condition: Optional[str] = None
    retry: Optional[SolveOutcome] = None

    @property
    def status(self) -> str:
        if self.stage == "feasibility" and not self.provable:
            return "stalled"
        return "rejected"


def _closed_form_check(A: np.ndarray, spectrum: SpectrumReport, tol: ToleranceConfig) -> Optional[TwoByTwoVerdict]:
    # only for spectra made of at most two nonzero values
    if spectrum.zeros_count or not spectrum.in_unit_interval:
        return None
    values = spectrum.distinct_values
    if not 1 <= len(values) <= 2:
        return None
    a, b = values[0], values[-1]
    try:
        return decide_two_point_spectrum(A, a, b, tol)
    except (NotTwoPointSpectrum, DomainError):
        return None


def decompose(
    A,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
    solver: SolverConfig = DEFAULT_SOLVER,
) -> Union[Decomposition, RejectionReport]:
    """Factor ``A = PQ`` with positive contractions ``P``, ``Q``, or explain
    why not.

    Pipeline: canonical form, eigenbasis of ``A11``, feasibility problem,
    alternating projections, factor construction and certification. If the
    solver fails and ``solver.balance_retry`` is set, it is rerun once on the
    per-block rescaled problem starting from the block-diagonal part of ``Y``
    (see :func:`~poscontract.feasibility.solve_balanced`) unless the
    closed-form test already proves infeasibility. When the iteration still
    fails without a proof of infeasibility, factors are built from the
    iterate with the smaller error and returned if they certify.
    """
    A = as_matrix(A, square=True)
    try:
        canon = canonicalize(A, tol)
    except CharacterizationError as exc:
        stage = "canonical form" if exc.condition == "canonical zero blocks" else "spectrum"
        return RejectionReport(stage, str(exc), True, spectrum=analyze_spectrum(A, tol), condition=exc.condition)

    spectrum = canon.spectrum
    if canon.m == 0:
        Pc = np.zeros_like(A)
        Pc[: canon.p, : canon.p] = np.eye(canon.p)
        P = canon.W @ Pc @ canon.W.conj().T
        try:
            return certify(A, P, P, tol, canonical=canon)
        except CertificationFailure as exc:
            return RejectionReport("certification", str(exc), False, spectrum=spectrum, decomposition=exc.decomposition)

    try:
        basis = build_eigenbasis(canon.A11, spectrum, tol)
        problem = build_problem(basis, canon.A11, canon.A12, tol)
    except DefectiveBlock as exc:
        return RejectionReport("eigenbasis", str(exc), False, spectrum=spectrum)
    except SingularOperand as exc:
        return RejectionReport("problem", str(exc), False, spectrum=spectrum)

    outcome = solve(problem, solver)
    retry = None
    if not outcome.feasible:
        verdict = _closed_form_check(A, spectrum, tol)
        provable = verdict is not None and not verdict.feasible
        # the midpoint start can crawl when X is much larger than Y; one rerun
        # on the rescaled problem from the lower end unless infeasibility is
        # already settled
        if solver.balance_retry and not provable:
            retry = solve_balanced(problem, solver, start=lower_gamma)
            if retry.feasible:
                outcome, retry = retry, None
    if not outcome.feasible and not provable:
        # a plateau at roundoff level can still give certifiable factors;
        # certification decides, the iteration's stop rule does not
        best = min((o for o in (outcome, retry) if o is not None), key=lambda o: o.residual)
        try:
            return construct_factors(canon, basis, best.gamma, tol, solver.feas_tol, outcome=best)
        except (GammaNotPD, CertificationFailure):
            pass
    if not outcome.feasible:
        reason = f"solver {outcome.status.value} after {outcome.iterations} iterations with error {outcome.residual:.3e}"
        if retry is not None:
            reason += f"; rescaled rerun {retry.status.value} with error {retry.residual:.3e}"
        if verdict is not None:
            reason += (
                f"; closed form: |p| = {verdict.p_abs:.6g} "
                f"{'<=' if verdict.feasible else '>'} bound {verdict.bound:.6g}"
            )
        return RejectionReport(
            "feasibility", reason, provable, spectrum=spectrum, outcome=outcome, closed_form=verdict, retry=retry
        )

    try:
        return construct_factors(canon, basis, outcome.gamma, tol, solver.feas_tol, outcome=outcome)
    except (GammaNotPD, CertificationFailure) as exc:
        dec = getattr(exc, "decomposition", None)
        return RejectionReport(
            "certification", str(exc), False, spectrum=spectrum, outcome=outcome, decomposition=dec
        )
