"""Dense Hermitian matrix primitives.

Every matrix is carried as a two-dimensional ``complex128`` ndarray, even for
real input. Hermitian operands are symmetrized on entry; an asymmetry larger
than the configured tolerance is an error rather than something to paper over.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import lapack

from .errors import DimensionMismatch, NonConvergence, NotHermitian, NotPSD, SingularOperand

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
PD_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # unitary, columns pair with eigenvalues


def as_matrix(a, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite two-dimensional complex128 array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermitian_view(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate that ``h`` is Hermitian and return ``(h + h*)/2``.

    Raises
    ------
    NotHermitian
        If ``||h - h*||_F > tol * max(1, ||h||_F)``.
    """
    m = as_matrix(h, square=True)
    scale = max(1.0, np.linalg.norm(m))
    skew = np.linalg.norm(m - m.conj().T)
    if skew > tol * scale:
        raise NotHermitian(f"||H - H*||_F = {skew:.3e} exceeds {tol:.1e} * {scale:.3e}")
    return 0.5 * (m + m.conj().T)


def hermitian_eig(h) -> EigenDecomposition:
    """Spectral decomposition ``H = V diag(w) V*`` with ascending ``w``."""
    h = hermitian_view(h)
    return _eigh(h)


def _eigh(h: np.ndarray) -> EigenDecomposition:
    # direct LAPACK call: the numpy wrapper overhead dominates for small blocks
    w, v, info = lapack.zheevd(h)
    if info != 0:
        raise NonConvergence(f"zheevd failed with info={info}")
    return EigenDecomposition(w, v)


def _spectral_map(w: np.ndarray, v: np.ndarray, f_w: np.ndarray) -> np.ndarray:
    out = (v * f_w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def psd_part(h) -> np.ndarray:
    """Positive semidefinite part ``(H + sqrt(H^2))/2``: negative eigenvalues
    are replaced by zero in the eigenbasis of ``H``."""
    return _psd_part(hermitian_view(h))


def _psd_part(h: np.ndarray) -> np.ndarray:
    # unchecked variant for the solver's inner loop
    w, v = _eigh(h)
    return _spectral_map(w, v, np.maximum(w, 0.0))


def principal_sqrt(h, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in ``[-psd_tol * ||H||, 0)`` are treated as zero; anything
    more negative raises :class:`NotPSD`.
    """
    w, v = hermitian_eig(h)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] < -psd_tol * scale:
        raise NotPSD(f"lambda_min = {w[0]:.3e} below -{psd_tol:.1e} * {scale:.3e}")
    return _spectral_map(w, v, np.sqrt(np.maximum(w, 0.0)))


def moore_penrose(h, rank_tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian matrix via its eigendecomposition.

    Eigenvalues with ``|lambda| <= rank_tol * ||H||_2`` are treated as zero.
    """
    w, v = hermitian_eig(h)
    if not w.size:
        return np.zeros_like(v)
    cutoff = rank_tol * float(np.max(np.abs(w)))
    keep = np.abs(w) > cutoff
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return _spectral_map(w, v, inv)


def lambda_min(h) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return _lambda_min(hermitian_view(h))


def _lambda_min(h: np.ndarray) -> float:
    w, _, info = lapack.zheevd(h, compute_v=0)
    if info != 0:
        raise NonConvergence(f"zheevd failed with info={info}")
    return float(w[0])


def lambda_max(h) -> float:
    try:
        return float(np.linalg.eigvalsh(hermitian_view(h))[-1])
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc


def spectral_norm(a) -> float:
    """Largest singular value."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def psd_inverse(h, pd_tol: float = PD_TOL) -> np.ndarray:
    """Inverse of a positive definite matrix.

    Raises
    ------
    SingularOperand
        If ``lambda_min(H) <= pd_tol * max(1, ||H||_2)``.
    """
    w, v = hermitian_eig(h)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] <= pd_tol * scale:
        raise SingularOperand(f"lambda_min = {w[0]:.3e} is not positive (pd_tol {pd_tol:.1e})")
    return _spectral_map(w, v, 1.0 / w)


def inverse_sqrt_pd(h, pd_tol: float = PD_TOL) -> np.ndarray:
    """``H^{-1/2}`` for positive definite ``H``."""
    w, v = hermitian_eig(h)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] <= pd_tol * scale:
        raise SingularOperand(f"lambda_min = {w[0]:.3e} is not positive (pd_tol {pd_tol:.1e})")
    return _spectral_map(w, v, 1.0 / np.sqrt(w))


def is_psd(h, tol: float = PSD_TOL) -> bool:
    h = hermitian_view(h)
    if not h.size:
        return True
    return _lambda_min(h) >= -tol * max(1.0, np.linalg.norm(h, 2))
