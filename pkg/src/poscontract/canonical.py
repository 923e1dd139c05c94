"""Unitary reduction to the form ``I_p (+) [[A11, A12], [0, 0]]``.

A contraction whose spectrum lies in [0, 1] and which is diagonalizable can be
brought, by a unitary similarity, to an upper triangular form with the
eigenvalue-one block first, the interior eigenvalues (descending) next and the
zero eigenvalues last. The contraction property forces the coupling between
the eigenvalue-one block and the rest to vanish, and diagonalizability forces
the trailing nilpotent block to vanish. Both are verified, then hard-zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, schur

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .errors import (
    ComplexOrNegativeSpectrum,
    NotAContraction,
    NotDiagonalizable,
    PosContractError,
    ResidualTooLarge,
)
from .kernel import as_matrix, spectral_norm

ONE, INTERIOR, ZERO, OTHER = "one", "interior", "zero", "other"


@dataclass(frozen=True)
class SpectrumReport:
    """Clustered spectrum of a square matrix.

    ``interior_groups`` holds ``(alpha, multiplicity)`` pairs with alpha
    strictly descending. Eigenvalues that are complex, negative or larger
    than one end up in ``other_groups`` as ``(center, multiplicity)``.
    """

    eigenvalues: np.ndarray
    ones_count: int
    zeros_count: int
    interior_groups: tuple
    other_groups: tuple
    diagonalizable: bool
    contraction: bool
    norm: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def interior_count(self) -> int:
        return sum(m for _, m in self.interior_groups)

    @property
    def in_unit_interval(self) -> bool:
        return not self.other_groups

    @property
    def distinct_values(self) -> list:
        vals = [1.0] if self.ones_count else []
        vals += [a for a, _ in self.interior_groups]
        if self.zeros_count:
            vals.append(0.0)
        return vals

    def as_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "ones_count": self.ones_count,
            "zeros_count": self.zeros_count,
            "interior_groups": [[float(a), int(m)] for a, m in self.interior_groups],
            "other_groups": [[[float(c.real), float(c.imag)], int(m)] for c, m in self.other_groups],
            "diagonalizable": self.diagonalizable,
            "contraction": self.contraction,
            "norm": self.norm,
        }


@dataclass(frozen=True)
class CanonicalForm:
    """``W* A W = I_p (+) [[A11, A12], [0, 0_q]]`` with ``W`` unitary.

    ``q`` is the size of the trailing zero block, so ``A12`` has ``q``
    columns. ``source`` keeps the matrix that was reduced.
    """

    W: np.ndarray
    p: int
    q: int
    A11: np.ndarray
    A12: np.ndarray
    spectrum: SpectrumReport
    source: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.A11.shape[0]

    @property
    def zero_columns(self) -> int:
        """Number of identically zero columns of ``A12``."""
        if not self.A12.size:
            return self.q
        return int(np.sum(np.all(self.A12 == 0, axis=0)))

    def block_matrix(self) -> np.ndarray:
        n, p, m = self.n, self.p, self.m
        b = np.zeros((n, n), dtype=complex)
        b[:p, :p] = np.eye(p)
        b[p:p + m, p:p + m] = self.A11
        b[p:p + m, p + m:] = self.A12
        return b

    def reconstruct(self) -> np.ndarray:
        return self.W @ self.block_matrix() @ self.W.conj().T


def _single_linkage(values: np.ndarray, tol: float) -> list[list[int]]:
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _analyze(a: np.ndarray, tol: ToleranceConfig):
    n = a.shape[0]
    norm = spectral_norm(a)
    scale = max(1.0, norm)
    T, Z = schur(a, output="complex")
    eig = np.diag(T).copy()
    ctol = tol.cluster_tol * scale
    rank_tol = tol.diag_rank_tol * scale

    labels: list = [None] * n
    ones = zeros = 0
    interior, other = [], []
    diagonalizable = True
    for idx in _single_linkage(eig, ctol):
        center = complex(np.mean(eig[idx]))
        mult = len(idx)
        if abs(center.imag) > ctol or center.real < -tol.norm_tol or center.real > 1 + tol.norm_tol:
            kind, key = OTHER, center
            other.append((center, mult))
        elif abs(center.real - 1.0) <= tol.tol_one:
            kind, key = ONE, 1.0
            ones += mult
        elif abs(center.real) <= tol.tol_one:
            kind, key = ZERO, 0.0
            zeros += mult
        else:
            kind, key = INTERIOR, center.real
            interior.append((center.real, mult))
        for i in idx:
            labels[i] = (kind, key)
        sv = np.linalg.svd(a - center * np.eye(n), compute_uv=False)
        if n - int(np.sum(sv > rank_tol)) != mult:
            diagonalizable = False

    report = SpectrumReport(
        eigenvalues=eig,
        ones_count=ones,
        zeros_count=zeros,
        interior_groups=tuple(sorted(interior, key=lambda g: -g[0])),
        other_groups=tuple(other),
        diagonalizable=diagonalizable,
        contraction=norm <= 1.0 + tol.norm_tol,
        norm=norm,
    )
    return report, T, Z, labels


def analyze_spectrum(a, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectrumReport:
    """Cluster the eigenvalues of ``a`` and test diagonalizability.

    Two eigenvalues share a cluster when they are within
    ``cluster_tol * max(1, ||a||)`` (single linkage). A cluster with center
    ``alpha`` and multiplicity ``k`` is semisimple when
    ``rank(a - alpha I) = n - k``, with rank counted from singular values
    above ``diag_rank_tol * max(1, ||a||)``.
    """
    return _analyze(as_matrix(a, square=True), tol)[0]


def _order_key(label):
    kind, value = label
    if kind == ONE:
        return (0, 0.0)
    if kind == INTERIOR:
        return (1, -value)
    return (2, 0.0)


def _reorder_schur(T: np.ndarray, Z: np.ndarray, labels: list):
    keys = [_order_key(lab) for lab in labels]
    T = np.asfortranarray(T)
    Z = np.asfortranarray(Z)
    for target in range(len(keys)):
        j = min(range(target, len(keys)), key=lambda i: (keys[i], i))
        if j != target:
            T, Z, info = lapack.ztrexc(T, Z, j + 1, target + 1)
            if info != 0:
                raise PosContractError(f"ztrexc failed with info={info}")
            keys.insert(target, keys.pop(j))
    return np.ascontiguousarray(T), np.ascontiguousarray(Z), keys


def canonicalize(a, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> CanonicalForm:
    """Reduce ``a`` to ``I_p (+) [[A11, A12], [0, 0]]`` by a unitary similarity.

    Raises
    ------
    NotAContraction, ComplexOrNegativeSpectrum, NotDiagonalizable
        When ``a`` fails a necessary condition for being a product of two
        positive contractions.
    ResidualTooLarge
        When a block that must vanish does not.
    """
    a = as_matrix(a, square=True)
    report, T, Z, labels = _analyze(a, tol)
    if not report.contraction:
        raise NotAContraction(f"||A|| = {report.norm:.12g} exceeds 1", norm=report.norm)
    if report.other_groups:
        bad = ", ".join(f"{c.real:.6g}{c.imag:+.6g}j" for c, _ in report.other_groups)
        raise ComplexOrNegativeSpectrum(f"eigenvalues outside [0, 1]: {bad}")
    if not report.diagonalizable:
        raise NotDiagonalizable("some eigenvalue has geometric multiplicity below its algebraic multiplicity")

    n = a.shape[0]
    T, Z, keys = _reorder_schur(T, Z, labels)
    p = report.ones_count
    m = report.interior_count
    q = n - p - m
    T = np.triu(T)

    scale = tol.canon_tol * max(1.0, np.linalg.norm(a))
    checks = {
        "identity block": np.linalg.norm(T[:p, :p] - np.eye(p)),
        "coupling to eigenvalue-one block": np.linalg.norm(T[:p, p:]),
        "trailing zero block": np.linalg.norm(T[p + m:, p + m:]),
    }
    for name, value in checks.items():
        if value > scale:
            raise ResidualTooLarge(f"{name} has norm {value:.3e} > {scale:.3e}", block=name, value=value)

    return CanonicalForm(
        W=Z,
        p=p,
        q=q,
        A11=T[p:p + m, p:p + m].copy(),
        A12=T[p:p + m, p + m:].copy(),
        spectrum=report,
        source=a,
    )
