"""Tolerances and solver settings."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances used across the pipeline.

    Relative tolerances are scaled by ``max(1, ||A||)`` of the operand they
    apply to; the others are absolute.
    """

    hermitian_tol: float = 1e-10
    eig_tol: float = 1e-10
    psd_tol: float = 1e-10
    rank_tol: float = 1e-12
    pd_tol: float = 1e-12
    cluster_tol: float = 1e-7
    tol_one: float = 1e-8
    diag_rank_tol: float = 1e-9
    norm_tol: float = 1e-8
    canon_tol: float = 1e-8
    basis_tol: float = 1e-8
    decomp_tol: float = 1e-8
    boundary_tol: float = 1e-9
    dil_tol: float = 1e-9

    def replace(self, **changes) -> "ToleranceConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules for the alternating-projection solver.

    ``balance_retry`` lets :func:`~poscontract.factors.decompose` rerun a
    failed solve once on a per-block rescaled problem.
    """

    max_iter: int = 100_000
    feas_tol: float = 1e-12
    stall_window: int = 500
    stall_rel_change: float = 1e-6
    balance_retry: bool = True

    def __post_init__(self):
        for name in ("max_iter", "feas_tol", "stall_window", "stall_rel_change"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = ToleranceConfig()
DEFAULT_SOLVER = SolverConfig()
