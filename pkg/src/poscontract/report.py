"""Machine-readable run reports for the command-line tools."""

from __future__ import annotations

import json
import math
from importlib import resources
from typing import Optional, Union

import numpy as np

from .config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, ToleranceConfig
from .factors import Decomposition, RejectionReport
from .feasibility import SolveOutcome
from .matrixio import matrix_to_dict

HISTORY_TAIL = 20
SCHEMA_FILE = "report_schema.json"


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath(SCHEMA_FILE).read_text())


def _num(x) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _outcome_fields(outcome: Optional[SolveOutcome]) -> dict:
    if outcome is None:
        return {"iterations": 0, "error_history_tail": [], "solver_status": None, "feasibility_error": None}
    return {
        "iterations": int(outcome.iterations),
        "error_history_tail": [float(e) for e in outcome.error_history[-HISTORY_TAIL:]],
        "solver_status": outcome.status.value,
        "feasibility_error": _num(outcome.residual),
    }


def run_report(
    result: Union[Decomposition, RejectionReport],
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
    solver: SolverConfig = DEFAULT_SOLVER,
) -> dict:
    """Summarize a :func:`~poscontract.factors.decompose` result.

    ``residual`` is ``||PQ - A||_F`` for a decomposition and the last
    feasibility error for a failed solve (``None`` when no solve ran).
    ``p`` and ``q`` are present only on success.
    """
    tolerances = {**tol.as_dict(), **solver.as_dict()}
    if isinstance(result, Decomposition):
        spectrum = result.canonical.spectrum.as_dict() if result.canonical is not None else None
        return {
            "status": "decomposed",
            "stage": "complete",
            "reason": None,
            "provable": None,
            "p": matrix_to_dict(result.P),
            "q": matrix_to_dict(result.Q),
            "residual": _num(result.product_residual),
            "p_norm": _num(result.p_norm),
            "q_norm": _num(result.q_norm),
            "p_min_eig": _num(result.p_min_eig),
            "q_min_eig": _num(result.q_min_eig),
            "nudged": bool(result.nudged),
            "balanced": bool(result.outcome.balanced) if result.outcome is not None else False,
            **_outcome_fields(result.outcome),
            "closed_form": None,
            "spectrum": spectrum,
            "tolerances": tolerances,
        }
    dec = result.decomposition
    fields = _outcome_fields(result.outcome)
    return {
        "status": result.status,
        "stage": result.stage,
        "reason": result.reason,
        "provable": bool(result.provable),
        "residual": fields["feasibility_error"],
        "p_norm": _num(dec.p_norm) if dec is not None else None,
        "q_norm": _num(dec.q_norm) if dec is not None else None,
        "p_min_eig": _num(dec.p_min_eig) if dec is not None else None,
        "q_min_eig": _num(dec.q_min_eig) if dec is not None else None,
        "nudged": bool(dec.nudged) if dec is not None else False,
        "balanced": bool(result.outcome.balanced) if result.outcome is not None else False,
        **fields,
        "closed_form": result.closed_form.as_dict() if result.closed_form is not None else None,
        "spectrum": result.spectrum.as_dict() if result.spectrum is not None else None,
        "tolerances": tolerances,
    }


def error_report(stage: str, message: str, tol: ToleranceConfig = DEFAULT_TOLERANCES, solver: SolverConfig = DEFAULT_SOLVER) -> dict:
    """Report for runs that failed before any numerics (unreadable input and
    the like)."""
    return {
        "status": "error",
        "stage": stage,
        "reason": message,
        "provable": None,
        "residual": None,
        "p_norm": None,
        "q_norm": None,
        "p_min_eig": None,
        "q_min_eig": None,
        "nudged": False,
        "balanced": False,
        "iterations": 0,
        "error_history_tail": [],
        "solver_status": None,
        "feasibility_error": None,
        "closed_form": None,
        "spectrum": None,
        "tolerances": {**tol.as_dict(), **solver.as_dict()},
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
