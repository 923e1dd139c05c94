"""Command-line interface.

Exit codes: 0 when the requested result holds (decomposed, feasible,
verified, all reference cases pass), 2 when it does not (rejected, stalled,
infeasible, a check failed), 1 on unreadable input or another error.
Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from . import __version__
from .config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, ToleranceConfig
from .dilation import cross_validate
from .errors import DomainError, NotHermitian, PosContractError
from .factors import Decomposition, decide_2x2, decompose, measure
from .matrixio import read_matrix, write_matrix
from .reference_cases import CASES, run_all
from .report import dumps, error_report, run_report

EXIT_OK, EXIT_ERROR, EXIT_NO = 0, 1, 2

log = logging.getLogger("poscontract")


def _configs(args) -> tuple[ToleranceConfig, SolverConfig]:
    tol = DEFAULT_TOLERANCES.replace(eig_tol=args.tol_eig, psd_tol=args.tol_eig)
    solver = SolverConfig(
        max_iter=args.max_iter,
        feas_tol=args.tol_feas,
        stall_window=args.stall_window,
        stall_rel_change=args.stall_rel_change,
        balance_retry=not args.no_balance,
    )
    return tol, solver


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-feas", type=float, default=DEFAULT_SOLVER.feas_tol, help="feasibility tolerance (default %(default)g)")
    p.add_argument(
        "--tol-eig",
        type=float,
        default=DEFAULT_TOLERANCES.eig_tol,
        help="eigenvalue tolerance for PSD checks and clipping (default %(default)g)",
    )
    p.add_argument("--max-iter", type=int, default=DEFAULT_SOLVER.max_iter, help="iteration cap (default %(default)d)")
    p.add_argument("--stall-window", type=int, default=DEFAULT_SOLVER.stall_window, help="default %(default)d")
    p.add_argument("--stall-rel-change", type=float, default=DEFAULT_SOLVER.stall_rel_change, help="default %(default)g")
    p.add_argument("--no-balance", action="store_true", help="skip the rescaled rerun after a failed solve")


def _write_trace(path, outcome) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "error"])
        for k, e in zip(outcome.history_iterations, outcome.error_history):
            w.writerow([int(k), repr(float(e))])


def _summary_lines(report: dict) -> list[str]:
    lines = [f"status: {report['status']} (stage: {report['stage']})"]
    if report["reason"]:
        lines.append(f"reason: {report['reason']}")
    if report["status"] == "decomposed":
        lines.append(f"||PQ - A||_F = {report['residual']:.3e}")
        lines.append(f"||P|| = {report['p_norm']:.12g}, ||Q|| = {report['q_norm']:.12g}")
    if report["iterations"]:
        lines.append(f"iterations: {report['iterations']}")
    return lines


def cmd_decompose(args) -> int:
    try:
        tol, solver = _configs(args)
    except ValueError as exc:
        print(dumps(error_report("arguments", str(exc))))
        return EXIT_ERROR
    try:
        A = read_matrix(args.input)
    except (OSError, PosContractError, ValueError) as exc:
        log.error("cannot read %s: %s", args.input, exc)
        print(dumps(error_report("input", f"{type(exc).__name__}: {exc}", tol, solver)))
        return EXIT_ERROR
    try:
        result = decompose(A, tol, solver)
    except (PosContractError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        print(dumps(error_report("numerics", f"{type(exc).__name__}: {exc}", tol, solver)))
        return EXIT_ERROR

    report = run_report(result, tol, solver)
    outcome = result.outcome
    if args.trace and outcome is not None:
        _write_trace(args.trace, outcome)
    if isinstance(result, Decomposition):
        if args.p_out:
            write_matrix(args.p_out, result.P)
        if args.q_out:
            write_matrix(args.q_out, result.Q)
    if args.json:
        print(dumps(report))
    else:
        print("\n".join(_summary_lines(report)))
    return EXIT_OK if isinstance(result, Decomposition) else EXIT_NO


def cmd_bound2x2(args) -> int:
    try:
        p = complex(args.p.replace("i", "j"))
        verdict = decide_2x2(args.a, args.b, p)
    except (DomainError, ValueError) as exc:
        log.error("%s", exc)
        if args.json:
            print(json.dumps({"error": str(exc)}))
        return EXIT_ERROR
    if args.json:
        print(json.dumps(verdict.as_dict()))
    else:
        word = "feasible" if verdict.feasible else "infeasible"
        print(f"{word}: |p| = {verdict.p_abs:.10g}, bound = {verdict.bound:.10g}")
    return EXIT_OK if verdict.feasible else EXIT_NO


def cmd_verify(args) -> int:
    tol = DEFAULT_TOLERANCES.replace(eig_tol=args.tol_eig, psd_tol=args.tol_eig)
    try:
        A, P, Q = (read_matrix(path) for path in (args.a, args.p, args.q))
    except (OSError, PosContractError, ValueError) as exc:
        log.error("cannot read input: %s", exc)
        print(json.dumps({"passed": False, "error": f"{type(exc).__name__}: {exc}"}))
        return EXIT_ERROR
    if not (A.shape == P.shape == Q.shape and A.shape[0] == A.shape[1]):
        msg = f"shapes differ or are not square: {A.shape}, {P.shape}, {Q.shape}"
        log.error(msg)
        print(json.dumps({"passed": False, "error": msg}))
        return EXIT_ERROR

    out: dict = {"checks": {}}
    try:
        dec = measure(A, P, Q, tol.hermitian_tol)
    except NotHermitian as exc:
        out["checks"]["hermitian"] = {"passed": False, "detail": str(exc)}
        out["passed"] = False
        print(json.dumps(out, indent=2) if args.json else f"FAIL hermitian: {exc}")
        return EXIT_NO
    checks = out["checks"]
    checks["P positive semidefinite"] = {"passed": dec.p_min_eig >= -tol.psd_tol, "value": dec.p_min_eig}
    checks["Q positive semidefinite"] = {"passed": dec.q_min_eig >= -tol.psd_tol, "value": dec.q_min_eig}
    checks["P contraction"] = {"passed": dec.p_norm <= 1 + tol.norm_tol, "value": dec.p_norm}
    checks["Q contraction"] = {"passed": dec.q_norm <= 1 + tol.norm_tol, "value": dec.q_norm}
    checks["PQ = A"] = {"passed": dec.product_residual <= tol.decomp_tol, "value": dec.product_residual}
    if args.cross_validate:
        if all(c["passed"] for c in checks.values()):
            val = cross_validate(A, dec, tol.dil_tol)
            for k, v in val.checks.items():
                checks[f"dilation {k}"] = {"passed": v <= val.tol, "value": v}
        else:
            checks["dilation"] = {"passed": False, "detail": "skipped: certification failed"}
    out["passed"] = all(c["passed"] for c in checks.values())
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for name, c in checks.items():
            value = c.get("value")
            shown = f"{value:.3e}" if isinstance(value, float) else c.get("detail", "")
            print(f"{'PASS' if c['passed'] else 'FAIL'} {name}: {shown}")
    return EXIT_OK if out["passed"] else EXIT_NO


def cmd_paper_examples(args) -> int:
    tol = DEFAULT_TOLERANCES
    solver = DEFAULT_SOLVER.replace(feas_tol=args.tol_feas)
    rows = run_all(tol, solver, args.case)
    if args.json:
        print(json.dumps({"passed": all(r.passed for r in rows), "cases": [r.as_dict() for r in rows]}, indent=2))
    else:
        for r in rows:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name:<10} expected {r.expected:<22} observed {r.observed:<22} {r.seconds:7.2f}s")
            for k, (ok, detail) in r.checks.items():
                print(f"    {'ok  ' if ok else 'FAIL'} {k}: {detail}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poscontract",
        description="Decide and construct factorizations A = PQ with P, Q positive semidefinite contractions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="factor a matrix read from a JSON or CSV file")
    p.add_argument("input", help="matrix file (.json or .csv)")
    _add_solver_flags(p)
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.add_argument("--trace", metavar="PATH", help="write the error history as CSV")
    p.add_argument("--p-out", metavar="PATH", help="write P on success")
    p.add_argument("--q-out", metavar="PATH", help="write Q on success")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("bound2x2", help="closed-form test for [[a, p], [0, b]]")
    p.add_argument("a", type=float)
    p.add_argument("b", type=float)
    p.add_argument("p", help="real or complex, e.g. 0.1 or 0.05+0.02j")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bound2x2)

    p = sub.add_parser("verify", help="certify a given factorization A = PQ")
    p.add_argument("a")
    p.add_argument("p")
    p.add_argument("q")
    p.add_argument("--tol-eig", type=float, default=DEFAULT_TOLERANCES.eig_tol)
    p.add_argument("--cross-validate", action="store_true", help="also check the orthogonal-projection dilation")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("paper-examples", help="run the embedded reference instances")
    p.add_argument("--json", action="store_true")
    p.add_argument("--tol-feas", type=float, default=DEFAULT_SOLVER.feas_tol)
    p.add_argument("--case", action="append", choices=list(CASES), help="run only this case (repeatable)")
    p.set_defaults(func=cmd_paper_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
