"""Command-line front end: measurement sweeps, beam solves, derivative checks.

Exit codes: 0 success, 2 I/O error, 3 no converged measurement pair,
4 beam solver did not converge, 5 derivative check above threshold.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .assembly import (
    BeamSolution,
    DEFAULT_N_ELEMENTS,
    apply_benchmark_loads,
    build_quarter_arc,
    save_json,
    save_stress_csv,
    save_trace_csv,
    solution_to_json,
    solve_structure,
    structure_from_json,
    symmetry_diagnostics,
)
from .checks import run_derivative_checks
from .laws import DataSet, LAW_PRESETS, beam_law_preset, generate_synthetic_data, linear_law
from .newton import Diverged, LinearSolveSingular, NewtonSettings
from .truss import StartMode, SweepResult, dcnlp_enumerate, unit_truss

EXIT_OK = 0
EXIT_IO = 2
EXIT_NO_CONVERGED_PAIR = 3
EXIT_NOT_CONVERGED = 4
EXIT_CHECK_FAILED = 5


def _newton_settings(args: argparse.Namespace, default_tol: float) -> NewtonSettings:
    return NewtonSettings(
        rel_tol=args.tol if args.tol is not None else default_tol,
        max_iterations=args.max_iter,
    )


def _summary_of(sweep: SweepResult) -> dict:
    converged = [p for p in sweep.pairs if p.converged]
    iters = sorted(p.iterations for p in converged)
    return {
        "mode": sweep.mode.value,
        "pairs": len(sweep.pairs),
        "converged": len(converged),
        "best_pair": None if sweep.best is None else sweep.best.index + 1,
        "best_cost": None if sweep.best is None else sweep.best.cost,
        "best_data": None if sweep.best is None else [sweep.best.strain, sweep.best.stress],
        "median_iterations": None if not iters else iters[len(iters) // 2],
    }


def cmd_truss_sweep(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = unit_truss(load=args.load)
    if args.data is not None:
        data = DataSet.load_csv(args.data)
    else:
        noise = 0.0 if args.exact else args.noise
        data = generate_synthetic_data(linear_law([1.0]), args.pairs, tuple(args.range), noise, args.seed)
    settings = _newton_settings(args, 1e-10)

    if args.mode == "enumerate":
        modes = [StartMode.WARM_ASCENDING, StartMode.WARM_DESCENDING]
    else:
        modes = [StartMode(args.mode)]
    sweeps = [dcnlp_enumerate(model, data, mode, settings) for mode in modes]
    for sweep in sweeps:
        name = "pairs.csv" if len(sweeps) == 1 else f"pairs_{sweep.mode.value.replace('warm-', '')}.csv"
        sweep.save_csv(out / name)

    candidates = [p for sweep in sweeps for p in sweep.pairs if p.converged]
    best = min(candidates, key=lambda p: (p.cost, p.index), default=None)
    summary = {
        "sweeps": [_summary_of(sweep) for sweep in sweeps],
        "global_minimum": None
        if best is None
        else {"pair": best.index + 1, "data": [best.strain, best.stress], "cost": best.cost},
    }
    save_json(summary, out / "summary.json")
    if best is None:
        return EXIT_NO_CONVERGED_PAIR
    return EXIT_OK


def cmd_beam_solve(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.structure is not None:
        structure = structure_from_json(json.loads(Path(args.structure).read_text()))
    else:
        law = beam_law_preset(args.law) if args.law in LAW_PRESETS else structure_law_from_file(args.law)
        structure = apply_benchmark_loads(build_quarter_arc(args.elements, law=law))
    settings = _newton_settings(args, 1e-12)

    try:
        solution = solve_structure(structure, settings)
    except (LinearSolveSingular, Diverged) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED

    save_json(solution_to_json(solution), out / "solution.json")
    save_stress_csv(solution, out / "stress.csv")
    save_trace_csv(solution.newton, out / "trace.csv")
    report = symmetry_diagnostics(solution)
    save_json(
        {
            "converged": solution.newton.converged,
            "iterations": solution.iterations,
            "residual_norm": solution.residual_norm(),
            "symmetry": {
                "symmetric_defect": report.symmetric_defect,
                "antisymmetric_defect": report.antisymmetric_defect,
                "max_abs_stress": report.max_abs_stress,
                "passes_at_1e-6": report.passes(),
            },
        },
        out / "summary.json",
    )
    if not solution.newton.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def structure_law_from_file(path: str):
    from .laws import LawKind, ManifoldLaw

    doc = json.loads(Path(path).read_text())
    return ManifoldLaw(LawKind(doc["kind"]), np.array(doc["a"]), np.array(doc["b"]), np.array(doc["c"]))


def cmd_check_derivatives(args: argparse.Namespace) -> int:
    results = run_derivative_checks(seed=args.seed, points=args.points)
    all_ok = True
    for res in results:
        status = "ok" if res.passed else "FAIL"
        print(f"  [{status}] {res.name}: max discrepancy {res.worst:.3e} (threshold {res.threshold:.0e})")
        all_ok &= res.passed
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddcm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("truss-sweep", help="enumerate a measurement set on the unit truss")
    sweep.add_argument("--exact", action="store_true", help="noise-free dataset on the s = e manifold")
    sweep.add_argument("--noise", type=float, default=0.0, help="multiplicative stress noise fraction")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--pairs", type=int, default=101)
    sweep.add_argument("--range", type=float, nargs=2, default=[-10.0, 10.0], metavar=("LO", "HI"))
    sweep.add_argument("--load", type=float, default=20.0)
    sweep.add_argument("--data", type=str, default=None, help="load pairs from a strain,stress CSV instead")
    sweep.add_argument("--mode", choices=["cold", "warm-asc", "warm-desc", "enumerate"], default="enumerate")
    sweep.add_argument("--tol", type=float, default=None)
    sweep.add_argument("--max-iter", type=int, default=50)
    sweep.add_argument("--out", type=str, default="out")
    sweep.set_defaults(func=cmd_truss_sweep)

    solve = sub.add_parser("beam-solve", help="solve the quarter-arc benchmark or a structure file")
    solve.add_argument("--law", type=str, default="verification",
                       help=f"law preset {LAW_PRESETS} or a JSON law file")
    solve.add_argument("--structure", type=str, default=None, help="structure JSON file")
    solve.add_argument("--elements", type=int, default=DEFAULT_N_ELEMENTS)
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=50)
    solve.add_argument("--out", type=str, default="out")
    solve.set_defaults(func=cmd_beam_solve)

    check = sub.add_parser("check-derivatives", help="finite-difference consistency suites")
    check.add_argument("--points", type=int, default=10)
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_check_derivatives)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
