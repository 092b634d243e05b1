#!/usr/bin/env python3
"""
Koszul division toolkit: command-line entry point

Usage:
    python cli.py check-complex --input problems/koszul_degree2.json
    python cli.py exactness --input problems/fubini_study.json --grid 4x8
    python cli.py divide --input problems/skoda_bidisc.json --mode l2 --resolution 32,32
    python cli.py divide --input problems/adjugate_example.json --mode adjugate
    python cli.py verify-identities --input problems/fubini_study.json --seed 1 --npoints 20
    python cli.py trace-bound --trials 1000

The JSON report goes to standard output, a readable summary to standard error.
"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg, special

import config
from modules import data_manager
from modules.adjdiv import (DivisionDataError, NotDivisibleError, assemble_solution, integrability_check,
                            scalar_backend_single)
from modules.data_validator import ProblemFile, load_points, parse_pair, validate_problem_file
from modules.exterior import MultiIndex, evaluate_ext, ext_norm2, interior
from modules.identcheck import IdentityCheckError
from modules.koszul import (ComplexPropertyError, NotACycleError, SingularPointError, boundary_matrix,
                            cycle_defect, exactness_score, exactness_score_single, is_exact_pair,
                            koszul_pair, make_frame, pointwise_lift)
from modules.l2solve import DivergentNormError, DivisionProblem, InfeasibleDivisionError, skoda_report
from modules.poly import Poly, PolyMatrix, PolyParseError, ShapeError, minors, to_string
from modules.quad import NonFiniteWeightError
from modules.trace import TraceBoundError
from modules.verification_pipeline import FAIL, check_trace_bound, run_verification_pipeline, summarize_failures

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

# Most specific classes first: several subclass ValueError.
EXIT_CODES = [
    (NotACycleError, config.EXIT_NOT_CYCLE),
    (InfeasibleDivisionError, config.EXIT_INFEASIBLE),
    (NotDivisibleError, config.EXIT_INFEASIBLE),
    (DivergentNormError, config.EXIT_DIVERGENT),
    (NonFiniteWeightError, config.EXIT_DIVERGENT),
    (SingularPointError, config.EXIT_SINGULAR_POINT),
    (IdentityCheckError, config.EXIT_IDENTITY_FAILURE),
    (TraceBoundError, config.EXIT_IDENTITY_FAILURE),
    (ComplexPropertyError, config.EXIT_IDENTITY_FAILURE),
    (PolyParseError, config.EXIT_PARSE_ERROR),
    (DivisionDataError, config.EXIT_PARSE_ERROR),
    (ShapeError, config.EXIT_PARSE_ERROR),
    (ValueError, config.EXIT_PARSE_ERROR),
]

OUTPUT_OPTIONS = ('json_out', 'xlsx_out', 'timing', 'func')


class UsageError(ValueError):
    """Missing or inconsistent command-line options."""


def exit_code_for(error: Exception) -> Optional[int]:
    for cls, code in EXIT_CODES:
        if isinstance(error, cls):
            return code
    return None


def error_payload(error: Exception) -> Dict:
    payload = {'type': type(error).__name__, 'message': str(error)}
    if isinstance(error, NotACycleError) and error.defect is not None:
        payload['defect'] = error.defect
    if isinstance(error, InfeasibleDivisionError):
        payload.update(degree=error.degree, rank=error.rank, augmented_rank=error.augmented_rank,
                       inconsistent=error.inconsistent)
    if isinstance(error, DivisionDataError):
        payload['defect'] = [to_string(d) for d in error.defect]
    if isinstance(error, PolyParseError):
        payload['offset'] = error.offset
    if isinstance(error, NonFiniteWeightError):
        payload['node'] = error.node
    return payload


def _require_problem(problem: Optional[ProblemFile]) -> ProblemFile:
    if problem is None:
        raise UsageError("this command needs --input FILE")
    return problem


def grid_points(problem: ProblemFile, n_radii: int, n_angles: int) -> np.ndarray:
    """
    Polar grid per coordinate, tensored over coordinates.

    The radii are the Gauss-Legendre nodes mapped to (0, radius) and the angles are offset by half a
    step, the same nodes polydisc_grid integrates on.
    """
    x, _ = special.roots_legendre(n_radii)
    theta = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    per_axis = []
    for center, radius in zip(problem.dom.center, problem.dom.radii):
        rho = radius * (x + 1) / 2
        per_axis.append((center + np.outer(rho, np.exp(1j * theta))).reshape(-1))
    mesh = np.meshgrid(*per_axis, indexing='ij')
    return np.stack([axis.reshape(-1) for axis in mesh], axis=1)


def resolve_points(args, problem: ProblemFile) -> Tuple[np.ndarray, str]:
    """
    Points from --points, --grid, or seeded uniform samples from the domain.

    Returns:
        Tuple of (points of shape (N, n), description of the source)
    """
    if args.points and args.grid:
        raise UsageError("give either --points or --grid, not both")
    if args.points:
        is_valid, message, points = load_points(args.points, problem.n)
        if not is_valid:
            raise UsageError(message)
        return points, f"file:{os.path.basename(args.points)}"
    if args.grid:
        n_radii, n_angles = parse_pair(args.grid, 'x')
        return grid_points(problem, n_radii, n_angles), f"grid:{n_radii}x{n_angles}"
    rng = np.random.default_rng(args.seed)
    return problem.dom.sample(rng, args.npoints), f"random:{args.npoints}"


def _point_json(z: np.ndarray) -> List[List[float]]:
    return [[float(c.real), float(c.imag)] for c in np.asarray(z).reshape(-1)]


def cmd_check_complex(args, problem: Optional[ProblemFile]) -> Tuple[Dict, List[str], int]:
    """d_(p-1) d_p = 0 symbolically for every p, then the cycle condition on the target."""
    problem = _require_problem(problem)
    sec = problem.sec
    rows = []
    for p in range(2, sec.r + 1):
        product = boundary_matrix(sec, p - 1).matmul(boundary_matrix(sec, p))
        rows.append({'p': p, 'shape': list(product.shape), 'zero': product.is_zero()})
    if not all(row['zero'] for row in rows):
        failing = [row['p'] for row in rows if not row['zero']]
        raise ComplexPropertyError(f"d_(p-1) d_p is not zero for p in {failing}")

    defect = cycle_defect(sec, problem.p, problem.f)
    if problem.p >= 2 and not defect.is_zero():
        raise NotACycleError("target is not a cycle: g _| f != 0", defect)

    results = {
        'complex': rows,
        'complex_ok': True,
        'p': problem.p,
        'target_is_cycle': True,
    }
    return results, [], config.EXIT_OK


def cmd_exactness(args, problem: Optional[ProblemFile]) -> Tuple[Dict, List[str], int]:
    """E(z) of the Koszul pair around degree p against |s(z)|^2 at each point."""
    problem = _require_problem(problem)
    warnings = []
    results = {}

    if problem.raw_matrix is not None:
        M = problem.raw_matrix
        results['raw_matrix'] = {
            'shape': list(M.shape),
            'E1': exactness_score_single(M),
            'min_eig_phi_phi_star': float(linalg.eigvalsh(M @ M.conj().T)[0]),
        }

    points, source = resolve_points(args, problem)
    rows = []
    for k, z in enumerate(points):
        frame = make_frame(problem.sec, z)
        Phi, Psi = koszul_pair(frame.g_at, problem.p)
        rows.append({
            'index': k,
            'z': _point_json(z),
            'E': exactness_score(Phi, Psi),
            's_norm2': frame.s_norm2,
            'exact': is_exact_pair(Phi, Psi),
        })
    table = pd.DataFrame(rows)
    table['abs_diff'] = (table['E'] - table['s_norm2']).abs()
    table['agree'] = table['abs_diff'] <= config.EXACTNESS_AGREE_TOL * table['s_norm2'].clip(lower=1.0)
    table['zero_locus'] = ~table['exact']

    zero_count = int(table['zero_locus'].sum())
    if zero_count:
        warnings.append(f"{zero_count} point(s) on the zero locus of s: E = 0")
    if not table['agree'].all():
        warnings.append(f"E and |s|^2 disagree at {int((~table['agree']).sum())} point(s)")

    results.update({
        'p': problem.p,
        'source': source,
        'points': table.to_dict('records'),
        'all_agree': bool(table['agree'].all()),
        'zero_locus_points': zero_count,
    })
    return results, warnings, config.EXIT_OK


def _divide_l2(args, problem: ProblemFile) -> Tuple[Dict, List[str]]:
    prob = DivisionProblem(problem.sec, problem.p, problem.f, problem.ws, problem.dom,
                           degree=args.degree if args.degree is not None else problem.degree)
    resolution = parse_pair(args.resolution, ',') if args.resolution else (problem.n_rad, problem.n_ang)
    certificate = skoda_report(prob, resolution)
    warnings = [certificate.note] if certificate.note else []
    return {'certificate': certificate.to_dict(), 'resolution': list(resolution)}, warnings


def _adjugate_inputs(problem: ProblemFile):
    if problem.matrix is not None:
        return problem.matrix, problem.rhs
    if problem.p != 1:
        raise UsageError("adjugate mode needs a 'matrix' entry, or p = 1 to divide by the generator row")
    row = PolyMatrix(1, problem.r, problem.sec.g)
    return row, [problem.f.coeffs.get(MultiIndex((), problem.r), Poly(problem.n))]


def _divide_adjugate(args, problem: ProblemFile) -> Tuple[Dict, List[str]]:
    Phi, rhs = _adjugate_inputs(problem)
    data = problem.scalar_data
    if data is None:
        logger.info("No scalar division data given; trying single-minor division")
        data = scalar_backend_single(minors(Phi), rhs)
    h = assemble_solution(Phi, data, rhs)
    residual = [a - b for a, b in zip(Phi.apply(h), rhs)]
    results = {
        'shape': list(Phi.shape),
        'h': [to_string(c) for c in h],
        'residual': [to_string(c) for c in residual],
        'residual_is_zero': all(c.is_zero() for c in residual),
        'scalar_data': {I.key(): [to_string(c) for c in u] for I, u in sorted(data.u.items())},
    }
    warnings = []
    if args.alpha is not None:
        resolution = parse_pair(args.resolution, ',') if args.resolution else (problem.n_rad, problem.n_ang)
        check = integrability_check(Phi, rhs, problem.ws, problem.dom, args.alpha, resolution)
        results['integrability'] = check
        if not check['finite']:
            warnings.append(f"integrability check diverges at beta={check['beta']:.6g}")
    return results, warnings


def _divide_pointwise(args, problem: ProblemFile) -> Tuple[Dict, List[str]]:
    points, source = resolve_points(args, problem)
    rows = []
    for k, z in enumerate(points):
        frame = make_frame(problem.sec, z)
        if frame.s_norm2 == 0.0:
            raise SingularPointError(f"s vanishes at point {k}, z={np.asarray(z).tolist()}")
        f_at = evaluate_ext(problem.f, z)
        h = pointwise_lift(frame, problem.p, f_at)
        residual = interior(frame.g_at, h) - f_at
        rows.append({
            'index': k,
            'z': _point_json(z),
            'h': {I.key(): [float(c.real), float(c.imag)] for I, c in h.coeffs.items()},
            'norm2_h': ext_norm2(h),
            'norm2_f_over_s2': ext_norm2(f_at) / frame.s_norm2,
            'residual_norm': float(np.sqrt(ext_norm2(residual))),
        })
    return {'source': source, 'points': rows}, []


def cmd_divide(args, problem: Optional[ProblemFile]) -> Tuple[Dict, List[str], int]:
    """Solve g _| h = f by the chosen method."""
    problem = _require_problem(problem)
    handlers = {'l2': _divide_l2, 'adjugate': _divide_adjugate, 'pointwise': _divide_pointwise}
    results, warnings = handlers[args.mode](args, problem)
    results['mode'] = args.mode
    return results, warnings, config.EXIT_OK


def cmd_verify_identities(args, problem: Optional[ProblemFile]) -> Tuple[Dict, List[str], int]:
    """Identity suite at seeded random points plus the trace-bound suite."""
    problem = _require_problem(problem)
    points = None
    if args.points or args.grid:
        points, _ = resolve_points(args, problem)
    results = run_verification_pipeline(problem.sec, problem.dom, seed=args.seed, npoints=args.npoints,
                                        trials=args.trials, step=args.step, points=points)
    warnings = summarize_failures(results)
    code = config.EXIT_OK if results['all_passed'] else config.EXIT_IDENTITY_FAILURE
    return results, warnings, code


def cmd_trace_bound(args, problem: Optional[ProblemFile]) -> Tuple[Dict, List[str], int]:
    """Randomized trace-bound fuzz and the equality family."""
    record = check_trace_bound(args.trials, args.seed)
    warnings = [record['detail']] if record['status'] == FAIL else []
    code = config.EXIT_OK if record['status'] != FAIL else config.EXIT_IDENTITY_FAILURE
    return record, warnings, code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koszul",
        description="Koszul complex and division toolkit: exactness, identities and certified division",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    def add_common(sub, needs_input: bool = True):
        sub.add_argument("--input", required=needs_input, help="Problem file (JSON)")
        sub.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Random seed")
        sub.add_argument("--json-out", help="Also write the JSON report to this file")
        sub.add_argument("--xlsx-out", help="Also export the report tables to an Excel workbook")
        sub.add_argument("--timing", action="store_true", help="Include wall time in the report")

    def add_points(sub):
        sub.add_argument("--points", help="JSON list of points")
        sub.add_argument("--grid", help="Polar sampling grid RxA per coordinate")
        sub.add_argument("--npoints", type=int, default=config.DEFAULT_NPOINTS,
                         help="Number of random points when neither --points nor --grid is given")

    check_parser = subparsers.add_parser("check-complex", help="Verify d o d = 0 and the cycle condition")
    add_common(check_parser)
    check_parser.set_defaults(func=cmd_check_complex)

    exact_parser = subparsers.add_parser("exactness", help="Tabulate E(z) against |s(z)|^2")
    add_common(exact_parser)
    add_points(exact_parser)
    exact_parser.set_defaults(func=cmd_exactness)

    divide_parser = subparsers.add_parser("divide", help="Solve g _| h = f")
    add_common(divide_parser)
    add_points(divide_parser)
    divide_parser.add_argument("--mode", choices=["l2", "adjugate", "pointwise"], default="l2")
    divide_parser.add_argument("--degree", type=int, help="Polynomial degree of the l2 search space")
    divide_parser.add_argument("--resolution", help="Base quadrature resolution R,A per coordinate")
    divide_parser.add_argument("--alpha", type=float,
                               help="Run the integrability check with this alpha > 1 (adjugate mode)")
    divide_parser.set_defaults(func=cmd_divide)

    verify_parser = subparsers.add_parser("verify-identities", help="Run the identity suite")
    add_common(verify_parser)
    add_points(verify_parser)
    verify_parser.add_argument("--trials", type=int, default=config.TRACE_FUZZ_TRIALS)
    verify_parser.add_argument("--step", type=float, default=config.FD_STEP, help="Finite-difference step")
    verify_parser.set_defaults(func=cmd_verify_identities)

    trace_parser = subparsers.add_parser("trace-bound", help="Fuzz the generalized trace bound")
    add_common(trace_parser, needs_input=False)
    trace_parser.add_argument("--trials", type=int, default=config.TRACE_FUZZ_TRIALS)
    trace_parser.set_defaults(func=cmd_trace_bound)

    return parser


def _command_echo(args) -> Dict:
    echo = {key: value for key, value in sorted(vars(args).items()) if key not in OUTPUT_OPTIONS}
    echo['name'] = echo.pop('command')
    if echo.get('input'):
        echo['input'] = os.path.basename(echo['input'])
    return echo


def emit(report: Dict, args, exit_code: int) -> int:
    """Write the report to stdout and the requested files, the summary to stderr."""
    sys.stdout.write(data_manager.dumps_report(report))
    if getattr(args, 'json_out', None):
        data_manager.write_json(report, args.json_out)
    if getattr(args, 'xlsx_out', None):
        try:
            data_manager.export_to_excel(report, args.xlsx_out)
        except Exception as e:
            logger.error(f"Error exporting to Excel: {e}")
    sys.stderr.write(data_manager.format_summary(report, exit_code) + "\n")
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return config.EXIT_PARSE_ERROR if e.code else config.EXIT_OK

    if not args.command:
        parser.print_help(sys.stderr)
        return config.EXIT_PARSE_ERROR

    started = time.perf_counter()
    command = _command_echo(args)
    problem = None
    problem_digest = ''
    warnings: List[str] = []

    if args.input:
        is_valid, message, problem = validate_problem_file(args.input)
        if not is_valid:
            report = data_manager.build_report(command, data_manager.inputs_digest(json.dumps(command)),
                                               {'error': {'type': 'ValidationError', 'message': message}},
                                               [message])
            return emit(report, args, config.EXIT_PARSE_ERROR)
        problem_digest = problem.digest

    digest = data_manager.inputs_digest(problem_digest, json.dumps(command, sort_keys=True))
    try:
        results, warnings, exit_code = args.func(args, problem)
    except Exception as e:
        exit_code = exit_code_for(e)
        if exit_code is None:
            raise
        logger.error(f"{args.command} failed: {e}")
        results = {'error': error_payload(e)}
        warnings = [str(e)]

    wall_time = time.perf_counter() - started if args.timing else None
    report = data_manager.build_report(command, digest, results, warnings, wall_time)
    return emit(report, args, exit_code)


if __name__ == "__main__":
    sys.exit(main())
