"""
Data validation module for problem files
Validates JSON problem files and point lists before any computation runs
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple
import sys
import os

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.adjdiv import ScalarDivisionData
from modules.exterior import ExtElem, MultiIndex
from modules.koszul import KoszulSection
from modules.poly import Poly, PolyMatrix, PolyParseError, ShapeError, parse
from modules.quad import DomainSpec, WeightSpec, parse_psi

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

REQUIRED_KEYS = ['version', 'n', 'r', 'p', 'generators']


@dataclass
class ProblemFile:
    """A validated problem file with every field parsed."""
    path: str
    digest: str
    raw: dict
    version: str
    n: int
    r: int
    p: int
    sec: KoszulSection
    f: ExtElem
    ws: WeightSpec
    dom: DomainSpec
    degree: Optional[int]
    n_rad: int
    n_ang: int
    matrix: Optional[PolyMatrix] = None
    rhs: Optional[List[Poly]] = None
    scalar_data: Optional[ScalarDivisionData] = None
    raw_matrix: Optional[np.ndarray] = None


def parse_complex(value) -> complex:
    """A number or an [re, im] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"Complex values are [re, im] pairs, got {value}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise ValueError(f"Not a complex value: {value!r}")


def _parse_poly(text, nvars: int, where: str) -> Poly:
    if not isinstance(text, str):
        raise ValueError(f"{where} must be a polynomial string, got {text!r}")
    try:
        return parse(text, nvars)
    except PolyParseError as e:
        logger.error(f"Polynomial syntax error in {where}: {e}")
        raise


def _parse_target(target: Dict, r: int, p: int, n: int) -> ExtElem:
    coeffs = {}
    for key, text in target.items():
        index = MultiIndex.parse(key, r)
        if len(index) != p - 1:
            raise ValueError(f"target key {key!r} must have {p - 1} indices")
        coeffs[index] = _parse_poly(text, n, f"target[{key!r}]")
    return ExtElem(r, p - 1, coeffs)


def _parse_scalar_data(data: Dict, n: int, q: int, p: int) -> ScalarDivisionData:
    u_raw = data.get('u', data) if isinstance(data, dict) else None
    if not isinstance(u_raw, dict):
        raise ValueError("scalar_data must be an object of multi-index keys")
    v_raw = data.get('v', {}) if 'u' in data else {}
    u = {MultiIndex.parse(k, p): tuple(_parse_poly(t, n, f"scalar_data.u[{k!r}]") for t in column)
         for k, column in u_raw.items()}
    v = {MultiIndex.parse(k, p): tuple(_parse_poly(t, n, f"scalar_data.v[{k!r}]") for t in column)
         for k, column in v_raw.items()}
    for index, column in u.items():
        if len(index) != q or len(column) != q:
            raise ValueError(f"scalar_data.u[{index.key()!r}] must select {q} columns and hold {q} polynomials")
    for index, column in v.items():
        if len(index) != q or len(column) != p - q:
            raise ValueError(f"scalar_data.v[{index.key()!r}] must hold {p - q} polynomials")
    return ScalarDivisionData(u=u, v=v)


def validate_problem_file(file_path: str) -> Tuple[bool, str, Optional[ProblemFile]]:
    """
    Validate a JSON problem file.

    Args:
        file_path: Path to the problem file

    Returns:
        Tuple of (is_valid, message, problem)
        - is_valid: Boolean indicating if the file is valid
        - message: Success or error message
        - problem: Parsed ProblemFile if valid, None if invalid
    """
    logger.info(f"Validating problem file: {file_path}")

    try:
        # Step 1: Check file format
        if not file_path.endswith('.json'):
            return False, "❌ Problem file must be in JSON format.", None

        # Step 2: Try to load the JSON document
        try:
            with open(file_path, 'rb') as handle:
                payload = handle.read()
            raw = json.loads(payload.decode('utf-8'))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            return False, f"❌ Unable to read problem file. Error: {str(e)}", None
        if not isinstance(raw, dict):
            return False, "❌ Problem file must hold a JSON object.", None

        # Step 3: Check for required keys
        missing_keys = [key for key in REQUIRED_KEYS if key not in raw]
        if missing_keys:
            return False, f"❌ Missing required keys: {', '.join(missing_keys)}", None

        # Step 4: Validate dimensions
        n, r, p = raw['n'], raw['r'], raw['p']
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (n, r, p)):
            return False, "❌ n, r and p must be integers.", None
        if n < 1 or r < 1:
            return False, f"❌ Need n >= 1 and r >= 1, got n={n}, r={r}.", None
        if not 1 <= p <= r:
            return False, f"❌ p must lie in 1..{r}, got {p}.", None

        # Step 5: Parse generators
        generators = raw['generators']
        if not isinstance(generators, list) or len(generators) != r:
            return False, f"❌ generators must be a list of {r} polynomial strings.", None
        g = tuple(_parse_poly(text, n, f"generators[{k}]") for k, text in enumerate(generators))
        sec = KoszulSection(n, r, g)

        # Step 6: Parse target
        target = raw.get('target', {})
        if not isinstance(target, dict):
            return False, "❌ target must map multi-index strings to polynomials.", None
        f = _parse_target(target, r, p, n)

        # Step 7: Validate weight
        weight = raw.get('weight', {})
        ws = WeightSpec(psi=str(weight.get('psi', '0')), epsilon=float(weight.get('epsilon', 1.0)),
                        q=weight.get('q'))
        parse_psi(ws.psi, n)

        # Step 8: Validate domain
        domain = raw.get('domain', {})
        center = [parse_complex(c) for c in domain.get('center', [0] * n)]
        radii = [float(v) for v in domain.get('radii', [1.0] * n)]
        dom = DomainSpec(tuple(center), tuple(radii), domain.get('kind', 'polydisc'))
        if dom.n != n:
            return False, f"❌ domain has {dom.n} coordinates, expected {n}.", None

        # Step 9: Validate solver settings
        solver = raw.get('solver', {})
        degree = solver.get('degree')
        n_rad = int(solver.get('n_rad', config.DEFAULT_N_RAD))
        n_ang = int(solver.get('n_ang', config.DEFAULT_N_ANG))
        if degree is not None and (not isinstance(degree, int) or degree < 0):
            return False, f"❌ solver.degree must be a nonnegative integer, got {degree!r}.", None
        if n_rad < 2 or n_ang < 4:
            return False, f"❌ solver resolution needs n_rad >= 2 and n_ang >= 4.", None

        problem = ProblemFile(
            path=file_path,
            digest=hashlib.sha256(payload).hexdigest(),
            raw=raw, version=str(raw['version']), n=n, r=r, p=p,
            sec=sec, f=f, ws=ws, dom=dom, degree=degree, n_rad=n_rad, n_ang=n_ang,
        )

        # Step 10: Optional matrix-division data
        if 'matrix' in raw:
            rows = [[_parse_poly(t, n, f"matrix[{i}][{j}]") for j, t in enumerate(row)]
                    for i, row in enumerate(raw['matrix'])]
            problem.matrix = PolyMatrix.from_rows(rows)
            q_rows, p_cols = problem.matrix.shape
            if q_rows > p_cols:
                return False, f"❌ matrix must have rows <= cols, got {q_rows}x{p_cols}.", None
            rhs = raw.get('rhs', [])
            if len(rhs) != q_rows:
                return False, f"❌ rhs must hold {q_rows} polynomials.", None
            problem.rhs = [_parse_poly(t, n, f"rhs[{i}]") for i, t in enumerate(rhs)]
            if 'scalar_data' in raw:
                problem.scalar_data = _parse_scalar_data(raw['scalar_data'], n, q_rows, p_cols)
        if 'raw_matrix' in raw:
            problem.raw_matrix = np.array([[parse_complex(v) for v in row] for row in raw['raw_matrix']],
                                          dtype=complex)
            if problem.raw_matrix.ndim != 2:
                return False, "❌ raw_matrix must be a rectangular list of rows.", None

        # Step 11: Log problem summary
        logger.info(f"Problem validation successful:")
        logger.info(f"  n={n}, r={r}, p={p}")
        logger.info(f"  Target components: {len(f.coeffs)}")
        logger.info(f"  Weight: psi={ws.psi!r}, epsilon={ws.epsilon}, q={ws.q}")

        success_message = f"✅ Problem file validated: n={n}, r={r}, p={p}, {len(f.coeffs)} target components."
        return True, success_message, problem

    except PolyParseError as e:
        return False, f"❌ Polynomial syntax error: {str(e)}", None
    except (ValueError, TypeError, ShapeError) as e:
        return False, f"❌ Invalid problem file: {str(e)}", None
    except Exception as e:
        logger.error(f"Unexpected error during validation: {e}")
        return False, f"❌ Unexpected error while validating file: {str(e)}", None


def load_points(file_path: str, n: int) -> Tuple[bool, str, Optional[np.ndarray]]:
    """
    Load a JSON list of points; each point is a list of n numbers or [re, im] pairs.

    Returns:
        Tuple of (is_valid, message, points) with points of shape (N, n)
    """
    try:
        with open(file_path, 'r', encoding='utf-8') as handle:
            raw = json.load(handle)
        points = np.array([[parse_complex(c) for c in point] for point in raw], dtype=complex)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as e:
        return False, f"❌ Unable to read points file. Error: {str(e)}", None
    if points.ndim != 2 or points.shape[1] != n or points.shape[0] == 0:
        return False, f"❌ Points must be a non-empty list of {n}-coordinate points.", None
    return True, f"✅ Loaded {points.shape[0]} points.", points


def parse_pair(text: str, separator: str) -> Tuple[int, int]:
    """Parse "RxA" or "R,A" into two positive integers."""
    parts = text.lower().split(separator)
    if len(parts) != 2:
        raise ValueError(f"Expected two integers separated by {separator!r}, got {text!r}")
    first, second = int(parts[0]), int(parts[1])
    if first < 1 or second < 1:
        raise ValueError(f"Expected positive integers, got {text!r}")
    return first, second


if __name__ == "__main__":
    # Test the validation module
    if len(sys.argv) > 1:
        is_valid, message, problem = validate_problem_file(sys.argv[1])
        print(message)
    else:
        print("Usage: python data_validator.py <problem.json>")
