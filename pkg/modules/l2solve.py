"""
Least-norm division module
Find polynomial h of degree <= d with g _| h = f exactly, minimizing the Skoda-weighted
L2 norm over the affine solution set, and certify the ratio against (1+eps)/eps.
"""

import logging
import sys
import os
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import ExtElem, MultiIndex, interior, multi_indices
from modules.koszul import KoszulSection, NotACycleError, cycle_defect
from modules.poly import ONE, ZERO, GaussRat, Poly, coeff_from_sympy, coeff_to_domain, monomials, to_string
from modules.quad import (DomainSpec, QuadratureGrid, WeightSpec, weight_values, pairwise_sum,
                          polydisc_grid, refine_and_estimate, skoda_weights)

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

NOT_CERTIFIED_NOTE = "minimizer not found within degree-d subspace or quadrature unconverged"


class InfeasibleDivisionError(ValueError):
    """g _| h = f has no polynomial solution with deg h <= d."""

    def __init__(self, degree: int, rank: int, augmented_rank: int, inconsistent: int):
        self.degree = degree
        self.rank = rank
        self.augmented_rank = augmented_rank
        self.inconsistent = inconsistent
        super().__init__(
            f"no polynomial solution up to degree {degree} "
            f"(rank {rank} vs augmented rank {augmented_rank}, rank defect {augmented_rank - rank}); "
            f"raise the degree, or f may lie in the "
            f"holomorphic but not the polynomial module")


class DivergentNormError(ArithmeticError):
    """The weighted norm of f does not converge under refinement."""


@dataclass(frozen=True, eq=False)
class DivisionProblem:
    sec: KoszulSection
    p: int
    f: ExtElem
    ws: WeightSpec
    dom: DomainSpec
    degree: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.p <= self.sec.r:
            raise ValueError(f"Degree p={self.p} outside 1..{self.sec.r}")
        if self.dom.n != self.sec.n:
            raise ValueError(f"Domain has dimension {self.dom.n}, generators have {self.sec.n} variables")
        defect = cycle_defect(self.sec, self.p, self.f)
        if self.p >= 2 and not defect.is_zero():
            raise NotACycleError("f is not a cycle: g _| f != 0", defect)
        if self.degree is None:
            object.__setattr__(self, "degree", default_degree(self.sec, self.f))
        if self.degree < 0:
            raise ValueError(f"Basis degree must be nonnegative, got {self.degree}")


def default_degree(sec: KoszulSection, f: ExtElem) -> int:
    """max(deg f, max deg g_i) + DEGREE_MARGIN."""
    deg_f = max([c.degree() for c in f.coeffs.values()], default=0)
    return max(deg_f, sec.max_degree(), 0) + config.DEGREE_MARGIN


@dataclass
class ConstraintSystem:
    """Sparse exact rows over the unknowns (I, m): coefficient of z^m in component h_I."""
    unknowns: List[Tuple[MultiIndex, Tuple[int, ...]]]
    row_keys: List[Tuple[MultiIndex, Tuple[int, ...]]]
    rows: List[Dict[int, GaussRat]]
    rhs: List[GaussRat]
    degree: int


def assemble_constraints(prob: DivisionProblem) -> ConstraintSystem:
    """
    Coefficient matching for g _| h = f.

    Rows are keyed by (K, mu): the coefficient of z^mu in component K of the identity.
    Rows with an empty left side and a nonzero right side are kept; they make the system infeasible.
    """
    sec, p = prob.sec, prob.p
    components = multi_indices(sec.r, p)
    basis = monomials(sec.n, prob.degree)
    unknowns = [(I, m) for I in components for m in basis]
    entries: Dict[Tuple[MultiIndex, Tuple[int, ...]], Dict[int, GaussRat]] = defaultdict(dict)
    for column, (I, m) in enumerate(unknowns):
        for position, i in enumerate(I.indices):
            K = I.without(position)
            for exps, c in sec.g[i - 1].terms.items():
                mu = tuple(a + b for a, b in zip(exps, m))
                term = -c if position % 2 else c
                row = entries[(K, mu)]
                row[column] = row[column] + term if column in row else term
    targets = {}
    for K, fK in prob.f.coeffs.items():
        for mu, c in fK.terms.items():
            targets[(K, mu)] = c
    keys = sorted(set(entries) | set(targets))
    rows = [{k: v for k, v in entries.get(key, {}).items() if not v.is_zero()} for key in keys]
    rhs = [targets.get(key, ZERO) for key in keys]
    logger.info(f"Assembled {len(keys)} equations in {len(unknowns)} unknowns at degree {prob.degree}")
    return ConstraintSystem(unknowns, keys, rows, rhs, prob.degree)


@dataclass
class NullspaceSolution:
    particular: List[GaussRat]
    basis: List[List[GaussRat]]
    pivots: List[int]


def _row_reduce(system: ConstraintSystem) -> NullspaceSolution:
    """
    Exact reduced row echelon form of [A | b] over QQ_I; free variables are set to zero in
    the particular solution and each one spans a nullspace vector.
    """
    ncols = len(system.unknowns)
    if not system.rows:
        basis = [[ONE if k == free else ZERO for k in range(ncols)] for free in range(ncols)]
        return NullspaceSolution([ZERO] * ncols, basis, [])
    zero = QQ_I.zero
    dense = []
    for row, b in zip(system.rows, system.rhs):
        entries = [zero] * (ncols + 1)
        for k, v in row.items():
            entries[k] = coeff_to_domain(v)
        entries[ncols] = coeff_to_domain(b)
        dense.append(entries)
    reduced, pivots = DomainMatrix(dense, (len(dense), ncols + 1), QQ_I).rref()
    pivots = list(pivots)
    if pivots and pivots[-1] == ncols:
        rank = len(pivots) - 1
        raise InfeasibleDivisionError(system.degree, rank, rank + 1, 1)
    rank = len(pivots)
    reduced = reduced.to_Matrix()
    rows = [[coeff_from_sympy(reduced[i, k]) for k in range(ncols + 1)] for i in range(rank)]

    particular = [ZERO] * ncols
    for i, col in enumerate(pivots):
        particular[col] = rows[i][ncols]
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vector = [ZERO] * ncols
        vector[free] = ONE
        for i, col in enumerate(pivots):
            vector[col] = -rows[i][free]
        basis.append(vector)
    logger.info(f"Exact rank {rank}, nullspace dimension {len(basis)}")
    return NullspaceSolution(particular, basis, pivots)


def _monomial_matrix(nodes: np.ndarray, basis: Sequence[Tuple[int, ...]]) -> np.ndarray:
    V = np.ones((nodes.shape[0], len(basis)), dtype=complex)
    for a, exps in enumerate(basis):
        for j, e in enumerate(exps):
            if e:
                V[:, a] = V[:, a] * nodes[:, j] ** e
    return V


def gram_matrix(prob: DivisionProblem, grid: QuadratureGrid) -> np.ndarray:
    """
    G[(I,m),(J,m')] = delta_IJ sum_nodes weight * w_num * z^m * conj(z^m').

    The block for one component is shared by all components.
    """
    basis = monomials(prob.sec.n, prob.degree)
    components = multi_indices(prob.sec.r, prob.p)
    w_num, _ = skoda_weights(prob.sec, prob.ws)
    parts = []
    for nodes, weights in grid.iter_blocks(config.QUAD_CHUNK):
        scaled = weights * weight_values(w_num, nodes)
        V = _monomial_matrix(nodes, basis)
        parts.append((V * scaled[:, None]).T @ V.conj())
    block = pairwise_sum(np.array(parts))
    block = (block + block.conj().T) / 2
    return np.kron(np.eye(len(components)), block)


def discrete_norm2(x: np.ndarray, gram: np.ndarray) -> float:
    """sum_ab x_a G_ab conj(x_b)."""
    x = np.asarray(x, dtype=complex)
    return float(np.real(x @ gram @ x.conj()))


@dataclass
class MinNormSolution:
    coefficients: np.ndarray
    exact: NullspaceSolution
    coords: np.ndarray


def solve_min_norm(constraints: ConstraintSystem, gram: np.ndarray) -> MinNormSolution:
    """
    Exact particular solution x0 and nullspace N, then minimize (x0 + N c)^H H (x0 + N c)
    with H = G^T via the normal equations N^H H N c = -N^H H x0.
    """
    exact = _row_reduce(constraints)
    x0 = np.array([complex(v) for v in exact.particular], dtype=complex)
    if not exact.basis:
        return MinNormSolution(x0, exact, np.zeros(0, dtype=complex))
    N = np.array([[complex(v) for v in vector] for vector in exact.basis], dtype=complex).T
    H = np.asarray(gram, dtype=complex).T
    A = N.conj().T @ H @ N
    b = -N.conj().T @ H @ x0
    coords = linalg.lstsq(A, b)[0]
    return MinNormSolution(x0 + N @ coords, exact, coords)


def _snap(value: complex) -> GaussRat:
    limit = config.SNAP_MAX_DENOMINATOR
    return GaussRat(Fraction(value.real).limit_denominator(limit), Fraction(value.imag).limit_denominator(limit))


def exact_solution(prob: DivisionProblem, solution: MinNormSolution) -> ExtElem:
    """Particular solution plus snapped nullspace coordinates; exactly a solution of g _| h = f."""
    values = list(solution.exact.particular)
    for c, vector in zip(solution.coords, solution.exact.basis):
        snapped = _snap(complex(c))
        if snapped.is_zero():
            continue
        values = [v + snapped * w if not w.is_zero() else v for v, w in zip(values, vector)]
    return _to_ext(prob, values, lambda terms: Poly(prob.sec.n, terms))


class MonomialExpansion:
    """Numeric polynomial sum c_m z^m, evaluated through the monomial matrix."""

    def __init__(self, basis: Sequence[Tuple[int, ...]], coefficients: np.ndarray):
        self.basis = list(basis)
        self.coefficients = np.asarray(coefficients, dtype=complex)

    def evaluate_many(self, nodes: np.ndarray) -> np.ndarray:
        return _monomial_matrix(np.asarray(nodes, dtype=complex), self.basis) @ self.coefficients


def _to_ext(prob: DivisionProblem, values: Sequence, build) -> ExtElem:
    basis = monomials(prob.sec.n, prob.degree)
    out = {}
    for k, I in enumerate(multi_indices(prob.sec.r, prob.p)):
        chunk = values[k * len(basis):(k + 1) * len(basis)]
        out[I] = build(dict(zip(basis, chunk)))
    return ExtElem(prob.sec.r, prob.p, {I: c for I, c in out.items() if not c.is_zero()})


def _f_components(prob: DivisionProblem) -> List[Poly]:
    return [prob.f.coeffs.get(K, Poly(prob.sec.n)) for K in multi_indices(prob.sec.r, prob.p - 1)]


@dataclass
class DivisionCertificate:
    h: ExtElem
    residual: ExtElem
    norm_h: float
    norm_f: float
    ratio: float
    bound: float
    satisfied: bool
    quadrature_rel_change: float
    degree: int
    tolerance: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "h": {I.key(): to_string(c) for I, c in self.h.coeffs.items()},
            "residual": {I.key(): to_string(c) for I, c in self.residual.coeffs.items()},
            "residual_is_zero": self.residual.is_zero(),
            "norm_h": self.norm_h,
            "norm_f": self.norm_f,
            "ratio": self.ratio,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "quadrature_rel_change": self.quadrature_rel_change,
            "degree": self.degree,
            "tolerance": self.tolerance,
            "note": self.note,
        }


def skoda_report(prob: DivisionProblem, resolution: Optional[Tuple[int, int]] = None) -> DivisionCertificate:
    """
    Solve the least-norm division and compare both weighted norms against (1+eps)/eps.

    Args:
        prob: Division problem (f a cycle)
        resolution: Base (n_rad, n_ang) per coordinate

    Returns:
        DivisionCertificate; a ratio above the bound is reported, never raised
    """
    resolution = resolution or (config.DEFAULT_N_RAD, config.DEFAULT_N_ANG)
    w_num, w_den = skoda_weights(prob.sec, prob.ws)

    logger.info("Estimating the weighted norm of f...")
    f_estimate = refine_and_estimate(_f_components(prob), w_den, prob.dom, resolution)
    if f_estimate.diverging:
        raise DivergentNormError(
            f"weighted norm of f diverges under refinement (last value {f_estimate.value:.6g}); "
            f"the integrability hypothesis fails for this datum")

    logger.info("Assembling constraints...")
    constraints = assemble_constraints(prob)
    gram = gram_matrix(prob, polydisc_grid(prob.dom, *resolution))
    solution = solve_min_norm(constraints, gram)

    h = exact_solution(prob, solution)
    residual = interior(prob.sec.g, h) - prob.f

    basis = monomials(prob.sec.n, prob.degree)
    components = [MonomialExpansion(basis, solution.coefficients[k * len(basis):(k + 1) * len(basis)])
                  for k in range(len(multi_indices(prob.sec.r, prob.p)))]
    logger.info("Estimating the weighted norm of h...")
    h_estimate = refine_and_estimate(components, w_num, prob.dom, resolution)

    norm_f, norm_h = f_estimate.value, h_estimate.value
    if norm_f > 0:
        ratio = norm_h / norm_f
    else:
        ratio = 0.0 if norm_h == 0 else float("inf")
    rel_change = max(f_estimate.rel_change, h_estimate.rel_change)
    tolerance = config.CERT_REFINE_FACTOR * rel_change + config.CERT_BASE_TOL
    bound = prob.ws.bound
    satisfied = residual.is_zero() and not h_estimate.diverging and ratio <= bound * (1 + tolerance)
    note = "" if satisfied else NOT_CERTIFIED_NOTE
    if not satisfied:
        logger.warning(f"Ratio {ratio:.6g} against bound {bound:.6g}: {NOT_CERTIFIED_NOTE}")
    return DivisionCertificate(h, residual, norm_h, norm_f, ratio, bound, satisfied,
                               rel_change, prob.degree, tolerance, note)


if __name__ == "__main__":
    sec = KoszulSection.from_strings(["z1"], 1)
    f = ExtElem(1, 0, {MultiIndex((), 1): Poly.variable(1, 1)})
    prob = DivisionProblem(sec, 1, f, WeightSpec(epsilon=0.5), DomainSpec.unit(1))
    print(skoda_report(prob, (8, 8)).to_dict())
