"""
Adjugate division module
Solve Phi h = f for a q x p polynomial matrix Phi from scalar division data f = sum_I delta_I u_I,
using bordered p x p matrices and their adjugates, one multi-index I at a time.
"""

import logging
import sys
import os
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import MultiIndex, comp_sign
from modules.poly import Poly, PolyMatrix, ShapeError, adjugate, divide, evaluate_many, minors, to_string
from modules.quad import DomainSpec, RefinedEstimate, WeightSpec, parse_psi, refine_and_estimate

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)


class DivisionDataError(ValueError):
    """sum_I delta_I u_I != f; carries the defect polynomials."""

    def __init__(self, defect: Sequence[Poly]):
        self.defect = list(defect)
        super().__init__("scalar division data does not reproduce f; defect = ("
                         + ", ".join(to_string(d) for d in self.defect) + ")")


class NotDivisibleError(ValueError):
    """No single maximal minor divides every component of f."""


@dataclass(frozen=True, eq=False)
class BorderedMatrix:
    base: PolyMatrix
    index: MultiIndex
    full: PolyMatrix


@dataclass
class ScalarDivisionData:
    """u_I (q polynomials) per multi-index and the optional fill v_I (p - q polynomials)."""
    u: Dict[MultiIndex, Tuple[Poly, ...]] = field(default_factory=dict)
    v: Dict[MultiIndex, Tuple[Poly, ...]] = field(default_factory=dict)


def build_bordered(Phi: PolyMatrix, I: MultiIndex) -> BorderedMatrix:
    """
    Stack Phi on top of unit rows at the complementary columns J = (j_1 < ... < j_(p-q)).

    Row q+k of the full matrix has a single 1 in column j_k, so det(full) = sign(I, J) * delta_I.
    """
    q, p = Phi.shape
    if q > p:
        raise ShapeError(f"Bordering needs rows <= cols, got {q}x{p}")
    if I.r != p or len(I) != q:
        raise ShapeError(f"Multi-index {I.indices} over 1..{I.r} does not select {q} of {p} columns")
    if q == p:
        return BorderedMatrix(Phi, I, Phi)
    _, J = comp_sign(I, p)
    one, zero = Poly.constant(1, Phi.nvars), Poly(Phi.nvars)
    border = [one if col == j - 1 else zero for j in J.indices for col in range(p)]
    full = PolyMatrix(p, p, list(Phi.entries) + border)
    return BorderedMatrix(Phi, I, full)


def _zeros(count: int, nvars: int) -> Tuple[Poly, ...]:
    return tuple(Poly(nvars) for _ in range(count))


def division_defect(delta: Dict[MultiIndex, Poly], data: ScalarDivisionData, f: Sequence[Poly]) -> List[Poly]:
    """sum_I delta_I u_I - f, componentwise."""
    defect = [-c for c in f]
    for I, u in data.u.items():
        if I not in delta:
            raise ShapeError(f"Division data names {I.indices}, which is not a column multi-index")
        if len(u) != len(f):
            raise ShapeError(f"u_{I.key()} has {len(u)} entries, f has {len(f)}")
        defect = [d + delta[I] * u_nu for d, u_nu in zip(defect, u)]
    return defect


def partial_solution(Phi: PolyMatrix, I: MultiIndex, u_I: Sequence[Poly],
                     v_I: Optional[Sequence[Poly]] = None) -> Tuple[int, List[Poly]]:
    """
    h_I = adj(full_I) (u_I; v_I), so that Phi h_I = sign(I, J) delta_I u_I.

    Returns:
        Tuple of (sign, h_I)
    """
    q, p = Phi.shape
    bordered = build_bordered(Phi, I)
    v_I = tuple(v_I) if v_I is not None else _zeros(p - q, Phi.nvars)
    if len(u_I) != q or len(v_I) != p - q:
        raise ShapeError(f"Expected u of length {q} and v of length {p - q}")
    sign, _ = comp_sign(I, p)
    return sign, adjugate(bordered.full).apply(list(u_I) + list(v_I))


def assemble_solution(Phi: PolyMatrix, data: ScalarDivisionData, f: Sequence[Poly]) -> List[Poly]:
    """
    h = sum_I sign(I, J) h_I with Phi h = f exactly.

    Args:
        Phi: q x p polynomial matrix
        data: Scalar division data satisfying sum_I delta_I u_I = f
        f: Right-hand side, q polynomials

    Returns:
        h as a list of p polynomials
    """
    q, p = Phi.shape
    if len(f) != q:
        raise ShapeError(f"f has {len(f)} entries, Phi has {q} rows")
    delta = minors(Phi)
    defect = division_defect(delta, data, f)
    if any(not d.is_zero() for d in defect):
        raise DivisionDataError(defect)

    h = list(_zeros(p, Phi.nvars))
    for I in sorted(set(data.u) | set(data.v)):
        u_I = data.u.get(I, _zeros(q, Phi.nvars))
        sign, h_I = partial_solution(Phi, I, u_I, data.v.get(I))
        h = [a + b if sign > 0 else a - b for a, b in zip(h, h_I)]
        logger.debug(f"Partial solution for I={I.key()} with sign {sign:+d}")

    product = Phi.apply(h)
    if any(not (a - b).is_zero() for a, b in zip(product, f)):
        raise ArithmeticError("assembled h does not satisfy Phi h = f")
    logger.info(f"Assembled exact solution from {len(set(data.u) | set(data.v))} partial solutions")
    return h


def scalar_backend_single(delta: Dict[MultiIndex, Poly], f: Sequence[Poly]) -> ScalarDivisionData:
    """Pick the first minor (lexicographic order) that divides every f_nu exactly."""
    if all(fn.is_zero() for fn in f):
        return ScalarDivisionData()
    for I in sorted(delta):
        d = delta[I]
        if d.is_zero():
            continue
        quotients = []
        for fn in f:
            quotient, remainder = divide(fn, d)
            if not remainder.is_zero():
                break
            quotients.append(quotient)
        else:
            logger.info(f"Minor {I.key()} = {to_string(d)} divides f")
            return ScalarDivisionData(u={I: tuple(quotients)})
    raise NotDivisibleError("no single maximal minor divides f; supply scalar division data externally")


def integrability_check(Phi: PolyMatrix, f: Sequence[Poly], ws: WeightSpec, dom: DomainSpec,
                        alpha: float, resolution: Tuple[int, int]) -> dict:
    """
    Numerically test finiteness of int |f|^2 (sum |delta_I|^2)^(-beta) e^(-psi) with
    beta = min(n, C(p, q) - 1) * alpha + 1.

    Reported next to the algebraic construction, which runs regardless.
    """
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    q, p = Phi.shape
    n = Phi.nvars
    beta = min(n, comb(p, q) - 1) * alpha + 1
    delta = [d for d in minors(Phi).values()]
    psi = parse_psi(ws.psi, n)

    def weight(nodes: np.ndarray) -> np.ndarray:
        total = np.zeros(nodes.shape[0])
        for d in delta:
            total += np.abs(evaluate_many(d, nodes)) ** 2
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.power(total, -beta) * np.exp(-psi(nodes))

    estimate: RefinedEstimate = refine_and_estimate(list(f), weight, dom, resolution)
    return {
        "beta": beta,
        "value": estimate.value,
        "rel_change": estimate.rel_change,
        "diverging": estimate.diverging,
        "finite": not estimate.diverging,
    }


if __name__ == "__main__":
    from modules.poly import parse
    Phi = PolyMatrix.from_rows([[parse("z1", 2), parse("z2", 2)]])
    f = [parse("z1^2 + z2^2", 2)]
    data = ScalarDivisionData(u={MultiIndex((1,), 2): (parse("z1", 2),), MultiIndex((2,), 2): (parse("z2", 2),)})
    print("h =", [to_string(c) for c in assemble_solution(Phi, data, f)])
