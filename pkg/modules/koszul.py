"""
Koszul complex module
Boundary maps d_p = s _| over polynomial generators, cycle tests, pointwise exactness
diagnostics and the minimal pointwise lift.
"""

import logging
import sys
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import comb
from typing import List, Sequence, Tuple

import numpy as np
from scipy import linalg

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import (ExtElem, MultiIndex, basis_dim, ext_norm2, interior,
                              multi_indices, wedge)
from modules.poly import Poly, PolyMatrix, ShapeError, diff, evaluate, parse

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)


class SingularPointError(ArithmeticError):
    """The section s vanishes (or nearly vanishes) at the requested point."""


class NotACycleError(ValueError):
    """A datum f with s _| f != 0; the defect is kept for reporting."""

    def __init__(self, message: str, defect=None):
        super().__init__(message)
        self.defect = defect


class ComplexPropertyError(ValueError):
    """Psi @ Phi is not zero within tolerance."""


@dataclass(frozen=True)
class KoszulSection:
    """The generator tuple g = (g_1..g_r) defining s = sum g_i e_i*."""
    n: int
    r: int
    g: Tuple[Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(self.g))
        if self.n < 1 or self.r < 1:
            raise ValueError(f"Need n >= 1 and r >= 1, got n={self.n}, r={self.r}")
        if len(self.g) != self.r:
            raise ShapeError(f"Expected {self.r} generators, got {len(self.g)}")
        if any(gi.nvars != self.n for gi in self.g):
            raise ShapeError(f"All generators must have nvars = {self.n}")

    @classmethod
    def from_strings(cls, texts: Sequence[str], n: int) -> "KoszulSection":
        return cls(n, len(texts), tuple(parse(t, n) for t in texts))

    @cached_property
    def jacobian(self) -> Tuple[Tuple[Poly, ...], ...]:
        """jacobian[alpha][i] = d g_i / d z_(alpha+1)."""
        return tuple(tuple(diff(gi, alpha + 1) for gi in self.g) for alpha in range(self.n))

    def evaluate(self, z) -> np.ndarray:
        return np.array([evaluate(gi, z) for gi in self.g], dtype=complex)

    def derivatives(self, z) -> np.ndarray:
        """Array of shape (n, r) with entries d g_i / d z_alpha at z."""
        return np.array([[evaluate(d, z) for d in row] for row in self.jacobian], dtype=complex)

    def max_degree(self) -> int:
        return max(gi.degree() for gi in self.g)

    def coefficient_scale(self) -> float:
        """Sum of coefficient moduli over all generators; bounds |s| on the unit polydisc."""
        return float(sum(abs(complex(c)) for gi in self.g for c in gi.terms.values()))

    def domain_scale(self, dom=None) -> float:
        """
        Upper bound for |s| on a polydisc: each term |c| z^a is bounded by |c| prod (|center_j| + radius_j)^a_j.

        Without a domain this is coefficient_scale(), the bound on the unit polydisc.
        """
        if dom is None:
            return self.coefficient_scale()
        reach = np.abs(np.asarray(dom.center, dtype=complex)) + np.asarray(dom.radii, dtype=float)
        return float(sum(abs(complex(c)) * np.prod(reach ** np.asarray(exps))
                         for gi in self.g for exps, c in gi.terms.items()))


@dataclass(frozen=True, eq=False)
class PointFrame:
    z: np.ndarray
    g_at: np.ndarray
    s_norm2: float = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=complex).reshape(-1))
        object.__setattr__(self, "g_at", np.asarray(self.g_at, dtype=complex).reshape(-1))
        computed = float(np.sum(np.abs(self.g_at) ** 2))
        if self.s_norm2 is None:
            object.__setattr__(self, "s_norm2", computed)
        elif abs(self.s_norm2 - computed) > 1e-12 * max(1.0, computed):
            raise ValueError(f"s_norm2={self.s_norm2} does not match |g(z)|^2={computed}")

    @property
    def r(self) -> int:
        return self.g_at.shape[0]


def make_frame(sec: KoszulSection, z) -> PointFrame:
    z = np.asarray(z, dtype=complex).reshape(-1)
    return PointFrame(z, sec.evaluate(z))


@lru_cache(maxsize=None)
def _boundary_pattern(r: int, p: int) -> Tuple[Tuple[int, int, int, int], ...]:
    """Nonzero pattern of d_p as (row, col, generator index, sign) tuples."""
    rows = {I: k for k, I in enumerate(multi_indices(r, p - 1))}
    pattern = []
    for col, I in enumerate(multi_indices(r, p)):
        for position, i in enumerate(I.indices):
            pattern.append((rows[I.without(position)], col, i - 1, -1 if position % 2 else 1))
    return tuple(pattern)


def _check_degree(r: int, p: int):
    if p < 1 or p > r:
        raise ValueError(f"Boundary degree p={p} outside 1..{r}")


def boundary_matrix(sec: KoszulSection, p: int) -> PolyMatrix:
    """
    Matrix of d_p = g _| : Lambda^p -> Lambda^(p-1) in the lexicographic bases.

    Args:
        sec: Generators
        p: Degree in 1..r

    Returns:
        PolyMatrix of shape C(r, p-1) x C(r, p)
    """
    _check_degree(sec.r, p)
    n_rows, n_cols = comb(sec.r, p - 1), comb(sec.r, p)
    entries = [Poly(sec.n)] * (n_rows * n_cols)
    for row, col, i, sign in _boundary_pattern(sec.r, p):
        entries[row * n_cols + col] = sec.g[i] if sign > 0 else -sec.g[i]
    return PolyMatrix(n_rows, n_cols, entries)


def boundary_matrix_numeric(g_at: Sequence[complex], p: int) -> np.ndarray:
    """Numeric d_p at a point; degrees outside 1..r give zero-shaped matrices."""
    g_at = np.asarray(g_at, dtype=complex).reshape(-1)
    r = g_at.shape[0]
    matrix = np.zeros((basis_dim(r, p - 1), basis_dim(r, p)), dtype=complex)
    if 1 <= p <= r:
        for row, col, i, sign in _boundary_pattern(r, p):
            matrix[row, col] = sign * g_at[i]
    return matrix


def koszul_pair(g_at: Sequence[complex], p: int) -> Tuple[np.ndarray, np.ndarray]:
    """(Phi, Psi) = (d_(p+1), d_p) around the middle space Lambda^p, p in 0..r."""
    r = len(g_at)
    if p < 0 or p > r:
        raise ValueError(f"Middle degree p={p} outside 0..{r}")
    return boundary_matrix_numeric(g_at, p + 1), boundary_matrix_numeric(g_at, p)


def cycle_defect(sec: KoszulSection, p: int, f: ExtElem) -> ExtElem:
    """g _| f, the obstruction to f being a cycle."""
    if f.r != sec.r or f.degree != p - 1:
        raise ShapeError(f"Datum of rank {f.r}, degree {f.degree} does not match r={sec.r}, p-1={p - 1}")
    _check_degree(sec.r, p)
    return interior(sec.g, f)


def is_cycle(sec: KoszulSection, p: int, f: ExtElem) -> bool:
    """True iff g _| f is the zero polynomial element; vacuous for p = 1."""
    defect = cycle_defect(sec, p, f)
    if p == 1:
        return True
    return defect.is_zero()


def numerical_rank(M: np.ndarray, rel_tol: float = config.RANK_REL_TOL) -> int:
    """Count singular values >= rel_tol * sigma_max."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0
    sigma = linalg.svdvals(M)
    if sigma.size == 0 or sigma[0] == 0:
        return 0
    return int(np.sum(sigma >= rel_tol * sigma[0]))


def _smallest_eigenvalue(A: np.ndarray) -> float:
    if A.shape[0] == 0:
        return 0.0
    A = (A + A.conj().T) / 2
    return max(float(linalg.eigvalsh(A)[0]), 0.0)


def exactness_score(Phi: np.ndarray, Psi: np.ndarray) -> float:
    """
    Smallest eigenvalue of Psi* Psi + Phi Phi* on the middle space.

    Positive exactly where E --Phi--> M --Psi--> F is exact.
    """
    Phi = np.asarray(Phi, dtype=complex)
    Psi = np.asarray(Psi, dtype=complex)
    if Phi.ndim != 2 or Psi.ndim != 2 or Psi.shape[1] != Phi.shape[0]:
        raise ShapeError(f"Psi {Psi.shape} and Phi {Phi.shape} do not compose")
    if Psi.size and Phi.size:
        product = Psi @ Phi
        if product.size and np.max(np.abs(product)) > config.COMPLEX_PROPERTY_TOL:
            raise ComplexPropertyError(f"|Psi Phi| = {np.max(np.abs(product)):.3e} exceeds "
                                       f"{config.COMPLEX_PROPERTY_TOL}")
    A = Psi.conj().T @ Psi + Phi @ Phi.conj().T
    return _smallest_eigenvalue(A)


def exactness_score_single(Phi: np.ndarray) -> float:
    """Smallest eigenvalue of P_perp + Phi Phi*, P_perp the projector onto range(Phi)^perp."""
    Phi = np.asarray(Phi, dtype=complex)
    if Phi.ndim != 2:
        raise ShapeError(f"Expected a matrix, got shape {Phi.shape}")
    if Phi.size == 0 or not np.any(Phi):
        raise ValueError("exactness_score_single needs a nonzero matrix")
    U, sigma, _ = linalg.svd(Phi)
    rank = int(np.sum(sigma >= config.RANK_REL_TOL * sigma[0]))
    Ur = U[:, :rank]
    P_perp = np.eye(Phi.shape[0], dtype=complex) - Ur @ Ur.conj().T
    return _smallest_eigenvalue(P_perp + Phi @ Phi.conj().T)


def is_exact_pair(Phi: np.ndarray, Psi: np.ndarray, rel_tol: float = config.RANK_REL_TOL) -> bool:
    """Rank criterion: rank(Phi) + rank(Psi) equals the middle dimension."""
    middle = np.asarray(Phi).shape[0]
    return numerical_rank(Phi, rel_tol) + numerical_rank(Psi, rel_tol) == middle


def pointwise_lift(frame: PointFrame, p: int, f: ExtElem) -> ExtElem:
    """
    Minimal solution of g(z) _| h = f at one point in the flat metric.

    Args:
        frame: Point data with g(z) and |s(z)|^2
        p: Degree of h (f has degree p-1)
        f: Numeric cycle at the point

    Returns:
        h = conj(g) ^ f / |s|^2
    """
    r = frame.r
    if f.r != r or f.degree != p - 1:
        raise ShapeError(f"Datum of rank {f.r}, degree {f.degree} does not match r={r}, p-1={p - 1}")
    _check_degree(r, p)
    if frame.s_norm2 <= 0.0:
        raise SingularPointError(f"s vanishes at z={frame.z.tolist()}")
    defect = interior(frame.g_at, f)
    f_norm = np.sqrt(ext_norm2(f))
    defect_norm = np.sqrt(ext_norm2(defect))
    if p >= 2 and defect_norm > config.LIFT_CYCLE_TOL * f_norm:
        raise NotACycleError(f"|g _| f| = {defect_norm:.3e} at z={frame.z.tolist()}", defect)
    theta = ExtElem.from_vector(r, 1, np.conj(frame.g_at))
    h = wedge(theta, f).scale(1.0 / frame.s_norm2)
    logger.debug(f"Lift at z={frame.z.tolist()}: |h|^2={ext_norm2(h):.6e}")
    return h


def least_norm_preimage(g_at: Sequence[complex], p: int, f: ExtElem) -> ExtElem:
    """Moore-Penrose solution of d_p h = f; agrees with pointwise_lift on cycles."""
    g_at = np.asarray(g_at, dtype=complex)
    matrix = boundary_matrix_numeric(g_at, p)
    solution = linalg.lstsq(matrix, f.to_vector())[0]
    return ExtElem.from_vector(len(g_at), p, solution)


def hom_norm2_check(frame: PointFrame, p: int) -> Tuple[float, float]:
    """
    Hilbert-Schmidt norm of d_p at a point against C(r-1, p-1) |s|^2.

    Each generator index i lies in C(r-1, p-1) of the p-subsets, which gives the count.
    """
    r = frame.r
    _check_degree(r, p)
    norm2 = sum(ext_norm2(interior(frame.g_at, ExtElem.basis(I, 1.0 + 0j))) for I in multi_indices(r, p))
    expected = comb(r - 1, p - 1) * frame.s_norm2
    if abs(norm2 - expected) > config.NORM_IDENTITY_TOL * max(expected, 1e-300):
        logger.warning(f"Hom norm mismatch at p={p}: {norm2} vs {expected}")
    return float(norm2), float(expected)


if __name__ == "__main__":
    sec = KoszulSection.from_strings(["z1", "z2", "z3"], 3)
    d2, d3 = boundary_matrix(sec, 2), boundary_matrix(sec, 3)
    print("d2 @ d3 is zero:", d2.matmul(d3).is_zero())
    frame = make_frame(sec, [1, 1j, 0.5])
    Phi, Psi = koszul_pair(frame.g_at, 1)
    print("E =", exactness_score(Phi, Psi), "|s|^2 =", frame.s_norm2)
    print("hom norm:", hom_norm2_check(frame, 2))
