"""
Identity check module
Finite-difference verification of the gradient and complex Hessian of log|Phi|^2 for a
holomorphic matrix family, the second fundamental form of the Koszul complex and the rank
bound on the Hessian of log|s|^2 (flat fiber metrics).
"""

import logging
import sys
import os
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import ExtElem, interior
from modules.koszul import (KoszulSection, SingularPointError, boundary_matrix,
                            boundary_matrix_numeric, make_frame, numerical_rank)
from modules.poly import PolyMatrix, ShapeError, diff

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)


class IdentityCheckError(AssertionError):
    """Two analytic forms of the same quantity disagree beyond tolerance."""


@dataclass(frozen=True, eq=False)
class HoloFamily:
    """Holomorphic matrix-valued map z -> Phi(z) with polynomial entries."""
    entries: PolyMatrix

    def __post_init__(self):
        if self.entries.is_zero():
            raise ValueError("HoloFamily must not be identically zero")

    @classmethod
    def from_section(cls, sec: KoszulSection) -> "HoloFamily":
        """The generators as a 1 x r row, so that log|Phi|^2 = log|s|^2."""
        return cls(PolyMatrix(1, sec.r, sec.g))

    @classmethod
    def from_boundary(cls, sec: KoszulSection, p: int) -> "HoloFamily":
        return cls(boundary_matrix(sec, p))

    @property
    def n(self) -> int:
        return self.entries.nvars

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    @cached_property
    def derivative_entries(self) -> Tuple[PolyMatrix, ...]:
        return tuple(self.entries.map(lambda e, a=alpha: diff(e, a + 1)) for alpha in range(self.n))

    def evaluate(self, z) -> np.ndarray:
        return self.entries.evaluate(z)

    def derivative(self, alpha: int, z) -> np.ndarray:
        """Entrywise d/dz_(alpha+1) of Phi at z."""
        return self.derivative_entries[alpha].evaluate(z)

    def coefficient_scale(self) -> float:
        """Frobenius norm of the entrywise coefficient l1 norms; bounds |Phi| on the unit polydisc."""
        sums = [sum(abs(complex(c)) for c in e.terms.values()) for e in self.entries.entries]
        return float(np.sqrt(np.sum(np.square(sums))))

    def phi(self, z) -> float:
        """log |Phi(z)|_F^2."""
        return float(np.log(np.sum(np.abs(self.evaluate(z)) ** 2)))


@dataclass(frozen=True, eq=False)
class SffData:
    z: np.ndarray
    Phi: np.ndarray
    B: List[np.ndarray]
    Bperp: List[np.ndarray]


def _inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Frobenius <A, B> = sum A conj(B)."""
    return complex(np.vdot(B, A))


def _as_point(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != n:
        raise ShapeError(f"Point has {z.shape[0]} coordinates, family has {n} variables")
    return z


def _check_step(step: float):
    if not 0 < step <= config.FD_MAX_STEP:
        raise ValueError(f"Finite-difference step must lie in (0, {config.FD_MAX_STEP}], got {step}")


def _nonsingular_phi(fam: HoloFamily, z: np.ndarray) -> np.ndarray:
    Phi = fam.evaluate(z)
    if not np.any(Phi):
        raise SingularPointError(f"Phi vanishes at z={z.tolist()}")
    return Phi


def sff_data(fam: HoloFamily, z) -> SffData:
    """Derivatives B_alpha of Phi at z and their projections orthogonal to Phi(z)."""
    z = _as_point(z, fam.n)
    Phi = _nonsingular_phi(fam, z)
    norm2 = _inner(Phi, Phi).real
    B = [fam.derivative(alpha, z) for alpha in range(fam.n)]
    Bperp = [Ba - (_inner(Ba, Phi) / norm2) * Phi for Ba in B]
    return SffData(z, Phi, B, Bperp)


def analytic_gradient(fam: HoloFamily, z) -> np.ndarray:
    """d phi / dz_alpha = e^(-phi) <B_alpha, Phi>."""
    data = sff_data(fam, z)
    norm2 = _inner(data.Phi, data.Phi).real
    return np.array([_inner(Ba, data.Phi) / norm2 for Ba in data.B], dtype=complex)


def analytic_hessian(fam: HoloFamily, z) -> np.ndarray:
    """d^2 phi / dz_alpha dzbar_beta = e^(-phi) <B_a, B_b> - e^(-2 phi) <B_a, Phi> <Phi, B_b>."""
    data = sff_data(fam, z)
    norm2 = _inner(data.Phi, data.Phi).real
    n = fam.n
    H = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            H[a, b] = (_inner(data.B[a], data.B[b]) / norm2
                       - _inner(data.B[a], data.Phi) * _inner(data.Phi, data.B[b]) / norm2 ** 2)
    return H


def projected_hessian(fam: HoloFamily, z) -> np.ndarray:
    """e^(-phi) <Bperp_alpha, Bperp_beta>."""
    data = sff_data(fam, z)
    norm2 = _inner(data.Phi, data.Phi).real
    n = fam.n
    return np.array([[_inner(data.Bperp[a], data.Bperp[b]) / norm2 for b in range(n)]
                     for a in range(n)], dtype=complex)


def fd_gradient(func: Callable, z: np.ndarray, step: float) -> np.ndarray:
    """Holomorphic derivative 1/2 (d/dx - i d/dy) by central differences."""
    n = z.shape[0]
    grad = np.zeros(n, dtype=complex)
    for alpha in range(n):
        e = np.zeros(n, dtype=complex)
        e[alpha] = 1.0
        dx = (func(z + step * e) - func(z - step * e)) / (2 * step)
        dy = (func(z + 1j * step * e) - func(z - 1j * step * e)) / (2 * step)
        grad[alpha] = 0.5 * (dx - 1j * dy)
    return grad


def fd_levi(func: Callable, z: np.ndarray, step: float) -> np.ndarray:
    """
    Mixed complex Hessian 1/4 [(f_xx + f_yy) + i (f_xy - f_yx)] per (alpha, beta).

    Pure second derivatives use the 3-point stencil, mixed ones the 4-point stencil.
    """
    n = z.shape[0]
    f0 = func(z)

    def direction(alpha: int, imaginary: bool) -> np.ndarray:
        e = np.zeros(n, dtype=complex)
        e[alpha] = 1j if imaginary else 1.0
        return e

    def second(u: np.ndarray, v: np.ndarray) -> float:
        if np.array_equal(u, v):
            return (func(z + step * u) - 2 * f0 + func(z - step * u)) / step ** 2
        return (func(z + step * (u + v)) - func(z + step * (u - v))
                - func(z - step * (u - v)) + func(z - step * (u + v))) / (4 * step ** 2)

    L = np.zeros((n, n), dtype=complex)
    for a in range(n):
        xa, ya = direction(a, False), direction(a, True)
        for b in range(n):
            xb, yb = direction(b, False), direction(b, True)
            L[a, b] = 0.25 * ((second(xa, xb) + second(ya, yb)) + 1j * (second(xa, yb) - second(ya, xb)))
    return L


def grad_phi_check(fam: HoloFamily, z, step: float = config.FD_STEP) -> float:
    """Worst |FD gradient - analytic gradient| of log|Phi|^2 at z."""
    _check_step(step)
    z = _as_point(z, fam.n)
    _nonsingular_phi(fam, z)
    numeric = fd_gradient(fam.phi, z, step)
    return float(np.max(np.abs(numeric - analytic_gradient(fam, z))))


def hessian_phi_check(fam: HoloFamily, z, step: float = config.FD_STEP) -> float:
    """
    Worst |FD Hessian - analytic Hessian| of log|Phi|^2 at z.

    Also requires the projected form e^(-phi) <Bperp_a, Bperp_b> to equal the analytic Hessian.
    """
    _check_step(step)
    z = _as_point(z, fam.n)
    _nonsingular_phi(fam, z)
    H = analytic_hessian(fam, z)
    projected = projected_hessian(fam, z)
    gap = float(np.max(np.abs(projected - H)))
    if gap > config.IDENTITY_TOL * max(1.0, float(np.max(np.abs(H)))):
        raise IdentityCheckError(f"Projected and analytic Hessians differ by {gap:.3e} at z={z.tolist()}")
    numeric = fd_levi(fam.phi, z, step)
    return float(np.max(np.abs(numeric - H)))


def fd_convergence_ratio(fam: HoloFamily, z, step: float = config.FD_STEP, kind: str = "hessian") -> float:
    """Error at step divided by error at step/2; close to 4 for a second-order stencil."""
    check = hessian_phi_check if kind == "hessian" else grad_phi_check
    coarse = check(fam, z, step)
    fine = check(fam, z, step / 2)
    return coarse / fine if fine > 0 else float("inf")


def hessian_min_eigenvalue(fam: HoloFamily, z) -> Tuple[float, float]:
    """(smallest eigenvalue, trace) of the analytic Hessian; PSD up to round-off."""
    H = analytic_hessian(fam, z)
    H = (H + H.conj().T) / 2
    return float(linalg.eigvalsh(H)[0]), float(np.trace(H).real)


def _section_projection(sec: KoszulSection, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """(g(z), rows B_s(d_alpha), |s|^2) with B_s(d_alpha) = d_alpha g - (<d_alpha g, g>/|s|^2) g."""
    frame = make_frame(sec, z)
    if frame.s_norm2 <= 0.0:
        raise SingularPointError(f"s vanishes at z={z.tolist()}")
    G = frame.g_at
    D = sec.derivatives(z)
    Bs = np.array([D[a] - (np.vdot(G, D[a]) / frame.s_norm2) * G for a in range(sec.n)], dtype=complex)
    return G, Bs, frame.s_norm2


def koszul_levi_form(sec: KoszulSection, z) -> np.ndarray:
    """Hessian of log|s|^2 as the Gram matrix <B_s alpha, B_s beta> / |s|^2."""
    z = _as_point(z, sec.n)
    _, Bs, s_norm2 = _section_projection(sec, z)
    return (Bs @ Bs.conj().T) / s_norm2


def koszul_sff_check(sec: KoszulSection, p: int, z, rng: Optional[np.random.Generator] = None,
                     samples: int = 4) -> Tuple[float, float]:
    """
    Compare the projected derivative of d_p with B_s _| on random unit p-vectors.

    Returns:
        Tuple of (err_interleave, err_norm) where err_norm uses the C(r-1, p-1) factor
    """
    if not 1 <= p <= sec.r:
        raise ValueError(f"Degree p={p} outside 1..{sec.r}")
    z = _as_point(z, sec.n)
    rng = rng if rng is not None else np.random.default_rng(config.DEFAULT_SEED)
    G, Bs, _ = _section_projection(sec, z)
    D = sec.derivatives(z)
    Phi = boundary_matrix_numeric(G, p)
    phi_norm2 = _inner(Phi, Phi).real
    factor = comb(sec.r - 1, p - 1)
    dim = comb(sec.r, p)
    err_interleave = 0.0
    err_norm = 0.0
    for alpha in range(sec.n):
        B = boundary_matrix_numeric(D[alpha], p)
        B_phi = B - (_inner(B, Phi) / phi_norm2) * Phi
        for _ in range(samples):
            xi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            xi /= np.linalg.norm(xi)
            expected = interior(Bs[alpha], ExtElem.from_vector(sec.r, p, xi)).to_vector()
            err_interleave = max(err_interleave, float(np.max(np.abs(B_phi @ xi - expected))))
        bs_norm2 = float(np.sum(np.abs(Bs[alpha]) ** 2))
        hs_norm2 = _inner(B_phi, B_phi).real
        err_norm = max(err_norm, abs(hs_norm2 - factor * bs_norm2) / max(1.0, bs_norm2))
    return err_interleave, err_norm


def rank_bound_check(sec: KoszulSection, points: Sequence, dom=None) -> Tuple[int, int]:
    """
    Worst excess of rank(Hessian of log|s|^2) over min(n, r-1) across points.

    Points with |s| < ZERO_LOCUS_REL * sec.domain_scale(dom) are skipped, so whether a point counts
    does not depend on the other points passed in.

    Returns:
        Tuple of (worst_excess, skipped_count)
    """
    pts = [_as_point(z, sec.n) for z in points]
    moduli = [float(np.linalg.norm(sec.evaluate(z))) for z in pts]
    scale = sec.domain_scale(dom)
    bound = min(sec.n, sec.r - 1)
    worst = None
    skipped = 0
    for z, modulus in zip(pts, moduli):
        if modulus == 0.0 or modulus < config.ZERO_LOCUS_REL * scale:
            skipped += 1
            logger.warning(f"Skipping z={z.tolist()} near the zero locus of s")
            continue
        rank = numerical_rank(koszul_levi_form(sec, z), config.HESSIAN_RANK_REL_TOL)
        excess = rank - bound
        worst = excess if worst is None else max(worst, excess)
    if worst is None:
        raise SingularPointError("Every sampled point lies on the zero locus of s")
    return worst, skipped


def flat_curvature_check(sec: KoszulSection, z, rng: Optional[np.random.Generator] = None,
                         columns: int = 2) -> float:
    """
    sum_k <H A e_k, A e_k> for the Hessian of log|s|^2 against sum_k |B_s(A e_k)|^2 / |s|^2.

    The Hessian comes from the generic formula for log|Phi|^2 with Phi the generator row,
    so the two sides are computed independently. Returns |lhs - rhs| / max(1, rhs).
    """
    z = _as_point(z, sec.n)
    rng = rng if rng is not None else np.random.default_rng(config.DEFAULT_SEED)
    A = rng.standard_normal((sec.n, columns)) + 1j * rng.standard_normal((sec.n, columns))
    H = analytic_hessian(HoloFamily.from_section(sec), z)
    _, Bs, s_norm2 = _section_projection(sec, z)
    lhs = 0.0
    rhs = 0.0
    for k in range(columns):
        v = A[:, k]
        lhs += float(np.real(v @ H @ v.conj()))
        rhs += float(np.sum(np.abs(v @ Bs) ** 2)) / s_norm2
    return abs(lhs - rhs) / max(1.0, rhs)


if __name__ == "__main__":
    sec = KoszulSection.from_strings(["1", "z1"], 1)
    fam = HoloFamily.from_section(sec)
    print("gradient error:", grad_phi_check(fam, [0.3 + 0.2j]))
    print("hessian error:", hessian_phi_check(fam, [0.3 + 0.2j]))
    print("analytic hessian at 0:", analytic_hessian(fam, [0.0]))
    print("rank bound:", rank_bound_check(sec, [[0.1], [0.5j], [0.9]]))
