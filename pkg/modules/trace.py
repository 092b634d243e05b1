"""
Generalized trace module
Tr_rho D = sum_i rho(D u_i, u^i) for a bilinear rho: V x U* -> W, and the bound
|Tr_rho D| <= sqrt(rank D) |rho| |D|_HS.
"""

import logging
import sys
import os
from dataclasses import dataclass, field
from math import comb
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import ExtElem, interior
from modules.koszul import numerical_rank

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

CONTRACTION = "contraction"
INTERIOR = "interior"
TENSOR = "tensor"


class TraceBoundError(AssertionError):
    """The trace exceeded sqrt(rank) * |rho| * |D|_HS."""


@dataclass(frozen=True, eq=False)
class BilinearMap:
    """
    rho: V x U* -> W.

    contraction: dims = (dim W, dim U), V = W (x) U with index w*dim U + u.
    interior:    dims = (m, p), V = C^m, U = Lambda^p V, W = Lambda^(p-1) V, rho(v, xi) = v _| xi.
    tensor:      generic T[w, v, u]; its norm is estimated numerically.
    """
    kind: str
    dims: Tuple[int, ...]
    tensor: Optional[np.ndarray] = None
    seed: int = config.DEFAULT_SEED
    _norm: Dict[str, float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in (CONTRACTION, INTERIOR, TENSOR):
            raise ValueError(f"Unknown bilinear map kind: {self.kind}")
        if self.kind == TENSOR:
            if self.tensor is None or np.ndim(self.tensor) != 3:
                raise ValueError("A tensor-kind map needs a 3-tensor T[w, v, u]")
            object.__setattr__(self, "tensor", np.asarray(self.tensor, dtype=complex))
            object.__setattr__(self, "dims", tuple(self.tensor.shape))
        if self.kind == INTERIOR:
            m, p = self.dims
            if not 1 <= p <= m:
                raise ValueError(f"Interior kind needs 1 <= p <= m, got m={m}, p={p}")

    @classmethod
    def contraction(cls, dim_w: int, dim_u: int) -> "BilinearMap":
        return cls(CONTRACTION, (dim_w, dim_u))

    @classmethod
    def interior(cls, m: int, p: int) -> "BilinearMap":
        return cls(INTERIOR, (m, p))

    @classmethod
    def from_tensor(cls, tensor: np.ndarray, seed: int = config.DEFAULT_SEED) -> "BilinearMap":
        return cls(TENSOR, (), tensor=tensor, seed=seed)

    @property
    def dim_v(self) -> int:
        if self.kind == CONTRACTION:
            return self.dims[0] * self.dims[1]
        if self.kind == INTERIOR:
            return self.dims[0]
        return self.dims[1]

    @property
    def dim_u(self) -> int:
        if self.kind == CONTRACTION:
            return self.dims[1]
        if self.kind == INTERIOR:
            return comb(self.dims[0], self.dims[1])
        return self.dims[2]

    @property
    def dim_w(self) -> int:
        if self.kind == CONTRACTION:
            return self.dims[0]
        if self.kind == INTERIOR:
            return comb(self.dims[0], self.dims[1] - 1)
        return self.dims[0]

    def apply(self, v: np.ndarray, xi: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        xi = np.asarray(xi, dtype=complex)
        if v.shape != (self.dim_v,) or xi.shape != (self.dim_u,):
            raise ValueError(f"rho expects ({self.dim_v},), ({self.dim_u},); got {v.shape}, {xi.shape}")
        if self.kind == CONTRACTION:
            return v.reshape(self.dims[0], self.dims[1]) @ xi
        if self.kind == INTERIOR:
            m, p = self.dims
            return interior(v, ExtElem.from_vector(m, p, xi)).to_vector()
        return np.einsum("wvu,v,u->w", self.tensor, v, xi)

    def norm(self) -> float:
        """1 for the built-in kinds; estimated by power iteration for a generic tensor."""
        if self.kind != TENSOR:
            return 1.0
        if "value" not in self._norm:
            self._norm["value"] = rho_norm(self.tensor, seed=self.seed)
        return self._norm["value"]


@dataclass(frozen=True, eq=False)
class LinearMap:
    """D in Hom(U, V) as a (dim V, dim U) complex matrix."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.ndim != 2:
            raise ValueError(f"Expected a matrix, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def dom_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def cod_dim(self) -> int:
        return self.matrix.shape[0]

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def rank(self, rel_tol: float = config.RANK_REL_TOL) -> int:
        return numerical_rank(self.matrix, rel_tol)


def _check_shapes(D: LinearMap, rho: BilinearMap):
    if D.cod_dim != rho.dim_v or D.dom_dim != rho.dim_u:
        raise ValueError(f"D of shape {D.matrix.shape} does not fit rho with dim V={rho.dim_v}, "
                         f"dim U={rho.dim_u}")


def gen_trace(D: LinearMap, rho: BilinearMap, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Generalized trace over an orthonormal basis of U (standard basis by default).

    Args:
        D: Linear map U -> V
        rho: Bilinear map V x U* -> W
        basis: Optional unitary matrix whose columns are the basis vectors u_i

    Returns:
        Vector in W
    """
    _check_shapes(D, rho)
    Q = np.eye(rho.dim_u, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    total = np.zeros(rho.dim_w, dtype=complex)
    for i in range(rho.dim_u):
        u = Q[:, i]
        total = total + rho.apply(D.matrix @ u, np.conj(u))
    return total


def trace_bound_check(D: LinearMap, rho: BilinearMap) -> Tuple[float, float, int]:
    """Return (lhs, rhs, rank); raise TraceBoundError when lhs > rhs (1 + slack)."""
    lhs = float(np.linalg.norm(gen_trace(D, rho)))
    rank = D.rank()
    rhs = float(np.sqrt(rank) * rho.norm() * D.hs_norm())
    if lhs > rhs * (1 + config.TRACE_SLACK):
        raise TraceBoundError(f"|Tr| = {lhs:.12e} exceeds bound {rhs:.12e} (rank {rank})")
    return lhs, rhs, rank


def rho_norm(tensor: np.ndarray, seed: int = config.DEFAULT_SEED,
             tol: float = config.RHO_NORM_TOL, restarts: int = config.RHO_NORM_RESTARTS,
             max_iter: int = config.RHO_NORM_MAX_ITER) -> float:
    """
    sup |rho(v, xi)| over unit v, xi by alternating power iteration with random restarts.

    Each half-step fixes one argument and takes the top singular pair of the resulting matrix.
    """
    T = np.asarray(tensor, dtype=complex)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        xi = rng.standard_normal(T.shape[2]) + 1j * rng.standard_normal(T.shape[2])
        xi /= np.linalg.norm(xi)
        previous = 0.0
        value = 0.0
        for _ in range(max_iter):
            _, sigma, vh = linalg.svd(np.einsum("wvu,u->wv", T, xi))
            v = vh[0].conj()
            _, sigma, vh = linalg.svd(np.einsum("wvu,v->wu", T, v))
            xi = vh[0].conj()
            value = float(sigma[0])
            if abs(value - previous) <= tol * max(value, 1e-300):
                break
            previous = value
        best = max(best, value)
    logger.debug(f"rho norm estimate {best:.8f} after {restarts} restarts")
    return best


def _random_low_rank(rng: np.random.Generator, rows: int, cols: int, max_rank: int) -> np.ndarray:
    k = int(rng.integers(0, min(max_rank, rows, cols) + 1))
    A = rng.standard_normal((rows, k)) + 1j * rng.standard_normal((rows, k))
    B = rng.standard_normal((k, cols)) + 1j * rng.standard_normal((k, cols))
    return A @ B


def trace_bound_fuzz(trials: int = config.TRACE_FUZZ_TRIALS, seed: int = config.DEFAULT_SEED,
                     max_rank: int = config.MAX_RANDOM_RANK) -> dict:
    """
    Random maps of rank <= max_rank, alternating contraction and interior kinds.

    Returns:
        Dictionary with trial and violation counts per kind and the worst lhs/rhs ratio
    """
    rng = np.random.default_rng(seed)
    counts = {CONTRACTION: 0, INTERIOR: 0}
    violations = {CONTRACTION: 0, INTERIOR: 0}
    worst_ratio = 0.0
    for trial in range(trials):
        if trial % 2 == 0:
            rho = BilinearMap.contraction(int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        else:
            m = int(rng.integers(2, 6))
            rho = BilinearMap.interior(m, int(rng.integers(1, m + 1)))
        D = LinearMap(_random_low_rank(rng, rho.dim_v, rho.dim_u, max_rank))
        counts[rho.kind] += 1
        try:
            lhs, rhs, _ = trace_bound_check(D, rho)
        except TraceBoundError as e:
            logger.error(f"Trial {trial}: {e}")
            violations[rho.kind] += 1
            continue
        if rhs > 0:
            worst_ratio = max(worst_ratio, lhs / rhs)
    logger.info(f"Trace bound fuzz: {trials} trials, {sum(violations.values())} violations")
    return {
        "trials": trials,
        "trials_by_kind": counts,
        "violations": sum(violations.values()),
        "violations_by_kind": violations,
        "worst_ratio": worst_ratio,
    }


def sharpness_family(w0: np.ndarray, k: int) -> Tuple[LinearMap, BilinearMap]:
    """D(u) = w0 (x) u on U = C^k, for which the trace bound is an equality."""
    w0 = np.asarray(w0, dtype=complex).reshape(-1)
    D = np.kron(w0.reshape(-1, 1), np.eye(k, dtype=complex))
    return LinearMap(D), BilinearMap.contraction(w0.shape[0], k)


if __name__ == "__main__":
    D, rho = sharpness_family(np.array([1.0, 2.0j]), 3)
    print("sharpness:", trace_bound_check(D, rho))
    print("fuzz:", trace_bound_fuzz(trials=50))
