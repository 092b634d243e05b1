"""
Exterior algebra module
Strictly increasing multi-indices, wedge and interior products, complement signs and norms.
Coefficients are either exact polynomials (symbolic flavor) or complex floats (numeric flavor).
"""

import logging
import numbers
import sys
import os
from dataclasses import dataclass
from itertools import combinations
from math import comb
from types import MappingProxyType
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Strictly increasing tuple of 1-based indices over the ambient range 1..r."""
    indices: Tuple[int, ...]
    r: int

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", indices)
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"Multi-index {indices} is not strictly increasing")
        if indices and (indices[0] < 1 or indices[-1] > self.r):
            raise ValueError(f"Multi-index {indices} leaves the range 1..{self.r}")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, item) -> bool:
        return item in self.indices

    def key(self) -> str:
        """Comma-separated form used in problem files ("1,3"); the empty index is ""."""
        return ",".join(str(i) for i in self.indices)

    @classmethod
    def parse(cls, text: str, r: int) -> "MultiIndex":
        text = text.strip()
        if not text:
            return cls((), r)
        return cls(tuple(int(part) for part in text.split(",")), r)

    def without(self, position: int) -> "MultiIndex":
        return MultiIndex(self.indices[:position] + self.indices[position + 1:], self.r)

    def complement(self) -> "MultiIndex":
        return MultiIndex(tuple(i for i in range(1, self.r + 1) if i not in self.indices), self.r)


def multi_indices(r: int, p: int) -> List[MultiIndex]:
    """All increasing multi-indices of length p over 1..r, in lexicographic order."""
    if p < 0 or p > r:
        return []
    return [MultiIndex(c, r) for c in combinations(range(1, r + 1), p)]


def basis_dim(r: int, p: int) -> int:
    return comb(r, p) if 0 <= p <= r else 0


def _is_zero(c) -> bool:
    is_zero = getattr(c, "is_zero", None)
    if callable(is_zero):
        return is_zero()
    return c == 0


def _merge_sign(first: Sequence[int], second: Sequence[int]) -> int:
    inversions = sum(1 for i in first for j in second if i > j)
    return -1 if inversions % 2 else 1


class ExtElem:
    """
    Homogeneous element of degree p in the exterior algebra over rank r.

    Zero coefficients are dropped on construction, so equal elements compare equal.
    The empty element of degree -1 is what the interior product returns on scalars.
    """

    __slots__ = ("r", "degree", "coeffs")

    def __init__(self, r: int, degree: int, coeffs: Optional[Dict] = None):
        if r < 1:
            raise ValueError(f"Ambient rank must be positive, got {r}")
        cleaned = {}
        for index, c in (coeffs or {}).items():
            if not isinstance(index, MultiIndex):
                index = MultiIndex(tuple(index), r)
            if index.r != r or len(index) != degree:
                raise ValueError(f"Key {index.indices} does not match rank {r} and degree {degree}")
            if not _is_zero(c):
                cleaned[index] = c
        self.r = r
        self.degree = degree
        self.coeffs = MappingProxyType(dict(sorted(cleaned.items())))

    @classmethod
    def zero(cls, r: int, degree: int) -> "ExtElem":
        return cls(r, degree)

    @classmethod
    def basis(cls, index: MultiIndex, one=1) -> "ExtElem":
        return cls(index.r, len(index), {index: one})

    @classmethod
    def from_vector(cls, r: int, degree: int, vector: Iterable) -> "ExtElem":
        values = list(vector)
        keys = multi_indices(r, degree)
        if len(values) != len(keys):
            raise ValueError(f"Expected {len(keys)} coefficients for degree {degree}, got {len(values)}")
        return cls(r, degree, dict(zip(keys, values)))

    def to_vector(self) -> np.ndarray:
        """Numeric coefficient vector over the lexicographic basis of this degree."""
        return np.array([complex(self.coeffs.get(k, 0)) for k in multi_indices(self.r, self.degree)],
                        dtype=complex)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_numeric(self) -> bool:
        return all(isinstance(c, numbers.Number) for c in self.coeffs.values())

    def scale(self, factor) -> "ExtElem":
        return ExtElem(self.r, self.degree, {k: factor * c for k, c in self.coeffs.items()})

    def map_coeffs(self, fn) -> "ExtElem":
        return ExtElem(self.r, self.degree, {k: fn(c) for k, c in self.coeffs.items()})

    def _check_compatible(self, other: "ExtElem"):
        if self.r != other.r or self.degree != other.degree:
            raise ValueError(f"Cannot combine degree {self.degree}/rank {self.r} "
                             f"with degree {other.degree}/rank {other.r}")

    def __add__(self, other: "ExtElem") -> "ExtElem":
        self._check_compatible(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return ExtElem(self.r, self.degree, out)

    def __neg__(self) -> "ExtElem":
        return ExtElem(self.r, self.degree, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other: "ExtElem") -> "ExtElem":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExtElem):
            return NotImplemented
        return (self.r, self.degree) == (other.r, other.degree) and dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash((self.r, self.degree, tuple(self.coeffs.items())))

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"ExtElem(r={self.r}, degree={self.degree}, 0)"
        body = " + ".join(f"({c})e_{{{k.key()}}}" for k, c in self.coeffs.items())
        return f"ExtElem(r={self.r}, degree={self.degree}, {body})"


def wedge(xi: ExtElem, eta: ExtElem) -> ExtElem:
    """
    Wedge product of homogeneous elements.

    Basis vectors wedged in increasing order carry sign +1; a repeated index gives 0.
    """
    if xi.r != eta.r:
        raise ValueError(f"Ambient rank mismatch: {xi.r} vs {eta.r}")
    r = xi.r
    out = {}
    for I, a in xi.coeffs.items():
        for J, b in eta.coeffs.items():
            if set(I.indices) & set(J.indices):
                continue
            K = MultiIndex(tuple(sorted(I.indices + J.indices)), r)
            term = a * b
            if _merge_sign(I.indices, J.indices) < 0:
                term = -term
            out[K] = out[K] + term if K in out else term
    return ExtElem(r, xi.degree + eta.degree, out)


def interior(s: Sequence, xi: ExtElem) -> ExtElem:
    """
    Interior product s _| xi of a covector s = (s_1..s_r) with a degree-p element.

    Contracts the first slot: s _| (e_i1 ^ ... ^ e_ip) = sum_a (-1)^(a-1) s_ia e_(I without ia).
    Degree 0 (and the empty degree -1 element) map to the empty element one degree lower.
    """
    if len(s) != xi.r:
        raise ValueError(f"Covector has {len(s)} entries, ambient rank is {xi.r}")
    if xi.degree <= 0:
        return ExtElem.zero(xi.r, xi.degree - 1)
    out = {}
    for I, c in xi.coeffs.items():
        for position, i in enumerate(I.indices):
            si = s[i - 1]
            if _is_zero(si):
                continue
            K = I.without(position)
            term = si * c
            if position % 2:
                term = -term
            out[K] = out[K] + term if K in out else term
    return ExtElem(xi.r, xi.degree - 1, out)


def comp_sign(index, p: int) -> Tuple[int, MultiIndex]:
    """
    Parity of the permutation (i_1..i_q j_1..j_(p-q)) of (1..p) and the increasing complement J.

    Args:
        index: MultiIndex or increasing tuple over 1..p
        p: Ambient size

    Returns:
        Tuple of (sign, complement)
    """
    indices = index.indices if isinstance(index, MultiIndex) else tuple(index)
    I = MultiIndex(indices, p)
    J = I.complement()
    return _merge_sign(I.indices, J.indices), J


def ext_norm2(xi: ExtElem) -> float:
    """Sum of squared moduli over increasing multi-indices (numeric flavor only)."""
    total = 0.0
    for c in xi.coeffs.values():
        if not isinstance(c, numbers.Number):
            raise TypeError("ext_norm2 needs numeric coefficients; evaluate the symbolic element first")
        total += abs(c) ** 2
    return float(total)


def evaluate_ext(xi: ExtElem, point) -> ExtElem:
    """Evaluate every polynomial coefficient at a point, giving the numeric flavor."""
    return ExtElem(xi.r, xi.degree, {k: complex(c(point)) for k, c in xi.coeffs.items()})


if __name__ == "__main__":
    e1 = ExtElem.basis(MultiIndex((1,), 2))
    e2 = ExtElem.basis(MultiIndex((2,), 2))
    print("e1 ^ e2 =", wedge(e1, e2))
    print("e2 ^ e1 =", wedge(e2, e1))
    print("(1, 2) _| e12 =", interior([1, 2], wedge(e1, e2)))
    print("comp_sign((1, 3), 3) =", comp_sign((1, 3), 3))
