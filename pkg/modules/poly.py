"""
Polynomial module
Exact multivariate polynomials over the Gaussian rationals, polynomial matrices with
determinants, minors and adjugates, and a parser for the polynomial text grammar.
"""

import logging
import re
import sys
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from types import MappingProxyType
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices.dense import ddm_berk

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import MultiIndex

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)


class PolyParseError(ValueError):
    """Syntax error in a polynomial expression, with the byte offset where it was detected."""

    def __init__(self, message: str, text: str, position: int):
        self.offset = len(text[:position].encode("utf-8"))
        super().__init__(f"{message} at byte offset {self.offset}")


class ShapeError(ValueError):
    """Operands whose shapes or dimensions do not compose."""


@dataclass(frozen=True)
class GaussRat:
    """Gaussian rational re + im*i; Fraction keeps both parts in lowest terms."""
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value) -> "GaussRat":
        if isinstance(value, GaussRat):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value)
        if isinstance(value, (float, complex, np.number)):
            z = complex(value)
            return cls(Fraction(z.real), Fraction(z.imag))
        raise TypeError(f"Cannot use {type(value).__name__} as a Gaussian rational")

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def conjugate(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __neg__(self) -> "GaussRat":
        return GaussRat(-self.re, -self.im)

    def __add__(self, other) -> "GaussRat":
        if isinstance(other, Poly):
            return NotImplemented
        other = GaussRat.coerce(other)
        return GaussRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> "GaussRat":
        if isinstance(other, Poly):
            return NotImplemented
        return self + (-GaussRat.coerce(other))

    def __rsub__(self, other) -> "GaussRat":
        return GaussRat.coerce(other) - self

    def __mul__(self, other) -> "GaussRat":
        if isinstance(other, Poly):
            return NotImplemented
        other = GaussRat.coerce(other)
        return GaussRat(self.re * other.re - self.im * other.im,
                        self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "GaussRat":
        other = GaussRat.coerce(other)
        denom = other.re * other.re + other.im * other.im
        if denom == 0:
            raise ZeroDivisionError("division by the zero Gaussian rational")
        num = self * other.conjugate()
        return GaussRat(num.re / denom, num.im / denom)

    def __str__(self) -> str:
        if self.im == 0:
            return _format_rational(self.re)
        sign = "+" if self.im > 0 else "-"
        return f"({_format_rational(self.re)}{sign}{_format_rational(abs(self.im))}i)"


ZERO = GaussRat(0)
ONE = GaussRat(1)


def _format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _grlex_key(exps: Tuple[int, ...]):
    return (sum(exps), exps)


class Poly:
    """
    Polynomial in nvars variables with Gaussian rational coefficients.

    Terms are stored in descending graded-lex order with zero coefficients dropped, so
    equal polynomials have identical term maps.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Optional[Dict] = None):
        if nvars < 1:
            raise ValueError(f"nvars must be positive, got {nvars}")
        acc = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars or any(e < 0 for e in exps):
                raise ShapeError(f"Exponent vector {exps} does not fit {nvars} variables")
            c = GaussRat.coerce(c)
            acc[exps] = acc[exps] + c if exps in acc else c
        ordered = sorted(acc, key=_grlex_key, reverse=True)
        self.nvars = nvars
        self.terms = MappingProxyType({e: acc[e] for e in ordered if not acc[e].is_zero()})

    @classmethod
    def constant(cls, value, nvars: int) -> "Poly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int) -> "Poly":
        """The coordinate z_index (1-based)."""
        exps = [0] * nvars
        exps[index - 1] = 1
        return cls(nvars, {tuple(exps): 1})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "Poly":
        return cls(len(exps), {tuple(exps): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def leading_term(self) -> Tuple[Tuple[int, ...], GaussRat]:
        exps = next(iter(self.terms))
        return exps, self.terms[exps]

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ShapeError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        return Poly.constant(GaussRat.coerce(other), self.nvars)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                term = c1 * c2
                out[e] = out[e] + term if e in out else term
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"Exponent must be a nonnegative integer, got {k}")
        result = Poly.constant(1, self.nvars)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and dict(self.terms) == dict(other.terms)
        try:
            return self == Poly.constant(GaussRat.coerce(other), self.nvars)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.nvars, tuple(self.terms.items())))

    def __call__(self, point) -> complex:
        return evaluate(self, point)

    def __repr__(self) -> str:
        return f"Poly({to_string(self)!r}, nvars={self.nvars})"

    def __str__(self) -> str:
        return to_string(self)


# ---------------------------------------------------------------------------
# Printing and parsing
# ---------------------------------------------------------------------------

def _format_monomial(exps: Tuple[int, ...]) -> str:
    factors = []
    for j, k in enumerate(exps, start=1):
        if k == 1:
            factors.append(f"z{j}")
        elif k > 1:
            factors.append(f"z{j}^{k}")
    return "*".join(factors)


def to_string(p: Poly) -> str:
    """Canonical text form; parse(to_string(p), p.nvars) == p."""
    if p.is_zero():
        return "0"
    parts = []
    for position, (exps, c) in enumerate(p.terms.items()):
        negative = c.re < 0 or (c.re == 0 and c.im < 0)
        magnitude = -c if negative else c
        mono = _format_monomial(exps)
        if not mono:
            body = str(magnitude)
        elif magnitude == ONE:
            body = mono
        else:
            body = f"{magnitude}*{mono}"
        if position == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f" - {body}" if negative else f" + {body}")
    return "".join(parts)


_COMPLEX_COEFF = re.compile(
    r"\(\s*(\d+)(?:\s*/\s*(\d+))?\s*([+-])\s*(\d+)(?:\s*/\s*(\d+))?\s*i\s*\)")


class _Parser:
    """Recursive descent parser for expr := ['+'|'-'] term (('+'|'-') term)*."""

    def __init__(self, text: str, nvars: int):
        self.text = text
        self.nvars = nvars
        self.pos = 0

    def error(self, message: str, position: Optional[int] = None):
        raise PolyParseError(message, self.text, self.pos if position is None else position)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Poly:
        result = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.text[self.pos]!r}")
        return result

    def expr(self) -> Poly:
        negate = False
        if self.peek() in ("+", "-"):
            negate = self.text[self.pos] == "-"
            self.pos += 1
        result = self.term()
        if negate:
            result = -result
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Poly:
        result = self.factor()
        while self.peek() == "*":
            self.pos += 1
            result = result * self.factor()
        return result

    def factor(self) -> Poly:
        ch = self.peek()
        if ch == "(":
            match = _COMPLEX_COEFF.match(self.text, self.pos)
            if match:
                re_den, im_den = int(match.group(2) or 1), int(match.group(5) or 1)
                if re_den == 0 or im_den == 0:
                    self.error("zero denominator", match.start())
                self.pos = match.end()
                re_part = Fraction(int(match.group(1)), re_den)
                im_part = Fraction(int(match.group(4)), im_den)
                if match.group(3) == "-":
                    im_part = -im_part
                return Poly.constant(GaussRat(re_part, im_part), self.nvars)
            self.pos += 1
            inner = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return inner
        if ch == "z":
            return self.variable()
        if ch.isdigit():
            return Poly.constant(self.rational(), self.nvars)
        if not ch:
            self.error("unexpected end of input")
        self.error(f"unexpected character {ch!r}")

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected integer")
        return int(self.text[start:self.pos])

    def rational(self) -> Fraction:
        start = self.pos
        numerator = self.integer()
        if self.peek() == "/":
            self.pos += 1
            denominator = self.integer()
            if denominator == 0:
                self.error("zero denominator", start)
            return Fraction(numerator, denominator)
        return Fraction(numerator)

    def variable(self) -> Poly:
        start = self.pos
        self.pos += 1
        if self.pos >= len(self.text) or not self.text[self.pos].isdigit():
            self.error("expected variable index after 'z'")
        index = self.integer()
        if index < 1 or index > self.nvars:
            self.error(f"variable index z{index} outside z1..z{self.nvars}", start)
        power = 1
        if self.peek() == "^":
            self.pos += 1
            power = self.integer()
        exps = [0] * self.nvars
        exps[index - 1] = power
        return Poly(self.nvars, {tuple(exps): 1})


def parse(text: str, nvars: int) -> Poly:
    """
    Parse a polynomial expression in z1..z_nvars.

    Args:
        text: Expression such as "(1/2+3i)*z1 - z2^2"
        nvars: Number of variables

    Returns:
        Canonical Poly
    """
    return _Parser(text, nvars).parse()


# ---------------------------------------------------------------------------
# Evaluation, differentiation and division
# ---------------------------------------------------------------------------

def evaluate(p: Poly, point) -> complex:
    """Direct monomial evaluation in canonical term order."""
    z = np.asarray(point, dtype=complex).reshape(-1)
    if z.shape[0] != p.nvars:
        raise ShapeError(f"Point has {z.shape[0]} coordinates, polynomial has {p.nvars} variables")
    coords = [complex(v) for v in z]
    total = 0j
    for exps, c in p.terms.items():
        term = complex(c)
        for zj, e in zip(coords, exps):
            if e:
                term *= zj ** e
        total += term
    return total


def evaluate_many(p: Poly, points) -> np.ndarray:
    """Evaluate at every row of an (N, nvars) array of points."""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim != 2 or pts.shape[1] != p.nvars:
        raise ShapeError(f"Expected points of shape (N, {p.nvars}), got {pts.shape}")
    out = np.zeros(pts.shape[0], dtype=complex)
    for exps, c in p.terms.items():
        term = np.full(pts.shape[0], complex(c))
        for j, e in enumerate(exps):
            if e:
                term = term * pts[:, j] ** e
        out += term
    return out


def diff(p: Poly, var: int) -> Poly:
    """Exact partial derivative with respect to z_var (1-based)."""
    if var < 1 or var > p.nvars:
        raise ShapeError(f"Variable z{var} outside z1..z{p.nvars}")
    k = var - 1
    out = {}
    for exps, c in p.terms.items():
        if exps[k]:
            lowered = exps[:k] + (exps[k] - 1,) + exps[k + 1:]
            out[lowered] = c * exps[k]
    return Poly(p.nvars, out)


def divide(a: Poly, b: Poly) -> Tuple[Poly, Poly]:
    """
    Long division of a by b with graded-lex leading terms.

    Returns:
        Tuple of (quotient, remainder) with a = quotient*b + remainder and no term of the
        remainder divisible by the leading monomial of b
    """
    if b.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if a.nvars != b.nvars:
        raise ShapeError(f"nvars mismatch: {a.nvars} vs {b.nvars}")
    lead_exps, lead_coeff = b.leading_term()
    quotient = {}
    remainder = {}
    rest = a
    while not rest.is_zero():
        exps, c = rest.leading_term()
        if all(x >= y for x, y in zip(exps, lead_exps)):
            shift = tuple(x - y for x, y in zip(exps, lead_exps))
            factor = c / lead_coeff
            quotient[shift] = quotient[shift] + factor if shift in quotient else factor
            rest = rest - Poly(a.nvars, {shift: factor}) * b
        else:
            remainder[exps] = c
            rest = rest - Poly(a.nvars, {exps: c})
    return Poly(a.nvars, quotient), Poly(a.nvars, remainder)


def monomials(nvars: int, max_degree: int) -> List[Tuple[int, ...]]:
    """Exponent vectors of total degree <= max_degree, ascending degree, z1 before z2."""
    result = []
    for total in range(max_degree + 1):
        result.extend(_compositions(total, nvars))
    return result


def _compositions(total: int, parts: int) -> List[Tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


# ---------------------------------------------------------------------------
# Polynomial matrices
# ---------------------------------------------------------------------------

class PolyMatrix:
    """Row-major matrix of Poly entries sharing nvars."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable[Poly]):
        entries = tuple(entries)
        if rows < 1 or cols < 1:
            raise ShapeError(f"Matrix dimensions must be positive, got {rows}x{cols}")
        if len(entries) != rows * cols:
            raise ShapeError(f"Expected {rows * cols} entries, got {len(entries)}")
        if len({e.nvars for e in entries}) != 1:
            raise ShapeError("Matrix entries do not share nvars")
        self.rows = rows
        self.cols = cols
        self.entries = entries

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Poly]]) -> "PolyMatrix":
        widths = {len(row) for row in rows}
        if len(widths) != 1:
            raise ShapeError("Rows have different lengths")
        return cls(len(rows), widths.pop(), [e for row in rows for e in row])

    @classmethod
    def zeros(cls, rows: int, cols: int, nvars: int) -> "PolyMatrix":
        return cls(rows, cols, [Poly(nvars)] * (rows * cols))

    @classmethod
    def identity(cls, size: int, nvars: int) -> "PolyMatrix":
        one, zero = Poly.constant(1, nvars), Poly(nvars)
        return cls(size, size, [one if i == j else zero for i in range(size) for j in range(size)])

    @property
    def nvars(self) -> int:
        return self.entries[0].nvars

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, key) -> Poly:
        i, j = key
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> List[Poly]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> List[List[Poly]]:
        return [self.row(i) for i in range(self.rows)]

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix(len(row_idx), len(col_idx), [self[i, j] for i in row_idx for j in col_idx])

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.cols, self.rows, [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    def map(self, fn) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols, [fn(e) for e in self.entries])

    def matmul(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ShapeError(f"Cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        out = []
        for i in range(self.rows):
            for j in range(other.cols):
                acc = Poly(self.nvars)
                for k in range(self.cols):
                    a, b = self[i, k], other[k, j]
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
                out.append(acc)
        return PolyMatrix(self.rows, other.cols, out)

    __matmul__ = matmul

    def apply(self, vector: Sequence[Poly]) -> List[Poly]:
        """Matrix times a column vector of Poly."""
        if len(vector) != self.cols:
            raise ShapeError(f"Vector of length {len(vector)} does not match {self.cols} columns")
        column = PolyMatrix(self.cols, 1, vector)
        return list(self.matmul(column).entries)

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def evaluate(self, point) -> np.ndarray:
        return np.array([evaluate(e, point) for e in self.entries], dtype=complex).reshape(self.rows, self.cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self) -> str:
        rows = "; ".join(", ".join(to_string(e) for e in row) for row in self.to_rows())
        return f"PolyMatrix([{rows}])"


def coeff_to_domain(c: GaussRat):
    """Element of sympy's Gaussian rational field QQ_I."""
    return QQ_I(QQ(c.re.numerator, c.re.denominator), QQ(c.im.numerator, c.im.denominator))


def coeff_from_sympy(value) -> GaussRat:
    real, imag = (sp.Rational(part) for part in sp.sympify(value).as_real_imag())
    return GaussRat(Fraction(int(real.p), int(real.q)), Fraction(int(imag.p), int(imag.q)))


def coeff_from_domain(element) -> GaussRat:
    return coeff_from_sympy(QQ_I.to_sympy(element))


def poly_ring(nvars: int):
    """sympy polynomial ring QQ_I[z1..zn]."""
    return QQ_I.poly_ring(*sp.symbols(f"z1:{nvars + 1}"))


def to_ring(p: Poly, ring):
    return ring.ring.from_dict({exps: coeff_to_domain(c) for exps, c in p.terms.items()})


def from_ring(element, nvars: int) -> Poly:
    return Poly(nvars, {tuple(exps): coeff_from_domain(c) for exps, c in dict(element).items()})


def charpoly(M: PolyMatrix) -> List[Poly]:
    """
    Coefficients [1, c1, ..., cn] of det(x I - M) by sympy's division-free Berkowitz algorithm
    over QQ_I[z1..zn].
    """
    if M.rows != M.cols:
        raise ShapeError(f"Characteristic polynomial of non-square {M.rows}x{M.cols} matrix")
    ring = poly_ring(M.nvars)
    rows = [[to_ring(e, ring) for e in row] for row in M.to_rows()]
    coefficients = [row[0] for row in ddm_berk(rows, ring)]
    return [from_ring(c, M.nvars) for c in coefficients]


def det(M: PolyMatrix) -> Poly:
    """Exact determinant, (-1)^n times the constant term of the characteristic polynomial."""
    if M.rows != M.cols:
        raise ShapeError(f"Determinant of non-square {M.rows}x{M.cols} matrix")
    constant = charpoly(M)[-1]
    return -constant if M.rows % 2 else constant


def adjugate(M: PolyMatrix) -> PolyMatrix:
    """
    Transpose of the cofactor matrix, so that M @ adjugate(M) == det(M) * I.

    Cayley-Hamilton: adj(M) = (-1)^(n+1) (M^(n-1) + c1 M^(n-2) + ... + c_(n-1) I).
    """
    if M.rows != M.cols:
        raise ShapeError(f"Adjugate of non-square {M.rows}x{M.cols} matrix")
    n = M.rows
    coefficients = charpoly(M)
    B = PolyMatrix.identity(n, M.nvars)
    for c in coefficients[1:n]:
        B = PolyMatrix(n, n, [a + c if i % (n + 1) == 0 else a for i, a in enumerate((B @ M).entries)])
    return B if n % 2 else B.map(lambda e: -e)


def minors(Phi: PolyMatrix) -> Dict[MultiIndex, Poly]:
    """
    All maximal q x q minors of a q x p matrix, keyed by increasing column multi-index.

    Args:
        Phi: PolyMatrix with rows <= cols

    Returns:
        Dictionary MultiIndex (over 1..p) -> determinant of the selected columns
    """
    q, p = Phi.shape
    if q > p:
        raise ShapeError(f"Maximal minors need rows <= cols, got {q}x{p}")
    rows = list(range(q))
    return {MultiIndex(cols, p): det(Phi.submatrix(rows, [c - 1 for c in cols]))
            for cols in combinations(range(1, p + 1), q)}


if __name__ == "__main__":
    a = parse("(1/2+3i)*z1 - z2", 2)
    print("parsed:", to_string(a))
    M = PolyMatrix.from_rows([[parse("z1", 2), parse("z2", 2)], [Poly(2), parse("1", 2)]])
    print("det:", to_string(det(M)))
    print("adjugate:", adjugate(M))
    print("minors of (z1, z2):", {k.key(): to_string(v) for k, v in
                                  minors(PolyMatrix.from_rows([[parse("z1", 2), parse("z2", 2)]])).items()})
