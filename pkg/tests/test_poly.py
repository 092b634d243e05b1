"""Tests for polynomial arithmetic, parsing and polynomial matrices."""

from fractions import Fraction

import numpy as np
import pytest

from modules.exterior import MultiIndex
from modules.poly import (GaussRat, Poly, PolyMatrix, PolyParseError, ShapeError, adjugate, det, diff,
                          charpoly, coeff_from_domain, coeff_to_domain, divide, evaluate, evaluate_many, from_ring,
                          minors, monomials, parse, poly_ring, to_ring, to_string)


def test_gauss_rational_arithmetic():
    a = GaussRat(1, 2)
    assert a * a.conjugate() == GaussRat(5)
    assert (a / a) == GaussRat(1)
    assert GaussRat(Fraction(1, 2)) + Fraction(1, 2) == GaussRat(1)
    with pytest.raises(ZeroDivisionError):
        a / 0


def test_canonical_printing_orders_by_graded_lex():
    p = parse("z1*z2 + 2*z1^2 - 3", 2)
    assert to_string(p) == "2*z1^2 + z1*z2 - 3"


def test_printing_leading_negative_and_complex_coefficients():
    p = parse("(1/2+3i)*z1 - z2^2", 2)
    text = to_string(p)
    assert text == "-z2^2 + (1/2+3i)*z1"
    assert parse(text, 2) == p


def test_parse_print_identity_on_random_polynomials(poly_factory):
    for _ in range(20):
        p = poly_factory(3, 3)
        assert parse(to_string(p), 3) == p


def test_zero_polynomial():
    zero = parse("z1 - z1", 1)
    assert zero.is_zero()
    assert zero.degree() == -1
    assert to_string(zero) == "0"


def test_parse_error_reports_byte_offset():
    with pytest.raises(PolyParseError) as info:
        parse("z1 + * z2", 2)
    assert info.value.offset == 5


def test_parse_rejects_variable_outside_range():
    with pytest.raises(PolyParseError) as info:
        parse("z3", 2)
    assert info.value.offset == 0


def test_parse_rejects_zero_denominator():
    with pytest.raises(PolyParseError):
        parse("1/0*z1", 1)


def test_parse_rejects_trailing_garbage():
    with pytest.raises(PolyParseError):
        parse("z1 z2", 2)


def test_ring_identities():
    z1, z2 = Poly.variable(1, 2), Poly.variable(2, 2)
    assert (z1 + z2) ** 2 == z1 ** 2 + 2 * z1 * z2 + z2 ** 2
    assert (z1 - z2) * (z1 + z2) == parse("z1^2 - z2^2", 2)
    assert 1 - z1 == parse("-z1 + 1", 2)
    assert Poly.constant(3, 2) == 3


def test_nvars_mismatch_raises():
    with pytest.raises(ShapeError):
        parse("z1", 1) + parse("z1", 2)


def test_evaluate_single_and_many(rng):
    p = parse("(1+1i)*z1^2 - z2", 2)
    assert evaluate(p, [1j, 2]) == pytest.approx(-3 - 1j)
    points = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
    expected = np.array([evaluate(p, z) for z in points])
    np.testing.assert_allclose(evaluate_many(p, points), expected, rtol=1e-12, atol=1e-12)


def test_partial_derivative():
    p = parse("z1^3*z2 + z2", 2)
    assert diff(p, 1) == parse("3*z1^2*z2", 2)
    assert diff(p, 2) == parse("z1^3 + 1", 2)
    with pytest.raises(ShapeError):
        diff(p, 3)


def test_exact_division():
    quotient, remainder = divide(parse("z1^2 - z2^2", 2), parse("z1 - z2", 2))
    assert quotient == parse("z1 + z2", 2)
    assert remainder.is_zero()


def test_division_with_remainder():
    a, b = parse("z2", 2), parse("z1", 2)
    quotient, remainder = divide(a, b)
    assert quotient.is_zero()
    assert remainder == a


def test_division_reconstructs_dividend(poly_factory):
    for _ in range(10):
        a, b = poly_factory(2, 3), poly_factory(2, 2)
        quotient, remainder = divide(a, b)
        assert quotient * b + remainder == a


def test_monomial_basis_order():
    assert monomials(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(monomials(3, 2)) == 10


def test_determinant_and_adjugate():
    z1, z2 = Poly.variable(1, 2), Poly.variable(2, 2)
    zero, one = Poly(2), Poly.constant(1, 2)
    M = PolyMatrix.from_rows([[z1, z2], [zero, one]])
    assert det(M) == z1
    assert adjugate(M) == PolyMatrix.from_rows([[one, -z2], [zero, z1]])


def test_two_by_two_determinant():
    z = [Poly.variable(k, 4) for k in range(1, 5)]
    assert det(PolyMatrix.from_rows([[z[0], z[1]], [z[2], z[3]]])) == parse("z1*z4 - z2*z3", 4)
    assert det(PolyMatrix.identity(2, 4)) == Poly.constant(1, 4)


def test_determinant_matches_rule_of_sarrus(poly_factory):
    for _ in range(5):
        M = PolyMatrix(3, 3, [poly_factory(2, 2) for _ in range(9)])
        a = M.to_rows()
        sarrus = (a[0][0] * a[1][1] * a[2][2] + a[0][1] * a[1][2] * a[2][0] + a[0][2] * a[1][0] * a[2][1]
                  - a[0][2] * a[1][1] * a[2][0] - a[0][0] * a[1][2] * a[2][1] - a[0][1] * a[1][0] * a[2][2])
        assert det(M) == sarrus


def test_determinant_with_gaussian_rational_entries():
    i = Poly.constant(GaussRat(0, 1), 1)
    M = PolyMatrix.from_rows([[parse("(1/2+3i)*z1", 1), i], [parse("z1^2", 1), parse("2", 1)]])
    assert det(M) == parse("(0-1i)*z1^2 + (1+6i)*z1", 1)


def test_ring_conversion_round_trip(poly_factory):
    c = GaussRat(Fraction(-3, 7), Fraction(5, 2))
    assert coeff_from_domain(coeff_to_domain(c)) == c
    ring = poly_ring(2)
    p = parse("-z2^2 + (1/2+3i)*z1*z2 - 4", 2)
    assert from_ring(to_ring(p, ring), 2) == p
    assert from_ring(to_ring(Poly(2), ring), 2).is_zero()
    q = poly_factory(3, 3)
    assert from_ring(to_ring(q, poly_ring(3)), 3) == q


def test_characteristic_polynomial():
    M = PolyMatrix.from_rows([[parse("z1", 1), parse("2", 1)], [Poly(1), parse("1", 1)]])
    assert charpoly(M) == [Poly.constant(1, 1), parse("-z1 - 1", 1), parse("z1", 1)]


def test_adjugate_identity_on_random_matrices(poly_factory):
    for size in (1, 2, 3):
        M = PolyMatrix(size, size, [poly_factory(2, 1) for _ in range(size * size)])
        d = det(M)
        expected = PolyMatrix.identity(size, 2).map(lambda e: e * d)
        assert M @ adjugate(M) == expected
        assert adjugate(M) @ M == expected


def test_maximal_minors_of_a_row():
    row = PolyMatrix.from_rows([[parse("z1", 2), parse("z2", 2)]])
    delta = minors(row)
    assert delta == {MultiIndex((1,), 2): parse("z1", 2), MultiIndex((2,), 2): parse("z2", 2)}


def test_matrix_shape_errors():
    A = PolyMatrix.zeros(2, 3, 1)
    with pytest.raises(ShapeError):
        A @ A
    with pytest.raises(ShapeError):
        minors(A.transpose())
    with pytest.raises(ShapeError):
        PolyMatrix.from_rows([[Poly(1)], [Poly(1), Poly(1)]])


def test_matrix_evaluate():
    M = PolyMatrix.from_rows([[parse("z1", 1), parse("2", 1)]])
    np.testing.assert_allclose(M.evaluate([3.0]), np.array([[3.0, 2.0]]))
