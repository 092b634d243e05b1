"""Tests for multi-indices, wedge and interior products."""

import numpy as np
import pytest

from modules.exterior import (ExtElem, MultiIndex, basis_dim, comp_sign, evaluate_ext, ext_norm2,
                              interior, multi_indices, wedge)
from modules.poly import parse


def _e(*indices, r=3):
    return ExtElem.basis(MultiIndex(indices, r))


def _random_elem(rng, r, degree):
    return ExtElem.from_vector(r, degree, rng.standard_normal(basis_dim(r, degree))
                               + 1j * rng.standard_normal(basis_dim(r, degree)))


def test_multi_index_validation():
    with pytest.raises(ValueError):
        MultiIndex((2, 1), 3)
    with pytest.raises(ValueError):
        MultiIndex((1, 4), 3)
    assert MultiIndex.parse("1,3", 3) == MultiIndex((1, 3), 3)
    assert MultiIndex.parse("", 3).key() == ""
    assert MultiIndex((1, 3), 3).complement() == MultiIndex((2,), 3)


def test_multi_indices_enumeration():
    keys = multi_indices(3, 2)
    assert [k.indices for k in keys] == [(1, 2), (1, 3), (2, 3)]
    assert multi_indices(3, 4) == []
    assert basis_dim(4, 2) == 6


def test_wedge_anticommutes_on_vectors():
    e1, e2 = _e(1), _e(2)
    assert wedge(e1, e2) == _e(1, 2)
    assert wedge(e2, e1) == -_e(1, 2)
    assert wedge(e1, e1).is_zero()


def test_wedge_graded_commutativity(rng):
    for p, k in [(1, 1), (1, 2), (2, 2)]:
        a, b = _random_elem(rng, 4, p), _random_elem(rng, 4, k)
        lhs = wedge(a, b).to_vector()
        rhs = wedge(b, a).to_vector() * (-1) ** (p * k)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_interior_contracts_first_slot():
    e12 = _e(1, 2, r=2)
    result = interior([1, 2], e12)
    assert result == ExtElem(2, 1, {MultiIndex((1,), 2): -2, MultiIndex((2,), 2): 1})


def test_interior_of_scalar_is_empty():
    scalar = ExtElem(2, 0, {MultiIndex((), 2): 5})
    out = interior([1, 1], scalar)
    assert out.degree == -1
    assert out.is_zero()


def test_interior_squares_to_zero(rng):
    s = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    for degree in (2, 3, 4):
        xi = _random_elem(rng, 4, degree)
        twice = interior(s, interior(s, xi))
        assert ext_norm2(twice) < 1e-20


def test_interior_is_an_antiderivation(rng):
    s = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    theta = _random_elem(rng, 4, 1)
    f = _random_elem(rng, 4, 2)
    lhs = interior(s, wedge(theta, f)).to_vector()
    pairing = sum(s[k.indices[0] - 1] * c for k, c in theta.coeffs.items())
    rhs = (f.scale(pairing) - wedge(theta, interior(s, f))).to_vector()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_interior_on_polynomial_coefficients():
    z1, z2 = parse("z1", 2), parse("z2", 2)
    xi = ExtElem(2, 2, {MultiIndex((1, 2), 2): parse("1", 2)})
    out = interior([z1, z2], xi)
    assert out.coeffs[MultiIndex((1,), 2)] == -z2
    assert out.coeffs[MultiIndex((2,), 2)] == z1


def test_complement_signs():
    assert comp_sign((1,), 2) == (1, MultiIndex((2,), 2))
    assert comp_sign((2,), 2) == (-1, MultiIndex((1,), 2))
    assert comp_sign((1, 3), 3) == (-1, MultiIndex((2,), 3))
    assert comp_sign((1, 2), 3)[0] == 1
    assert comp_sign(MultiIndex((), 2), 2) == (1, MultiIndex((1, 2), 2))


def test_norm_needs_numeric_coefficients():
    xi = ExtElem(2, 1, {MultiIndex((1,), 2): parse("z1", 2)})
    with pytest.raises(TypeError):
        ext_norm2(xi)
    numeric = evaluate_ext(xi, [3 + 4j, 0])
    assert numeric.is_numeric()
    assert ext_norm2(numeric) == pytest.approx(25.0)


def test_zero_coefficients_are_dropped():
    xi = ExtElem(2, 1, {MultiIndex((1,), 2): 0, MultiIndex((2,), 2): 1})
    assert list(xi.coeffs) == [MultiIndex((2,), 2)]
    assert xi - xi == ExtElem.zero(2, 1)


def test_degree_mismatch_raises():
    with pytest.raises(ValueError):
        _e(1) + _e(1, 2)
    with pytest.raises(ValueError):
        interior([1, 2], _e(1))
