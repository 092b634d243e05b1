"""Tests for boundary maps, exactness scores and pointwise lifts."""

from math import comb

import numpy as np
import pytest

from modules.exterior import ExtElem, MultiIndex, basis_dim, ext_norm2, interior
from modules.koszul import (ComplexPropertyError, KoszulSection, NotACycleError, PointFrame,
                            SingularPointError, boundary_matrix, boundary_matrix_numeric, exactness_score,
                            exactness_score_single, hom_norm2_check, is_cycle, is_exact_pair, koszul_pair,
                            least_norm_preimage, make_frame, numerical_rank, pointwise_lift)
from modules.poly import ShapeError, parse


def _complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_boundary_squares_to_zero(poly_factory):
    for r in (2, 3, 4):
        sec = KoszulSection(2, r, tuple(poly_factory(2, 2) for _ in range(r)))
        for p in range(1, r):
            assert boundary_matrix(sec, p).matmul(boundary_matrix(sec, p + 1)).is_zero()


def test_boundary_shapes_and_degree_range():
    sec = KoszulSection.from_strings(["z1", "z2", "z1*z2"], 2)
    assert boundary_matrix(sec, 2).shape == (3, 3)
    assert boundary_matrix(sec, 3).shape == (3, 1)
    with pytest.raises(ValueError):
        boundary_matrix(sec, 0)
    with pytest.raises(ValueError):
        boundary_matrix(sec, 4)


def test_section_shape_errors():
    with pytest.raises(ShapeError):
        KoszulSection(2, 2, (parse("z1", 2),))
    with pytest.raises(ShapeError):
        KoszulSection(2, 1, (parse("z1", 1),))


def test_numeric_boundary_matches_symbolic(rng):
    sec = KoszulSection.from_strings(["z1", "z2^2", "1 - z1*z2"], 2)
    z = _complex(rng, 2)
    frame = make_frame(sec, z)
    for p in (1, 2, 3):
        np.testing.assert_allclose(boundary_matrix_numeric(frame.g_at, p), boundary_matrix(sec, p).evaluate(z),
                                   atol=1e-12)


def test_hom_norm_counts_subsets(rng):
    for r, p in [(3, 2), (4, 3), (4, 1), (2, 2)]:
        frame = PointFrame(np.zeros(1), _complex(rng, r))
        norm2, expected = hom_norm2_check(frame, p)
        assert expected == pytest.approx(comb(r - 1, p - 1) * frame.s_norm2)
        assert norm2 == pytest.approx(expected, rel=1e-12)


def test_exactness_score_equals_section_norm(rng):
    for r in (1, 2, 3, 4):
        g_at = _complex(rng, r)
        s_norm2 = float(np.sum(np.abs(g_at) ** 2))
        for p in range(0, r + 1):
            Phi, Psi = koszul_pair(g_at, p)
            assert Phi.shape[0] == basis_dim(r, p)
            assert exactness_score(Phi, Psi) == pytest.approx(s_norm2, rel=1e-9)
            assert is_exact_pair(Phi, Psi)


def test_exactness_fails_on_zero_locus():
    Phi, Psi = koszul_pair(np.zeros(2, dtype=complex), 1)
    assert exactness_score(Phi, Psi) == pytest.approx(0.0, abs=1e-15)
    assert not is_exact_pair(Phi, Psi)


def test_middle_degree_out_of_range():
    with pytest.raises(ValueError):
        koszul_pair([1.0, 2.0], 3)


def test_non_complex_pair_is_rejected():
    with pytest.raises(ComplexPropertyError):
        exactness_score(np.eye(2), np.eye(2))
    with pytest.raises(ShapeError):
        exactness_score(np.eye(2), np.eye(3))


def test_single_map_score():
    assert exactness_score_single(np.diag([2.0, 0.5])) == pytest.approx(0.25)
    assert exactness_score_single(np.array([[1.0], [0.0]])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        exactness_score_single(np.zeros((2, 2)))


def test_numerical_rank():
    assert numerical_rank(np.diag([1.0, 1e-12])) == 1
    assert numerical_rank(np.zeros((2, 3))) == 0
    assert numerical_rank(np.zeros((0, 3))) == 0


def test_pointwise_lift_solves_and_is_minimal(rng):
    r = 4
    for p in (1, 2, 3, 4):
        g_at = _complex(rng, r)
        eta = ExtElem.from_vector(r, p, _complex(rng, basis_dim(r, p)))
        f = interior(g_at, eta)
        h = pointwise_lift(PointFrame(np.zeros(1), g_at), p, f)
        np.testing.assert_allclose(interior(g_at, h).to_vector(), f.to_vector(), atol=1e-10)
        np.testing.assert_allclose(h.to_vector(), least_norm_preimage(g_at, p, f).to_vector(), atol=1e-10)
        assert ext_norm2(h) <= ext_norm2(eta) + 1e-10


def test_pointwise_lift_degree_one():
    frame = PointFrame(np.zeros(1), np.array([3.0, 4.0j]))
    f = ExtElem(2, 0, {MultiIndex((), 2): 5.0 + 0j})
    h = pointwise_lift(frame, 1, f)
    np.testing.assert_allclose(h.to_vector(), np.array([3.0, -4.0j]) * 5.0 / 25.0)


def test_pointwise_lift_singular_point():
    frame = PointFrame(np.zeros(1), np.zeros(2))
    f = ExtElem(2, 0, {MultiIndex((), 2): 1.0 + 0j})
    with pytest.raises(SingularPointError):
        pointwise_lift(frame, 1, f)


def test_pointwise_lift_rejects_non_cycle():
    frame = PointFrame(np.zeros(1), np.array([1.0, 0.0]))
    f = ExtElem.basis(MultiIndex((1,), 2), 1.0 + 0j)
    with pytest.raises(NotACycleError) as info:
        pointwise_lift(frame, 2, f)
    assert info.value.defect is not None


def test_frame_rejects_inconsistent_norm():
    with pytest.raises(ValueError):
        PointFrame(np.zeros(1), np.array([1.0, 1.0]), s_norm2=5.0)


def test_symbolic_cycle_test():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    one = MultiIndex((1,), 2)
    two = MultiIndex((2,), 2)
    assert is_cycle(sec, 2, ExtElem(2, 1, {one: parse("-z2", 2), two: parse("z1", 2)}))
    assert not is_cycle(sec, 2, ExtElem(2, 1, {one: parse("1", 2)}))
    assert is_cycle(sec, 1, ExtElem(2, 0, {MultiIndex((), 2): parse("1", 2)}))
