"""Tests for the log-norm derivative identities and their finite-difference checks."""

import numpy as np
import pytest

from modules.identcheck import (HoloFamily, analytic_gradient, analytic_hessian, fd_convergence_ratio,
                                flat_curvature_check, grad_phi_check, hessian_min_eigenvalue, hessian_phi_check,
                                koszul_levi_form, koszul_sff_check, rank_bound_check)
from modules.koszul import KoszulSection, SingularPointError
from modules.poly import PolyMatrix, ShapeError, parse
from modules.quad import DomainSpec


@pytest.fixture
def fubini_study():
    return HoloFamily.from_section(KoszulSection.from_strings(["1", "z1"], 1))


@pytest.fixture
def mixed_section():
    return KoszulSection.from_strings(["z1", "z2", "z1*z2 + 1"], 2)


def _disc_points(max_radius=0.9, rings=4, angles=6):
    points = [np.array([0.0 + 0j])]
    for radius in np.linspace(max_radius / rings, max_radius, rings):
        for theta in np.linspace(0, 2 * np.pi, angles, endpoint=False):
            points.append(np.array([radius * np.exp(1j * theta)]))
    return points


def test_fubini_study_closed_forms(fubini_study):
    assert analytic_hessian(fubini_study, [0.5])[0, 0] == pytest.approx(1 / 1.25 ** 2)
    assert analytic_gradient(fubini_study, [0.5j])[0] == pytest.approx(-0.4j)
    for z in _disc_points():
        expected = 1 / (1 + abs(z[0]) ** 2) ** 2
        assert analytic_hessian(fubini_study, z)[0, 0] == pytest.approx(expected, rel=1e-12)


def test_fubini_study_finite_differences(fubini_study):
    for z in _disc_points():
        assert hessian_phi_check(fubini_study, z, step=1e-3) <= 1e-6
        assert grad_phi_check(fubini_study, z, step=1e-3) <= 1e-5


def test_second_order_convergence(fubini_study):
    ratio = fd_convergence_ratio(fubini_study, [0.3 + 0.2j], step=1e-2, kind="hessian")
    assert 3.5 <= ratio <= 4.5


def test_step_must_be_small(fubini_study):
    with pytest.raises(ValueError):
        hessian_phi_check(fubini_study, [0.1], step=0.1)
    with pytest.raises(ValueError):
        grad_phi_check(fubini_study, [0.1], step=0.0)


def test_point_dimension_mismatch(fubini_study):
    with pytest.raises(ShapeError):
        analytic_hessian(fubini_study, [0.1, 0.2])


def test_singular_point_is_reported():
    fam = HoloFamily.from_section(KoszulSection.from_strings(["z1", "z1^2"], 1))
    with pytest.raises(SingularPointError):
        hessian_phi_check(fam, [0.0])


def test_zero_family_is_rejected():
    with pytest.raises(ValueError):
        HoloFamily(PolyMatrix.zeros(1, 2, 1))


def test_boundary_family_matches_finite_differences(mixed_section):
    fam = HoloFamily.from_boundary(mixed_section, 2)
    assert hessian_phi_check(fam, [0.2 + 0.1j, -0.3j], step=1e-3) <= 1e-5


def test_hessian_is_positive_semidefinite(mixed_section, rng):
    fam = HoloFamily.from_section(mixed_section)
    for _ in range(10):
        z = 0.8 * (rng.random(2) - 0.5) + 0.8j * (rng.random(2) - 0.5)
        smallest, trace = hessian_min_eigenvalue(fam, z)
        assert smallest >= -1e-12
        assert trace > 0


def test_levi_form_equals_generic_hessian(mixed_section):
    z = np.array([0.4 - 0.1j, 0.25j])
    np.testing.assert_allclose(koszul_levi_form(mixed_section, z),
                               analytic_hessian(HoloFamily.from_section(mixed_section), z), atol=1e-12)


def test_second_fundamental_form_of_boundary(mixed_section, rng):
    for p in (1, 2, 3):
        err_interleave, err_norm = koszul_sff_check(mixed_section, p, [0.3 + 0.4j, -0.2 + 0.1j], rng=rng)
        assert err_interleave <= 1e-8
        assert err_norm <= 1e-8
    with pytest.raises(ValueError):
        koszul_sff_check(mixed_section, 4, [0.1, 0.1])


def test_rank_bound_holds():
    sec = KoszulSection.from_strings(["1", "z1"], 1)
    assert rank_bound_check(sec, [[0.1], [0.5j], [0.9]]) == (0, 0)
    sec = KoszulSection.from_strings(["z1", "z2", "z1*z2 + 1"], 2)
    worst, skipped = rank_bound_check(sec, [[0.1, 0.2], [0.5j, -0.3], [0.7, 0.7j]])
    assert worst <= 0
    assert skipped == 0


def test_rank_bound_skips_zero_locus():
    sec = KoszulSection.from_strings(["z1", "z1^2"], 1)
    assert rank_bound_check(sec, [[0.0], [0.5]]) == (0, 1)
    with pytest.raises(SingularPointError):
        rank_bound_check(sec, [[0.0]])


def test_rank_bound_threshold_ignores_other_points():
    sec = KoszulSection.from_strings(["z1", "z1^2"], 1)
    assert rank_bound_check(sec, [[1.5e-4], [0.9]]) == (0, 1)
    with pytest.raises(SingularPointError):
        rank_bound_check(sec, [[1e-6], [2e-6]])
    assert rank_bound_check(sec, [[1e-3], [2e-3]]) == (0, 0)


def test_rank_bound_threshold_follows_domain():
    sec = KoszulSection.from_strings(["z1", "z1^2"], 1)
    assert sec.domain_scale() == pytest.approx(2.0)
    wide = DomainSpec((0j,), (2.0,))
    assert sec.domain_scale(wide) == pytest.approx(6.0)
    assert rank_bound_check(sec, [[5e-4], [0.9]]) == (0, 0)
    assert rank_bound_check(sec, [[5e-4], [0.9]], wide) == (0, 1)


def test_flat_curvature_identity(mixed_section, rng):
    for _ in range(5):
        z = 0.6 * (rng.random(2) - 0.5) + 0.6j * (rng.random(2) - 0.5)
        assert flat_curvature_check(mixed_section, z, rng=rng) <= 1e-9


def test_coefficient_scale():
    fam = HoloFamily(PolyMatrix.from_rows([[parse("3*z1 + 4", 1)]]))
    assert fam.coefficient_scale() == pytest.approx(7.0)
