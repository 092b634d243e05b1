"""Tests for the generalized trace and its rank bound."""

import numpy as np
import pytest
from scipy.stats import unitary_group

from modules.trace import (BilinearMap, LinearMap, TraceBoundError, gen_trace, rho_norm, sharpness_family,
                           trace_bound_check, trace_bound_fuzz)


def _contraction_tensor(dim_w, dim_u):
    T = np.zeros((dim_w, dim_w * dim_u, dim_u))
    for w in range(dim_w):
        for u in range(dim_u):
            T[w, w * dim_u + u, u] = 1.0
    return T


def test_sharpness_family_attains_the_bound():
    w0 = np.array([1.0, 2.0j, -0.5])
    for k in (1, 2, 4):
        D, rho = sharpness_family(w0, k)
        lhs, rhs, rank = trace_bound_check(D, rho)
        assert rank == k
        assert lhs == pytest.approx(k * np.linalg.norm(w0), rel=1e-12)
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_contraction_trace_of_identity_block():
    D, rho = sharpness_family(np.array([3.0, 4.0]), 2)
    np.testing.assert_allclose(gen_trace(D, rho), np.array([6.0, 8.0]))


def test_trace_is_basis_independent(rng):
    rho = BilinearMap.interior(4, 2)
    D = LinearMap(rng.standard_normal((rho.dim_v, rho.dim_u)) + 1j * rng.standard_normal((rho.dim_v, rho.dim_u)))
    Q = unitary_group.rvs(rho.dim_u, random_state=7)
    np.testing.assert_allclose(gen_trace(D, rho, basis=Q), gen_trace(D, rho), atol=1e-10)


def test_interior_kind_applies_contraction():
    rho = BilinearMap.interior(2, 2)
    assert (rho.dim_v, rho.dim_u, rho.dim_w) == (2, 1, 2)
    np.testing.assert_allclose(rho.apply(np.array([1.0, 2.0]), np.array([1.0])), np.array([-2.0, 1.0]))


def test_fuzz_finds_no_violations():
    report = trace_bound_fuzz(trials=1000, seed=0)
    assert report["trials"] == 1000
    assert report["violations"] == 0
    assert report["trials_by_kind"]["contraction"] == 500
    assert report["worst_ratio"] <= 1 + 1e-9


def test_fuzz_is_deterministic():
    assert trace_bound_fuzz(trials=40, seed=3) == trace_bound_fuzz(trials=40, seed=3)


def test_rho_norm_of_contraction_tensor():
    assert rho_norm(_contraction_tensor(2, 3)) == pytest.approx(1.0, rel=1e-6)


def test_tensor_kind_matches_builtin_contraction(rng):
    tensor_rho = BilinearMap.from_tensor(_contraction_tensor(2, 3))
    builtin = BilinearMap.contraction(2, 3)
    assert tensor_rho.dims == (2, 6, 3)
    D = LinearMap(rng.standard_normal((6, 3)))
    np.testing.assert_allclose(gen_trace(D, tensor_rho), gen_trace(D, builtin), atol=1e-12)
    lhs, rhs, _ = trace_bound_check(D, tensor_rho)
    assert lhs <= rhs * (1 + 1e-6)


def test_scaled_tensor_violates_unit_norm_claim():
    D, _ = sharpness_family(np.array([1.0]), 3)
    rho = BilinearMap.from_tensor(2.0 * _contraction_tensor(1, 3))
    rho._norm["value"] = 1.0
    with pytest.raises(TraceBoundError):
        trace_bound_check(D, rho)


def test_shape_validation():
    with pytest.raises(ValueError):
        BilinearMap("outer", (1, 1))
    with pytest.raises(ValueError):
        BilinearMap.interior(2, 3)
    with pytest.raises(ValueError):
        LinearMap(np.zeros(3))
    with pytest.raises(ValueError):
        gen_trace(LinearMap(np.zeros((2, 2))), BilinearMap.contraction(2, 2))
