"""Tests for polydisc quadrature, psi parsing and the Skoda weights."""

import math

import numpy as np
import pytest

from modules.koszul import KoszulSection
from modules.poly import Poly, parse
from modules.quad import (DomainSpec, NonFiniteWeightError, WeightSpec, pairwise_sum, parse_psi, polydisc_grid,
                          refine_and_estimate, richardson, skoda_weights, weight_values, weighted_norm2)


def _one(points):
    return 1.0


def test_grid_weights_sum_to_volume():
    for dom in (DomainSpec.unit(1), DomainSpec((1 + 1j,), (2.0,)), DomainSpec.unit(2)):
        grid = polydisc_grid(dom, 6, 8)
        assert grid.weights.sum() == pytest.approx(dom.volume, rel=1e-12)
        assert grid.nodes.shape == (grid.size, dom.n)


def test_grid_size_and_resolution_limits():
    grid = polydisc_grid(DomainSpec.unit(2), 8, 8)
    assert grid.size == 64 * 64
    with pytest.raises(ValueError):
        polydisc_grid(DomainSpec.unit(1), 1, 8)
    with pytest.raises(ValueError):
        polydisc_grid(DomainSpec.unit(1), 4, 3)


def test_block_iteration_covers_every_node():
    grid = polydisc_grid(DomainSpec.unit(2), 4, 4)
    blocks = list(grid.iter_blocks(chunk=50))
    assert len(blocks) == math.ceil(grid.size / 50)
    assert sum(w.sum() for _, w in blocks) == pytest.approx(grid.weights.sum())


def test_monomial_integrals_are_exact():
    disc = polydisc_grid(DomainSpec.unit(1), 8, 8)
    assert weighted_norm2([parse("z1", 1)], _one, disc) == pytest.approx(math.pi / 2, rel=1e-12)
    bidisc = polydisc_grid(DomainSpec.unit(2), 8, 8)
    assert weighted_norm2([parse("z1*z2^2", 2)], _one, bidisc) == pytest.approx(math.pi ** 2 / 6, rel=1e-12)


def test_components_add_up():
    grid = polydisc_grid(DomainSpec.unit(2), 6, 8)
    together = weighted_norm2([parse("z1", 2), parse("z2", 2)], _one, grid)
    assert together == pytest.approx(math.pi ** 2, rel=1e-12)


def test_shifted_disc():
    grid = polydisc_grid(DomainSpec((2 + 0j,), (1.0,)), 8, 8)
    assert weighted_norm2([parse("z1", 1)], _one, grid) == pytest.approx(4 * math.pi + math.pi / 2, rel=1e-12)


def test_callable_components():
    grid = polydisc_grid(DomainSpec.unit(1), 8, 8)
    value = weighted_norm2([lambda nodes: nodes[:, 0]], _one, grid)
    assert value == pytest.approx(math.pi / 2, rel=1e-12)


def test_psi_forms():
    point = np.array([[1.0, 1j]])
    assert parse_psi("2*|z|^2", 2)(point)[0] == pytest.approx(4.0)
    assert parse_psi("log(1+|z|^2)", 2)(point)[0] == pytest.approx(math.log(3.0))
    assert parse_psi("0", 2)(point)[0] == 0.0
    assert parse_psi("|z1|^2 + 1/2*|z2|^4", 2)(np.array([[1.0, 2.0]]))[0] == pytest.approx(9.0)


def test_psi_rejects_odd_powers_and_garbage():
    with pytest.raises(ValueError):
        parse_psi("|z1|^3", 1)
    with pytest.raises(ValueError):
        parse_psi("|z|^3", 1)


def test_pairwise_sum():
    assert pairwise_sum([1.0, 2.0, 3.0]) == 6.0
    assert pairwise_sum(np.zeros(0)) == 0.0
    np.testing.assert_allclose(pairwise_sum(np.ones((5, 2))), np.array([5.0, 5.0]))


def test_non_finite_weight_reports_node():
    nodes = np.array([[0j], [1.0 + 0j]])
    with pytest.raises(NonFiniteWeightError) as info:
        weight_values(lambda pts: 1 / np.abs(pts[:, 0]) ** 2, nodes)
    assert info.value.node == [0j]


def test_domain_and_weight_validation():
    with pytest.raises(ValueError):
        DomainSpec((0j,), (1.0,), kind="ball")
    with pytest.raises(ValueError):
        DomainSpec((0j,), (0.0,))
    with pytest.raises(ValueError):
        DomainSpec((0j, 0j), (1.0,))
    with pytest.raises(ValueError):
        WeightSpec(epsilon=0.0)
    with pytest.raises(ValueError):
        WeightSpec(q=-1)
    assert WeightSpec(epsilon=0.5).bound == pytest.approx(3.0)
    assert WeightSpec().resolved_q(2, 3) == 2
    assert WeightSpec().resolved_q(1, 1) == 0
    assert WeightSpec(q=1).resolved_q(3, 4) == 1


def test_domain_sampling(rng):
    dom = DomainSpec((1 + 1j, 0j), (0.5, 2.0))
    points = dom.sample(rng, 200)
    assert points.shape == (200, 2)
    assert np.all(np.abs(points - np.array(dom.center)) <= np.array(dom.radii) + 1e-12)


def test_skoda_weight_exponents():
    sec = KoszulSection.from_strings(["z1"], 1)
    w_num, w_den = skoda_weights(sec, WeightSpec(epsilon=0.5, q=1))
    node = np.array([[0.5 + 0j]])
    assert w_num(node)[0] == pytest.approx(0.25 ** -1.5)
    assert w_den(node)[0] == pytest.approx(0.25 ** -2.5)


def test_skoda_weight_includes_psi():
    sec = KoszulSection.from_strings(["1"], 1)
    w_num, _ = skoda_weights(sec, WeightSpec(psi="|z|^2"))
    assert w_num(np.array([[2.0 + 0j]]))[0] == pytest.approx(math.exp(-4.0))


def test_skoda_weights_need_nonzero_generators():
    with pytest.raises(ValueError):
        skoda_weights(KoszulSection(1, 1, (Poly(1),)), WeightSpec())


def test_refinement_converges_for_polynomials():
    estimate = refine_and_estimate([parse("z1", 1)], _one, DomainSpec.unit(1), (8, 8))
    assert not estimate.diverging
    assert estimate.value == pytest.approx(math.pi / 2, rel=1e-12)
    assert estimate.rel_change < 1e-10


def test_richardson_removes_second_order_error():
    values = [1 + 1 / n ** 2 for n in (8, 16, 32)]
    value, rel_change = richardson(values)
    assert value == pytest.approx(1.0, abs=1e-14)
    assert rel_change < 1e-12


def test_richardson_needs_second_order_regime():
    assert richardson([1.1, 1.0001, 1.0]) is None
    assert richardson([1.0, 1.1, 1.05]) is None
    assert richardson([2.0, 2.0, 2.0]) is None


def test_refinement_extrapolates_corner_singularity():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    _, w_den = skoda_weights(sec, WeightSpec(epsilon=0.5, q=1))
    estimate = refine_and_estimate([parse("z1", 2)], w_den, DomainSpec.unit(2), (16, 16))
    assert not estimate.diverging
    assert estimate.extrapolated
    assert estimate.value == pytest.approx(math.pi ** 2 * (4 - 2 * math.sqrt(2)), rel=1e-3)
    assert estimate.rel_change < 2e-3


def test_refinement_flags_divergence():
    estimate = refine_and_estimate([Poly.constant(1, 1)], lambda pts: 1 / np.abs(pts[:, 0]) ** 2,
                                   DomainSpec.unit(1), (8, 8))
    assert estimate.diverging
