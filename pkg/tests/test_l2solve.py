"""Tests for exact constraint assembly and the least-norm division certificate."""

import math

import numpy as np
import pytest

from modules.exterior import ExtElem, MultiIndex
from modules.koszul import KoszulSection, NotACycleError
from modules.l2solve import (DivergentNormError, DivisionProblem, InfeasibleDivisionError, assemble_constraints,
                             default_degree, discrete_norm2, gram_matrix, skoda_report, solve_min_norm)
from modules.poly import parse
from modules.quad import DomainSpec, WeightSpec, polydisc_grid


def _scalar_target(text, n, r):
    return ExtElem(r, 0, {MultiIndex((), r): parse(text, n)})


@pytest.fixture
def disc_problem():
    sec = KoszulSection.from_strings(["z1"], 1)
    return DivisionProblem(sec, 1, _scalar_target("z1", 1, 1), WeightSpec(epsilon=0.5), DomainSpec.unit(1))


def test_disc_division_is_certified(disc_problem):
    cert = skoda_report(disc_problem, (8, 8))
    report = cert.to_dict()
    assert report["h"] == {"1": "1"}
    assert report["residual_is_zero"]
    assert cert.norm_f == pytest.approx(math.pi, rel=1e-9)
    assert cert.norm_h == pytest.approx(math.pi, rel=1e-9)
    assert cert.ratio == pytest.approx(1.0, rel=1e-9)
    assert cert.bound == pytest.approx(3.0)
    assert cert.satisfied
    assert report["note"] == ""


def test_degree_two_division():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    f = ExtElem(2, 1, {MultiIndex((1,), 2): parse("-z2", 2), MultiIndex((2,), 2): parse("z1", 2)})
    prob = DivisionProblem(sec, 2, f, WeightSpec(epsilon=0.5), DomainSpec.unit(2), degree=1)
    cert = skoda_report(prob, (8, 8))
    assert cert.to_dict()["h"] == {"1,2": "1"}
    assert cert.residual.is_zero()
    assert cert.ratio == pytest.approx(1.0, rel=1e-6)
    assert cert.satisfied


def test_bidisc_division_picks_symmetric_minimizer():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    prob = DivisionProblem(sec, 1, _scalar_target("z1", 2, 2), WeightSpec(epsilon=0.5, q=1), DomainSpec.unit(2),
                           degree=2)
    cert = skoda_report(prob, (8, 8))
    assert cert.to_dict()["h"] == {"1": "1"}
    assert cert.residual.is_zero()
    assert 1.5 < cert.ratio <= cert.bound
    assert cert.satisfied


@pytest.mark.slow
def test_bidisc_certificate_converges_at_full_resolution():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    prob = DivisionProblem(sec, 1, _scalar_target("z1", 2, 2), WeightSpec(epsilon=0.5, q=1), DomainSpec.unit(2),
                           degree=2)
    cert = skoda_report(prob, (64, 64))
    assert cert.satisfied
    assert cert.quadrature_rel_change <= 1e-4
    assert cert.norm_f == pytest.approx(math.pi ** 2 * (4 - 2 * math.sqrt(2)), rel=1e-4)
    assert cert.ratio <= cert.bound


def test_infeasible_division():
    sec = KoszulSection.from_strings(["z1^2"], 1)
    prob = DivisionProblem(sec, 1, _scalar_target("z1", 1, 1), WeightSpec(), DomainSpec((2 + 0j,), (1.0,)),
                           degree=3)
    with pytest.raises(InfeasibleDivisionError) as info:
        skoda_report(prob, (8, 8))
    assert info.value.degree == 3
    assert info.value.augmented_rank == info.value.rank + 1
    assert info.value.inconsistent >= 1


def test_divergent_target_norm():
    sec = KoszulSection.from_strings(["z1"], 1)
    prob = DivisionProblem(sec, 1, _scalar_target("1", 1, 1), WeightSpec(q=0), DomainSpec.unit(1), degree=2)
    with pytest.raises(DivergentNormError):
        skoda_report(prob, (8, 8))


def test_non_cycle_is_rejected():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    f = ExtElem(2, 1, {MultiIndex((1,), 2): parse("1", 2)})
    with pytest.raises(NotACycleError):
        DivisionProblem(sec, 2, f, WeightSpec(), DomainSpec.unit(2))


def test_problem_validation():
    sec = KoszulSection.from_strings(["z1"], 1)
    with pytest.raises(ValueError):
        DivisionProblem(sec, 1, _scalar_target("z1", 1, 1), WeightSpec(), DomainSpec.unit(2))
    with pytest.raises(ValueError):
        DivisionProblem(sec, 2, _scalar_target("z1", 1, 1), WeightSpec(), DomainSpec.unit(1))
    with pytest.raises(ValueError):
        DivisionProblem(sec, 1, _scalar_target("z1", 1, 1), WeightSpec(), DomainSpec.unit(1), degree=-1)


def test_default_degree():
    sec = KoszulSection.from_strings(["z1", "z2^2"], 2)
    assert default_degree(sec, _scalar_target("z1^3", 2, 2)) == 5
    assert default_degree(sec, _scalar_target("1", 2, 2)) == 4


def test_constraint_system_shape(disc_problem):
    system = assemble_constraints(disc_problem)
    assert disc_problem.degree == 3
    assert len(system.unknowns) == 4
    assert len(system.rows) == 4
    assert len(system.rhs) == 4


def test_min_norm_solution_satisfies_constraints():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    prob = DivisionProblem(sec, 1, _scalar_target("z1^2 + z2^2", 2, 2), WeightSpec(epsilon=1.0, q=0),
                           DomainSpec.unit(2), degree=2)
    system = assemble_constraints(prob)
    gram = gram_matrix(prob, polydisc_grid(prob.dom, 6, 8))
    solution = solve_min_norm(system, gram)
    for row, b in zip(system.rows, system.rhs):
        lhs = sum(complex(v) * solution.coefficients[k] for k, v in row.items())
        assert lhs == pytest.approx(complex(b), abs=1e-9)
    particular = np.array([complex(v) for v in solution.exact.particular])
    assert discrete_norm2(solution.coefficients, gram) <= discrete_norm2(particular, gram) + 1e-9


def test_gram_matrix_is_hermitian_block_diagonal():
    sec = KoszulSection.from_strings(["z1", "z2"], 2)
    prob = DivisionProblem(sec, 1, _scalar_target("z1", 2, 2), WeightSpec(q=0), DomainSpec.unit(2), degree=1)
    gram = gram_matrix(prob, polydisc_grid(prob.dom, 4, 4))
    assert gram.shape == (6, 6)
    np.testing.assert_allclose(gram, gram.conj().T, atol=1e-12)
    np.testing.assert_allclose(gram[:3, 3:], 0.0)
    assert np.all(np.linalg.eigvalsh(gram) > 0)
