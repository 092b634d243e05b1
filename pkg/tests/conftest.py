"""Shared fixtures for the test suite."""

import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

from modules.poly import Poly, monomials  # noqa: E402

PROBLEMS_DIR = os.path.join(ROOT, "problems")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def problems_dir():
    return PROBLEMS_DIR


def random_poly(rng: np.random.Generator, nvars: int, max_degree: int = 2, max_coeff: int = 3) -> Poly:
    """Integer-coefficient polynomial with a random support, never identically zero."""
    basis = monomials(nvars, max_degree)
    while True:
        terms = {exps: int(rng.integers(-max_coeff, max_coeff + 1))
                 for exps in basis if rng.random() < 0.5}
        p = Poly(nvars, terms)
        if not p.is_zero():
            return p


@pytest.fixture
def poly_factory(rng):
    return lambda nvars, max_degree=2: random_poly(rng, nvars, max_degree)
