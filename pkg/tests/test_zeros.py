from fractions import Fraction

import numpy as np
import pytest

from src.core.polyalg import MultiPolynomial
from src.core.suites import random_polynomial
from src.core.zeros import count_zeros, count_zeros_bruteforce, zero_bound
from src.utils import scalars
from src.utils.errors import InexactInputError, PreconditionError, ValidationError


def test_bound_formula():
    assert zero_bound(2, 3, 10) == 600
    assert zero_bound(1, 1, 7) == 1


def test_diagonal():
    f = MultiPolynomial({(1, 0): 1, (0, 1): -1}, 2)
    result = count_zeros(f, 10)
    assert result.count == 10
    assert result.bound == 20
    assert result.within_bound


def test_product_of_lines():
    # (n1 - 1)(n2 - 2)
    f = MultiPolynomial({(1, 1): 1, (1, 0): -2, (0, 1): -1, (0, 0): 2}, 2)
    assert count_zeros(f, 5).count == 9


def test_univariate_roots():
    assert count_zeros(MultiPolynomial({(2,): 1, (0,): -4}, 1), 10).count == 1
    assert count_zeros(MultiPolynomial({(1,): Fraction(1, 2), (0,): Fraction(-3, 2)}, 1), 10).count == 1
    assert count_zeros(MultiPolynomial({(0,): 5}, 1), 10).count == 0


def test_agrees_with_bruteforce_on_random_polynomials():
    rng = np.random.default_rng(5)
    for _ in range(30):
        t, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        f = random_polynomial(rng, t, d)
        if f.is_zero():
            continue
        result = count_zeros(f, 6)
        assert result.count == count_zeros_bruteforce(f, 6)
        assert result.within_bound


def test_zero_polynomial_rejected():
    with pytest.raises(PreconditionError):
        count_zeros(MultiPolynomial.zero(2), 5)


def test_real_coefficients_rejected():
    with pytest.raises(InexactInputError):
        count_zeros(MultiPolynomial({(1,): scalars.parse_scalar("sqrt(2)")}, 1), 5)


def test_grid_size_validated():
    with pytest.raises(ValidationError):
        count_zeros(MultiPolynomial({(1,): 1}, 1), 0)
