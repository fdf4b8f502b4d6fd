from fractions import Fraction

import numpy as np
import pytest

from src.core.polyalg import (
    Basis,
    BoxShape,
    MultiPolynomial,
    conversion_constants,
    convert_basis,
    diagonal_restrict,
    discrete_derivative,
    index_set,
    mixed_difference_at_zero,
    polynomial,
    shift,
    shift_and_dilate,
    smoothness_norm,
    substitute_affine,
    taylor_multiplier,
)
from src.core.suites import random_polynomial
from src.utils import scalars
from src.utils.errors import ArityError, PreconditionError, ValidationError


def n_squared():
    return MultiPolynomial({(2,): 1}, 1)


def counterexample():
    root2 = scalars.parse_scalar("sqrt(2)")
    return MultiPolynomial({(1, 1): root2, (0, 1): -root2}, 2)


class TestBoxShape:
    def test_cardinality_and_points(self):
        assert BoxShape((2, 1000)).cardinality == 2000
        assert list(BoxShape((2,)).points()) == [(1,), (2,)]

    def test_symmetric_box(self):
        box = BoxShape((3,), symmetric=True)
        assert box.cardinality == 7
        assert box.contains((-3,)) and not box.contains((4,))

    def test_parse(self):
        assert BoxShape.parse("2,1000").sides == (2, 1000)
        with pytest.raises(ValidationError):
            BoxShape.parse("2,x")
        with pytest.raises(ValidationError):
            BoxShape((0, 3))

    def test_point_blocks_cover_box_in_order(self):
        box = BoxShape((5, 7))
        blocks = list(box.point_blocks(max_points=10))
        stacked = np.concatenate(blocks)
        assert [tuple(p) for p in stacked] == list(box.points())


def test_index_set_order():
    assert index_set(2, 1) == [(0, 0), (0, 1), (1, 0)]
    assert len(index_set(2, 2)) == 6
    assert len(index_set(3, 3)) == 20


def test_basis_conversion_of_square():
    binom = convert_basis(n_squared(), Basis.BINOMIAL)
    assert binom.coefficients == {(1,): 1, (2,): 2}
    assert convert_basis(binom, Basis.MONOMIAL) == n_squared()


def test_binomial_basis_evaluation():
    c2 = MultiPolynomial({(2,): 1}, 1, Basis.BINOMIAL)
    assert [c2.evaluate((n,)) for n in range(5)] == [0, 0, 1, 3, 6]
    assert c2.evaluate((-2,)) == 3


def test_random_round_trips_are_exact():
    rng = np.random.default_rng(11)
    for _ in range(50):
        t, d = int(rng.integers(1, 4)), int(rng.integers(0, 4))
        f = random_polynomial(rng, t, d, max_denominator=9)
        back = convert_basis(convert_basis(f, Basis.BINOMIAL), Basis.MONOMIAL)
        assert back == f
        point = tuple(int(v) for v in rng.integers(-5, 6, size=t))
        assert convert_basis(f, Basis.BINOMIAL).evaluate(point) == f.evaluate(point)


def test_arithmetic():
    n = MultiPolynomial.variable(0, 1)
    assert (n + 1) * (n - 1) == n_squared() - 1
    assert (n + 1) ** 2 == n_squared() + n * 2 + 1
    with pytest.raises(ArityError):
        n + MultiPolynomial.variable(0, 2)


def test_polynomial_infers_arity():
    f = polynomial({(1, 0, 2): Fraction(1, 3)})
    assert f.arity == 3 and f.degree == 3


def test_real_coefficients_evaluate():
    g = counterexample()
    assert g.evaluate((1, 5)) == 0
    assert abs(g.evaluate((2, 5)) - 5 * scalars.parse_scalar("sqrt(2)")) < 1e-30
    assert not g.is_exact()


def test_conversion_constants():
    c = conversion_constants(1, 2)
    assert c.multiplier == 2
    assert c.index_count == 3
    assert c.forward_height == 2
    assert c.kappa == 12
    assert conversion_constants(1, 3).multiplier == 6
    assert conversion_constants(2, 3).multiplier == 6


def test_smoothness_norm_linear():
    f = MultiPolynomial({(1,): Fraction(1, 3)}, 1)
    norm = smoothness_norm(f, BoxShape((10,)))
    assert norm.value == Fraction(10, 3)
    assert norm.witness_index == (1,)


def test_smoothness_norm_of_constant_is_zero():
    norm = smoothness_norm(MultiPolynomial.constant(Fraction(1, 2), 2), BoxShape((4, 4)))
    assert norm.value == 0 and norm.witness_index is None


def test_counterexample_norm_for_q_two():
    norm = smoothness_norm(counterexample().scale(2), BoxShape((2, 1000)))
    assert 343 < float(norm.value) < 344


def test_taylor_multiplier_clears_binomial_denominators():
    f = MultiPolynomial({(2,): Fraction(1, 2)}, 1)
    box = BoxShape((10,))
    result = taylor_multiplier(f, box, 50)
    assert result.star_norm == 50
    assert result.multiplier == 2
    assert result.bound == 0
    assert result.within_guarantee


def test_taylor_multiplier_precondition():
    f = MultiPolynomial({(2,): Fraction(1, 2)}, 1)
    with pytest.raises(PreconditionError):
        taylor_multiplier(f, BoxShape((10,)), 1)


def test_shift_and_derivative():
    n = MultiPolynomial.variable(0, 1)
    assert shift(n_squared(), (1,)) == n_squared() + n * 2 + 1
    assert discrete_derivative(n_squared(), (1,)) == n * 2 + 1
    assert shift_and_dilate(n_squared(), (2,), (3,)).coefficients == {(0,): 4, (1,): 12, (2,): 9}


def test_mixed_difference_and_diagonal():
    f = MultiPolynomial({(1, 1): 1}, 2)
    assert mixed_difference_at_zero(f, [(1, 0), (0, 1)]) == 1
    assert diagonal_restrict(f) == n_squared()


def test_affine_expansion_matches_substitution():
    p = MultiPolynomial({(2, 0): Fraction(1, 2), (1, 1): 3, (0, 1): -1}, 2)
    q = (2, 5)
    expansion = substitute_affine(p, q)
    for x in [(0, 0), (1, 3), (4, -2)]:
        fiber = expansion.fiber(x)
        for n in range(4):
            point = tuple(xi + qi * n for xi, qi in zip(x, q))
            assert fiber.evaluate((n,)) == p.evaluate(point)


def test_affine_expansion_of_square():
    fiber = substitute_affine(n_squared(), (3,)).fiber((2,))
    assert fiber.coefficients == {(0,): 4, (1,): 12, (2,): 9}
    assert substitute_affine(n_squared(), (3,)).degree_part(2).coefficients == {(0,): 9}
