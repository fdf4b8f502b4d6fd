from fractions import Fraction

import numpy as np
import pytest

from src.core.boxcover import (
    build_extraction,
    build_extractions,
    cover_directions,
    extract_coefficient_bounds,
    plant_observations,
    progression_cover_audit,
    vandermonde_span_check,
)
from src.core.polyalg import MultiPolynomial
from src.utils import scalars
from src.utils.errors import PreconditionError, ValidationError


class TestVandermonde:
    def test_one_variable_spans_with_distinct_points(self):
        check = vandermonde_span_check([(1,), (2,), (3,)], 2)
        assert check.spanning and check.rank == 3

    def test_too_few_directions(self):
        check = vandermonde_span_check([(1,), (2,)], 2)
        assert not check.spanning and check.rank == 2

    def test_two_variables(self):
        check = vandermonde_span_check([(1, 0), (0, 1), (1, 1), (2, 2)], 1)
        assert check.spanning
        assert check.subset == ((1, 0), (0, 1), (1, 1))


class TestExtraction:
    def test_first_differences(self):
        system = build_extraction([(1,), (2,)], (1,), 1)
        assert system.gamma_prime == (-1, 1)
        assert system.Q_tilde == 1
        assert build_extraction([(1,), (2,)], (0,), 1).gamma_prime == (2, -1)

    def test_second_difference(self):
        system = build_extraction([(1,), (2,), (3,)], (2,), 2)
        assert system.gamma == (Fraction(1, 2), Fraction(-1), Fraction(1, 2))
        assert system.Q_tilde == 2
        assert system.gamma_prime == (1, -2, 1)
        assert system.weight == 4
        assert system.verify()

    def test_shared_multiplier(self):
        systems = build_extractions([(1,), (2,), (3,)], 2)
        assert {s.Q_tilde for s in systems.values()} == {2}
        assert all(s.verify() for s in systems.values())

    def test_requires_spanning_subset(self):
        with pytest.raises(PreconditionError):
            build_extraction([(1,), (1,), (2,)], (2,), 2)
        with pytest.raises(ValidationError):
            build_extraction([(1,), (2,)], (3,), 1)

    def test_recovers_multiple_of_planted_coefficient(self):
        p = MultiPolynomial({(2,): Fraction(1, 3)}, 1)
        directions = [(1,), (2,), (3,)]
        system = build_extraction(directions, (2,), 2)
        bound = extract_coefficient_bounds(system, plant_observations(p, directions))
        assert bound.value == scalars.signed_frac(Fraction(2, 3))
        assert bound.bound == 1

    def test_missing_observation(self):
        system = build_extraction([(1,), (2,)], (1,), 1)
        with pytest.raises(ValidationError):
            extract_coefficient_bounds(system, {(1,): {1: (0, 0)}})


class TestProgressionCover:
    def test_directions_enumerated_for_small_grids(self):
        directions, enumerated = cover_directions(2, 3, np.random.default_rng(0))
        assert enumerated
        assert len(directions) == 8
        assert (0, 0) not in directions

    def test_directions_sampled_for_large_grids(self):
        directions, enumerated = cover_directions(3, 30, np.random.default_rng(0))
        assert not enumerated
        assert len(directions) == 256

    def test_unit_length_fibers_all_fail(self):
        g = MultiPolynomial({(2,): scalars.parse_scalar("sqrt(2)")}, 1)
        cover = progression_cover_audit(g, 50, 7, Fraction(1, 2), cutoff=3, workers=1)
        assert cover.fiber_length == 1
        assert cover.directions_enumerated and cover.offsets_enumerated
        assert len(cover.rows) == 6 * 50
        assert cover.fraction == 1.0
        assert cover.meets_quarter_delta

    def test_rows_carry_csv_columns(self):
        g = MultiPolynomial({(1,): Fraction(1, 2)}, 1)
        cover = progression_cover_audit(g, 50, 7, Fraction(1, 2), cutoff=1, workers=1)
        row = cover.rows[0].to_row()
        assert list(row) == ["q", "x", "verdict", "witness", "magnitude", "inside"]

    def test_preconditions(self):
        g = MultiPolynomial({(1,): Fraction(1, 2)}, 1)
        with pytest.raises(PreconditionError):
            progression_cover_audit(g, 49, 7, Fraction(1, 2))
        with pytest.raises(PreconditionError):
            progression_cover_audit(g, 500, 7, Fraction(1, 10))
