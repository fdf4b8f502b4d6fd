from fractions import Fraction
from types import SimpleNamespace

import pytest

from src.core import certify
from src.core.diophantine import (
    DEFAULT_FAMILY,
    FAMILY_LADDER,
    BoundFamily,
    BracketInstance,
    Branch,
    TorusVector,
    best_multiplier,
    bracket_dichotomy,
    bracket_proposition_solver,
    canonical_sign,
    certify_density,
    frequency_count,
    frequency_cutoff,
    interval_hit_solver,
    iter_frequencies,
    lll_reduce,
    measure_family,
    multiplier_norm,
    smallest_multiplier_below,
    weyl_obstruction_search,
)
from src.core.polyalg import BoxShape
from src.utils import scalars
from src.utils.errors import DensityError, PreconditionError, ValidationError

ROOT2 = scalars.parse_scalar("sqrt(2)")


def instance(zeta=Fraction(1, 4)):
    return BracketInstance(
        beta=Fraction(0),
        alphas=(Fraction(1, 6),),
        zeta=(zeta,),
        gammas=((Fraction(1, 3),),),
        box=BoxShape((40,), symmetric=True),
        delta=Fraction(1, 8),
        scale=Fraction(40),
    )


class TestBoundFamily:
    def test_value_and_cap(self):
        family = BoundFamily.parse("10,3")
        assert family == DEFAULT_FAMILY
        assert family.value(Fraction(1, 2)) == 80
        assert family.multiplier_cap(Fraction(1, 2)) == 80
        assert str(family) == "10,3"

    def test_rejects_bad_families(self):
        with pytest.raises(ValidationError):
            BoundFamily.parse("10")
        with pytest.raises(ValidationError):
            BoundFamily(Fraction(0), 1)

    def test_ladder_is_ordered_by_exponent_first(self):
        assert len(FAMILY_LADDER) == 24
        assert BoundFamily(Fraction(10), 1).within(BoundFamily(Fraction(1), 2))

    def test_measure_family_stops_at_first_certified(self):
        measured = measure_family(lambda f: SimpleNamespace(certified=f.C >= 2))
        assert measured.family == BoundFamily(Fraction(1), 2)
        assert len(measured.tried) == 9
        assert measured.within_default

    def test_measure_family_reports_exhaustion(self):
        measured = measure_family(lambda f: None, ladder=FAMILY_LADDER[:3])
        assert measured.family is None
        assert not measured.within_default


class TestMultipliers:
    def test_best_multiplier_of_root_two(self):
        assert best_multiplier(ROOT2, 100).q == 70

    def test_best_multiplier_of_root_two_below_fifty(self):
        found = best_multiplier(ROOT2, 50)
        assert found.q == 29
        assert abs(scalars.to_float(found.value) - 0.0121933) < 1e-6

    def test_best_multiplier_of_rational(self):
        found = best_multiplier(Fraction(1, 3), 10)
        assert found.q == 3 and found.value == 0

    def test_smallest_multiplier_below(self):
        assert smallest_multiplier_below(ROOT2, 100, Fraction(1, 10)).q == 5
        assert smallest_multiplier_below(ROOT2, 4, Fraction(1, 10)) is None

    def test_multiplier_norm(self):
        assert multiplier_norm(Fraction(1, 3), 2) == Fraction(1, 3)
        assert multiplier_norm(Fraction(2, 7), 7) == 0

    def test_range_must_be_positive(self):
        with pytest.raises(ValidationError):
            best_multiplier(ROOT2, 0)


class TestFrequencies:
    def test_counts(self):
        assert frequency_count(1, 3) == 3
        assert frequency_count(2, 1) == 4
        assert len(list(iter_frequencies(3, 2))) == frequency_count(3, 2)

    def test_order_up_to_sign(self):
        assert list(iter_frequencies(2, 1)) == [(0, 1), (1, -1), (1, 0), (1, 1)]
        assert list(iter_frequencies(1, 3)) == [(1,), (2,), (3,)]

    def test_canonical_sign(self):
        assert canonical_sign((-1, 2)) == (1, -2)
        assert canonical_sign((0, 3)) == (0, 3)

    def test_cutoff_respects_budget(self):
        assert frequency_cutoff(1, Fraction(15, 2)) == 7
        assert frequency_cutoff(2, 10**9) == 1413

    def test_search_finds_first_integral_frequency(self):
        search = weyl_obstruction_search([(Fraction(1, 3),)], 5, [Fraction(0)])
        assert search.found
        assert search.frequency == (3,)
        assert search.coverage == 3

    def test_zero_vector_is_caught_by_the_first_frequency(self):
        search = weyl_obstruction_search([(Fraction(0),)], 5, [Fraction(0)])
        assert search.frequency == (1,)

    def test_seventh_roots_need_frequency_seven(self):
        search = weyl_obstruction_search([(Fraction(1, 7),)], 10, [Fraction(1, 100)])
        assert search.frequency == (7,)

    def test_search_reports_absence(self):
        search = weyl_obstruction_search([(ROOT2,)], 10, [Fraction(1, 1000)])
        assert not search.found
        assert search.coverage == frequency_count(1, 10)

    def test_search_above_lattice_dimension(self):
        gamma = TorusVector((Fraction(1, 2), Fraction(1, 3), Fraction(1, 5), Fraction(1, 7)))
        search = weyl_obstruction_search([gamma], 3, [Fraction(0)])
        assert search.frequency == (2, 0, 0, 0)

    def test_lll_reduces_skewed_basis(self):
        reduced = lll_reduce([[Fraction(1), Fraction(0)], [Fraction(100), Fraction(1)]])
        assert reduced == [[1, 0], [0, 1]]


class TestDensity:
    box = BoxShape((10,))

    @staticmethod
    def even(h):
        return h[0] % 2 == 0

    def test_enumeration(self):
        density, witnesses = certify_density(self.box, 5, self.even)
        assert density.method == "enumeration"
        assert witnesses == [(2,), (4,), (6,), (8,), (10,)]

    def test_enumeration_below_requirement(self):
        with pytest.raises(DensityError):
            certify_density(self.box, 6, self.even)

    def test_witnesses_are_checked(self):
        density, _ = certify_density(self.box, 2, self.even, hits=[(2,), (4,), (4,)])
        assert density.method == "witnesses" and density.count == 2
        with pytest.raises(DensityError):
            certify_density(self.box, 1, self.even, hits=[(3,)])
        with pytest.raises(DensityError):
            certify_density(self.box, 1, self.even, hits=[(12,)])

    def test_sampling_is_flagged_heuristic(self):
        density, _ = certify_density(self.box, 2, self.even, limit=5, samples=2000, seed=3)
        assert density.method == "sampling"
        assert density.heuristic


class TestIntervalSolver:
    def test_rational_coefficient(self):
        box = BoxShape((30,))
        family = BoundFamily(Fraction(10), 0)
        outcome = interval_hit_solver((Fraction(1, 3),), box, Fraction(1, 10), Fraction(3, 10), family=family)
        assert outcome.certified
        assert outcome.q == 3
        assert outcome.density.count == 10
        assert certify.check_interval(outcome, (Fraction(1, 3),), box.sides, Fraction(1, 10), Fraction(3, 10))

    def test_nearly_rational_coefficient(self):
        alpha = Fraction(1, 4) + Fraction(1, 10**8)
        box = BoxShape((1000,))
        epsilon, delta = Fraction(1, 50), Fraction(6, 25)
        outcome = interval_hit_solver((alpha,), box, epsilon, delta, family=BoundFamily(Fraction(10), 0))
        assert outcome.certified
        assert outcome.q == 4
        assert outcome.attained == (Fraction(4, 10**8),)
        assert outcome.density.count == 250
        assert certify.check_interval(outcome, (alpha,), box.sides, epsilon, delta)

    def test_no_multiplier_within_cap(self):
        outcome = interval_hit_solver(
            (Fraction(1, 3),), BoxShape((30,)), Fraction(1, 10), Fraction(3, 10), family=BoundFamily(Fraction(1), 0)
        )
        assert not outcome.certified

    def test_interval_longer_than_half_delta(self):
        with pytest.raises(PreconditionError):
            interval_hit_solver((Fraction(1, 3),), BoxShape((30,)), Fraction(1, 5), Fraction(3, 10))


class TestBracketInstance:
    def test_requires_symmetric_box(self):
        with pytest.raises(ValidationError):
            BracketInstance(0, (0,), (0,), ((0,),), BoxShape((4,)), Fraction(1, 8), 4)

    def test_value_and_bracket(self):
        inst = instance()
        assert inst.threshold == Fraction(1, 5)
        assert inst.bracket((4,)) == (Fraction(1, 3),)
        assert inst.value((4,)) == Fraction(2, 3) + Fraction(1, 12)
        assert inst.holds_at((6,)) and inst.holds_at((5,)) and not inst.holds_at((1,))

    def test_augmented_moves_linear_part_into_bracket(self):
        augmented = instance().augmented()
        assert augmented.zeta == (Fraction(1, 4), Fraction(1))
        assert augmented.gammas[0].entries == (Fraction(1, 3), Fraction(1, 6))
        assert augmented.alphas == (Fraction(0),)

    def test_document_round_trip(self):
        inst = instance()
        assert BracketInstance.from_document(inst.to_document()) == inst


class TestBracketSolvers:
    def test_proposition_frequency_branch(self):
        inst = instance()
        outcome = bracket_proposition_solver(inst, family=BoundFamily(Fraction(1), 1))
        assert outcome.branch is Branch.FREQUENCY
        assert outcome.frequency == (3,)
        assert outcome.cutoffs["route"] == "box"
        assert certify.check_proposition(outcome, inst)

    def test_cell_radius_widens_to_the_box(self):
        inst = BracketInstance(
            beta=Fraction(0),
            alphas=(Fraction(0),),
            zeta=(Fraction(2, 5),),
            gammas=((Fraction(1, 2),),),
            box=BoxShape((400,), symmetric=True),
            delta=Fraction(1, 5),
            scale=Fraction(400),
        )
        hits = [(h,) for h in range(-400, 401, 2)]
        outcome = bracket_proposition_solver(inst, hits, family=BoundFamily(Fraction(1), 1))
        assert outcome.branch is Branch.FREQUENCY
        assert outcome.frequency == (2,)
        assert outcome.cutoffs["cell_cutoff"] == 1
        assert outcome.cutoffs["frequency_cutoff"] == 5
        assert outcome.cutoffs["route"] == "box"
        assert outcome.grid.hits >= 1
        assert certify.check_proposition(outcome, inst)

    def test_dichotomy_frequency_branch(self):
        inst = instance()
        outcome = bracket_dichotomy(inst, family=BoundFamily(Fraction(1), 1))
        assert outcome.branch is Branch.FREQUENCY
        assert outcome.frequency == (3,)
        assert outcome.first_pass.frequency == (0, 1)
        assert certify.check_dichotomy(outcome, inst)

    def test_dichotomy_small_zeta_branch(self):
        inst = instance(zeta=Fraction(1, 8))
        outcome = bracket_dichotomy(inst, family=BoundFamily(Fraction(1), 1))
        assert outcome.branch is Branch.SMALL_ZETA
        assert outcome.multiplier == 1
        assert outcome.attained == (Fraction(1, 8),)
        assert certify.check_dichotomy(outcome, inst)

    def test_dichotomy_inconclusive_at_tiny_family(self):
        outcome = bracket_dichotomy(instance(), family=BoundFamily(Fraction(1), 0))
        assert outcome.branch is Branch.INCONCLUSIVE
        assert not certify.check_dichotomy(outcome, instance())

    def test_witnesses_checked_independently(self):
        inst = instance()
        assert certify.check_witnesses(inst, [(h,) for h in range(-36, 37, 6)] + [(5,)])
        assert not certify.check_witnesses(inst, [(1,)] * 20)
