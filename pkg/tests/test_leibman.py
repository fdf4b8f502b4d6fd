from dataclasses import replace
from fractions import Fraction

import pytest

from src.core import certify
from src.core.diophantine import BoundFamily
from src.core.leibman import (
    ObstructionCertificate,
    Outcome,
    check_certificate,
    near_constant_lift,
    torus_dichotomy,
)
from src.core.polyalg import BoxShape, MultiPolynomial
from src.utils import scalars
from src.utils.errors import DensityError, PreconditionError

ROOT2 = scalars.parse_scalar("sqrt(2)")
DELTA = Fraction(3, 10)


def linear(alpha):
    return MultiPolynomial({(1,): alpha}, 1)


def counterexample():
    return MultiPolynomial({(1, 1): ROOT2, (0, 1): -ROOT2}, 2)


class TestTorusDichotomy:
    def test_rational_rotation_has_obstruction(self):
        box = BoxShape((30,))
        report = torus_dichotomy(linear(Fraction(1, 3)), box, DELTA)
        assert report.outcome is Outcome.OBSTRUCTION
        assert report.weyl.witness == (3,)
        assert report.certificate.multiplier == 3
        assert report.certificate.attained == 0
        assert check_certificate(report.certificate, linear(Fraction(1, 3)), box)

    def test_irrational_rotation_is_equidistributed(self):
        report = torus_dichotomy(linear(ROOT2), BoxShape((1000,)), DELTA)
        assert report.outcome is Outcome.EQUIDISTRIBUTED
        assert report.certificate is None

    def test_counterexample_obstruction_at_default_family(self):
        box = BoxShape((2, 1000))
        report = torus_dichotomy(counterexample(), box, DELTA, cutoff=20)
        assert report.outcome is Outcome.OBSTRUCTION
        assert scalars.le(report.certificate.attained, report.bound)
        assert check_certificate(report.certificate, counterexample(), box)

    def test_counterexample_small_side_at_tight_family(self):
        report = torus_dichotomy(
            counterexample(), BoxShape((2, 1000)), DELTA, family=BoundFamily(Fraction(1), 2), cutoff=20
        )
        assert report.outcome is Outcome.SMALL_SIDE
        assert report.small_side == 1
        assert report.certified

    def test_inconclusive_without_small_side(self):
        report = torus_dichotomy(
            counterexample(), BoxShape((50, 1000)), DELTA, family=BoundFamily(Fraction(1), 0),
            assume_failure=True,
        )
        assert report.outcome is Outcome.INCONCLUSIVE
        assert not report.certified

    def test_vector_phase_uses_weyl_witness_character(self):
        parts = (linear(ROOT2), linear(Fraction(1, 3)))
        box = BoxShape((30,))
        report = torus_dichotomy(parts, box, DELTA, cutoff=3)
        assert report.outcome is Outcome.OBSTRUCTION
        assert report.weyl.witness == (0, 3)
        assert report.certificate.frequency == (0, 3)
        assert check_certificate(report.certificate, parts, box)

    def test_delta_range(self):
        with pytest.raises(PreconditionError):
            torus_dichotomy(linear(ROOT2), BoxShape((10,)), Fraction(3, 5))


class TestCertificates:
    def certificate(self):
        box = BoxShape((2, 1000))
        return box, torus_dichotomy(counterexample(), box, DELTA, cutoff=20).certificate

    def test_document_round_trip_still_checks(self):
        box, cert = self.certificate()
        restored = ObstructionCertificate.from_document(cert.to_document())
        assert restored.multiplier == cert.multiplier
        assert check_certificate(restored, counterexample(), box)

    def test_tampered_multiplier_is_rejected(self):
        box, cert = self.certificate()
        assert not check_certificate(replace(cert, multiplier=cert.multiplier + 1), counterexample(), box)

    def test_tampered_bound_is_rejected(self):
        box, cert = self.certificate()
        assert not check_certificate(replace(cert, bound=cert.bound / 2), counterexample(), box)

    def test_wrong_box_is_rejected(self):
        _, cert = self.certificate()
        assert not check_certificate(cert, counterexample(), BoxShape((3, 1000)))


class TestNearConstantLift:
    g = linear(Fraction(1, 5000))
    box = BoxShape((50,))

    def test_slow_rotation_lifts_with_trivial_multiplier(self):
        outcome = near_constant_lift(self.g, self.box, Fraction(1, 100), DELTA)
        assert outcome.certified
        assert outcome.Q == 1
        assert outcome.dilations == 15
        assert outcome.class_size == 13
        assert outcome.attained_norm == Fraction(1, 100)
        assert certify.check_lift(outcome, self.g, self.box)

    def test_epsilon_range(self):
        with pytest.raises(PreconditionError):
            near_constant_lift(self.g, self.box, Fraction(1, 10), DELTA)

    def test_hypothesis_must_hold(self):
        with pytest.raises(DensityError):
            near_constant_lift(linear(ROOT2), self.box, Fraction(1, 100), DELTA)

    def test_rational_rotation_with_drift_lifts_to_its_denominator(self):
        g = linear(Fraction(1, 7) + Fraction(1, 10**7))
        box = BoxShape((700,))
        outcome = near_constant_lift(g, box, Fraction(1, 1000), Fraction(1, 8))
        assert outcome.certified
        assert outcome.dilations == 62
        assert outcome.common == 7
        assert outcome.class_size == 54
        assert outcome.Q == 7
        assert outcome.attained_norm == Fraction(49, 100000)
        assert certify.check_lift(outcome, g, box)

    def test_half_density_is_accepted(self):
        g = linear(Fraction(1, 10**6))
        box = BoxShape((1000,))
        outcome = near_constant_lift(g, box, Fraction(1, 1000), Fraction(1, 2))
        assert outcome.certified
        assert outcome.Q == 1
        assert outcome.attained_norm == Fraction(1, 1000)
        assert outcome.attained_constant == 0
        assert certify.check_lift(outcome, g, box)

    def test_two_variable_slow_phase(self):
        g = MultiPolynomial({(1, 0): Fraction(1, 10**7), (0, 1): Fraction(1, 10**7)}, 2)
        box = BoxShape((100, 100))
        outcome = near_constant_lift(g, box, Fraction(1, 1000), DELTA)
        assert outcome.certified
        assert outcome.Q == 1
        assert outcome.attained_norm == Fraction(1, 100000)
        assert certify.check_lift(outcome, g, box)

    def test_zero_phase(self):
        outcome = near_constant_lift(MultiPolynomial.zero(1), self.box, Fraction(1, 100), DELTA)
        assert outcome.certified
        assert outcome.Q == 1
        assert outcome.attained_norm == 0
        assert outcome.attained_constant == 0

    def test_shifted_phase_misses_the_hypothesis(self):
        g = MultiPolynomial({(1,): Fraction(1, 10**6), (0,): Fraction(1, 7)}, 1)
        with pytest.raises(DensityError):
            near_constant_lift(g, BoxShape((1000,)), Fraction(1, 1000), Fraction(1, 2))

    @pytest.mark.parametrize("delta", [Fraction(0), Fraction(3, 2)])
    def test_delta_range(self, delta):
        with pytest.raises(PreconditionError):
            near_constant_lift(self.g, self.box, Fraction(1, 1000), delta)
