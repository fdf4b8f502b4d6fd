from fractions import Fraction

import mpmath
import pytest

from src.core.polyalg import BoxShape, MultiPolynomial
from src.core.weyl import (
    PhaseField,
    Verdict,
    default_cutoff,
    direct_average,
    discrepancy_bruteforce,
    test_equidistribution as equidistribution,
    weyl_spectrum,
    weyl_sum,
)
from src.utils import scalars
from src.utils.errors import ArityError, PreconditionError

ROOT2 = scalars.parse_scalar("sqrt(2)")


def linear(alpha):
    return MultiPolynomial({(1,): alpha}, 1)


def counterexample():
    return MultiPolynomial({(1, 1): ROOT2, (0, 1): -ROOT2}, 2)


def brute_average(f, box):
    total = mpmath.mpc(0)
    for point in box.points():
        total += mpmath.expjpi(2 * scalars.to_mpf(scalars.frac(f.evaluate(point))))
    return complex(total / box.cardinality)


def test_default_cutoff():
    assert default_cutoff(Fraction(3, 10)) == 12
    assert default_cutoff(Fraction(1, 20)) == 100


def test_linear_sums_are_exact_for_rationals():
    box = BoxShape((30,))
    assert weyl_sum(linear(Fraction(1, 3)), box) == 0
    assert weyl_sum(linear(Fraction(1, 3)), box, 3) == 1


def test_rational_quadratic_uses_residues():
    f = MultiPolynomial({(2,): Fraction(1, 2)}, 1)
    assert PhaseField(f).is_rational
    assert abs(weyl_sum(f, BoxShape((10,)))) < 1e-12


@pytest.mark.parametrize("sides", [(50,), (7, 9)])
def test_real_coefficients_match_high_precision_sum(sides):
    box = BoxShape(sides)
    if len(sides) == 1:
        f = MultiPolynomial({(2,): ROOT2, (1,): Fraction(1, 7)}, 1)
    else:
        f = MultiPolynomial({(1, 1): ROOT2, (2, 0): Fraction(1, 3)}, 2)
    assert abs(direct_average(f, box) - brute_average(f, box)) < 1e-9


def test_counterexample_fails_with_first_witness():
    report = equidistribution(counterexample(), BoxShape((2, 1000)), Fraction(2, 5), 20)
    assert report.verdict is Verdict.FAILS
    assert report.witness == (1,)
    assert abs(report.witness_magnitude - 0.5) < 0.01


def test_spectrum_covers_frequencies_up_to_sign():
    spectrum = weyl_spectrum(linear(Fraction(1, 3)), BoxShape((30,)), 3)
    assert list(spectrum.entries) == [(1,), (2,), (3,)]
    assert spectrum.argmax == (3,)
    assert spectrum.magnitude_of((-3,)) == 1.0


def test_vector_phase_spectrum():
    parts = (linear(Fraction(1, 2)), linear(Fraction(1, 2)))
    spectrum = weyl_spectrum(parts, BoxShape((20,)), 1)
    assert abs(spectrum.entries[(1, 1)] - 1) < 1e-12
    assert abs(spectrum.entries[(1, 0)]) < 1e-12


def test_passes_below_the_witness_frequency():
    report = equidistribution(linear(Fraction(1, 3)), BoxShape((30,)), Fraction(1, 2), 2)
    assert report.verdict is Verdict.EQUIDISTRIBUTED_AT_CUTOFF
    assert report.witness is None
    document = report.to_document(include_spectrum=False)
    assert document["certified_at_cutoff_only"]
    assert "spectrum" not in document["spectrum"]


def test_irrational_rotation_equidistributes():
    report = equidistribution(linear(ROOT2), BoxShape((1000,)), Fraction(3, 10))
    assert not report.fails
    assert report.sup_magnitude < 0.05


def test_arity_mismatch():
    with pytest.raises(ArityError):
        weyl_sum(linear(ROOT2), BoxShape((3, 3)))


def test_discrepancy_oracle():
    assert discrepancy_bruteforce(linear(ROOT2), BoxShape((1000,))) < 0.02
    assert discrepancy_bruteforce(linear(Fraction(1, 2)), BoxShape((1000,))) > 0.4


def test_discrepancy_oracle_size_limit():
    with pytest.raises(PreconditionError):
        discrepancy_bruteforce(linear(ROOT2), BoxShape((10**8,)))


@pytest.mark.parametrize("shift", [Fraction(1, 5), ROOT2])
def test_constant_shift_keeps_the_magnitude(shift):
    box = BoxShape((50,))
    f = MultiPolynomial({(2,): ROOT2, (1,): Fraction(1, 7)}, 1)
    shifted = MultiPolynomial({(2,): ROOT2, (1,): Fraction(1, 7), (0,): shift}, 1)
    assert abs(abs(weyl_sum(shifted, box)) - abs(weyl_sum(f, box))) < 1e-12
    rotation = MultiPolynomial({(1,): ROOT2, (0,): shift}, 1)
    assert abs(abs(weyl_sum(rotation, box)) - abs(weyl_sum(linear(ROOT2), box))) < 1e-12


@pytest.mark.parametrize(
    "f, box",
    [
        (linear(Fraction(2, 7)), BoxShape((40,))),
        (linear(Fraction(-3, 11)), BoxShape((25,), symmetric=True)),
        (MultiPolynomial({(1, 0): Fraction(1, 5), (0, 1): Fraction(3, 11), (0, 0): Fraction(1, 4)}, 2), BoxShape((13, 17))),
    ],
)
def test_closed_form_matches_direct_sum_for_rational_linear_phases(f, box):
    closed = weyl_sum(f, box)
    assert abs(closed - direct_average(f, box)) < 1e-12
    assert abs(closed - brute_average(f, box)) < 1e-12


def test_constant_phase_has_full_discrepancy():
    M = 20
    zero = MultiPolynomial.zero(1)
    assert discrepancy_bruteforce(zero, BoxShape((100,)), M) >= 1 - 1 / M - 1e-12


@pytest.mark.parametrize(
    "f",
    [
        MultiPolynomial({(1, 1): ROOT2, (0, 2): Fraction(1, 3)}, 2),
        MultiPolynomial({(2, 0): Fraction(1, 9), (1, 1): Fraction(2, 5)}, 2),
    ],
)
def test_slab_sums_do_not_depend_on_worker_count(monkeypatch, f):
    monkeypatch.setattr("src.core.weyl.SLAB_POINTS", 64)
    box = BoxShape((50, 50))
    serial = weyl_sum(f, box, workers=1)
    assert weyl_sum(f, box, workers=2) == serial
    assert abs(serial - brute_average(f, box)) < 1e-9
