import os
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

from src.utils import scalars
from src.utils.errors import InexactInputError, ValidationError


@pytest.mark.parametrize(
    "text, expected",
    [("3/4", Fraction(3, 4)), ("-2", Fraction(-2)), (" 7 / 3 ", Fraction(7, 3))],
)
def test_parse_exact(text, expected):
    assert scalars.parse_scalar(text) == expected


def test_parse_reals():
    root2 = scalars.parse_scalar("sqrt(2)")
    assert isinstance(root2, mpmath.mpf)
    assert abs(root2**2 - 2) < mpmath.mpf(2) ** -100
    assert abs(scalars.parse_scalar("-3*sqrt(5)") + 3 * mpmath.sqrt(5)) < 1e-30
    assert scalars.parse_scalar("0.5") == mpmath.mpf("0.5")


def test_parse_rejects_garbage():
    with pytest.raises(ValidationError):
        scalars.parse_scalar("pi")


def test_format_inverts_parse():
    assert scalars.format_scalar(Fraction(3, 4)) == "3/4"
    assert scalars.format_scalar(Fraction(5)) == "5"
    root2 = scalars.parse_scalar("sqrt(2)")
    assert abs(scalars.parse_scalar(scalars.format_scalar(root2)) - root2) < mpmath.mpf(2) ** -120


def test_circle_norm_and_fractional_parts():
    assert scalars.circle_norm(Fraction(7, 4)) == Fraction(1, 4)
    assert scalars.circle_norm(Fraction(-1, 3)) == Fraction(1, 3)
    assert scalars.frac(Fraction(-1, 4)) == Fraction(3, 4)
    assert scalars.signed_frac(Fraction(3, 4)) == Fraction(-1, 4)
    assert scalars.signed_frac(Fraction(1, 2)) == Fraction(1, 2)


def test_mixed_arithmetic_promotes_to_real():
    root2 = scalars.parse_scalar("sqrt(2)")
    assert scalars.is_exact(scalars.add(Fraction(1, 2), 3))
    assert not scalars.is_exact(scalars.mul(root2, Fraction(1, 2)))


def test_parameter_reads_decimals_exactly():
    assert scalars.parameter("0.3") == Fraction(3, 10)
    with pytest.raises(ValidationError):
        scalars.parameter("abc")


def test_exact_rejects_reals():
    with pytest.raises(InexactInputError):
        scalars.exact(scalars.parse_scalar("sqrt(2)"))


def test_precision_floor():
    with pytest.raises(ValidationError):
        scalars.set_precision(64)
    scalars.set_precision(128)
    assert scalars.precision_bits() == 128


def test_binary_expansion_of_reals_is_a_plain_fraction():
    root2 = scalars.parse_scalar("sqrt(2)")
    q = scalars.as_fraction(root2)
    assert type(q.numerator) is int and type(q.denominator) is int
    assert abs(q - Fraction(1414213562373095, 10**15)) < Fraction(1, 10**14)
    assert q - 1 < 1


@pytest.mark.parametrize("backend_env", [{"MPMATH_NOGMPY": "1"}, {}])
def test_real_multipliers_on_both_mpmath_backends(backend_env):
    env = {k: v for k, v in os.environ.items() if k != "MPMATH_NOGMPY"}
    env.update(backend_env)
    code = (
        "from src.core.diophantine import best_multiplier\n"
        "from src.utils import scalars\n"
        "print(best_multiplier(scalars.parse_scalar('sqrt(2)'), 50).q)\n"
    )
    root = Path(__file__).resolve().parent.parent
    result = subprocess.run([sys.executable, "-c", code], cwd=root, env=env, capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    assert result.stdout.strip() == "29"
