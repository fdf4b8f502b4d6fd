"""
Scalar domain shared by every numeric module.

Two kinds of scalars flow through the package: exact rationals
(``fractions.Fraction``) for all polynomial algebra on rational data, and
fixed-precision reals (``mpmath.mpf``) for irrational inputs such as sqrt(2).
Mixed arithmetic always promotes to ``mpf``; the two types never meet in a
bare Python operator because ``Fraction`` and ``mpf`` do not interoperate.
"""

import logging
import math
import re
from fractions import Fraction
from typing import Iterable, Union

import mpmath

from .errors import InexactInputError, ValidationError

logger = logging.getLogger(__name__)

Scalar = Union[int, Fraction, mpmath.mpf]

MIN_PRECISION_BITS = 80
DEFAULT_PRECISION_BITS = 128

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")
_DECIMAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_SQRT = re.compile(r"^(?:([+-]?\d+(?:/\d+)?)\*)?(-)?sqrt\((\d+)\)$")

mpmath.mp.prec = DEFAULT_PRECISION_BITS


def set_precision(bits: int) -> None:
    """Set the working precision (mantissa bits) for real scalars."""
    if bits < MIN_PRECISION_BITS:
        raise ValidationError(
            f"precision must be at least {MIN_PRECISION_BITS} bits, got {bits}"
        )
    mpmath.mp.prec = bits
    logger.debug(f"Real scalar precision set to {bits} bits")


def precision_bits() -> int:
    return mpmath.mp.prec


def is_exact(x: Scalar) -> bool:
    return isinstance(x, (int, Fraction))


def all_exact(values: Iterable[Scalar]) -> bool:
    return all(is_exact(v) for v in values)


def lift(x) -> Scalar:
    """Bring a user value into the scalar domain (ints become Fractions)."""
    if isinstance(x, bool):
        raise ValidationError("booleans are not scalars")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, float):
        return mpmath.mpf(x)
    if isinstance(x, str):
        return parse_scalar(x)
    raise ValidationError(f"unsupported scalar type {type(x).__name__}")


def exact(x: Scalar) -> Fraction:
    if not is_exact(x):
        raise InexactInputError(f"exact rational required, got real {x}")
    return Fraction(x)


def as_fraction(x: Scalar) -> Fraction:
    """Exact rational value of a scalar (a real is read as its binary expansion)."""
    if is_exact(x):
        return Fraction(x)
    # man_exp yields gmpy2.mpz values on the gmpy backend
    man, exp = to_mpf(x).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def parameter(x) -> Fraction:
    """Read a level such as delta or epsilon as an exact rational ("0.3" is 3/10)."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    try:
        return Fraction(str(x).strip())
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"expected a rational or decimal number, got '{x}'")


def to_mpf(x: Scalar) -> mpmath.mpf:
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def to_float(x: Scalar) -> float:
    if isinstance(x, Fraction):
        return x.numerator / x.denominator
    return float(x)


def add(a: Scalar, b: Scalar) -> Scalar:
    if is_exact(a) and is_exact(b):
        return Fraction(a) + b
    return to_mpf(a) + to_mpf(b)


def sub(a: Scalar, b: Scalar) -> Scalar:
    if is_exact(a) and is_exact(b):
        return Fraction(a) - b
    return to_mpf(a) - to_mpf(b)


def mul(a: Scalar, b: Scalar) -> Scalar:
    if is_exact(a) and is_exact(b):
        return Fraction(a) * b
    return to_mpf(a) * to_mpf(b)


def div(a: Scalar, b: Scalar) -> Scalar:
    if is_exact(a) and is_exact(b):
        return Fraction(a) / b
    return to_mpf(a) / to_mpf(b)


def total(values: Iterable[Scalar]) -> Scalar:
    acc: Scalar = Fraction(0)
    for v in values:
        acc = add(acc, v)
    return acc


def is_zero(x: Scalar) -> bool:
    return x == 0


def floor_int(x: Scalar) -> int:
    if is_exact(x):
        return math.floor(Fraction(x))
    return int(mpmath.floor(x))


def frac(x: Scalar) -> Scalar:
    """Fractional part {x} in [0, 1)."""
    return sub(x, floor_int(x))


def signed_frac(x: Scalar) -> Scalar:
    """Representative of x mod 1 in (-1/2, 1/2]."""
    f = frac(x)
    if le(f, Fraction(1, 2)):
        return f
    return sub(f, 1)


def circle_norm(x: Scalar) -> Scalar:
    """Distance from x to the nearest integer, ||x||_{R/Z}."""
    f = frac(x)
    g = sub(1, f)
    return f if le(f, g) else g


def le(a: Scalar, b: Scalar) -> bool:
    if is_exact(a) and is_exact(b):
        return Fraction(a) <= b
    return to_mpf(a) <= to_mpf(b)


def lt(a: Scalar, b: Scalar) -> bool:
    if is_exact(a) and is_exact(b):
        return Fraction(a) < b
    return to_mpf(a) < to_mpf(b)


def absolute(x: Scalar) -> Scalar:
    return -x if lt(x, 0) else x


def maximum(values: Iterable[Scalar]) -> Scalar:
    best: Scalar = Fraction(0)
    for v in values:
        if lt(best, v):
            best = v
    return best


def error_bound(x: Scalar) -> Scalar:
    """Rounding error carried by a real scalar; zero for exact ones."""
    if is_exact(x):
        return Fraction(0)
    return mpmath.ldexp(max(abs(to_mpf(x)), mpmath.mpf(1)), -mpmath.mp.prec)


def parse_scalar(text: str) -> Scalar:
    """Parse ``p/q``, an integer, a decimal, or ``[r*]sqrt(n)``.

    Rationals and integers stay exact; decimals and square roots become
    reals at the working precision.
    """
    s = text.strip().replace(" ", "")
    if _RATIONAL.match(s):
        return Fraction(s)
    if _DECIMAL.match(s):
        return mpmath.mpf(s)
    m = _SQRT.match(s)
    if m:
        coefficient = Fraction(m.group(1)) if m.group(1) else Fraction(1)
        if m.group(2):
            coefficient = -coefficient
        return to_mpf(coefficient) * mpmath.sqrt(int(m.group(3)))
    raise ValidationError(f"cannot parse scalar '{text}'")


def format_scalar(x: Scalar) -> str:
    """Inverse of :func:`parse_scalar` (reals print with full working precision)."""
    if is_exact(x):
        q = Fraction(x)
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    digits = int(mpmath.mp.prec * math.log10(2)) + 3
    return mpmath.nstr(to_mpf(x), digits, min_fixed=-1, max_fixed=0, strip_zeros=False)


def to_json_value(x: Scalar):
    """JSON form of a scalar: strings keep exactness and precision."""
    return format_scalar(x)
