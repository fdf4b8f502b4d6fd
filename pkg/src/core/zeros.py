"""
Zero counting on the grid [L]^t.

count_zeros follows the induction on the number of variables: fix n_1,
and either the remaining polynomial vanishes identically (all L^{t-1}
completions are zeros) or it is nonzero in t - 1 variables. One variable is
solved exactly through the rational root theorem. The explicit bound
d t L^{t-1} unrolls count_t <= d L^{t-1} + L count_{t-1}.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

import numpy as np

from ..utils.errors import InexactInputError, PreconditionError, ValidationError
from .polyalg import Basis, BoxShape, MultiPolynomial, convert_basis

logger = logging.getLogger(__name__)

ENUMERATION_LIMIT = 10_000_000

Terms = Dict[Tuple[int, ...], Fraction]


@dataclass(frozen=True)
class ZeroCount:
    count: int
    bound: int
    L: int
    degree: int
    arity: int

    @property
    def within_bound(self) -> bool:
        return self.count <= self.bound

    def to_document(self):
        return {
            "count": self.count,
            "bound": self.bound,
            "L": self.L,
            "degree": self.degree,
            "arity": self.arity,
            "within_bound": self.within_bound,
        }


def zero_bound(degree: int, arity: int, L: int) -> int:
    return degree * arity * L ** (arity - 1)


def _integer_terms(f: MultiPolynomial) -> Dict[Tuple[int, ...], int]:
    if not f.is_exact():
        raise InexactInputError("zero counting needs exact rational coefficients")
    mono = convert_basis(f, Basis.MONOMIAL)
    denominator = math.lcm(1, *(Fraction(c).denominator for c in mono.coefficients.values()))
    return {i: int(Fraction(c) * denominator) for i, c in mono.coefficients.items()}


def _fix_first(terms: Dict[Tuple[int, ...], int], n: int) -> Dict[Tuple[int, ...], int]:
    reduced: Dict[Tuple[int, ...], int] = {}
    for index, c in terms.items():
        rest = index[1:]
        reduced[rest] = reduced.get(rest, 0) + c * n ** index[0]
    return {i: c for i, c in reduced.items() if c}


def _horner(coefficients: Dict[int, int], n: int) -> int:
    value = 0
    for power in range(max(coefficients), -1, -1):
        value = value * n + coefficients.get(power, 0)
    return value


def _univariate_roots(terms: Dict[Tuple[int, ...], int], L: int) -> int:
    """Integer roots in [1, L] of a nonzero integer polynomial in one variable."""
    coefficients = {index[0]: c for index, c in terms.items()}
    lowest = min(coefficients)
    if lowest == max(coefficients):
        return 0
    shifted = {p - lowest: c for p, c in coefficients.items()}
    constant = abs(shifted[0])
    return sum(
        1 for d in range(1, min(L, constant) + 1) if constant % d == 0 and _horner(shifted, d) == 0
    )


def _count(terms: Dict[Tuple[int, ...], int], arity: int, L: int) -> int:
    if arity == 1:
        return _univariate_roots(terms, L)
    total = 0
    for n in range(1, L + 1):
        rest = _fix_first(terms, n)
        if not rest:
            total += L ** (arity - 1)
        else:
            total += _count(rest, arity - 1, L)
    return total


def count_zeros(f: MultiPolynomial, L: int) -> ZeroCount:
    """Exact number of zeros of a nonzero polynomial on [L]^t, with the bound d t L^{t-1}."""
    if L < 1:
        raise ValidationError(f"L must be >= 1, got {L}")
    terms = _integer_terms(f)
    if not terms:
        raise PreconditionError("the zero polynomial vanishes everywhere; zero counting needs f != 0")
    if L ** (f.arity - 1) > ENUMERATION_LIMIT:
        raise PreconditionError(f"L^(t-1) = {L ** (f.arity - 1)} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    count = _count(terms, f.arity, L)
    result = ZeroCount(count, zero_bound(f.degree, f.arity, L), L, f.degree, f.arity)
    logger.info(f"{count} zeros on [{L}]^{f.arity} (bound {result.bound})")
    return result


def count_zeros_bruteforce(f: MultiPolynomial, L: int) -> int:
    """Evaluate at every point of [L]^t and count the zeros."""
    terms = _integer_terms(f)
    if L**f.arity > ENUMERATION_LIMIT:
        raise PreconditionError(f"L^t = {L ** f.arity} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    box = BoxShape((L,) * f.arity)
    size = sum(abs(c) * L ** sum(i) for i, c in terms.items())
    if size >= 1 << 62:
        return sum(1 for p in box.points() if not _evaluate(terms, p))

    count = 0
    for block in box.point_blocks():
        values = np.zeros(len(block), dtype=np.int64)
        for index, c in terms.items():
            term = np.full(len(block), c, dtype=np.int64)
            for j, power in enumerate(index):
                term = term * block[:, j] ** power
            values += term
        count += int(np.count_nonzero(values == 0))
    return count


def _evaluate(terms: Dict[Tuple[int, ...], int], point: Tuple[int, ...]) -> int:
    return sum(c * math.prod(n**k for n, k in zip(point, index)) for index, c in terms.items())
