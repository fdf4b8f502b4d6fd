"""
Exact multivariate polynomial arithmetic.

Polynomials f : Z^t -> R are stored in one of two Taylor bases:

    MONOMIAL  f(n) = sum_i beta_i  n^i
    BINOMIAL  f(n) = sum_i alpha_i C(n, i)

with multi-index notation n^i = n_1^i_1 ... n_t^i_t and
C(n, i) = C(n_1, i_1) ... C(n_t, i_t). Coefficients are exact rationals or
fixed-precision reals (see ``src.utils.scalars``). Conversion between the
bases goes through Stirling numbers and is exact on rational data.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..utils import scalars
from ..utils.errors import ArityError, PreconditionError, ValidationError
from ..utils.scalars import Scalar

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


class Basis(str, Enum):
    MONOMIAL = "mono"
    BINOMIAL = "binom"


# ---------------------------------------------------------------------------
# Multi-indices and boxes
# ---------------------------------------------------------------------------


def index_degree(index: MultiIndex) -> int:
    return sum(index)


def index_set(arity: int, degree: int) -> List[MultiIndex]:
    """All multi-indices of total degree <= degree, ordered by degree then lexicographically."""
    indices = [
        i for i in itertools.product(range(degree + 1), repeat=arity) if sum(i) <= degree
    ]
    return sorted(indices, key=lambda i: (sum(i), i))


def zero_index(arity: int) -> MultiIndex:
    return (0,) * arity


def binomial(n: int, k: int) -> int:
    """C(n, k) for any integer n (negative n via the upper-negation identity)."""
    if k < 0:
        return 0
    if n >= 0:
        return math.comb(n, k)
    return (-1) ** k * math.comb(k - n - 1, k)


def multi_binomial(point: Sequence[int], index: MultiIndex) -> int:
    result = 1
    for n, i in zip(point, index):
        result *= binomial(n, i)
        if result == 0:
            return 0
    return result


def monomial_value(point: Sequence[int], index: MultiIndex) -> int:
    result = 1
    for n, i in zip(point, index):
        result *= n**i
    return result


@dataclass(frozen=True)
class BoxShape:
    """The box [N_1] x ... x [N_t] with [N] = {1, ..., N}, or [-N, N] when symmetric."""

    sides: Tuple[int, ...]
    symmetric: bool = False

    def __post_init__(self):
        sides = tuple(int(n) for n in self.sides)
        if not sides:
            raise ValidationError("a box needs at least one side")
        if any(n < 1 for n in sides):
            raise ValidationError(f"box sides must be >= 1, got {sides}")
        object.__setattr__(self, "sides", sides)

    @classmethod
    def parse(cls, text: str, symmetric: bool = False) -> "BoxShape":
        """Parse ``"2,1000"`` into a box."""
        try:
            sides = tuple(int(part) for part in text.split(","))
        except ValueError:
            raise ValidationError(f"box must be comma-separated integers, got '{text}'")
        return cls(sides, symmetric)

    @property
    def arity(self) -> int:
        return len(self.sides)

    @property
    def cardinality(self) -> int:
        return math.prod(self.side_lengths)

    @property
    def side_lengths(self) -> Tuple[int, ...]:
        if self.symmetric:
            return tuple(2 * n + 1 for n in self.sides)
        return self.sides

    @property
    def equal_sides(self) -> bool:
        return len(set(self.sides)) == 1

    def ranges(self) -> List[range]:
        if self.symmetric:
            return [range(-n, n + 1) for n in self.sides]
        return [range(1, n + 1) for n in self.sides]

    def points(self) -> Iterator[Tuple[int, ...]]:
        return itertools.product(*self.ranges())

    def contains(self, point: Sequence[int]) -> bool:
        if len(point) != self.arity:
            return False
        return all(x in r for x, r in zip(point, self.ranges()))

    def first_slabs(self, max_points: int = 1 << 16) -> List[range]:
        """Consecutive first-coordinate ranges whose slices hold at most max_points
        points, unless a single slice of the first coordinate is larger."""
        ranges = self.ranges()
        tail = math.prod(len(r) for r in ranges[1:])
        rows = max(1, max_points // tail)
        first = ranges[0]
        return [range(s, min(s + rows, first.stop)) for s in range(first.start, first.stop, rows)]

    def slab_points(self, head: range) -> np.ndarray:
        """Box points whose first coordinate lies in head, as an int64 (k, t) array."""
        rest = [np.arange(r.start, r.stop, dtype=np.int64) for r in self.ranges()[1:]]
        grid = np.meshgrid(np.arange(head.start, head.stop, dtype=np.int64), *rest, indexing="ij")
        return np.stack([g.reshape(-1) for g in grid], axis=1)

    def point_blocks(self, max_points: int = 1 << 16) -> Iterator[np.ndarray]:
        """Box points as int64 arrays of shape (k, t) in lexicographic order, one per first slab."""
        for head in self.first_slabs(max_points):
            yield self.slab_points(head)

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """count uniform box points (with repetition) from a seeded generator."""
        columns = [rng.integers(r.start, r.stop, size=count, dtype=np.int64) for r in self.ranges()]
        return np.stack(columns, axis=1)

    def power(self, index: MultiIndex) -> int:
        """N^i = N_1^i_1 ... N_t^i_t."""
        return monomial_value(self.sides, index)

    def __str__(self) -> str:
        if self.symmetric:
            return "x".join(f"[-{n},{n}]" for n in self.sides)
        return "x".join(f"[{n}]" for n in self.sides)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class MultiPolynomial:
    """Immutable polynomial in t variables with a fixed Taylor basis."""

    __slots__ = ("_coefficients", "_arity", "_basis")

    def __init__(
        self,
        coefficients: Mapping[MultiIndex, Scalar],
        arity: int,
        basis: Basis = Basis.MONOMIAL,
    ):
        if arity < 1:
            raise ValidationError("polynomials need at least one variable")
        cleaned: Dict[MultiIndex, Scalar] = {}
        for index, value in coefficients.items():
            index = tuple(int(i) for i in index)
            if len(index) != arity:
                raise ArityError(f"index {index} does not have arity {arity}")
            if any(i < 0 for i in index):
                raise ValidationError(f"negative exponent in index {index}")
            value = scalars.lift(value)
            if not scalars.is_zero(value):
                cleaned[index] = value
        self._coefficients = dict(sorted(cleaned.items(), key=lambda kv: (sum(kv[0]), kv[0])))
        self._arity = arity
        self._basis = Basis(basis)

    @classmethod
    def zero(cls, arity: int, basis: Basis = Basis.MONOMIAL) -> "MultiPolynomial":
        return cls({}, arity, basis)

    @classmethod
    def constant(cls, value: Scalar, arity: int, basis: Basis = Basis.MONOMIAL) -> "MultiPolynomial":
        return cls({zero_index(arity): value}, arity, basis)

    @classmethod
    def variable(cls, j: int, arity: int) -> "MultiPolynomial":
        """The coordinate polynomial n_j (0-based j)."""
        index = tuple(1 if k == j else 0 for k in range(arity))
        return cls({index: 1}, arity)

    @property
    def arity(self) -> int:
        return self._arity

    @property
    def basis(self) -> Basis:
        return self._basis

    @property
    def coefficients(self) -> Mapping[MultiIndex, Scalar]:
        return MappingProxyType(self._coefficients)

    @property
    def support(self) -> List[MultiIndex]:
        return list(self._coefficients)

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial reports 0."""
        return max((sum(i) for i in self._coefficients), default=0)

    def coefficient(self, index: MultiIndex) -> Scalar:
        return self._coefficients.get(tuple(index), Fraction(0))

    @property
    def constant_term(self) -> Scalar:
        return self.coefficient(zero_index(self._arity))

    def is_zero(self) -> bool:
        return not self._coefficients

    def is_constant(self) -> bool:
        return all(sum(i) == 0 for i in self._coefficients)

    def is_exact(self) -> bool:
        return scalars.all_exact(self._coefficients.values())

    def evaluate(self, point: Sequence[int]) -> Scalar:
        return evaluate(self, point)

    __call__ = evaluate

    def to_basis(self, target: Basis) -> "MultiPolynomial":
        return convert_basis(self, target)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "MultiPolynomial":
        if isinstance(other, MultiPolynomial):
            if other.arity != self._arity:
                raise ArityError(f"arity {other.arity} does not match {self._arity}")
            return convert_basis(other, self._basis)
        return MultiPolynomial.constant(other, self._arity, self._basis)

    def __add__(self, other) -> "MultiPolynomial":
        other = self._coerce(other)
        merged = dict(self._coefficients)
        for index, value in other._coefficients.items():
            merged[index] = scalars.add(merged.get(index, Fraction(0)), value)
        return MultiPolynomial(merged, self._arity, self._basis)

    __radd__ = __add__

    def __neg__(self) -> "MultiPolynomial":
        return self.scale(-1)

    def __sub__(self, other) -> "MultiPolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPolynomial":
        return self._coerce(other) - self

    def scale(self, c: Scalar) -> "MultiPolynomial":
        c = scalars.lift(c)
        return MultiPolynomial(
            {i: scalars.mul(c, v) for i, v in self._coefficients.items()},
            self._arity,
            self._basis,
        )

    def __mul__(self, other) -> "MultiPolynomial":
        if not isinstance(other, MultiPolynomial):
            return self.scale(other)
        if other.arity != self._arity:
            raise ArityError(f"arity {other.arity} does not match {self._arity}")
        left = convert_basis(self, Basis.MONOMIAL)
        right = convert_basis(other, Basis.MONOMIAL)
        product: Dict[MultiIndex, Scalar] = {}
        for i, a in left._coefficients.items():
            for j, b in right._coefficients.items():
                k = tuple(x + y for x, y in zip(i, j))
                product[k] = scalars.add(product.get(k, Fraction(0)), scalars.mul(a, b))
        return convert_basis(MultiPolynomial(product, self._arity), self._basis)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "MultiPolynomial":
        if exponent < 0:
            raise ValidationError("negative powers of polynomials are not polynomials")
        result = MultiPolynomial.constant(1, self._arity, self._basis)
        for _ in range(exponent):
            result = result * self
        return result

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPolynomial):
            return NotImplemented
        return (
            self._arity == other._arity
            and self._basis == other._basis
            and self._coefficients == other._coefficients
        )

    def __hash__(self) -> int:
        return hash((self._arity, self._basis, tuple(self._coefficients.items())))

    def __repr__(self) -> str:
        terms = ", ".join(
            f"{i}: {scalars.format_scalar(v)}" for i, v in self._coefficients.items()
        )
        return f"MultiPolynomial(t={self._arity}, basis={self._basis.value}, {{{terms}}})"


def polynomial(terms: Mapping[MultiIndex, Scalar], basis: Basis = Basis.MONOMIAL) -> MultiPolynomial:
    """Build a polynomial inferring its arity from the indices."""
    if not terms:
        raise ValidationError("use MultiPolynomial.zero(arity) for the zero polynomial")
    arity = len(next(iter(terms)))
    return MultiPolynomial(terms, arity, basis)


# ---------------------------------------------------------------------------
# Evaluation and basis conversion
# ---------------------------------------------------------------------------


def evaluate(f: MultiPolynomial, point: Sequence[int]) -> Scalar:
    """Exact value of f at an integer point."""
    if len(point) != f.arity:
        raise ArityError(f"point {tuple(point)} has arity {len(point)}, polynomial has {f.arity}")
    basis_value = multi_binomial if f.basis is Basis.BINOMIAL else monomial_value
    return scalars.total(
        scalars.mul(value, basis_value(point, index))
        for index, value in f.coefficients.items()
    )


def _stirling_tables(degree: int) -> Tuple[List[List[int]], List[List[int]]]:
    """Second-kind S(n, k) and signed first-kind s(n, k) for n, k <= degree."""
    second = [[0] * (degree + 1) for _ in range(degree + 1)]
    first = [[0] * (degree + 1) for _ in range(degree + 1)]
    second[0][0] = first[0][0] = 1
    for n in range(1, degree + 1):
        for k in range(1, n + 1):
            second[n][k] = k * second[n - 1][k] + second[n - 1][k - 1]
            first[n][k] = first[n - 1][k - 1] - (n - 1) * first[n - 1][k]
    return second, first


def _univariate_entries(degree: int, target: Basis) -> List[List[Fraction]]:
    """entry[i][j]: weight of source coefficient j in target coefficient i.

    Monomial -> binomial uses n^j = sum_i S(j, i) i! C(n, i); binomial ->
    monomial uses C(n, i) = (1/i!) sum_j s(i, j) n^j.
    """
    second, first = _stirling_tables(degree)
    entry = [[Fraction(0)] * (degree + 1) for _ in range(degree + 1)]
    for i in range(degree + 1):
        for j in range(degree + 1):
            if target is Basis.BINOMIAL:
                entry[i][j] = Fraction(second[j][i] * math.factorial(i))
            else:
                entry[i][j] = Fraction(first[j][i], math.factorial(j))
    return entry


def conversion_matrix(arity: int, degree: int, target: Basis) -> Dict[Tuple[MultiIndex, MultiIndex], Fraction]:
    """Sparse matrix M with target_i = sum_j M[i, j] source_j over the index set.

    Entries vanish unless i <= j componentwise, so M[i, j] = 0 when |j| < |i|.
    """
    entry = _univariate_entries(degree, Basis(target))
    indices = index_set(arity, degree)
    matrix: Dict[Tuple[MultiIndex, MultiIndex], Fraction] = {}
    for j in indices:
        for i in itertools.product(*(range(jk + 1) for jk in j)):
            value = Fraction(1)
            for ik, jk in zip(i, j):
                value *= entry[ik][jk]
            if value:
                matrix[(i, j)] = value
    return matrix


def convert_basis(f: MultiPolynomial, target: Basis) -> MultiPolynomial:
    """Re-express f in the target basis; pointwise equal on all of Z^t."""
    target = Basis(target)
    if f.basis is target:
        return f
    entry = _univariate_entries(max(f.degree, 0), target)
    converted: Dict[MultiIndex, Scalar] = {}
    for j, value in f.coefficients.items():
        for i in itertools.product(*(range(jk + 1) for jk in j)):
            weight = Fraction(1)
            for ik, jk in zip(i, j):
                weight *= entry[ik][jk]
            if weight:
                converted[i] = scalars.add(converted.get(i, Fraction(0)), scalars.mul(weight, value))
    return MultiPolynomial(converted, f.arity, target)


def height(q: Fraction) -> int:
    q = Fraction(q)
    return max(abs(q.numerator), q.denominator)


@dataclass(frozen=True)
class ConversionConstants:
    """Constants of the two conversion matrices for a given (d, t).

    ``multiplier`` (r) is the lcm of the denominators of the binomial ->
    monomial entries. ``kappa`` = r * |I| * forward_height bounds
    ||r f||_{C-infinity} / ||f||_{C*-infinity}: each binomial coefficient is an
    integer combination of monomial ones with weights at most forward_height
    and N^i <= N^j whenever i <= j, and ||r x|| <= r ||x||.
    """

    arity: int
    degree: int
    index_count: int
    multiplier: int
    forward_height: int
    inverse_height: int

    @property
    def kappa(self) -> int:
        return self.multiplier * self.index_count * self.forward_height


def conversion_constants(arity: int, degree: int) -> ConversionConstants:
    forward = conversion_matrix(arity, degree, Basis.BINOMIAL)
    inverse = conversion_matrix(arity, degree, Basis.MONOMIAL)
    r = 1
    for value in inverse.values():
        r = math.lcm(r, value.denominator)
    return ConversionConstants(
        arity=arity,
        degree=degree,
        index_count=len(index_set(arity, degree)),
        multiplier=r,
        forward_height=max((height(v) for v in forward.values()), default=1),
        inverse_height=max((height(v) for v in inverse.values()), default=1),
    )


# ---------------------------------------------------------------------------
# Smoothness norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothnessValue:
    """sup over nonzero indices of N^i ||coefficient_i||_{R/Z}, with the attaining index.

    ``witness_index`` is None only when f has no nonconstant term.
    ``error`` bounds the rounding in ``value`` (zero for exact data).
    """

    value: Scalar
    witness_index: Optional[MultiIndex]
    error: Scalar = Fraction(0)


def smoothness_norm(f: MultiPolynomial, box: BoxShape, basis: Basis = Basis.BINOMIAL) -> SmoothnessValue:
    """||f||_{C-infinity[N]} (binomial basis) or ||f||_{C*-infinity[N]} (monomial basis)."""
    if box.arity != f.arity:
        raise ArityError(f"box arity {box.arity} does not match polynomial arity {f.arity}")
    g = convert_basis(f, basis)
    best: Scalar = Fraction(0)
    witness: Optional[MultiIndex] = None
    error: Scalar = Fraction(0)
    for index, value in g.coefficients.items():
        if sum(index) == 0:
            continue
        weighted = scalars.mul(box.power(index), scalars.circle_norm(value))
        error = scalars.maximum([error, scalars.mul(box.power(index), scalars.error_bound(value))])
        if witness is None or scalars.lt(best, weighted):
            best, witness = weighted, index
    return SmoothnessValue(best, witness, error)


@dataclass(frozen=True)
class TaylorMultiplier:
    multiplier: int
    bound: Scalar
    kappa: int
    star_norm: Scalar
    guaranteed: Scalar

    @property
    def within_guarantee(self) -> bool:
        return scalars.le(self.bound, self.guaranteed)


def taylor_multiplier(f: MultiPolynomial, box: BoxShape, M: Scalar) -> TaylorMultiplier:
    """Given ||f||_{C*-infinity[N]} <= M, return r and the attained ||r f||_{C-infinity[N]} <= kappa M."""
    M = scalars.lift(M)
    star = smoothness_norm(f, box, Basis.MONOMIAL)
    if scalars.lt(M, star.value):
        raise PreconditionError(
            f"||f||_C*inf = {scalars.format_scalar(star.value)} exceeds M = {scalars.format_scalar(M)}"
        )
    constants = conversion_constants(f.arity, max(f.degree, 1))
    attained = smoothness_norm(f.scale(constants.multiplier), box, Basis.BINOMIAL)
    result = TaylorMultiplier(
        multiplier=constants.multiplier,
        bound=attained.value,
        kappa=constants.kappa,
        star_norm=star.value,
        guaranteed=scalars.mul(constants.kappa, M),
    )
    if not result.within_guarantee:
        logger.error(
            f"Taylor multiplier bound {scalars.format_scalar(result.bound)} exceeds "
            f"kappa*M = {scalars.format_scalar(result.guaranteed)}"
        )
    return result


# ---------------------------------------------------------------------------
# Substitutions and differences
# ---------------------------------------------------------------------------


def _substitute_linear(
    f: MultiPolynomial, offsets: Sequence[int], scales: Sequence[int]
) -> MultiPolynomial:
    """The polynomial n -> f(offsets + scales * n) (componentwise), monomial basis."""
    if len(offsets) != f.arity or len(scales) != f.arity:
        raise ArityError("offset and scale vectors must match the polynomial arity")
    mono = convert_basis(f, Basis.MONOMIAL)
    result: Dict[MultiIndex, Scalar] = {}
    for j, value in mono.coefficients.items():
        for a in itertools.product(*(range(jk + 1) for jk in j)):
            weight = 1
            for ak, jk, xk, qk in zip(a, j, offsets, scales):
                weight *= math.comb(jk, ak) * xk ** (jk - ak) * qk**ak
            if weight:
                result[a] = scalars.add(result.get(a, Fraction(0)), scalars.mul(weight, value))
    return MultiPolynomial(result, f.arity)


def shift(f: MultiPolynomial, h: Sequence[int]) -> MultiPolynomial:
    """n -> f(n + h), in f's basis."""
    return convert_basis(_substitute_linear(f, tuple(h), (1,) * f.arity), f.basis)


def shift_and_dilate(p: MultiPolynomial, x: Sequence[int], q: Sequence[int]) -> MultiPolynomial:
    """n -> p(x_1 + q_1 n_1, ..., x_t + q_t n_t), monomial basis."""
    return _substitute_linear(p, tuple(x), tuple(q))


@dataclass(frozen=True)
class AffineExpansion:
    """p(x + q n) = sum_i sum_{|i|=i} c_i(x) q^i n^i, with c_i polynomials in x."""

    direction: Tuple[int, ...]
    coefficients: Mapping[MultiIndex, MultiPolynomial]
    degree: int

    def degree_part(self, i: int) -> MultiPolynomial:
        """sum over |index| = i of c_index(x) q^index, a polynomial in x."""
        arity = len(self.direction)
        part = MultiPolynomial.zero(arity)
        for index, c in self.coefficients.items():
            if sum(index) == i:
                part = part + c.scale(monomial_value(self.direction, index))
        return part

    def fiber(self, x: Sequence[int]) -> MultiPolynomial:
        """The one-variable polynomial n -> p(x + q n)."""
        terms = {(i,): self.degree_part(i).evaluate(x) for i in range(self.degree + 1)}
        return MultiPolynomial(terms, 1)

    def evaluate(self, x: Sequence[int], n: int) -> Scalar:
        return self.fiber(x).evaluate((n,))


def substitute_affine(p: MultiPolynomial, q: Sequence[int]) -> AffineExpansion:
    """Expand p(x + q n) in powers of n with symbolic offset x.

    c_i(x) = sum_{j >= i} beta_j prod_k C(j_k, i_k) x^(j - i), which does not
    depend on q; q enters only through the factor q^i.
    """
    q = tuple(int(v) for v in q)
    if len(q) != p.arity:
        raise ArityError(f"direction {q} has arity {len(q)}, polynomial has {p.arity}")
    mono = convert_basis(p, Basis.MONOMIAL)
    grouped: Dict[MultiIndex, Dict[MultiIndex, Scalar]] = {}
    for j, value in mono.coefficients.items():
        for i in itertools.product(*(range(jk + 1) for jk in j)):
            weight = math.prod(math.comb(jk, ik) for ik, jk in zip(i, j))
            rest = tuple(jk - ik for ik, jk in zip(i, j))
            bucket = grouped.setdefault(i, {})
            bucket[rest] = scalars.add(bucket.get(rest, Fraction(0)), scalars.mul(weight, value))
    coefficients = {
        i: MultiPolynomial(terms, p.arity)
        for i, terms in sorted(grouped.items(), key=lambda kv: (sum(kv[0]), kv[0]))
    }
    coefficients = {i: c for i, c in coefficients.items() if not c.is_zero()}
    return AffineExpansion(direction=q, coefficients=MappingProxyType(coefficients), degree=mono.degree)


def diagonal_restrict(h: MultiPolynomial) -> MultiPolynomial:
    """h^Delta(n) = h(n, n, ..., n) as a one-variable polynomial in h's basis."""
    mono = convert_basis(h, Basis.MONOMIAL)
    terms: Dict[MultiIndex, Scalar] = {}
    for index, value in mono.coefficients.items():
        key = (sum(index),)
        terms[key] = scalars.add(terms.get(key, Fraction(0)), value)
    return convert_basis(MultiPolynomial(terms, 1), h.basis)


def discrete_derivative(f: MultiPolynomial, h: Sequence[int]) -> MultiPolynomial:
    """(d_h f)(n) = f(n + h) - f(n), exact, in f's basis."""
    if len(h) != f.arity:
        raise ArityError(f"step {tuple(h)} has arity {len(h)}, polynomial has {f.arity}")
    return shift(f, h) - f


def unit_vector(j: int, arity: int) -> Tuple[int, ...]:
    return tuple(1 if k == j else 0 for k in range(arity))


def mixed_difference_at_zero(f: MultiPolynomial, steps: Sequence[Sequence[int]]) -> Scalar:
    """(d_{h_1} ... d_{h_k} f)(0)."""
    g = f
    for h in steps:
        g = discrete_derivative(g, h)
    return g.evaluate(zero_index(f.arity))
