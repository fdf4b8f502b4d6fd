"""
Step-2 nilpotent groups in Mal'cev coordinates.

A group spec fixes an abelian dimension a, a central dimension c and a
bilinear map B : R^a x R^a -> R^c with integer coefficients. Elements are
pairs x = (u, z) with u in R^a, z in R^c, and

    (u, z)(u', z') = (u + u', z + z' + B(u, u')).

The lattice Gamma is the set of integer points. Specs with a nonzero
bracket use the lower central filtration (G_2 = {u = 0}); torus specs
(c = 0) use the degree filtration, where every G_i is the whole group.

Polynomial sequences are held as coordinate polynomials n -> (U(n), Z(n)).
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np

from ..utils import scalars
from ..utils.errors import NotNormalizedError, SpecMismatchError, ValidationError
from ..utils.scalars import Scalar
from .diophantine import DEFAULT_FAMILY, BoundFamily
from .leibman import DichotomyReport, ObstructionCertificate, Outcome, scalar_obstruction, torus_dichotomy
from .polyalg import (
    Basis,
    BoxShape,
    MultiIndex,
    MultiPolynomial,
    convert_basis,
    index_set,
    smoothness_norm,
    unit_vector,
    zero_index,
)
from .weyl import combine, default_cutoff

logger = logging.getLogger(__name__)

LOWER_CENTRAL = "lower-central"
DEGREE = "degree"
VERTICAL_POINTS = 20_000

BracketTerm = Tuple[int, int, int, int]


# ---------------------------------------------------------------------------
# Group specs and elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NilGroupSpec:
    """Step-2 group: B(u, u')_k = sum of coeff * u_i * u'_j over bracket terms (k, i, j, coeff)."""

    name: str
    abelian_dim: int
    central_dim: int
    bracket: Tuple[BracketTerm, ...] = ()

    def __post_init__(self):
        if self.abelian_dim < 1 or self.central_dim < 0:
            raise ValidationError(
                f"group spec needs abelian dimension >= 1 and central dimension >= 0, "
                f"got ({self.abelian_dim}, {self.central_dim})"
            )
        terms = tuple(tuple(int(v) for v in term) for term in self.bracket)
        for k, i, j, coeff in terms:
            if not (0 <= k < self.central_dim and 0 <= i < self.abelian_dim and 0 <= j < self.abelian_dim):
                raise ValidationError(f"bracket term {(k, i, j, coeff)} is out of range for spec '{self.name}'")
        object.__setattr__(self, "bracket", terms)

    @classmethod
    def preset(cls, name: str) -> "NilGroupSpec":
        if name == "heisenberg":
            return cls(name, 2, 1, ((0, 0, 1, 1),))
        if name == "heisenberg5":
            return cls(name, 4, 1, ((0, 0, 2, 1), (0, 1, 3, 1)))
        if name == "free-step2-3":
            return cls(name, 3, 3, ((0, 0, 1, 1), (1, 0, 2, 1), (2, 1, 2, 1)))
        match = re.fullmatch(r"torus:(\d+)", name)
        if match:
            return cls(name, int(match.group(1)), 0)
        raise ValidationError(f"unknown group preset '{name}' (heisenberg, heisenberg5, free-step2-3, torus:<m>)")

    @property
    def dimension(self) -> int:
        return self.abelian_dim + self.central_dim

    @property
    def horizontal_dim(self) -> int:
        return self.abelian_dim

    @property
    def filtration(self) -> str:
        return LOWER_CENTRAL if self.bracket else DEGREE

    def form(self, u, v) -> Tuple[Scalar, ...]:
        """B(u, v) on scalars."""
        out: List[Scalar] = [Fraction(0)] * self.central_dim
        for k, i, j, coeff in self.bracket:
            out[k] = scalars.add(out[k], scalars.mul(coeff, scalars.mul(u[i], v[j])))
        return tuple(out)

    def form_poly(self, U: Sequence[MultiPolynomial], V: Sequence[MultiPolynomial], arity: int) -> Tuple[MultiPolynomial, ...]:
        """B(U, V) on coordinate polynomials."""
        out = [MultiPolynomial.zero(arity) for _ in range(self.central_dim)]
        for k, i, j, coeff in self.bracket:
            out[k] = out[k] + (U[i] * V[j]).scale(coeff)
        return tuple(out)

    def to_document(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "abelian": self.abelian_dim,
            "central": self.central_dim,
            "bracket": [list(t) for t in self.bracket],
            "filtration": self.filtration,
        }


@dataclass(frozen=True)
class NilElement:
    spec: NilGroupSpec
    u: Tuple[Scalar, ...]
    z: Tuple[Scalar, ...]

    def __post_init__(self):
        u = tuple(scalars.lift(x) for x in self.u)
        z = tuple(scalars.lift(x) for x in self.z)
        if len(u) != self.spec.abelian_dim or len(z) != self.spec.central_dim:
            raise ValidationError(
                f"element of '{self.spec.name}' needs {self.spec.abelian_dim}+{self.spec.central_dim} "
                f"coordinates, got {len(u)}+{len(z)}"
            )
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_coordinates(cls, spec: NilGroupSpec, coordinates: Sequence[Scalar]) -> "NilElement":
        coordinates = tuple(coordinates)
        if len(coordinates) != spec.dimension:
            raise ValidationError(f"'{spec.name}' has dimension {spec.dimension}, got {len(coordinates)} coordinates")
        return cls(spec, coordinates[: spec.abelian_dim], coordinates[spec.abelian_dim:])

    @property
    def coordinates(self) -> Tuple[Scalar, ...]:
        return self.u + self.z

    def is_identity(self) -> bool:
        return all(scalars.is_zero(x) for x in self.coordinates)

    def in_lattice(self) -> bool:
        return all(scalars.is_exact(x) and Fraction(x).denominator == 1 for x in self.coordinates)

    def in_G2(self) -> bool:
        if self.spec.filtration == DEGREE:
            return True
        return all(scalars.is_zero(x) for x in self.u)

    def __mul__(self, other: "NilElement") -> "NilElement":
        return multiply(self, other)

    def __str__(self) -> str:
        return "(" + ", ".join(scalars.format_scalar(x) for x in self.coordinates) + ")"


def identity(spec: NilGroupSpec) -> NilElement:
    return NilElement(spec, (0,) * spec.abelian_dim, (0,) * spec.central_dim)


def _same_spec(a: NilElement, b: NilElement) -> None:
    if a.spec != b.spec:
        raise SpecMismatchError(f"cannot combine elements of '{a.spec.name}' and '{b.spec.name}'")


def multiply(a: NilElement, b: NilElement) -> NilElement:
    _same_spec(a, b)
    cross = a.spec.form(a.u, b.u)
    return NilElement(
        a.spec,
        tuple(scalars.add(x, y) for x, y in zip(a.u, b.u)),
        tuple(scalars.add(scalars.add(x, y), w) for x, y, w in zip(a.z, b.z, cross)),
    )


def inverse(a: NilElement) -> NilElement:
    """(u, z)^-1 = (-u, -z + B(u, u))."""
    square = a.spec.form(a.u, a.u)
    return NilElement(
        a.spec,
        tuple(scalars.mul(-1, x) for x in a.u),
        tuple(scalars.sub(w, x) for x, w in zip(a.z, square)),
    )


def power(a: NilElement, n: int) -> NilElement:
    """x^n = (n u, n z + C(n, 2) B(u, u)) for every integer n."""
    square = a.spec.form(a.u, a.u)
    pairs = Fraction(n * (n - 1), 2)
    return NilElement(
        a.spec,
        tuple(scalars.mul(n, x) for x in a.u),
        tuple(scalars.add(scalars.mul(n, x), scalars.mul(pairs, w)) for x, w in zip(a.z, square)),
    )


def commutator(a: NilElement, b: NilElement) -> NilElement:
    """[a, b] = a b a^-1 b^-1 = (0, B(a, b) - B(b, a))."""
    _same_spec(a, b)
    return multiply(multiply(a, b), multiply(inverse(a), inverse(b)))


def frac_int_factor(x: NilElement) -> Tuple[NilElement, NilElement]:
    """x = {x}[x] with [x] in Gamma and every coordinate of {x} in [0, 1)."""
    a = tuple(scalars.floor_int(v) for v in x.u)
    v = tuple(scalars.sub(ui, ai) for ui, ai in zip(x.u, a))
    cross = x.spec.form(v, a)
    w = tuple(scalars.floor_int(scalars.sub(zk, ck)) for zk, ck in zip(x.z, cross))
    s = tuple(scalars.sub(scalars.sub(zk, wk), ck) for zk, wk, ck in zip(x.z, w, cross))
    return NilElement(x.spec, v, s), NilElement(x.spec, a, w)


# ---------------------------------------------------------------------------
# Polynomial sequences
# ---------------------------------------------------------------------------


Coordinates = Tuple[Tuple[MultiPolynomial, ...], Tuple[MultiPolynomial, ...]]


def _constant_coordinates(x: NilElement, arity: int) -> Coordinates:
    return (
        tuple(MultiPolynomial.constant(v, arity) for v in x.u),
        tuple(MultiPolynomial.constant(v, arity) for v in x.z),
    )


def _multiply_coordinates(spec: NilGroupSpec, left: Coordinates, right: Coordinates, arity: int) -> Coordinates:
    cross = spec.form_poly(left[0], right[0], arity)
    return (
        tuple(x + y for x, y in zip(left[0], right[0])),
        tuple(x + y + w for x, y, w in zip(left[1], right[1], cross)),
    )


def _power_coordinates(x: NilElement, exponent: MultiPolynomial) -> Coordinates:
    """n -> x^{P(n)} for an integer-valued polynomial P."""
    square = x.spec.form(x.u, x.u)
    pairs = (exponent * exponent - exponent).scale(Fraction(1, 2))
    return (
        tuple(exponent.scale(v) for v in x.u),
        tuple(exponent.scale(v) + pairs.scale(w) for v, w in zip(x.z, square)),
    )


def _binomial_monomial(index: MultiIndex) -> MultiPolynomial:
    """n -> C(n, index) in the monomial basis."""
    return convert_basis(MultiPolynomial({index: 1}, len(index), Basis.BINOMIAL), Basis.MONOMIAL)


class NilSequence:
    """Polynomial sequence n -> g(n) in a step-2 group, as coordinate polynomials."""

    def __init__(self, spec: NilGroupSpec, U: Sequence[MultiPolynomial], Z: Sequence[MultiPolynomial], arity: int):
        U = tuple(convert_basis(p, Basis.MONOMIAL) for p in U)
        Z = tuple(convert_basis(p, Basis.MONOMIAL) for p in Z)
        if len(U) != spec.abelian_dim or len(Z) != spec.central_dim:
            raise ValidationError(f"sequence in '{spec.name}' needs {spec.abelian_dim}+{spec.central_dim} coordinate polynomials")
        if any(p.arity != arity for p in U + Z):
            raise ValidationError(f"all coordinate polynomials must have arity {arity}")
        self.spec = spec
        self.U = U
        self.Z = Z
        self.arity = arity

    @classmethod
    def from_taylor(cls, spec: NilGroupSpec, elements: Mapping[MultiIndex, NilElement], arity: int) -> "NilSequence":
        """g(n) = prod over j (degree, then lexicographic) of g_j^{C(n, j)}.

        Under the lower central filtration the elements with |j| >= 2 must be central.
        """
        coordinates = _constant_coordinates(identity(spec), arity)
        for index in sorted(elements, key=lambda i: (sum(i), i)):
            x = elements[index]
            if x.spec != spec:
                raise SpecMismatchError(f"Taylor element {index} belongs to '{x.spec.name}', not '{spec.name}'")
            if len(index) != arity:
                raise ValidationError(f"Taylor index {index} does not have arity {arity}")
            if sum(index) >= 2 and not x.in_G2():
                raise ValidationError(f"Taylor element {index} of degree {sum(index)} must lie in G_2 = [G, G]")
            factor = _power_coordinates(x, _binomial_monomial(tuple(index)))
            coordinates = _multiply_coordinates(spec, coordinates, factor, arity)
        return cls(spec, coordinates[0], coordinates[1], arity)

    @classmethod
    def linear(cls, spec: NilGroupSpec, generators: Sequence[NilElement]) -> "NilSequence":
        """n -> a_1^{n_1} ... a_t^{n_t}."""
        arity = len(generators)
        coordinates = _constant_coordinates(identity(spec), arity)
        for i, a in enumerate(generators):
            factor = _power_coordinates(a, MultiPolynomial.variable(i, arity))
            coordinates = _multiply_coordinates(spec, coordinates, factor, arity)
        return cls(spec, coordinates[0], coordinates[1], arity)

    @property
    def coordinates(self) -> Coordinates:
        return self.U, self.Z

    @property
    def degree(self) -> int:
        return max((p.degree for p in self.U + self.Z), default=0)

    def evaluate(self, n: Sequence[int]) -> NilElement:
        return NilElement(self.spec, tuple(p.evaluate(n) for p in self.U), tuple(p.evaluate(n) for p in self.Z))

    __call__ = evaluate

    def _times(self, other: Coordinates) -> "NilSequence":
        U, Z = _multiply_coordinates(self.spec, self.coordinates, other, self.arity)
        return NilSequence(self.spec, U, Z, self.arity)

    def left_translate(self, x: NilElement) -> "NilSequence":
        """n -> x g(n)."""
        U, Z = _multiply_coordinates(self.spec, _constant_coordinates(x, self.arity), self.coordinates, self.arity)
        return NilSequence(self.spec, U, Z, self.arity)

    def times_power(self, x: NilElement, i: int) -> "NilSequence":
        """n -> g(n) x^{n_i}."""
        return self._times(_power_coordinates(x, MultiPolynomial.variable(i, self.arity)))

    def inverse(self) -> "NilSequence":
        square = self.spec.form_poly(self.U, self.U, self.arity)
        return NilSequence(self.spec, tuple(-p for p in self.U), tuple(w - p for p, w in zip(self.Z, square)), self.arity)

    def times(self, other: "NilSequence") -> "NilSequence":
        if other.spec != self.spec:
            raise SpecMismatchError(f"cannot multiply sequences in '{self.spec.name}' and '{other.spec.name}'")
        return self._times(other.coordinates)

    def is_normalized(self) -> bool:
        return self.evaluate(zero_index(self.arity)).is_identity()

    def to_taylor(self) -> Dict[MultiIndex, NilElement]:
        """Taylor elements g_j with g = prod g_j^{C(n, j)} in from_taylor's order."""
        spec, t = self.spec, self.arity
        origin = self.evaluate(zero_index(t))
        elements: Dict[MultiIndex, NilElement] = {zero_index(t): origin}
        linear = _constant_coordinates(origin, t)
        start_inverse = inverse(origin)
        for index in index_set(t, 1)[1:]:
            j = index.index(1)
            g_j = multiply(start_inverse, self.evaluate(unit_vector(j, t)))
            elements[index] = g_j
            linear = _multiply_coordinates(spec, linear, _power_coordinates(g_j, MultiPolynomial.variable(j, t)), t)
        remainder = NilSequence(spec, *linear, t).inverse().times(self)
        if spec.filtration == LOWER_CENTRAL and any(not p.is_zero() for p in remainder.U):
            raise ValidationError("sequence is not polynomial for the lower central filtration")
        U = [convert_basis(p, Basis.BINOMIAL) for p in remainder.U]
        Z = [convert_basis(p, Basis.BINOMIAL) for p in remainder.Z]
        for index in index_set(t, self.degree):
            if sum(index) < 2:
                continue
            element = NilElement(spec, tuple(p.coefficient(index) for p in U), tuple(p.coefficient(index) for p in Z))
            if not element.is_identity():
                elements[index] = element
        return elements

    def normalize(self) -> "NilSequence":
        """g(0)^-1 g(n) [g'(e_1)]^-n_1 ... [g'(e_t)]^-n_t with g' = g(0)^-1 g.

        The result starts at the identity, has every coordinate of g~(e_i) in
        [0, 1) and traces the same orbit in G/Gamma up to a left translation.
        """
        shifted = self.left_translate(inverse(self.evaluate(zero_index(self.arity))))
        result = shifted
        for i in range(self.arity):
            _, integral = frac_int_factor(shifted.evaluate(unit_vector(i, self.arity)))
            result = result.times_power(inverse(integral), i)
        return result

    def horizontal(self) -> Tuple[MultiPolynomial, ...]:
        """pi o g: the abelian coordinates as polynomials into R^{m_ab}."""
        return self.U

    def to_document(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.name,
            "arity": self.arity,
            "taylor": [
                {"index": list(i), "coordinates": [scalars.format_scalar(x) for x in e.coordinates]}
                for i, e in self.to_taylor().items()
            ],
        }


def linear_nonlinear_split(g: NilSequence) -> Tuple[NilSequence, NilSequence]:
    """g_lin(n) = g(e_1)^{n_1} ... g(e_t)^{n_t} and g_nonlin = g g_lin^-1."""
    if not g.is_normalized():
        raise NotNormalizedError("linear/nonlinear split needs g(0) = id; normalize the sequence first")
    lin = NilSequence.linear(g.spec, [g.evaluate(unit_vector(i, g.arity)) for i in range(g.arity)])
    nonlin = g.times(lin.inverse())
    return lin, nonlin


# ---------------------------------------------------------------------------
# Characters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HorizontalCharacter:
    """eta(u, z) = eta . u mod 1; kills G_2 and Gamma."""

    eta: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(int(v) for v in self.eta))

    @property
    def norm(self) -> int:
        return max((abs(v) for v in self.eta), default=0)

    def apply(self, x: NilElement) -> Scalar:
        if len(self.eta) != x.spec.abelian_dim:
            raise ValidationError(f"character of length {len(self.eta)} on '{x.spec.name}'")
        return scalars.frac(scalars.total(scalars.mul(e, v) for e, v in zip(self.eta, x.u)))

    def compose(self, g: NilSequence) -> MultiPolynomial:
        """eta o g as a polynomial into R/Z."""
        return combine(g.U, self.eta)


@dataclass(frozen=True)
class BilinearityReport:
    samples: int
    identity_holds: int
    bilinear_holds: int
    antisymmetric_holds: int

    @property
    def passed(self) -> bool:
        return self.identity_holds == self.bilinear_holds == self.antisymmetric_holds == self.samples

    def to_document(self) -> Dict[str, Any]:
        return {
            "samples": self.samples,
            "identity_holds": self.identity_holds,
            "bilinear_holds": self.bilinear_holds,
            "antisymmetric_holds": self.antisymmetric_holds,
            "passed": self.passed,
        }


def _random_element(spec: NilGroupSpec, rng: np.random.Generator, denominator: int = 12) -> NilElement:
    values = [Fraction(int(rng.integers(-4 * denominator, 4 * denominator + 1)), denominator) for _ in range(spec.dimension)]
    return NilElement.from_coordinates(spec, values)


def bracket_bilinearity_check(spec: NilGroupSpec, k: Sequence[int], samples: int = 100, seed: int = 0) -> BilinearityReport:
    """Check eta_2(abcd) = eta_2(acbd) + eta_2([b, c]) and bilinearity of (b, c) -> eta_2([b, c]).

    eta_2 = k . z is a character of G_2; d is chosen so that abcd lies in G_2.
    """
    k = tuple(int(v) for v in k)
    if len(k) != spec.central_dim:
        raise ValidationError(f"vertical character needs {spec.central_dim} entries, got {len(k)}")
    rng = np.random.default_rng(seed)

    def eta2(x: NilElement) -> Scalar:
        return scalars.frac(scalars.total(scalars.mul(kl, v) for kl, v in zip(k, x.z)))

    identity_ok = bilinear_ok = antisymmetric_ok = 0
    for _ in range(samples):
        a, b, c, b2 = (_random_element(spec, rng) for _ in range(4))
        d_u = tuple(-(x + y + w) for x, y, w in zip(a.u, b.u, c.u))
        d = NilElement(spec, d_u, _random_element(spec, rng).z)
        abcd = a * b * c * d
        acbd = a * c * b * d
        if any(abcd.u) or any(acbd.u):
            raise RuntimeError("abcd left G_2")
        if eta2(abcd) == scalars.frac(scalars.add(eta2(acbd), eta2(commutator(b, c)))):
            identity_ok += 1
        lhs = eta2(commutator(b * b2, c))
        rhs = scalars.frac(scalars.add(eta2(commutator(b, c)), eta2(commutator(b2, c))))
        if lhs == rhs:
            bilinear_ok += 1
        if scalars.frac(scalars.add(eta2(commutator(b, c)), eta2(commutator(c, b)))) == 0 and eta2(commutator(b, b)) == 0:
            antisymmetric_ok += 1
    report = BilinearityReport(samples, identity_ok, bilinear_ok, antisymmetric_ok)
    logger.info(f"Bracket bilinearity on '{spec.name}': {report.to_document()}")
    return report


# ---------------------------------------------------------------------------
# Three-way dichotomy on the nilmanifold
# ---------------------------------------------------------------------------


class NilVerdictKind(str, Enum):
    EQUIDISTRIBUTED_AT_CUTOFF = "EQUIDISTRIBUTED_AT_CUTOFF"
    OBSTRUCTION = "OBSTRUCTION"
    SMALL_SIDE = "SMALL_SIDE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class NilVerdict:
    verdict: NilVerdictKind
    equal_sides: bool
    character: Optional[Tuple[int, ...]] = None
    norm: Optional[Scalar] = None
    certificate: Optional[ObstructionCertificate] = None
    small_side: Optional[int] = None
    horizontal: Optional[DichotomyReport] = None
    composed: Optional[MultiPolynomial] = None
    vertical: Tuple[float, ...] = ()
    vertical_sampled: bool = False
    tried: Dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict is not NilVerdictKind.INCONCLUSIVE

    @property
    def small_side_on_equal_sides(self) -> bool:
        return self.verdict is NilVerdictKind.SMALL_SIDE and self.equal_sides

    def to_document(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "equal_sides": self.equal_sides,
            "small_side_on_equal_sides": self.small_side_on_equal_sides,
            "character": list(self.character) if self.character else None,
            "norm": scalars.format_scalar(self.norm) if self.norm is not None else None,
            "character_norm": HorizontalCharacter(self.character).norm if self.character else None,
            "certificate": self.certificate.to_document() if self.certificate else None,
            "small_side": self.small_side,
            "horizontal": self.horizontal.to_document() if self.horizontal else None,
            "vertical": list(self.vertical),
            "vertical_sampled": self.vertical_sampled,
            "tried": self.tried,
        }


def vertical_averages(g: NilSequence, box: BoxShape, frequencies: int, seed: int = 0) -> Tuple[Tuple[float, ...], bool]:
    """|E_n e(xi z_l({g(n)}))| for xi = 1..frequencies and each central coordinate l.

    Boxes with more than VERTICAL_POINTS points are sampled with a seeded generator.
    """
    if g.spec.central_dim == 0 or frequencies < 1:
        return (), False
    sampled = box.cardinality > VERTICAL_POINTS
    if sampled:
        points = [tuple(int(v) for v in row) for row in box.sample_points(np.random.default_rng(seed), VERTICAL_POINTS)]
    else:
        points = list(box.points())
    sums = [[mpmath.mpc(0)] * frequencies for _ in range(g.spec.central_dim)]
    for n in points:
        fractional, _ = frac_int_factor(g.evaluate(n))
        for l, z in enumerate(fractional.z):
            angle = scalars.to_mpf(z)
            for xi in range(1, frequencies + 1):
                sums[l][xi - 1] += mpmath.expjpi(2 * xi * angle)
    count = len(points)
    return tuple(float(abs(s) / count) for row in sums for s in row), sampled


def _obstruction(
    g: NilSequence,
    box: BoxShape,
    eta: HorizontalCharacter,
    cert: ObstructionCertificate,
    equal: bool,
    **common: Any,
) -> NilVerdict:
    composed = eta.compose(g)
    norm = smoothness_norm(composed, box).value
    logger.debug(f"Character {eta.eta} of norm {eta.norm}: ||eta o g|| = {scalars.format_scalar(norm)}")
    return NilVerdict(NilVerdictKind.OBSTRUCTION, equal, eta.eta, norm, cert, composed=composed, **common)


def nil_dichotomy(
    g: NilSequence,
    box: BoxShape,
    delta: Scalar,
    family: BoundFamily = DEFAULT_FAMILY,
    cutoff: Optional[int] = None,
    vertical_samples: int = 4,
    seed: int = 0,
) -> NilVerdict:
    """Equidistributed at the cutoff, a horizontal obstruction, or a small side.

    The sequence is normalized first. A constant horizontal projection is an
    obstruction at once. Otherwise the abelian dichotomy runs on pi o g; when
    that passes, vertical averages over the central coordinates are sampled,
    and a failure there sends the horizontal projection to the obstruction
    search directly.
    """
    delta = scalars.parameter(delta)
    if g.arity != box.arity:
        raise ValidationError(f"sequence arity {g.arity} does not match box arity {box.arity}")
    K = cutoff if cutoff is not None else default_cutoff(delta)
    normalized = g.normalize()
    U = normalized.horizontal()
    equal = box.equal_sides
    tried: Dict[str, Any] = {"cutoff": K, "family": str(family), "vertical_samples": vertical_samples}

    if all(scalars.is_zero(smoothness_norm(p, box).value) for p in U):
        eta = HorizontalCharacter(unit_vector(0, len(U)))
        cert = scalar_obstruction(eta.compose(normalized), box, delta, family, eta.eta)
        logger.info("Horizontal projection is constant mod 1: obstruction by a unit character")
        return _obstruction(normalized, box, eta, cert, equal, tried=tried)

    report = torus_dichotomy(U, box, delta, family, K)
    vertical: Tuple[float, ...] = ()
    sampled = False
    if report.outcome is Outcome.EQUIDISTRIBUTED:
        vertical, sampled = vertical_averages(normalized, box, vertical_samples, seed)
        if not any(v > float(delta) for v in vertical):
            return NilVerdict(
                NilVerdictKind.EQUIDISTRIBUTED_AT_CUTOFF, equal, horizontal=report,
                vertical=vertical, vertical_sampled=sampled, tried=tried,
            )
        logger.info("Horizontal test passed but a vertical average exceeds delta; searching for an obstruction")
        report = torus_dichotomy(U, box, delta, family, K, assume_failure=True)

    common = dict(horizontal=report, vertical=vertical, vertical_sampled=sampled, tried=tried)
    if report.outcome is Outcome.OBSTRUCTION:
        eta = HorizontalCharacter(report.certificate.character)
        return _obstruction(normalized, box, eta, report.certificate, equal, **common)
    if report.outcome is Outcome.SMALL_SIDE:
        if equal:
            logger.warning("Small-side verdict on an equal-sides box")
        return NilVerdict(NilVerdictKind.SMALL_SIDE, equal, small_side=report.small_side, **common)
    return NilVerdict(NilVerdictKind.INCONCLUSIVE, equal, **common)
