"""
Equal-sides pipeline: progression covers and coefficient extraction.

A polynomial phase on [N]^t is restricted to one-parameter progressions
n -> x + q n of length floor(N / L^2) with directions q in {0..L-1}^t. If
the phase is far from equidistributed, a positive share of these fibers
is too. Each fiber phase, grouped by degree in n, mixes the Taylor
coefficients c_i(x) with weights q^i. With enough directions the vectors
(q^i)_i span Q^I, and an integer combination of the fiber data isolates a
multiple of each single coefficient.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy

from ..utils import scalars
from ..utils.errors import ArityError, PreconditionError, ValidationError
from ..utils.scalars import Scalar
from ..utils.workers import WorkerPool
from .polyalg import (
    BoxShape,
    MultiIndex,
    MultiPolynomial,
    index_set,
    monomial_value,
    substitute_affine,
)
from .weyl import Phase, components, default_cutoff, test_equidistribution

logger = logging.getLogger(__name__)

DIRECTION_LIMIT = 10_000
DIRECTION_SAMPLES = 256
ROW_LIMIT = 1_000_000

Direction = Tuple[int, ...]


# ---------------------------------------------------------------------------
# Progression cover audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberRow:
    direction: Direction
    offset: Tuple[int, ...]
    fails: bool
    witness: Optional[Tuple[int, ...]]
    magnitude: Optional[float]
    inside: bool

    def to_row(self) -> Dict[str, Any]:
        return {
            "q": " ".join(str(v) for v in self.direction),
            "x": " ".join(str(v) for v in self.offset),
            "verdict": "FAILS" if self.fails else "EQUIDISTRIBUTED_AT_CUTOFF",
            "witness": " ".join(str(v) for v in self.witness) if self.witness else "",
            "magnitude": "" if self.magnitude is None else f"{self.magnitude:.12f}",
            "inside": int(self.inside),
        }


@dataclass(frozen=True)
class ProgressionCover:
    """Fiber verdicts for sampled (direction, offset) pairs on [N]^t."""

    N: int
    L: int
    arity: int
    fiber_length: int
    delta: Fraction
    cutoff: int
    directions_enumerated: bool
    offsets_enumerated: bool
    rows: Tuple[FiberRow, ...] = field(repr=False)

    @property
    def failing(self) -> int:
        return sum(1 for r in self.rows if r.fails)

    @property
    def fraction(self) -> float:
        return self.failing / len(self.rows) if self.rows else 0.0

    @property
    def quarter_delta(self) -> float:
        return float(self.delta) / 4

    @property
    def meets_quarter_delta(self) -> bool:
        return self.fraction >= self.quarter_delta

    def to_document(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "L": self.L,
            "arity": self.arity,
            "fiber_length": self.fiber_length,
            "delta": scalars.format_scalar(self.delta),
            "fiber_delta": scalars.format_scalar(self.delta / 2),
            "cutoff": self.cutoff,
            "directions_enumerated": self.directions_enumerated,
            "offsets_enumerated": self.offsets_enumerated,
            "fibers": len(self.rows),
            "failing": self.failing,
            "fraction": self.fraction,
            "quarter_delta": self.quarter_delta,
            "meets_quarter_delta": self.meets_quarter_delta,
        }


def cover_directions(arity: int, L: int, rng: np.random.Generator) -> Tuple[List[Direction], bool]:
    """All of {0..L-1}^t without 0 when that is at most 10^4 vectors, else a seeded sample."""
    if L**arity <= DIRECTION_LIMIT:
        directions = [q for q in itertools.product(range(L), repeat=arity) if any(q)]
        return directions, True
    directions: List[Direction] = []
    while len(directions) < DIRECTION_SAMPLES:
        q = tuple(int(v) for v in rng.integers(0, L, size=arity))
        if any(q):
            directions.append(q)
    return directions, False


def fiber_phase(expansions: Sequence, offset: Sequence[int]) -> Tuple[MultiPolynomial, ...]:
    """n -> g(x + q n) for every component, from the degree-grouped expansion."""
    return tuple(e.fiber(offset) for e in expansions)


def _audit_direction(item) -> List[FiberRow]:
    parts, q, offsets, N, M, delta, K = item
    expansions = [substitute_affine(p, q) for p in parts]
    fiber_box = BoxShape((M,))
    rows = []
    for x in offsets:
        report = test_equidistribution(fiber_phase(expansions, x), fiber_box, delta, K)
        inside = all(xi + qi * M <= N for xi, qi in zip(x, q))
        rows.append(FiberRow(q, x, report.fails, report.witness, report.witness_magnitude, inside))
    return rows


def progression_cover_audit(
    g: Phase,
    N: int,
    L: int,
    delta: Scalar,
    cutoff: Optional[int] = None,
    cover_constant: Scalar = 1,
    seed: int = 0,
    offset_samples: int = 64,
    workers: Optional[int] = None,
) -> ProgressionCover:
    """Share of fibers n -> g(x + q n), n in [floor(N/L^2)], that fail at level delta/2.

    Offsets range over [N]^t; they are enumerated when the number of
    (direction, offset) rows is at most 10^6 and sampled (``offset_samples``
    per direction, seeded) otherwise.
    """
    parts = components(g)
    arity = parts[0].arity
    delta = scalars.parameter(delta)
    cover_constant = scalars.parameter(cover_constant)
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if N <= L * L:
        raise PreconditionError(f"progression covers need N > L^2, got N = {N}, L = {L}")
    if L <= cover_constant / delta:
        raise PreconditionError(f"progression covers need L > C/delta = {float(cover_constant / delta):.3f}, got L = {L}")

    K = cutoff if cutoff is not None else default_cutoff(delta / 2)
    M = N // (L * L)
    rng = np.random.default_rng(seed)
    directions, directions_enumerated = cover_directions(arity, L, rng)

    offsets_enumerated = len(directions) * N**arity <= ROW_LIMIT
    items = []
    for q in directions:
        if offsets_enumerated:
            offsets = list(itertools.product(range(1, N + 1), repeat=arity))
        else:
            drawn = rng.integers(1, N + 1, size=(offset_samples, arity))
            offsets = [tuple(int(v) for v in row) for row in drawn]
        items.append((parts, q, offsets, N, M, delta / 2, K))

    logger.info(
        f"Cover audit: {len(directions)} directions, fiber length {M}, "
        f"{'all' if offsets_enumerated else offset_samples} offsets each, cutoff {K}"
    )
    rows = [row for chunk in WorkerPool(workers).map(_audit_direction, items) for row in chunk]
    cover = ProgressionCover(N, L, arity, M, delta, K, directions_enumerated, offsets_enumerated, tuple(rows))
    logger.info(f"Failing fraction {cover.fraction:.4f} against delta/4 = {cover.quarter_delta:.4f}")
    return cover


# ---------------------------------------------------------------------------
# Vandermonde spanning and extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpanCheck:
    spanning: bool
    rank: int
    indices: Tuple[MultiIndex, ...]
    subset: Tuple[Direction, ...]

    def to_document(self) -> Dict[str, Any]:
        return {
            "spanning": self.spanning,
            "rank": self.rank,
            "index_count": len(self.indices),
            "subset": [list(q) for q in self.subset],
        }


def _vandermonde(directions: Sequence[Direction], indices: Sequence[MultiIndex]) -> sympy.Matrix:
    return sympy.Matrix(
        [[monomial_value(q, i) for q in directions] for i in indices]
    )


def vandermonde_span_check(directions: Sequence[Sequence[int]], degree: int) -> SpanCheck:
    """Do the vectors (q^i)_{|i| <= d} span Q^I? Returns a maximal independent subset."""
    directions = [tuple(int(v) for v in q) for q in directions]
    if not directions:
        raise ValidationError("need at least one direction")
    arity = len(directions[0])
    if any(len(q) != arity for q in directions):
        raise ArityError("all directions must have the same arity")
    indices = tuple(index_set(arity, degree))
    _, pivots = _vandermonde(directions, indices).rref()
    subset = tuple(directions[c] for c in pivots)
    spanning = len(pivots) == len(indices)
    logger.debug(f"Rank {len(pivots)} of {len(indices)} from {len(directions)} directions")
    return SpanCheck(spanning, len(pivots), indices, subset)


@dataclass(frozen=True)
class ExtractionSystem:
    """sum_m gamma'_m q_m^j = Q~ 1_{j = target} for every j in the index set."""

    indices: Tuple[MultiIndex, ...]
    directions: Tuple[Direction, ...]
    target: MultiIndex
    gamma: Tuple[Fraction, ...]
    Q_tilde: int
    gamma_prime: Tuple[int, ...]
    denominator_product: int

    @property
    def gamma_height(self) -> int:
        return max(max(abs(g.numerator), g.denominator) for g in self.gamma)

    @property
    def weight(self) -> int:
        """sum_m |gamma'_m|."""
        return sum(abs(g) for g in self.gamma_prime)

    def verify(self) -> bool:
        for j in self.indices:
            value = sum(g * monomial_value(q, j) for g, q in zip(self.gamma_prime, self.directions))
            if value != (self.Q_tilde if j == self.target else 0):
                return False
        return True

    def rescaled(self, Q_tilde: int) -> "ExtractionSystem":
        if Q_tilde % self.Q_tilde:
            raise ValidationError(f"{Q_tilde} is not a multiple of {self.Q_tilde}")
        factor = Q_tilde // self.Q_tilde
        return ExtractionSystem(
            self.indices, self.directions, self.target, self.gamma, Q_tilde,
            tuple(g * factor for g in self.gamma_prime), self.denominator_product,
        )

    def to_document(self) -> Dict[str, Any]:
        return {
            "target": list(self.target),
            "directions": [list(q) for q in self.directions],
            "gamma": [scalars.format_scalar(g) for g in self.gamma],
            "Q_tilde": self.Q_tilde,
            "gamma_prime": list(self.gamma_prime),
            "denominator_product": self.denominator_product,
            "gamma_height": self.gamma_height,
            "weight": self.weight,
            "verified": self.verify(),
        }


def build_extraction(subset: Sequence[Sequence[int]], target: Sequence[int], degree: int) -> ExtractionSystem:
    """Solve sum_m gamma_m q_m^j = 1_{j = target} exactly and clear denominators."""
    directions = tuple(tuple(int(v) for v in q) for q in subset)
    target = tuple(int(v) for v in target)
    arity = len(target)
    indices = tuple(index_set(arity, degree))
    if target not in indices:
        raise ValidationError(f"target {target} is not in the index set of degree {degree}")
    if len(directions) != len(indices):
        raise PreconditionError(f"need exactly {len(indices)} directions, got {len(directions)}")
    V = _vandermonde(directions, indices)
    if V.rank() != len(indices):
        raise PreconditionError("the selected directions do not span Q^I")
    rhs = sympy.Matrix([1 if i == target else 0 for i in indices])
    solution = V.LUsolve(rhs)
    gamma = tuple(Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in solution)
    Q_tilde = math.lcm(1, *(g.denominator for g in gamma))
    product = math.prod(g.denominator for g in gamma)
    system = ExtractionSystem(
        indices, directions, target, gamma, Q_tilde,
        tuple(int(g * Q_tilde) for g in gamma), product,
    )
    if not system.verify():
        raise RuntimeError(f"extraction identity failed for target {target}")
    logger.debug(f"Target {target}: Q~ = {Q_tilde}, gamma' = {system.gamma_prime}")
    return system


def build_extractions(subset: Sequence[Sequence[int]], degree: int) -> Dict[MultiIndex, ExtractionSystem]:
    """Extraction systems for every target, rescaled to one shared Q~ (the lcm over targets)."""
    arity = len(subset[0])
    systems = {i: build_extraction(subset, i, degree) for i in index_set(arity, degree)}
    shared = math.lcm(*(s.Q_tilde for s in systems.values()))
    logger.info(f"Shared extraction multiplier Q~ = {shared} over {len(systems)} targets")
    return {i: s.rescaled(shared) for i, s in systems.items()}


@dataclass(frozen=True)
class CoefficientBound:
    """||Q~ c_target||_{R/Z} <= bound, with the recovered value Q~ c_target mod 1."""

    target: MultiIndex
    value: Scalar
    bound: Scalar

    def to_document(self) -> Dict[str, Any]:
        return {
            "target": list(self.target),
            "value": scalars.format_scalar(self.value),
            "bound": scalars.format_scalar(self.bound),
        }


Observations = Mapping[Direction, Mapping[int, Tuple[Scalar, Scalar]]]


def extract_coefficient_bounds(system: ExtractionSystem, observations: Observations) -> CoefficientBound:
    """Combine per-direction degree data (value v_{m,i}, bound b_{m,i}) with the integers gamma'.

    value = sum_m gamma'_m v_{m,|target|}, bound = sum_m |gamma'_m| b_{m,|target|}.
    """
    degree = sum(system.target)
    value: Scalar = Fraction(0)
    bound: Scalar = Fraction(0)
    for g, q in zip(system.gamma_prime, system.directions):
        if q not in observations or degree not in observations[q]:
            raise ValidationError(f"no observation of degree {degree} for direction {q}")
        v, b = observations[q][degree]
        value = scalars.add(value, scalars.mul(g, v))
        bound = scalars.add(bound, scalars.mul(abs(g), b))
    return CoefficientBound(system.target, scalars.signed_frac(value), bound)


def plant_observations(
    p: MultiPolynomial, directions: Sequence[Sequence[int]], degree: Optional[int] = None
) -> Dict[Direction, Dict[int, Tuple[Scalar, Scalar]]]:
    """Degree-grouped fiber data of p at offset 0, with the circle norm as bound."""
    observations: Dict[Direction, Dict[int, Tuple[Scalar, Scalar]]] = {}
    origin = (0,) * p.arity
    for q in directions:
        q = tuple(int(v) for v in q)
        expansion = substitute_affine(p, q)
        observations[q] = {}
        for i in range((expansion.degree if degree is None else degree) + 1):
            v = expansion.degree_part(i).evaluate(origin)
            observations[q][i] = (v, scalars.circle_norm(v))
    return observations
