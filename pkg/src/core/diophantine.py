"""
Constructive Diophantine searches.

Everything here turns an "there exists a small multiplier / frequency"
statement into a search with an explicit bound family B(delta) = A*delta^-C:

* best and smallest multipliers on R/Z through continued-fraction convergents,
* frequency searches k in Z^m with ||k.gamma_j|| <= bound_j, exhaustive by
  max-norm shells, with an LLL-reduced lattice supplying a search radius
  for m > 3,
* density certification of "for at least delta N_1...N_t values" hypotheses,
* the interval-hitting solver, the bracket-form proposition solver and the
  two-pass bracket-form dichotomy.
"""

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils import scalars
from ..utils.errors import ArityError, DensityError, PreconditionError, ValidationError
from ..utils.scalars import Scalar
from .polyalg import BoxShape

logger = logging.getLogger(__name__)

Point = Tuple[int, ...]

FLOAT_TOLERANCE = 1e-9
FREQUENCY_BUDGET = 4_000_000
BLOCK_POINTS = 1 << 18
DEFAULT_GRID_CONSTANT = Fraction(1, 40)


# ---------------------------------------------------------------------------
# Bound families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundFamily:
    """The bound function B(delta) = A * delta^-C standing in for delta^-O(1)."""

    A: Fraction
    C: int

    def __post_init__(self):
        A = Fraction(self.A)
        C = int(self.C)
        if A <= 0 or C < 0:
            raise ValidationError(f"bound family needs A > 0 and C >= 0, got ({A}, {C})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)

    @classmethod
    def parse(cls, text: str) -> "BoundFamily":
        parts = str(text).split(",")
        if len(parts) != 2:
            raise ValidationError(f"bound family must look like 'A,C', got '{text}'")
        try:
            return cls(Fraction(parts[0].strip()), int(parts[1]))
        except ValueError:
            raise ValidationError(f"bound family must look like 'A,C', got '{text}'")

    def value(self, delta: Scalar) -> Fraction:
        return self.A / scalars.parameter(delta) ** self.C

    __call__ = value

    def multiplier_cap(self, delta: Scalar) -> int:
        """Largest admissible |q|, floor(B(delta))."""
        return max(1, math.floor(self.value(delta)))

    @property
    def sort_key(self) -> Tuple[int, Fraction]:
        return (self.C, self.A)

    def within(self, other: "BoundFamily") -> bool:
        return self.sort_key <= other.sort_key

    def __str__(self) -> str:
        return f"{scalars.format_scalar(self.A)},{self.C}"

    def to_document(self) -> Dict[str, Any]:
        return {"A": scalars.format_scalar(self.A), "C": self.C}


DEFAULT_FAMILY = BoundFamily(Fraction(10), 3)

FAMILY_LADDER: Tuple[BoundFamily, ...] = tuple(
    BoundFamily(Fraction(A), C) for C in range(0, 6) for A in (1, 2, 5, 10)
)


@dataclass(frozen=True)
class FamilyMeasurement:
    """Smallest family on the ladder for which a solver certified its outcome."""

    family: Optional[BoundFamily]
    outcome: Any
    tried: Tuple[BoundFamily, ...]

    @property
    def within_default(self) -> bool:
        return self.family is not None and self.family.within(DEFAULT_FAMILY)

    def to_document(self) -> Dict[str, Any]:
        return {
            "family": self.family.to_document() if self.family else None,
            "tried": len(self.tried),
            "within_default": self.within_default,
        }


def measure_family(
    attempt: Callable[[BoundFamily], Any],
    ladder: Sequence[BoundFamily] = FAMILY_LADDER,
) -> FamilyMeasurement:
    """Run ``attempt`` along the ladder and stop at the first certified outcome."""
    tried: List[BoundFamily] = []
    outcome = None
    for family in sorted(ladder, key=lambda f: f.sort_key):
        tried.append(family)
        outcome = attempt(family)
        if outcome is not None and getattr(outcome, "certified", True):
            logger.debug(f"Family {family} certified after {len(tried)} attempt(s)")
            return FamilyMeasurement(family, outcome, tuple(tried))
    return FamilyMeasurement(None, outcome, tuple(tried))


# ---------------------------------------------------------------------------
# Multipliers on R/Z
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiplierResult:
    q: int
    value: Scalar
    method: str = "convergents"


def convergents(x: Fraction) -> Iterator[Tuple[int, int]]:
    """Continued-fraction convergents p/q of a rational x, in order."""
    p_prev, q_prev, p, q = 0, 1, 1, 0
    while True:
        a = math.floor(x)
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        yield p, q
        rest = x - a
        if rest == 0:
            return
        x = 1 / rest


def _convergent_denominators(alpha: Scalar, Q: int) -> List[int]:
    denominators: List[int] = []
    for _, q in convergents(scalars.as_fraction(scalars.frac(alpha))):
        if q > Q:
            break
        if not denominators or q != denominators[-1]:
            denominators.append(q)
    return denominators


def multiple_norm(alpha: Scalar, q: int) -> Scalar:
    """||q alpha||_{R/Z}."""
    return scalars.circle_norm(scalars.mul(q, alpha))


def best_multiplier(alpha: Scalar, Q: int, exhaustive_limit: int = 1_000_000) -> MultiplierResult:
    """The q in [1, Q] minimizing ||q alpha||_{R/Z} (smallest such q on ties).

    The minimizer is a convergent denominator. When alpha is real and two
    candidates are closer than the rounding of q*alpha can resolve, the
    answer is settled by an exhaustive scan (only for Q <= exhaustive_limit).
    """
    if Q < 1:
        raise ValidationError(f"Q must be >= 1, got {Q}")
    alpha = scalars.lift(alpha)
    candidates = [(multiple_norm(alpha, q), q) for q in _convergent_denominators(alpha, Q)]
    best_value, best_q = candidates[0]
    for value, q in candidates[1:]:
        if scalars.lt(value, best_value):
            best_value, best_q = value, q

    if not scalars.is_exact(alpha):
        resolution = scalars.mul(Q, scalars.error_bound(alpha))
        ambiguous = any(
            q != best_q and scalars.lt(scalars.absolute(scalars.sub(value, best_value)), scalars.mul(2, resolution))
            for value, q in candidates
        )
        if ambiguous and Q <= exhaustive_limit:
            logger.warning(f"Convergent candidates within rounding of each other; scanning q <= {Q}")
            for q in range(1, Q + 1):
                value = multiple_norm(alpha, q)
                if scalars.lt(value, best_value):
                    best_value, best_q = value, q
            return MultiplierResult(best_q, best_value, "exhaustive")

    return MultiplierResult(best_q, best_value)


def smallest_multiplier_below(alpha: Scalar, Q: int, target: Scalar) -> Optional[MultiplierResult]:
    """Smallest q in [1, Q] with ||q alpha||_{R/Z} <= target, or None.

    Convergent denominators are the record holders of ||q alpha||, so the
    first convergent meeting the target is the smallest multiplier meeting it.
    """
    if Q < 1:
        raise ValidationError(f"Q must be >= 1, got {Q}")
    alpha = scalars.lift(alpha)
    for q in _convergent_denominators(alpha, Q):
        value = multiple_norm(alpha, q)
        if scalars.le(value, target):
            return MultiplierResult(q, value)
    return None


def multiplier_norm(alpha: Scalar, Q: int) -> Scalar:
    """min over 1 <= q <= Q of ||q alpha||_{R/Z}."""
    return best_multiplier(alpha, Q).value


# ---------------------------------------------------------------------------
# Frequency enumeration
# ---------------------------------------------------------------------------


def frequency_count(m: int, K: int) -> int:
    """Number of frequencies up to sign with 0 < |k|_inf <= K."""
    return ((2 * K + 1) ** m - 1) // 2


def frequency_cutoff(m: int, bound: Scalar, budget: int = FREQUENCY_BUDGET) -> int:
    """min(floor(bound), largest K whose shell enumeration fits the budget)."""
    K = max(1, scalars.floor_int(bound))
    limit = max(1, int(((2 * budget + 1) ** (1.0 / m) - 1) // 2))
    return min(K, limit)


def _full_grid(m: int, r: int) -> np.ndarray:
    axis = np.arange(-r, r + 1, dtype=np.int64)
    grid = np.meshgrid(*([axis] * m), indexing="ij")
    return np.stack([g.reshape(-1) for g in grid], axis=1)


def _mask(block: np.ndarray, r: int, mode: str) -> np.ndarray:
    if mode == "any":
        return np.ones(len(block), dtype=bool)
    mask = np.abs(block).max(axis=1) == r
    if mode == "positive":
        first = np.argmax(block != 0, axis=1)
        mask &= block[np.arange(len(block)), first] > 0
    return mask


def _shell_blocks(m: int, r: int, mode: str) -> Iterator[np.ndarray]:
    """Vectors of [-r, r]^m in lexicographic order.

    mode "any" keeps all of them, "exact" those of max-norm r, "positive"
    those of max-norm r whose first nonzero entry is positive.
    """
    if (2 * r + 1) ** m <= BLOCK_POINTS or m == 1:
        block = _full_grid(m, r)
        yield block[_mask(block, r, mode)]
        return
    for a in range(-r, r + 1):
        if mode == "positive" and a < 0:
            continue
        if mode == "any":
            child = "any"
        elif mode == "exact":
            child = "any" if abs(a) == r else "exact"
        else:
            child = "positive" if a == 0 else ("any" if a == r else "exact")
        for rest in _shell_blocks(m - 1, r, child):
            if len(rest):
                head = np.full((len(rest), 1), a, dtype=np.int64)
                yield np.hstack([head, rest])


def iter_frequency_blocks(m: int, K: int, start: int = 1) -> Iterator[np.ndarray]:
    """Frequencies up to sign, by max-norm shell then lexicographically."""
    for r in range(start, K + 1):
        yield from _shell_blocks(m, r, "positive")


def iter_frequencies(m: int, K: int) -> Iterator[Tuple[int, ...]]:
    for block in iter_frequency_blocks(m, K):
        for row in block:
            yield tuple(int(v) for v in row)


def canonical_sign(k: Sequence[int]) -> Tuple[int, ...]:
    """Representative of {k, -k} whose first nonzero entry is positive."""
    for v in k:
        if v:
            return tuple(int(x) for x in k) if v > 0 else tuple(-int(x) for x in k)
    return tuple(int(x) for x in k)


# ---------------------------------------------------------------------------
# Lattice reduction
# ---------------------------------------------------------------------------


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _gram_schmidt(basis: List[List[Fraction]]) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
    n = len(basis)
    ortho: List[List[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i, row in enumerate(basis):
        v = list(row)
        for j in range(i):
            norm = _dot(ortho[j], ortho[j])
            mu[i][j] = _dot(row, ortho[j]) / norm if norm else Fraction(0)
            v = [vi - mu[i][j] * oj for vi, oj in zip(v, ortho[j])]
        ortho.append(v)
    return ortho, mu


def lll_reduce(basis: Sequence[Sequence[Fraction]], delta: Fraction = Fraction(3, 4)) -> List[List[Fraction]]:
    """LLL-reduce a basis of rational row vectors (exact arithmetic)."""
    b = [[Fraction(x) for x in row] for row in basis]
    n = len(b)
    if n < 2:
        return b
    ortho, mu = _gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            c = round(mu[k][j])
            if c:
                b[k] = [x - c * y for x, y in zip(b[k], b[j])]
                ortho, mu = _gram_schmidt(b)
        lhs = _dot(ortho[k], ortho[k])
        rhs = (delta - mu[k][k - 1] ** 2) * _dot(ortho[k - 1], ortho[k - 1])
        if lhs >= rhs:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            ortho, mu = _gram_schmidt(b)
            k = max(k - 1, 1)
    return b


# ---------------------------------------------------------------------------
# Frequency (Weyl obstruction) search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusVector:
    """A point of R^m / Z^m, entries reduced to [0, 1)."""

    entries: Tuple[Scalar, ...]

    def __post_init__(self):
        entries = tuple(scalars.frac(scalars.lift(x)) for x in self.entries)
        if not entries:
            raise ValidationError("torus vectors need at least one entry")
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return len(self.entries)

    def dot(self, k: Sequence[int]) -> Scalar:
        return scalars.total(scalars.mul(int(kl), g) for kl, g in zip(k, self.entries))

    def scaled(self, q: int) -> "TorusVector":
        return TorusVector(tuple(scalars.mul(q, g) for g in self.entries))

    def extended(self, value: Scalar) -> "TorusVector":
        return TorusVector(self.entries + (value,))

    def __len__(self) -> int:
        return len(self.entries)


def as_torus_vectors(gammas: Sequence[Union[TorusVector, Sequence[Scalar]]]) -> Tuple[TorusVector, ...]:
    vectors = tuple(g if isinstance(g, TorusVector) else TorusVector(tuple(g)) for g in gammas)
    if not vectors:
        raise ValidationError("need at least one gamma vector")
    if len({v.m for v in vectors}) != 1:
        raise ArityError("all gamma vectors must have the same dimension m")
    return vectors


@dataclass(frozen=True)
class FrequencySearch:
    """Outcome of a frequency search; ``frequency`` is None when none exists up to the cutoff."""

    frequency: Optional[Tuple[int, ...]]
    attained: Tuple[Scalar, ...]
    bounds: Tuple[Scalar, ...]
    cutoff: int
    coverage: int
    method: str

    @property
    def found(self) -> bool:
        return self.frequency is not None

    def to_document(self) -> Dict[str, Any]:
        return {
            "frequency": list(self.frequency) if self.frequency else None,
            "attained": [scalars.format_scalar(v) for v in self.attained],
            "bounds": [scalars.format_scalar(v) for v in self.bounds],
            "cutoff": self.cutoff,
            "coverage": self.coverage,
            "method": self.method,
        }


def _frequency_norms(gammas: Sequence[TorusVector], k: Sequence[int]) -> Tuple[Scalar, ...]:
    return tuple(scalars.circle_norm(g.dot(k)) for g in gammas)


def _lattice_radius(
    gammas: Sequence[TorusVector], bounds: Sequence[Scalar], K: int
) -> Optional[int]:
    """Max-norm of the shortest valid frequency among the rows of an LLL-reduced basis.

    Row vectors encode (k / K, (k.gamma_j + p_j) / bound_j); a frequency meeting
    every condition gives a vector with all entries of size at most one.
    """
    m, t = gammas[0].m, len(gammas)
    scale = [
        1 / max(scalars.as_fraction(b), Fraction(1, 1 << 40)) for b in bounds
    ]
    rows: List[List[Fraction]] = []
    for l in range(m):
        row = [Fraction(1, K) if c == l else Fraction(0) for c in range(m)]
        row += [
            scalars.as_fraction(gammas[j].entries[l]).limit_denominator(1 << 48) * scale[j]
            for j in range(t)
        ]
        rows.append(row)
    for j in range(t):
        rows.append([Fraction(0)] * m + [scale[j] if c == j else Fraction(0) for c in range(t)])

    best: Optional[int] = None
    for row in lll_reduce(rows):
        k = canonical_sign([round(row[l] * K) for l in range(m)])
        radius = max(abs(v) for v in k)
        if radius == 0 or radius > K:
            continue
        if all(scalars.le(v, b) for v, b in zip(_frequency_norms(gammas, k), bounds)):
            best = radius if best is None else min(best, radius)
    return best


def weyl_obstruction_search(
    gammas: Sequence[Union[TorusVector, Sequence[Scalar]]],
    K: int,
    bound_fn: Union[Callable[[int], Scalar], Sequence[Scalar]],
    lattice_dimension: int = 3,
) -> FrequencySearch:
    """Smallest nonzero k, |k|_inf <= K, with ||k.gamma_j|| <= bound_fn(j) for every j.

    Frequencies are compared up to sign and ordered by max-norm, then
    lexicographically. The search is an exhaustive shell enumeration; above
    ``lattice_dimension`` an LLL-reduced basis first supplies a valid
    frequency whose max-norm caps the enumeration.
    """
    if K < 1:
        raise ValidationError(f"frequency cutoff must be >= 1, got {K}")
    vectors = as_torus_vectors(gammas)
    m, t = vectors[0].m, len(vectors)
    if callable(bound_fn):
        bounds = tuple(scalars.lift(bound_fn(j)) for j in range(t))
    else:
        bounds = tuple(scalars.lift(b) for b in bound_fn)
    if len(bounds) != t:
        raise ArityError(f"expected {t} bounds, got {len(bounds)}")

    radius = K
    method = "exhaustive"
    if m > lattice_dimension:
        found = _lattice_radius(vectors, bounds, K)
        if found is not None:
            radius = found
            method = "lattice"
        logger.debug(f"Lattice reduction capped the search radius at {radius}")

    matrix = np.array(
        [[scalars.to_float(g.entries[l]) for g in vectors] for l in range(m)], dtype=np.float64
    )
    float_bounds = np.array([scalars.to_float(b) for b in bounds]) + FLOAT_TOLERANCE

    coverage = 0
    for block in iter_frequency_blocks(m, radius):
        phases = block @ matrix
        norms = np.abs(phases - np.rint(phases))
        candidates = np.nonzero(np.all(norms <= float_bounds, axis=1))[0]
        for row in candidates:
            k = tuple(int(v) for v in block[row])
            attained = _frequency_norms(vectors, k)
            if all(scalars.le(v, b) for v, b in zip(attained, bounds)):
                coverage += int(row) + 1
                logger.debug(f"Frequency {k} found after {coverage} candidates")
                return FrequencySearch(k, attained, bounds, K, coverage, method)
        coverage += len(block)

    expected = frequency_count(m, K)
    if coverage != expected:
        raise RuntimeError(f"frequency enumeration covered {coverage} of {expected} vectors")
    return FrequencySearch(None, (), bounds, K, coverage, method)


# ---------------------------------------------------------------------------
# Density certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityCertificate:
    """How a "for at least `required` values" hypothesis was established."""

    count: int
    required: Fraction
    population: int
    method: str
    heuristic: bool = False
    margin: float = 0.0

    def to_document(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "required": scalars.format_scalar(self.required),
            "population": self.population,
            "method": self.method,
            "heuristic": self.heuristic,
            "margin": self.margin,
        }


def certify_density(
    box: BoxShape,
    required: Scalar,
    predicate: Callable[[Point], bool],
    hits: Optional[Iterable[Sequence[int]]] = None,
    screen: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    limit: int = 10_000_000,
    samples: int = 20_000,
    seed: int = 0,
) -> Tuple[DensityCertificate, List[Point]]:
    """Certify that ``predicate`` holds on at least ``required`` box points.

    Caller-supplied witnesses are checked one by one. Without witnesses the
    box is enumerated when it has at most ``limit`` points; otherwise points
    are sampled and the hypothesis is accepted on a Hoeffding lower bound,
    flagged as heuristic. ``screen`` maps a block of points to float slacks
    (positive: clearly holds, negative: clearly fails); points within the
    float tolerance of zero are decided by the exact predicate.
    """
    required = scalars.lift(required)
    population = box.cardinality

    if hits is not None:
        witnesses = sorted({tuple(int(v) for v in h) for h in hits})
        for h in witnesses:
            if not box.contains(h):
                raise DensityError(f"witness {h} lies outside the box {box}")
            if not predicate(h):
                raise DensityError(f"witness {h} does not satisfy the hypothesis")
        if scalars.lt(len(witnesses), required):
            raise DensityError(
                f"{len(witnesses)} witnesses certify fewer than the required {scalars.format_scalar(required)}"
            )
        return DensityCertificate(len(witnesses), required, population, "witnesses"), witnesses

    def decide(block: np.ndarray) -> List[Point]:
        found: List[Point] = []
        if screen is None:
            for row in block:
                point = tuple(int(v) for v in row)
                if predicate(point):
                    found.append(point)
            return found
        slack = screen(block)
        for row, s in zip(block, slack):
            if s > FLOAT_TOLERANCE:
                found.append(tuple(int(v) for v in row))
            elif s >= -FLOAT_TOLERANCE:
                point = tuple(int(v) for v in row)
                if predicate(point):
                    found.append(point)
        return found

    if population <= limit:
        witnesses: List[Point] = []
        for block in box.point_blocks():
            witnesses.extend(decide(block))
        if scalars.lt(len(witnesses), required):
            raise DensityError(
                f"hypothesis holds on {len(witnesses)} of {population} points, "
                f"fewer than the required {scalars.format_scalar(required)}"
            )
        return DensityCertificate(len(witnesses), required, population, "enumeration"), witnesses

    rng = np.random.default_rng(seed)
    sample = box.sample_points(rng, samples)
    sampled_hits = decide(sample)
    margin = math.sqrt(math.log(1000) / (2 * samples))
    lower = (len(sampled_hits) / samples - margin) * population
    logger.warning(
        f"Density certified by sampling {samples} of {population} points (heuristic, margin {margin:.4f})"
    )
    if lower < scalars.to_float(required):
        raise DensityError(
            f"sampled density lower bound {lower:.1f} is below the required {scalars.format_scalar(required)}"
        )
    witnesses = sorted(set(sampled_hits))
    return (
        DensityCertificate(int(lower), required, population, "sampling", heuristic=True, margin=margin),
        witnesses,
    )


# ---------------------------------------------------------------------------
# Interval-hitting solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalHitOutcome:
    """q = q_1 ... q_t with ||q alpha_j|| <= (q / q_j) * epsilon * B / N_j."""

    certified: bool
    q: int
    factors: Tuple[int, ...]
    attained: Tuple[Scalar, ...]
    bounds: Tuple[Scalar, ...]
    targets: Tuple[Scalar, ...]
    family: BoundFamily
    density: DensityCertificate
    fiber_hits: Tuple[int, ...]

    def to_document(self) -> Dict[str, Any]:
        return {
            "certified": self.certified,
            "q": self.q,
            "factors": list(self.factors),
            "attained": [scalars.format_scalar(v) for v in self.attained],
            "bounds": [scalars.format_scalar(v) for v in self.bounds],
            "targets": [scalars.format_scalar(v) for v in self.targets],
            "family": self.family.to_document(),
            "density": self.density.to_document(),
            "fiber_hits": list(self.fiber_hits),
        }


def linear_value(alphas: Sequence[Scalar], h: Sequence[int]) -> Scalar:
    return scalars.total(scalars.mul(a, int(x)) for a, x in zip(alphas, h))


def _best_fibers(hits: Sequence[Point], t: int) -> Tuple[int, ...]:
    """Per coordinate j, the largest number of hits on a line parallel to e_j."""
    result = []
    for j in range(t):
        lines = Counter(h[:j] + h[j + 1:] for h in hits)
        result.append(max(lines.values(), default=0))
    return tuple(result)


def interval_hit_solver(
    alphas: Sequence[Scalar],
    box: BoxShape,
    epsilon: Scalar,
    delta: Scalar,
    hits: Optional[Iterable[Sequence[int]]] = None,
    center: Scalar = 0,
    family: BoundFamily = DEFAULT_FAMILY,
    density_limit: int = 10_000_000,
    samples: int = 20_000,
    seed: int = 0,
) -> IntervalHitOutcome:
    """Multiplier for a linear form that lands in a short interval on a dense set.

    Hypothesis: alpha.n lies in I = [center - epsilon/2, center + epsilon/2]
    (mod 1) for at least delta N_1 ... N_t points n of the box. The solver
    works one variable at a time: for each j it picks the smallest
    q_j <= B(delta) with ||q_j alpha_j|| <= epsilon B(delta) / N_j and
    returns the product q.
    """
    alphas = tuple(scalars.lift(a) for a in alphas)
    if len(alphas) != box.arity:
        raise ArityError(f"{len(alphas)} coefficients for a box of arity {box.arity}")
    epsilon = scalars.parameter(epsilon) if scalars.is_exact(scalars.lift(epsilon)) else scalars.lift(epsilon)
    delta = scalars.parameter(delta)
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if scalars.lt(scalars.mul(Fraction(1, 2), delta), epsilon):
        raise PreconditionError(
            f"interval length epsilon = {scalars.format_scalar(epsilon)} exceeds delta/2 = {delta / 2}"
        )
    center = scalars.lift(center)
    radius = scalars.mul(Fraction(1, 2), epsilon)

    def predicate(h: Point) -> bool:
        return scalars.le(scalars.circle_norm(scalars.sub(linear_value(alphas, h), center)), radius)

    float_alphas = np.array([scalars.to_float(a) for a in alphas])
    float_center = scalars.to_float(center)
    float_radius = scalars.to_float(radius)

    def screen(points: np.ndarray) -> np.ndarray:
        x = points @ float_alphas - float_center
        return float_radius - np.abs(x - np.rint(x))

    required = delta * math.prod(box.sides)
    density, witnesses = certify_density(
        box, required, predicate, hits, screen, density_limit, samples, seed
    )
    fiber_hits = _best_fibers(witnesses, box.arity)

    B = family.value(delta)
    cap = family.multiplier_cap(delta)
    factors: List[int] = []
    targets: List[Scalar] = []
    for j, (alpha, N) in enumerate(zip(alphas, box.sides)):
        target = scalars.mul(epsilon, B / N)
        targets.append(target)
        found = smallest_multiplier_below(alpha, cap, target)
        if found is None:
            logger.info(f"No multiplier q <= {cap} meets ||q alpha_{j + 1}|| <= {scalars.format_scalar(target)}")
            return IntervalHitOutcome(
                False, 0, tuple(factors), (), (), tuple(targets), family, density, fiber_hits
            )
        logger.debug(f"Coordinate {j + 1}: q_j = {found.q}, ||q_j alpha|| = {scalars.format_scalar(found.value)}")
        factors.append(found.q)

    q = math.prod(factors)
    attained = tuple(multiple_norm(a, q) for a in alphas)
    bounds = tuple(scalars.mul(q // qj, target) for qj, target in zip(factors, targets))
    certified = q <= cap ** box.arity and all(scalars.le(a, b) for a, b in zip(attained, bounds))
    return IntervalHitOutcome(
        certified, q, tuple(factors), attained, bounds, tuple(targets), family, density, fiber_hits
    )


# ---------------------------------------------------------------------------
# Bracket-form instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BracketInstance:
    """Data of the display ||beta + sum_j alpha_j h_j + zeta.{sum_j gamma_j h_j}|| <= 1/(delta N).

    ``zeta`` is a real vector (not reduced mod 1); the ``gammas`` are points of
    the torus R^m/Z^m; h ranges over the symmetric box; ``scale`` is N.
    """

    beta: Scalar
    alphas: Tuple[Scalar, ...]
    zeta: Tuple[Scalar, ...]
    gammas: Tuple[TorusVector, ...]
    box: BoxShape
    delta: Fraction
    scale: Fraction

    def __post_init__(self):
        object.__setattr__(self, "beta", scalars.lift(self.beta))
        object.__setattr__(self, "alphas", tuple(scalars.lift(a) for a in self.alphas))
        object.__setattr__(self, "zeta", tuple(scalars.lift(z) for z in self.zeta))
        object.__setattr__(self, "gammas", as_torus_vectors(self.gammas))
        object.__setattr__(self, "delta", scalars.parameter(self.delta))
        object.__setattr__(self, "scale", scalars.parameter(self.scale))
        if not self.box.symmetric:
            raise ValidationError("bracket instances live on a symmetric box [-N, N]")
        if len(self.alphas) != self.box.arity or len(self.gammas) != self.box.arity:
            raise ArityError(
                f"box arity {self.box.arity} needs as many alphas and gammas, "
                f"got {len(self.alphas)} and {len(self.gammas)}"
            )
        if len(self.zeta) != self.gammas[0].m:
            raise ArityError(f"zeta has {len(self.zeta)} entries, gammas have {self.gammas[0].m}")
        if not 0 < self.delta < Fraction(1, 2):
            raise ValidationError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.scale <= 0:
            raise ValidationError(f"scale N must be positive, got {self.scale}")

    @property
    def m(self) -> int:
        return len(self.zeta)

    @property
    def t(self) -> int:
        return self.box.arity

    @property
    def threshold(self) -> Fraction:
        return 1 / (self.delta * self.scale)

    @property
    def required(self) -> Fraction:
        return self.delta * math.prod(self.box.sides)

    @property
    def zeta_sup(self) -> Scalar:
        return scalars.maximum(scalars.absolute(z) for z in self.zeta)

    def bracket(self, h: Sequence[int]) -> Tuple[Scalar, ...]:
        """{sum_j gamma_j h_j}, componentwise in [0, 1)."""
        return tuple(
            scalars.frac(scalars.total(scalars.mul(g.entries[l], int(x)) for g, x in zip(self.gammas, h)))
            for l in range(self.m)
        )

    def value(self, h: Sequence[int]) -> Scalar:
        bracket = self.bracket(h)
        return scalars.add(
            scalars.add(self.beta, linear_value(self.alphas, h)),
            scalars.total(scalars.mul(z, b) for z, b in zip(self.zeta, bracket)),
        )

    def holds_at(self, h: Sequence[int]) -> bool:
        return scalars.le(scalars.circle_norm(self.value(h)), self.threshold)

    def screen(self, points: np.ndarray) -> np.ndarray:
        gamma = np.array(
            [[scalars.to_float(g.entries[l]) for l in range(self.m)] for g in self.gammas]
        )
        inner = points @ gamma
        near_jump = np.any(np.abs(inner - np.rint(inner)) < FLOAT_TOLERANCE, axis=1)
        bracket = inner - np.floor(inner)
        x = (
            scalars.to_float(self.beta)
            + points @ np.array([scalars.to_float(a) for a in self.alphas])
            + bracket @ np.array([scalars.to_float(z) for z in self.zeta])
        )
        slack = scalars.to_float(self.threshold) - np.abs(x - np.rint(x))
        slack[near_jump] = 0.0
        return slack

    def rescaled(self, k: Sequence[int], r: int) -> "BracketInstance":
        """Multiply the display through by r and move k.{...} into the linear part.

        beta -> r beta, alpha_j -> signed {k.gamma_j + r alpha_j},
        zeta -> r zeta - k, N -> N / r.
        """
        return BracketInstance(
            beta=scalars.mul(r, self.beta),
            alphas=tuple(
                scalars.signed_frac(scalars.add(g.dot(k), scalars.mul(r, a)))
                for g, a in zip(self.gammas, self.alphas)
            ),
            zeta=tuple(scalars.sub(scalars.mul(r, z), kl) for z, kl in zip(self.zeta, k)),
            gammas=self.gammas,
            box=self.box,
            delta=self.delta,
            scale=self.scale / r,
        )

    def augmented(self) -> "BracketInstance":
        """zeta' = (zeta, 1), gamma'_j = (gamma_j, alpha_j), alpha' = 0."""
        return BracketInstance(
            beta=self.beta,
            alphas=tuple(Fraction(0) for _ in self.alphas),
            zeta=self.zeta + (Fraction(1),),
            gammas=tuple(g.extended(a) for g, a in zip(self.gammas, self.alphas)),
            box=self.box,
            delta=self.delta,
            scale=self.scale,
        )

    def to_document(self) -> Dict[str, Any]:
        fmt = scalars.format_scalar
        return {
            "beta": fmt(self.beta),
            "alphas": [fmt(a) for a in self.alphas],
            "zeta": [fmt(z) for z in self.zeta],
            "gammas": [[fmt(x) for x in g.entries] for g in self.gammas],
            "sides": list(self.box.sides),
            "delta": fmt(self.delta),
            "scale": fmt(self.scale),
        }

    @classmethod
    def from_document(cls, document: Dict[str, Any]) -> "BracketInstance":
        parse = scalars.parse_scalar
        return cls(
            beta=parse(document["beta"]),
            alphas=tuple(parse(a) for a in document["alphas"]),
            zeta=tuple(parse(z) for z in document["zeta"]),
            gammas=tuple(TorusVector(tuple(parse(x) for x in g)) for g in document["gammas"]),
            box=BoxShape(tuple(document["sides"]), symmetric=True),
            delta=scalars.parameter(document["delta"]),
            scale=scalars.parameter(document["scale"]),
        )


class Branch(str, Enum):
    SMALL_ZETA = "SMALL_ZETA"
    FREQUENCY = "FREQUENCY"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class GridChoice:
    """The densest grid {a + q n : n in prod [N'_j]} of a split of the box."""

    difference: int
    sides: Tuple[int, ...]
    key: Tuple[Tuple[int, int], ...]
    hits: int
    grids: int

    @property
    def cell_size(self) -> int:
        return math.prod(self.sides)

    @property
    def density(self) -> Fraction:
        """Share of the chosen cell covered by witnesses."""
        return min(Fraction(1), Fraction(self.hits, self.cell_size))

    def to_document(self) -> Dict[str, Any]:
        return {
            "difference": self.difference,
            "sides": list(self.sides),
            "key": [list(k) for k in self.key],
            "hits": self.hits,
            "grids": self.grids,
        }


@dataclass(frozen=True)
class PropositionOutcome:
    """Either sup|zeta_l| <= B/N (SMALL_ZETA) or a frequency k with ||k.gamma_j|| <= B/N_j."""

    branch: Branch
    family: BoundFamily
    step: str
    zeta_sup: Scalar
    zeta_bound: Scalar
    frequency: Optional[Tuple[int, ...]] = None
    attained: Tuple[Scalar, ...] = ()
    bounds: Tuple[Scalar, ...] = ()
    q: int = 1
    interval: Optional[IntervalHitOutcome] = None
    grid: Optional[GridChoice] = None
    density: Optional[DensityCertificate] = None
    witnesses: Tuple[Point, ...] = ()
    cutoffs: Dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.branch is not Branch.INCONCLUSIVE

    def to_document(self) -> Dict[str, Any]:
        fmt = scalars.format_scalar
        return {
            "branch": self.branch.value,
            "family": self.family.to_document(),
            "step": self.step,
            "zeta_sup": fmt(self.zeta_sup),
            "zeta_bound": fmt(self.zeta_bound),
            "frequency": list(self.frequency) if self.frequency else None,
            "attained": [fmt(v) for v in self.attained],
            "bounds": [fmt(v) for v in self.bounds],
            "q": self.q,
            "interval": self.interval.to_document() if self.interval else None,
            "grid": self.grid.to_document() if self.grid else None,
            "density": self.density.to_document() if self.density else None,
            "cutoffs": self.cutoffs,
        }


def _choose_grid(witnesses: Sequence[Point], box: BoxShape, q: int, sides: Sequence[int]) -> GridChoice:
    counts: Dict[Tuple[Tuple[int, int], ...], int] = defaultdict(int)
    for h in witnesses:
        key = []
        for x, N, side in zip(h, box.sides, sides):
            s = x + N
            key.append((s % q, (s // q) // side))
        counts[tuple(key)] += 1
    key, hits = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    grids = 1
    for N, side in zip(box.sides, sides):
        per_residue = -(-(2 * N + 1) // q)
        grids *= min(q, 2 * N + 1) * -(-per_residue // side)
    return GridChoice(q, tuple(sides), key, hits, grids)


def _cell_indices(witnesses: Sequence[Point], box: BoxShape, grid: GridChoice) -> List[Tuple[int, ...]]:
    """Grid coordinates n of the witnesses h = a + q n lying in the chosen cell."""
    q, cell = grid.difference, []
    for h in witnesses:
        shifted = [x + N for x, N in zip(h, box.sides)]
        key = tuple((s % q, (s // q) // side) for s, side in zip(shifted, grid.sides))
        if key == grid.key:
            cell.append(tuple(s // q for s in shifted))
    return cell


def _cell_magnitude(scaled: Sequence[TorusVector], k: Sequence[int], cell: Sequence[Tuple[int, ...]]) -> float:
    """|mean of e(sum_j n_j k.(q gamma_j))| over the cell witnesses."""
    if not cell:
        return 0.0
    slopes = np.array([scalars.to_float(scalars.frac(g.dot(k))) for g in scaled])
    phases = np.asarray(cell, dtype=np.float64) @ slopes
    return float(abs(np.exp(2j * np.pi * phases).mean()))


def bracket_proposition_solver(
    inst: BracketInstance,
    hits: Optional[Iterable[Sequence[int]]] = None,
    family: BoundFamily = DEFAULT_FAMILY,
    grid_constant: Fraction = DEFAULT_GRID_CONSTANT,
    alpha_bounds: Optional[Sequence[Scalar]] = None,
    density_limit: int = 10_000_000,
    samples: int = 20_000,
    seed: int = 0,
) -> PropositionOutcome:
    """Either sup_l |zeta_l| is O(B/N) or some frequency k has every ||k.gamma_j|| <= B/N_j.

    Steps: (a) sup|zeta| <= 1/(delta N) ends at once; (b) a multiplier q
    making the linear part nearly constant along grids, from the interval
    solver when sup|zeta| <= delta/(2(m+1)) and q = 1 otherwise; (c) split
    the box into grids of difference q and sides c delta^(C+1) N_j; (d) keep
    the grid holding the most witnesses; (e) search frequencies k' for the
    gammas scaled by q and report k = q k'. When (e) finds nothing the
    SMALL_ZETA alternative is checked against B/N before giving up.
    """
    B = family.value(inst.delta)
    zeta_sup = inst.zeta_sup
    zeta_bound = B / inst.scale
    cutoffs: Dict[str, Any] = {"family": str(family), "grid_constant": scalars.format_scalar(grid_constant)}

    density, witnesses = certify_density(
        inst.box, inst.required, inst.holds_at, hits, inst.screen, density_limit, samples, seed
    )
    common = dict(family=family, zeta_sup=zeta_sup, zeta_bound=zeta_bound, density=density,
                  witnesses=tuple(witnesses), cutoffs=cutoffs)

    if scalars.le(zeta_sup, inst.threshold) and scalars.le(zeta_sup, zeta_bound):
        logger.debug("sup|zeta| below 1/(delta N): small-zeta branch")
        return PropositionOutcome(Branch.SMALL_ZETA, step="a", **common)

    # (b) multiplier for the linear part
    q = 1
    interval = None
    if alpha_bounds is None:
        alpha_bounds = tuple(1 / (inst.delta * N) for N in inst.box.sides)
    small_linear = all(scalars.le(scalars.absolute(a), b) for a, b in zip(inst.alphas, alpha_bounds))
    if scalars.le(zeta_sup, inst.delta / (2 * (inst.m + 1))):
        spread = scalars.total(scalars.absolute(z) for z in inst.zeta)
        epsilon = scalars.add(2 * inst.threshold, spread)
        center = scalars.sub(
            scalars.mul(-1, inst.beta),
            scalars.mul(Fraction(1, 2), scalars.total(inst.zeta)),
        )
        if scalars.le(epsilon, inst.delta / 2):
            # witnesses of the bracket display satisfy the interval condition
            interval = interval_hit_solver(
                inst.alphas, inst.box, epsilon, inst.delta, witnesses, center, family
            )
            if interval.certified:
                q = interval.q
    elif not small_linear:
        logger.debug("Linear coefficients exceed 1/(delta N_j); continuing with q = 1")
    cutoffs["q"] = q

    # (c), (d) grid split and pigeonhole
    sides = tuple(
        max(1, math.floor(grid_constant * inst.delta ** (family.C + 1) * N)) for N in inst.box.sides
    )
    grid = _choose_grid(witnesses, inst.box, q, sides)
    logger.debug(f"Densest grid {grid.key} holds {grid.hits} witnesses among {grid.grids} grids")

    # (e) frequency search on q * gamma, first within the radius the dense cell calls for
    bounds = tuple(B / N for N in inst.box.sides)
    K = frequency_cutoff(inst.m, B)
    K_cell = min(K, max(1, math.floor(family.value(grid.density))))
    cutoffs["frequency_cutoff"] = K
    cutoffs["cell_cutoff"] = K_cell
    cutoffs["cell_density"] = scalars.format_scalar(grid.density)
    scaled = tuple(g.scaled(q) for g in inst.gammas)
    search = weyl_obstruction_search(scaled, K_cell, bounds)
    cutoffs["route"] = "cell"
    if not search.found and K_cell < K:
        search = weyl_obstruction_search(scaled, K, bounds)
        cutoffs["route"] = "box"
    if search.found:
        cell = _cell_indices(witnesses, inst.box, grid)
        cutoffs["cell_weyl_magnitude"] = round(_cell_magnitude(scaled, search.frequency, cell), 6)
        k = canonical_sign(tuple(q * v for v in search.frequency))
        attained = tuple(scalars.circle_norm(g.dot(k)) for g in inst.gammas)
        return PropositionOutcome(
            Branch.FREQUENCY, step="frequency", frequency=k, attained=attained, bounds=bounds,
            q=q, interval=interval, grid=grid, **common,
        )

    if scalars.le(zeta_sup, zeta_bound):
        return PropositionOutcome(
            Branch.SMALL_ZETA, step="fallback", q=q, interval=interval, grid=grid, **common
        )

    logger.info(f"Bracket proposition inconclusive at family {family} (frequency cutoff {K})")
    return PropositionOutcome(
        Branch.INCONCLUSIVE, step="exhausted", q=q, interval=interval, grid=grid, **common
    )


# ---------------------------------------------------------------------------
# Bracket-form dichotomy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DichotomyOutcome:
    """Branch SMALL_ZETA: ||r zeta_l|| <= bound for all l. Branch FREQUENCY: ||k.gamma_j|| <= B/N_j."""

    branch: Branch
    family: BoundFamily
    multiplier: Optional[int] = None
    frequency: Optional[Tuple[int, ...]] = None
    attained: Tuple[Scalar, ...] = ()
    bounds: Tuple[Scalar, ...] = ()
    first_pass: Optional[PropositionOutcome] = None
    second_pass: Optional[PropositionOutcome] = None
    rescaled: Optional[BracketInstance] = None

    @property
    def certified(self) -> bool:
        return self.branch is not Branch.INCONCLUSIVE

    def to_document(self) -> Dict[str, Any]:
        fmt = scalars.format_scalar
        return {
            "branch": self.branch.value,
            "family": self.family.to_document(),
            "multiplier": self.multiplier,
            "frequency": list(self.frequency) if self.frequency else None,
            "attained": [fmt(v) for v in self.attained],
            "bounds": [fmt(v) for v in self.bounds],
            "first_pass": self.first_pass.to_document() if self.first_pass else None,
            "second_pass": self.second_pass.to_document() if self.second_pass else None,
            "rescaled": self.rescaled.to_document() if self.rescaled else None,
        }


def bracket_dichotomy(
    inst: BracketInstance,
    hits: Optional[Iterable[Sequence[int]]] = None,
    family: BoundFamily = DEFAULT_FAMILY,
    grid_constant: Fraction = DEFAULT_GRID_CONSTANT,
    density_limit: int = 10_000_000,
    samples: int = 20_000,
    seed: int = 0,
) -> DichotomyOutcome:
    """Either some 0 < r <= B has ||r zeta_l|| small for all l, or a frequency k has ||k.gamma_j|| <= B/N_j.

    First pass: the proposition solver on the augmented instance
    zeta' = (zeta, 1), gamma'_j = (gamma_j, alpha_j), alpha' = 0. A frequency
    (k, r) with r = 0 is already the second alternative. Otherwise the
    display is multiplied through by r > 0 and the solver runs again on the
    rescaled instance, whose small-zeta branch gives the first alternative.
    """
    if scalars.lt(1 / inst.delta, inst.zeta_sup):
        raise PreconditionError(
            f"sup|zeta| = {scalars.format_scalar(inst.zeta_sup)} exceeds 1/delta = {1 / inst.delta}"
        )
    options = dict(family=family, grid_constant=grid_constant, density_limit=density_limit,
                   samples=samples, seed=seed)
    B = family.value(inst.delta)
    augmented = inst.augmented()
    first = bracket_proposition_solver(augmented, hits, **options)

    if first.branch is Branch.INCONCLUSIVE:
        return DichotomyOutcome(Branch.INCONCLUSIVE, family, first_pass=first)

    if first.branch is Branch.SMALL_ZETA:
        attained = tuple(scalars.circle_norm(z) for z in inst.zeta)
        return DichotomyOutcome(
            Branch.SMALL_ZETA, family, multiplier=1, attained=attained,
            bounds=tuple(first.zeta_bound for _ in inst.zeta), first_pass=first,
        )

    k, r = first.frequency[:-1], first.frequency[-1]
    if r < 0:
        k, r = tuple(-v for v in k), -r
    if r == 0:
        if not any(k):
            raise RuntimeError("first pass returned the zero frequency")
        attained = tuple(scalars.circle_norm(g.dot(k)) for g in inst.gammas)
        return DichotomyOutcome(
            Branch.FREQUENCY, family, frequency=canonical_sign(k), attained=attained,
            bounds=tuple(B / N for N in inst.box.sides), first_pass=first,
        )

    rescaled = inst.rescaled(k, r)
    logger.debug(f"Rescaling by r = {r}, k = {k}; new scale {rescaled.scale}")
    second = bracket_proposition_solver(
        rescaled, first.witnesses,
        alpha_bounds=tuple(B / N for N in inst.box.sides), **options,
    )
    if second.branch is Branch.SMALL_ZETA:
        attained = tuple(scalars.circle_norm(scalars.mul(r, z)) for z in inst.zeta)
        return DichotomyOutcome(
            Branch.SMALL_ZETA, family, multiplier=r, attained=attained,
            bounds=tuple(second.zeta_bound for _ in inst.zeta),
            first_pass=first, second_pass=second, rescaled=rescaled,
        )
    if second.branch is Branch.FREQUENCY:
        return DichotomyOutcome(
            Branch.FREQUENCY, family, frequency=second.frequency, attained=second.attained,
            bounds=second.bounds, first_pass=first, second_pass=second, rescaled=rescaled,
        )
    return DichotomyOutcome(
        Branch.INCONCLUSIVE, family, first_pass=first, second_pass=second, rescaled=rescaled
    )
