"""
Abelian Leibman dichotomy.

For a polynomial phase g on a box, either its Weyl spectrum is small up to
the cutoff, or a multiplier 0 < q <= B(delta) makes q.g smooth:
||q g||_{C-infinity[N]} <= B(delta). When no multiplier is found and some
side N_i is at most B(delta), the small-side alternative is reported
instead; the two-outcome statement fails without it.

The near-constancy lift upgrades "||g(n)|| <= epsilon on a dense set" to a
multiplier Q with ||Q g||_{C-infinity} and ||Q g(0)|| both O(B epsilon).
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils import scalars
from ..utils.errors import ArityError, PreconditionError
from ..utils.scalars import Scalar
from . import certify
from .diophantine import (
    DEFAULT_FAMILY,
    BoundFamily,
    DensityCertificate,
    best_multiplier,
    certify_density,
    iter_frequencies,
    smallest_multiplier_below,
)
from .polyalg import Basis, BoxShape, MultiIndex, MultiPolynomial, convert_basis, smoothness_norm
from .weyl import EquidistributionReport, Phase, PhaseField, combine, components, default_cutoff, test_equidistribution

logger = logging.getLogger(__name__)


class Outcome(str, Enum):
    EQUIDISTRIBUTED = "EQUIDISTRIBUTED_AT_CUTOFF"
    OBSTRUCTION = "OBSTRUCTION"
    SMALL_SIDE = "SMALL_SIDE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ObstructionCertificate:
    """q (times the character ``frequency`` for vector phases) with ||q (frequency.g)||_{C-infinity} small.

    ``per_index`` maps each nonzero binomial index i to N^i ||q coefficient_i||.
    """

    multiplier: int
    frequency: Tuple[int, ...]
    attained: Scalar
    per_index: Dict[MultiIndex, Scalar]
    bound: Scalar
    sides: Tuple[int, ...]
    delta: Fraction
    family: BoundFamily
    strategy: str = "best"

    @property
    def character(self) -> Tuple[int, ...]:
        return tuple(self.multiplier * v for v in self.frequency)

    def to_document(self) -> Dict[str, Any]:
        fmt = scalars.format_scalar
        return {
            "multiplier": self.multiplier,
            "frequency": list(self.frequency),
            "attained": fmt(self.attained),
            "per_index": [{"index": list(i), "value": fmt(v)} for i, v in self.per_index.items()],
            "bound": fmt(self.bound),
            "sides": list(self.sides),
            "delta": fmt(self.delta),
            "family": self.family.to_document(),
            "strategy": self.strategy,
        }

    @classmethod
    def from_document(cls, document: Dict[str, Any]) -> "ObstructionCertificate":
        parse = scalars.parse_scalar
        family = document["family"]
        return cls(
            multiplier=int(document["multiplier"]),
            frequency=tuple(int(v) for v in document["frequency"]),
            attained=parse(document["attained"]),
            per_index={tuple(e["index"]): parse(e["value"]) for e in document["per_index"]},
            bound=parse(document["bound"]),
            sides=tuple(int(n) for n in document["sides"]),
            delta=scalars.parameter(document["delta"]),
            family=BoundFamily(Fraction(family["A"]), int(family["C"])),
            strategy=document.get("strategy", "best"),
        )


@dataclass(frozen=True)
class DichotomyReport:
    outcome: Outcome
    delta: Fraction
    family: BoundFamily
    bound: Fraction
    weyl: Optional[EquidistributionReport] = None
    certificate: Optional[ObstructionCertificate] = None
    small_side: Optional[int] = None
    tried: Dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.outcome is not Outcome.INCONCLUSIVE

    def to_document(self) -> Dict[str, Any]:
        return {
            "outcome": self.outcome.value,
            "delta": scalars.format_scalar(self.delta),
            "family": self.family.to_document(),
            "bound": scalars.format_scalar(self.bound),
            "weyl": self.weyl.to_document(include_spectrum=False) if self.weyl else None,
            "certificate": self.certificate.to_document() if self.certificate else None,
            "small_side": self.small_side,
            "tried": self.tried,
        }


def _nonconstant(f: MultiPolynomial) -> List[Tuple[MultiIndex, Scalar]]:
    binom = convert_basis(f, Basis.BINOMIAL)
    return [(i, a) for i, a in binom.coefficients.items() if sum(i) > 0]


def _certificate(
    f: MultiPolynomial, q: int, frequency: Tuple[int, ...], box: BoxShape,
    B: Fraction, delta: Fraction, family: BoundFamily, strategy: str,
) -> Optional[ObstructionCertificate]:
    scaled = convert_basis(f.scale(q), Basis.BINOMIAL)
    per_index = {
        i: scalars.mul(box.power(i), scalars.circle_norm(a)) for i, a in _nonconstant(scaled)
    }
    attained = smoothness_norm(scaled, box).value
    if not scalars.le(attained, B):
        return None
    return ObstructionCertificate(q, frequency, attained, per_index, B, box.sides, delta, family, strategy)


def scalar_obstruction(
    f: MultiPolynomial,
    box: BoxShape,
    delta: Fraction,
    family: BoundFamily,
    frequency: Tuple[int, ...] = (1,),
    exhaustive_limit: int = 1_000_000,
) -> Optional[ObstructionCertificate]:
    """Multiplier search for one scalar phase, composed index by index.

    First each nonzero index takes its best multiplier up to B; then, if the
    composed multiplier misses the bound, each index takes the smallest
    multiplier meeting its own target B / N^i. Per-index multipliers are
    combined by lcm in degree-then-lexicographic index order.
    """
    B = family.value(delta)
    cap = family.multiplier_cap(delta)
    terms = _nonconstant(f)
    if not terms:
        return _certificate(f, 1, frequency, box, B, delta, family, "constant")

    factors = []
    for index, alpha in terms:
        found = best_multiplier(alpha, cap, exhaustive_limit)
        logger.debug(f"Index {index}: best q = {found.q}, ||q alpha|| = {scalars.format_scalar(found.value)}")
        factors.append(found.q)
    q = math.lcm(*factors)
    if q <= cap:
        cert = _certificate(f, q, frequency, box, B, delta, family, "best")
        if cert is not None:
            return cert

    factors = []
    for index, alpha in terms:
        found = smallest_multiplier_below(alpha, cap, B / box.power(index))
        if found is None:
            logger.debug(f"Index {index}: no q <= {cap} meets the target {B / box.power(index)}")
            return None
        factors.append(found.q)
    q = math.lcm(*factors)
    if q <= cap:
        return _certificate(f, q, frequency, box, B, delta, family, "smallest")
    return None


def torus_dichotomy(
    g: Phase,
    box: BoxShape,
    delta: Scalar,
    family: BoundFamily = DEFAULT_FAMILY,
    cutoff: Optional[int] = None,
    assume_failure: bool = False,
    exhaustive_limit: int = 1_000_000,
) -> DichotomyReport:
    """Equidistributed at the cutoff, or an obstruction, or a small side.

    With ``assume_failure`` the Weyl test is skipped and the obstruction
    search runs directly. For a vector phase the search runs over characters
    eta up to the cutoff (the Weyl witness first) and certifies the scalar
    phase (q eta).g with |q eta|_inf <= B.
    """
    delta = scalars.parameter(delta)
    if not 0 < delta < Fraction(1, 2):
        raise PreconditionError(f"delta must lie in (0, 1/2), got {delta}")
    parts = components(g)
    if parts[0].arity != box.arity:
        raise ArityError(f"phase arity {parts[0].arity} does not match box arity {box.arity}")
    K = cutoff if cutoff is not None else default_cutoff(delta)
    B = family.value(delta)
    cap = family.multiplier_cap(delta)
    tried: Dict[str, Any] = {"cutoff": K, "family": str(family), "multiplier_cap": cap}

    weyl = None
    if not assume_failure:
        weyl = test_equidistribution(g, box, delta, K)
        if not weyl.fails:
            return DichotomyReport(Outcome.EQUIDISTRIBUTED, delta, family, B, weyl, tried=tried)

    certificate = None
    if len(parts) == 1:
        certificate = scalar_obstruction(parts[0], box, delta, family, (1,), exhaustive_limit)
    else:
        candidates: List[Tuple[int, ...]] = []
        if weyl is not None and weyl.witness is not None:
            candidates.append(weyl.witness)
        characters = 0
        for eta in [*candidates, *iter_frequencies(len(parts), K)]:
            characters += 1
            if characters > 1 and eta in candidates:
                continue
            cert = scalar_obstruction(combine(parts, eta), box, delta, family, eta, exhaustive_limit)
            if cert is not None and max(abs(v) for v in cert.character) <= cap:
                certificate = cert
                break
        tried["characters"] = characters

    if certificate is not None:
        logger.info(f"Obstruction on {box}: q = {certificate.multiplier}, ||q g|| = {scalars.format_scalar(certificate.attained)}")
        return DichotomyReport(Outcome.OBSTRUCTION, delta, family, B, weyl, certificate, tried=tried)

    for i, N in enumerate(box.sides):
        if N <= B:
            logger.info(f"No multiplier up to {cap}; side N_{i + 1} = {N} <= B = {float(B):.2f}")
            return DichotomyReport(Outcome.SMALL_SIDE, delta, family, B, weyl, small_side=i + 1, tried=tried)

    logger.info(f"Torus dichotomy inconclusive at family {family}")
    return DichotomyReport(Outcome.INCONCLUSIVE, delta, family, B, weyl, tried=tried)


def check_certificate(cert: ObstructionCertificate, g: Phase, box: BoxShape) -> bool:
    """Recompute every inequality of the certificate through the independent checker."""
    return certify.check_obstruction(cert, components(g), box)


# ---------------------------------------------------------------------------
# Near-constancy lift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiftOutcome:
    """Q with ||Q g||_{C-infinity} <= B epsilon and ||Q g(0)|| <= B epsilon."""

    certified: bool
    Q: int
    common: int
    dilations: int
    class_size: int
    factors: Dict[MultiIndex, int]
    attained_norm: Scalar
    attained_constant: Scalar
    bound: Scalar
    family: BoundFamily
    density: DensityCertificate

    def to_document(self) -> Dict[str, Any]:
        fmt = scalars.format_scalar
        return {
            "certified": self.certified,
            "Q": self.Q,
            "common": self.common,
            "dilations": self.dilations,
            "class_size": self.class_size,
            "factors": [{"index": list(i), "q": q} for i, q in self.factors.items()],
            "attained_norm": fmt(self.attained_norm),
            "attained_constant": fmt(self.attained_constant),
            "bound": fmt(self.bound),
            "family": self.family.to_document(),
            "density": self.density.to_document(),
        }


def near_constant_lift(
    g: MultiPolynomial,
    box: BoxShape,
    epsilon: Scalar,
    delta: Scalar,
    witnesses: Optional[Iterable[Sequence[int]]] = None,
    family: BoundFamily = DEFAULT_FAMILY,
    density_limit: int = 10_000_000,
    samples: int = 20_000,
    seed: int = 0,
) -> LiftOutcome:
    """Lift "||g(n)|| <= epsilon for delta N_1...N_t values of n" to a multiplier Q.

    None of the dilates lambda g, 1 <= lambda <= delta/(2 epsilon), is
    equidistributed, so each has an obstruction q_lambda; the most common
    q_lambda (smallest on ties) is kept. Each binomial coefficient of q g,
    constant term included, then takes the smallest multiplier q_i bringing
    it within epsilon B / N^i, and Q = q lcm(q_i).
    """
    delta = scalars.parameter(delta)
    epsilon = scalars.parameter(epsilon)
    if not 0 < delta <= 1:
        raise PreconditionError(f"delta must lie in (0, 1], got {delta}")
    if not 0 < epsilon < delta / 10:
        raise PreconditionError(f"epsilon must lie in (0, delta/10) = (0, {delta / 10}), got {epsilon}")
    if g.arity != box.arity:
        raise ArityError(f"polynomial arity {g.arity} does not match box arity {box.arity}")

    field_ = PhaseField(g)

    def predicate(n: Tuple[int, ...]) -> bool:
        return scalars.le(scalars.circle_norm(g.evaluate(n)), epsilon)

    def screen(points: np.ndarray) -> np.ndarray:
        x = field_.phases(points)
        return float(epsilon) - np.minimum(x, 1.0 - x)

    required = delta * math.prod(box.sides)
    density, _ = certify_density(box, required, predicate, witnesses, screen, density_limit, samples, seed)

    B = family.value(delta)
    cap = family.multiplier_cap(delta)
    bound = B * epsilon
    dilations = max(1, math.floor(delta / (2 * epsilon)))
    found: List[int] = []
    for lam in range(1, dilations + 1):
        cert = scalar_obstruction(g.scale(lam), box, delta, family)
        if cert is not None:
            found.append(cert.multiplier)
    if not found:
        logger.info(f"No dilate of g up to {dilations} has an obstruction at family {family}")
        return LiftOutcome(False, 0, 0, dilations, 0, {}, Fraction(0), Fraction(0), bound, family, density)

    counts = Counter(found)
    q, class_size = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    logger.debug(f"Pigeonholed q = {q} shared by {class_size} of {dilations} dilates")

    binom = convert_basis(g.scale(q), Basis.BINOMIAL)
    factors: Dict[MultiIndex, int] = {}
    for index, alpha in binom.coefficients.items():
        target = scalars.mul(bound, Fraction(1, box.power(index)))
        step = smallest_multiplier_below(alpha, cap, target)
        if step is None:
            logger.info(f"Index {index}: no multiplier up to {cap} reaches {scalars.format_scalar(target)}")
            return LiftOutcome(False, q, q, dilations, class_size, factors, Fraction(0), Fraction(0), bound, family, density)
        factors[index] = step.q

    Q = q * math.lcm(1, *factors.values())
    lifted = g.scale(Q)
    attained_norm = smoothness_norm(lifted, box).value
    attained_constant = scalars.circle_norm(lifted.evaluate((0,) * g.arity))
    certified = scalars.le(attained_norm, bound) and scalars.le(attained_constant, bound)
    logger.info(
        f"Near-constancy lift: Q = {Q}, ||Qg|| = {scalars.format_scalar(attained_norm)}, "
        f"||Qg(0)|| = {scalars.format_scalar(attained_constant)}, bound {scalars.format_scalar(bound)}"
    )
    return LiftOutcome(
        certified, Q, q, dilations, class_size, factors, attained_norm, attained_constant, bound, family, density
    )
