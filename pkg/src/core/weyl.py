"""
Weyl sums and equidistribution testing on tori.

A phase is a polynomial g : Z^t -> R/Z, or a vector of them for the torus
(R/Z)^m. For a frequency k the Weyl sum is the box average of
e(k.g(n)) with e(x) = exp(2 pi i x).

Linear phases use the product of one-dimensional geometric series. All
other phases are summed slab by slab over the first coordinate: rational
phases through exact residues modulo the common denominator, real phases
through 128-bit fixed-point products. Slab sums use compensated summation
and are reduced in slab order, so results do not depend on scheduling.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from ..utils import scalars
from ..utils.errors import ArityError, PreconditionError, ValidationError
from ..utils.scalars import Scalar
from ..utils.workers import WorkerPool
from .diophantine import canonical_sign, frequency_count, iter_frequencies
from .polyalg import Basis, BoxShape, MultiPolynomial, convert_basis

logger = logging.getLogger(__name__)

Phase = Union[MultiPolynomial, Sequence[MultiPolynomial]]

RESIDUE_MODULUS_LIMIT = 1 << 20
SLAB_POINTS = 1 << 16
SLAB_GROUPS = 16
SPECTRUM_CELLS = 1 << 22
SPECTRUM_LIMIT = 1_000_000
DISCREPANCY_POINTS = 1_000_000
DISCREPANCY_CELLS = 10_000
MAX_CUTOFF = 100

_TWO64 = float(1 << 64)


class Verdict(str, Enum):
    EQUIDISTRIBUTED_AT_CUTOFF = "EQUIDISTRIBUTED_AT_CUTOFF"
    FAILS = "FAILS"


def default_cutoff(delta: Scalar) -> int:
    """ceil(delta^-2), capped at 100."""
    delta = scalars.parameter(delta)
    return min(math.ceil(1 / delta**2), MAX_CUTOFF)


def components(g: Phase) -> Tuple[MultiPolynomial, ...]:
    if isinstance(g, MultiPolynomial):
        return (g,)
    parts = tuple(g)
    if not parts:
        raise ValidationError("a phase needs at least one component")
    if len({p.arity for p in parts}) != 1:
        raise ArityError("all phase components must have the same arity")
    return parts


def _frequency(k: Union[int, Sequence[int]], m: int) -> Tuple[int, ...]:
    k = (int(k),) if isinstance(k, (int, np.integer)) else tuple(int(v) for v in k)
    if len(k) != m:
        raise ArityError(f"frequency {k} has {len(k)} entries, phase has {m} components")
    return k


def combine(parts: Sequence[MultiPolynomial], k: Sequence[int]) -> MultiPolynomial:
    """The scalar phase k.g = sum_l k_l g_l."""
    total = MultiPolynomial.zero(parts[0].arity)
    for kl, p in zip(k, parts):
        if kl:
            total = total + convert_basis(p, Basis.MONOMIAL).scale(kl)
    return total


def e(x: Scalar) -> mpmath.mpc:
    """e(x) = exp(2 pi i x), evaluated on the fractional part."""
    return mpmath.expjpi(2 * scalars.to_mpf(scalars.frac(x)))


# ---------------------------------------------------------------------------
# Phase fields
# ---------------------------------------------------------------------------


class PhaseField:
    """Vectorized evaluation of a polynomial modulo 1 on blocks of box points.

    Rational coefficients whose common denominator Q is at most 2^20 are
    evaluated exactly as residues mod Q. Every other coefficient c enters as
    the 128-bit fixed-point number floor({c} 2^128), split into two 64-bit
    halves and multiplied against monomials taken mod 2^64.
    """

    def __init__(self, f: MultiPolynomial):
        mono = convert_basis(f, Basis.MONOMIAL)
        exact_terms = [(i, Fraction(c)) for i, c in mono.coefficients.items() if scalars.is_exact(c)]
        real_terms = [(i, c) for i, c in mono.coefficients.items() if not scalars.is_exact(c)]

        modulus = 1
        for _, c in exact_terms:
            modulus = math.lcm(modulus, c.denominator)
        if modulus > RESIDUE_MODULUS_LIMIT:
            real_terms.extend(exact_terms)
            exact_terms = []
            modulus = 1

        self.arity = f.arity
        self.modulus = modulus
        self._residue_terms = [(i, int(c * modulus) % modulus) for i, c in exact_terms]
        self._fixed_terms = []
        for i, c in real_terms:
            F = math.floor(scalars.as_fraction(scalars.frac(c)) * (1 << 128))
            self._fixed_terms.append((i, F >> 64, F & ((1 << 64) - 1)))

    @property
    def is_rational(self) -> bool:
        return not self._fixed_terms

    @property
    def term_count(self) -> int:
        return len(self._residue_terms) + len(self._fixed_terms)

    def residues(self, points: np.ndarray) -> np.ndarray:
        """Exact values of the rational part times Q, reduced mod Q."""
        Q = self.modulus
        total = np.zeros(len(points), dtype=np.int64)
        if Q == 1:
            return total
        reduced = points % Q
        for index, A in self._residue_terms:
            term = np.full(len(points), A, dtype=np.int64)
            for j, power in enumerate(index):
                for _ in range(power):
                    term = (term * reduced[:, j]) % Q
            total = (total + term) % Q
        return total

    def fractional(self, points: np.ndarray) -> np.ndarray:
        """The fixed-point part as floats in [0, 1)."""
        acc = np.zeros(len(points), dtype=np.float64)
        for index, hi, lo in self._fixed_terms:
            wrapped = np.ones(len(points), dtype=np.int64)
            size = np.ones(len(points), dtype=np.float64)
            for j, power in enumerate(index):
                for _ in range(power):
                    wrapped = wrapped * points[:, j]
                    size = size * points[:, j]
            top = np.uint64(hi) * wrapped.view(np.uint64)
            acc += top / _TWO64 + (lo / _TWO64) * (size / _TWO64)
        return np.mod(acc, 1.0)

    def phases(self, points: np.ndarray) -> np.ndarray:
        values = self.fractional(points)
        if self.modulus > 1:
            values = values + self.residues(points) / self.modulus
        return np.mod(values, 1.0)


def error_budget(term_count: int) -> float:
    """Bound on the rounding error of one box average computed from float phases."""
    return (2 * math.pi * (term_count + 1) + 1) * 2.0**-52


# ---------------------------------------------------------------------------
# Single Weyl sums
# ---------------------------------------------------------------------------


def _geometric_average(a: Scalar, start: int, length: int) -> mpmath.mpc:
    """(1/L) sum_{n=start}^{start+L-1} e(a n)."""
    if scalars.is_exact(a):
        a = Fraction(a)
        if a.denominator == 1:
            return mpmath.mpc(1)
        if (a * length).denominator == 1:
            return mpmath.mpc(0)
    ratio = e(a)
    return e(scalars.mul(a, start)) * (e(scalars.mul(a, length)) - 1) / ((ratio - 1) * length)


def linear_average(P: MultiPolynomial, box: BoxShape) -> complex:
    """Box average of e(P) for P of degree <= 1, as a product over coordinates."""
    mono = convert_basis(P, Basis.MONOMIAL)
    value = e(mono.constant_term)
    for j, r in enumerate(box.ranges()):
        index = tuple(1 if i == j else 0 for i in range(box.arity))
        a = mono.coefficient(index)
        if scalars.is_zero(a):
            continue
        factor = _geometric_average(a, r.start, len(r))
        if factor == 0:
            return complex(0)
        value *= factor
    return complex(value)


def _histogram_average(histogram: np.ndarray, modulus: int, total: int, multiplier: int = 1) -> complex:
    residues = np.nonzero(histogram)[0]
    counts = histogram[residues].astype(np.float64)
    angles = 2 * np.pi * ((multiplier * residues) % modulus) / modulus
    re = math.fsum(counts * np.cos(angles))
    im = math.fsum(counts * np.sin(angles))
    return complex(re / total, im / total)


def _slab_terms(item) -> Tuple[Optional[np.ndarray], List[float], List[float]]:
    """Residue histogram of a run of first slabs, or their per-slab cos and sin sums."""
    P, box, heads = item
    field_ = PhaseField(P)
    if field_.is_rational:
        histogram = np.zeros(field_.modulus, dtype=np.int64)
        for head in heads:
            histogram += np.bincount(field_.residues(box.slab_points(head)), minlength=field_.modulus)
        return histogram, [], []

    re_parts: List[float] = []
    im_parts: List[float] = []
    for head in heads:
        angles = 2 * np.pi * field_.phases(box.slab_points(head))
        re_parts.append(math.fsum(np.cos(angles)))
        im_parts.append(math.fsum(np.sin(angles)))
    return None, re_parts, im_parts


def direct_average(P: MultiPolynomial, box: BoxShape, workers: Optional[int] = 1) -> complex:
    """Box average of e(P) by slab summation.

    Slabs are grouped into at most SLAB_GROUPS consecutive runs fixed by the
    box alone, so the result is the same for every worker count.
    """
    heads = box.first_slabs(SLAB_POINTS)
    size = math.ceil(len(heads) / SLAB_GROUPS)
    items = [(P, box, heads[i:i + size]) for i in range(0, len(heads), size)]
    parts = WorkerPool(workers).map(_slab_terms, items)

    total = box.cardinality
    if parts[0][0] is not None:
        histogram = sum(h for h, _, _ in parts)
        return _histogram_average(histogram, len(histogram), total)
    re = math.fsum(v for _, r, _ in parts for v in r)
    im = math.fsum(v for _, _, i in parts for v in i)
    return complex(re / total, im / total)


def weyl_sum(
    g: Phase, box: BoxShape, k: Union[int, Sequence[int]] = 1, workers: Optional[int] = 1
) -> complex:
    """E_{n in box} e(k.g(n)); nonlinear phases spread their slabs over ``workers`` processes."""
    parts = components(g)
    if parts[0].arity != box.arity:
        raise ArityError(f"phase arity {parts[0].arity} does not match box arity {box.arity}")
    P = combine(parts, _frequency(k, len(parts)))
    if P.degree <= 1:
        return linear_average(P, box)
    return direct_average(P, box, workers)


def magnitude(z: complex) -> float:
    return min(abs(z), 1.0)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylSpectrum:
    """Weyl sums for every frequency 0 < |k|_inf <= cutoff, one of each pair {k, -k}."""

    cutoff: int
    entries: Dict[Tuple[int, ...], complex]
    error_budget: float = 0.0

    @property
    def sup_magnitude(self) -> float:
        return max((magnitude(z) for z in self.entries.values()), default=0.0)

    @property
    def argmax(self) -> Optional[Tuple[int, ...]]:
        best, best_k = -1.0, None
        for k, z in self.entries.items():
            if magnitude(z) > best:
                best, best_k = magnitude(z), k
        return best_k

    def magnitude_of(self, k: Sequence[int]) -> float:
        return magnitude(self.entries[canonical_sign(k)])

    def to_document(self) -> Dict[str, Any]:
        return {
            "cutoff": self.cutoff,
            "sup_magnitude": self.sup_magnitude,
            "argmax": list(self.argmax) if self.argmax else None,
            "error_budget": self.error_budget,
            "spectrum": [
                {"k": list(k), "re": z.real, "im": z.imag} for k, z in self.entries.items()
            ],
        }


def _spectrum_direct(parts: Sequence[MultiPolynomial], box: BoxShape, freqs: List[Tuple[int, ...]]) -> List[complex]:
    fields = [PhaseField(p) for p in parts]
    total = box.cardinality
    kmat = np.array(freqs, dtype=np.int64)

    modulus = 1
    for f in fields:
        modulus = math.lcm(modulus, f.modulus)
    rational = all(f.is_rational for f in fields) and modulus <= RESIDUE_MODULUS_LIMIT

    if rational and len(fields) == 1:
        histogram = np.zeros(modulus, dtype=np.int64)
        for block in box.point_blocks(SLAB_POINTS):
            histogram += np.bincount(fields[0].residues(block), minlength=modulus)
        return [_histogram_average(histogram, modulus, total, k[0]) for k in freqs]

    slab = max(1024, SPECTRUM_CELLS // max(1, len(freqs)))
    re_parts: List[List[float]] = [[] for _ in freqs]
    im_parts: List[List[float]] = [[] for _ in freqs]
    for block in box.point_blocks(slab):
        if rational:
            scaled = np.stack([f.residues(block) * (modulus // f.modulus) for f in fields], axis=1)
            angles = 2 * np.pi * ((scaled @ kmat.T) % modulus) / modulus
        else:
            phases = np.stack([f.phases(block) for f in fields], axis=1)
            angles = 2 * np.pi * np.mod(phases @ kmat.T.astype(np.float64), 1.0)
        cos, sin = np.cos(angles), np.sin(angles)
        for col in range(len(freqs)):
            re_parts[col].append(math.fsum(cos[:, col]))
            im_parts[col].append(math.fsum(sin[:, col]))
    return [
        complex(math.fsum(re) / total, math.fsum(im) / total) for re, im in zip(re_parts, im_parts)
    ]


def weyl_spectrum(g: Phase, box: BoxShape, K: int) -> WeylSpectrum:
    """Weyl sums at every frequency up to sign with 0 < |k|_inf <= K."""
    if K < 1:
        raise ValidationError(f"cutoff K must be >= 1, got {K}")
    parts = components(g)
    if parts[0].arity != box.arity:
        raise ArityError(f"phase arity {parts[0].arity} does not match box arity {box.arity}")
    m = len(parts)
    if frequency_count(m, K) > SPECTRUM_LIMIT:
        raise ValidationError(
            f"spectrum with m={m} and K={K} has {frequency_count(m, K)} frequencies, limit {SPECTRUM_LIMIT}"
        )
    freqs = list(iter_frequencies(m, K))

    if all(p.degree <= 1 for p in parts):
        values = [linear_average(combine(parts, k), box) for k in freqs]
        budget = 0.0
    else:
        values = _spectrum_direct(parts, box, freqs)
        budget = error_budget(sum(PhaseField(p).term_count for p in parts))

    logger.debug(f"Spectrum of {len(freqs)} frequencies computed on {box}")
    return WeylSpectrum(K, dict(zip(freqs, values)), budget)


# ---------------------------------------------------------------------------
# Equidistribution testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquidistributionReport:
    """Character-level equidistribution verdict at a frequency cutoff.

    EQUIDISTRIBUTED_AT_CUTOFF only says that every Weyl sum with
    0 < |k|_inf <= cutoff is at most delta in magnitude. For a Lipschitz F on
    the torus the error of its Fourier truncation at K is O(||F||_Lip log K / K),
    so the verdict controls Lipschitz averages only up to that term.
    """

    delta: Fraction
    verdict: Verdict
    cutoff: int
    witness: Optional[Tuple[int, ...]] = None
    witness_magnitude: Optional[float] = None
    spectrum: Optional[WeylSpectrum] = field(default=None, compare=False)

    @property
    def fails(self) -> bool:
        return self.verdict is Verdict.FAILS

    @property
    def sup_magnitude(self) -> float:
        return self.spectrum.sup_magnitude if self.spectrum else 0.0

    def to_document(self, include_spectrum: bool = True) -> Dict[str, Any]:
        document = {
            "delta": scalars.format_scalar(self.delta),
            "verdict": self.verdict.value,
            "cutoff": self.cutoff,
            "certified_at_cutoff_only": True,
            "witness": list(self.witness) if self.witness else None,
            "witness_magnitude": self.witness_magnitude,
        }
        if self.spectrum is not None:
            spectrum = self.spectrum.to_document()
            if not include_spectrum:
                spectrum.pop("spectrum")
            document["spectrum"] = spectrum
        return document


def test_equidistribution(g: Phase, box: BoxShape, delta: Scalar, K: Optional[int] = None) -> EquidistributionReport:
    """FAILS iff some frequency 0 < |k|_inf <= K has |weyl_sum| > delta.

    The witness is the first such frequency in shell order.
    """
    delta = scalars.parameter(delta)
    if K is None:
        K = default_cutoff(delta)
    spectrum = weyl_spectrum(g, box, K)
    threshold = float(delta)
    for k, z in spectrum.entries.items():
        if magnitude(z) > threshold:
            logger.info(f"Weyl test FAILS on {box} at k={k} with magnitude {magnitude(z):.6f} > {threshold}")
            return EquidistributionReport(delta, Verdict.FAILS, K, k, magnitude(z), spectrum)
    logger.info(f"Weyl test passes on {box} up to cutoff {K} (sup {spectrum.sup_magnitude:.6f})")
    return EquidistributionReport(delta, Verdict.EQUIDISTRIBUTED_AT_CUTOFF, K, spectrum=spectrum)


test_equidistribution.__test__ = False


# ---------------------------------------------------------------------------
# Discrepancy oracle
# ---------------------------------------------------------------------------


def _hats(x: np.ndarray, cells: int) -> np.ndarray:
    """Tent functions of height 1 and half-width 1/cells centred at j/cells, per point."""
    centres = np.arange(cells) / cells
    distance = np.abs(x[:, None] - centres[None, :])
    distance = np.minimum(distance, 1.0 - distance)
    return np.maximum(0.0, 1.0 - cells * distance)


def discrepancy_bruteforce(g: Phase, box: BoxShape, family_size: int = 20) -> float:
    """max over the hat family of |box average - integral|.

    The family is the tents of height 1 and half-width 1/M centred at the
    mesh points j/M (M = family_size); on (R/Z)^2 it is their products. Each
    tent integrates to 1/M per coordinate.
    """
    if box.cardinality > DISCREPANCY_POINTS:
        raise PreconditionError(f"discrepancy oracle needs at most {DISCREPANCY_POINTS} points, box has {box.cardinality}")
    if family_size < 1:
        raise ValidationError(f"family size must be >= 1, got {family_size}")
    parts = components(g)
    m = len(parts)
    if m > 2 or family_size**m > DISCREPANCY_CELLS:
        raise ValidationError(f"hat family of {family_size}^{m} cells exceeds the limit {DISCREPANCY_CELLS}")

    fields = [PhaseField(p) for p in parts]
    M = family_size
    sums = np.zeros((M,) * m, dtype=np.float64)
    for block in box.point_blocks(SLAB_POINTS):
        hats = [_hats(f.phases(block), M) for f in fields]
        if m == 1:
            sums += hats[0].sum(axis=0)
        else:
            sums += hats[0].T @ hats[1]
    averages = sums / box.cardinality
    integral = (1.0 / M) ** m
    return float(np.max(np.abs(averages - integral)))
