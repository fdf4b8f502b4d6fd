"""
Randomized verification suites.

Every suite draws its trials from ``numpy.random.SeedSequence(seed).spawn``,
so trial i sees the same generator no matter how trials are distributed
over workers. Trial functions live at module level to stay picklable and
return plain rows; results are merged in trial order.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils import scalars
from ..utils.errors import ValidationError
from ..utils.statistics import RunStatistics
from ..utils.workers import WorkerPool
from . import certify
from .boxcover import build_extractions, vandermonde_span_check
from .diophantine import (
    DEFAULT_FAMILY,
    BoundFamily,
    BracketInstance,
    TorusVector,
    bracket_dichotomy,
    bracket_proposition_solver,
    interval_hit_solver,
    measure_family,
    weyl_obstruction_search,
)
from .leibman import Outcome, check_certificate, scalar_obstruction, torus_dichotomy
from .nilpotent import (
    NilElement,
    NilGroupSpec,
    NilSequence,
    NilVerdictKind,
    bracket_bilinearity_check,
    commutator,
    frac_int_factor,
    identity,
    inverse,
    linear_nonlinear_split,
    multiply,
    nil_dichotomy,
)
from .polyalg import (
    Basis,
    BoxShape,
    MultiPolynomial,
    conversion_constants,
    convert_basis,
    index_set,
    smoothness_norm,
    taylor_multiplier,
    unit_vector,
)
from .weyl import default_cutoff, test_equidistribution
from .zeros import count_zeros, count_zeros_bruteforce

logger = logging.getLogger(__name__)

SUITES = (
    "taylor-lemma",
    "schwartz-zippel",
    "vandermonde",
    "torus-dichotomy",
    "bracket-ladder",
    "weyl-consistency",
    "nilpotent",
    "counterexample",
)


@dataclass(frozen=True)
class TrialOutcome:
    passed: bool
    inconclusive: bool = False
    row: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SuiteResult:
    name: str
    statistics: RunStatistics
    measured: Dict[str, Any]
    rows: List[Dict[str, Any]]

    @property
    def passed(self) -> bool:
        return self.statistics.failed == 0 and self.statistics.inconclusive == 0

    def to_document(self) -> Dict[str, Any]:
        return {
            "suite": self.name,
            **self.statistics.get_stats(),
            "all_passed": self.passed,
            "measured": self.measured,
        }


@dataclass
class SuiteReport:
    seed: int
    trials: int
    results: List[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def inconclusive(self) -> int:
        return sum(r.statistics.inconclusive for r in self.results)

    def table(self) -> List[Dict[str, Any]]:
        return [
            {"suite": r.name, **r.statistics.get_stats(), "all_passed": int(r.passed)}
            for r in self.results
        ]

    def to_document(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "all_passed": self.passed,
            "suites": [r.to_document() for r in self.results],
        }


# ---------------------------------------------------------------------------
# Random data
# ---------------------------------------------------------------------------


def random_polynomial(
    rng: np.random.Generator, arity: int, degree: int, max_denominator: int = 6, density: float = 0.6,
    basis: Basis = Basis.MONOMIAL,
) -> MultiPolynomial:
    """Random nonzero rational polynomial of total degree exactly ``degree``."""
    indices = index_set(arity, degree)
    top = [i for i in indices if sum(i) == degree]
    terms = {}
    for index in indices:
        if rng.random() < density:
            numerator = int(rng.integers(-3 * max_denominator, 3 * max_denominator + 1))
            terms[index] = Fraction(numerator, int(rng.integers(1, max_denominator + 1)))
    lead = top[int(rng.integers(len(top)))]
    if not terms.get(lead):
        terms[lead] = Fraction(int(rng.choice([-2, -1, 1, 2])), int(rng.integers(1, max_denominator + 1)))
    return MultiPolynomial(terms, arity, basis)


def _random_fraction(rng: np.random.Generator, max_denominator: int) -> Fraction:
    q = int(rng.integers(1, max_denominator + 1))
    return Fraction(int(rng.integers(0, q)), q)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------


def taylor_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    t, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    f = random_polynomial(rng, t, d, max_denominator=12)
    round_trip = convert_basis(convert_basis(f, Basis.BINOMIAL), Basis.MONOMIAL) == f
    box = BoxShape(tuple(int(v) for v in rng.integers(2, 40, size=t)))
    star = smoothness_norm(f, box, Basis.MONOMIAL).value
    result = taylor_multiplier(f, box, star)
    return TrialOutcome(
        round_trip and result.within_guarantee,
        row={"trial": index, "t": t, "d": d, "r": result.multiplier, "kappa": result.kappa},
    )


def schwartz_zippel_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    t, d, L = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(2, 13))
    if index % 5 == 0:
        # product of linear factors n_j - c, the extremal shape for the bound
        f = MultiPolynomial.constant(1, t)
        for _ in range(d):
            j = int(rng.integers(t))
            f = f * (MultiPolynomial.variable(j, t) - int(rng.integers(1, L + 1)))
    else:
        f = random_polynomial(rng, t, d)
    counted = count_zeros(f, L)
    brute = count_zeros_bruteforce(f, L)
    return TrialOutcome(
        counted.count == brute and counted.within_bound,
        row={"trial": index, "t": t, "d": f.degree, "L": L, "count": counted.count, "bound": counted.bound},
    )


def vandermonde_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    t, d, L = int(rng.integers(1, 3)), int(rng.integers(1, 4)), 16
    grid = [tuple(int(v) for v in q) for q in np.ndindex(*(L,) * t)]
    size = max(math.ceil(0.3 * len(grid)), len(index_set(t, d)))
    chosen = rng.choice(len(grid), size=size, replace=False)
    directions = [grid[int(i)] for i in sorted(chosen)]
    span = vandermonde_span_check(directions, d)
    if not span.spanning:
        return TrialOutcome(False, row={"trial": index, "t": t, "d": d, "spanning": 0})
    systems = build_extractions(span.subset, d)
    verified = all(s.verify() for s in systems.values())
    shared = next(iter(systems.values())).Q_tilde
    return TrialOutcome(
        verified,
        row={"trial": index, "t": t, "d": d, "spanning": 1, "Q_tilde": shared,
             "max_gamma_prime": max(max(abs(g) for g in s.gamma_prime) for s in systems.values())},
    )


def torus_dichotomy_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    t, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    D = 50
    # binomial-basis draws keep every coefficient denominator <= D
    f = random_polynomial(rng, t, d, max_denominator=D, basis=Basis.BINOMIAL)
    high = 256 if t < 3 else 96
    box = BoxShape(tuple(int(v) for v in rng.integers(64, high + 1, size=t)))
    family = BoundFamily(Fraction(2 * D ** len(index_set(t, d))), 1)
    delta = Fraction(3, 10)
    K = default_cutoff(delta)
    report = torus_dichotomy(f, box, delta, family, cutoff=K)
    row = {"trial": index, "t": t, "d": d, "cutoff": K, "outcome": report.outcome.value}
    if report.outcome is Outcome.INCONCLUSIVE:
        return TrialOutcome(False, inconclusive=True, row=row)
    if report.outcome is Outcome.OBSTRUCTION:
        row["q"] = report.certificate.multiplier
        return TrialOutcome(check_certificate(report.certificate, f, box), row=row)
    return TrialOutcome(report.outcome is Outcome.EQUIDISTRIBUTED, row=row)


def _bracket_candidate(rng: np.random.Generator) -> Tuple[BracketInstance, List[Tuple[int, ...]]]:
    t, m = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    sides = tuple(int(v) for v in rng.integers(4, 16 if t == 1 else 8, size=t))
    box = BoxShape(sides, symmetric=True)
    scale = Fraction(min(sides))
    zeta = tuple(Fraction(int(rng.integers(-12, 13)), 12) for _ in range(m))
    gammas = tuple(TorusVector(tuple(_random_fraction(rng, 6) for _ in range(m))) for _ in range(t))
    alphas = tuple(_random_fraction(rng, 6) for _ in range(t))
    draft = BracketInstance(Fraction(0), alphas, zeta, gammas, box, Fraction(49, 100), scale)
    hits = [p for p in box.points() if draft.holds_at(p)]
    delta = min(Fraction(49, 100), Fraction(len(hits), math.prod(sides)))
    inst = BracketInstance(Fraction(0), alphas, zeta, gammas, box, delta, scale)
    hits = [p for p in box.points() if inst.holds_at(p)]
    return inst, hits


def _checked(solver: Callable, check: Callable) -> Callable[[BoundFamily], Any]:
    def attempt(family: BoundFamily):
        outcome = solver(family)
        if outcome.certified and check(outcome):
            return outcome
        return None

    return attempt


def bracket_ladder_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    inst, hits = _bracket_candidate(rng)

    # interval instance on the same box: exact zeros of alpha.h
    alphas = inst.alphas
    zeros = [h for h in inst.box.points() if sum(a * x for a, x in zip(alphas, h)).denominator == 1]
    delta_i = min(Fraction(49, 100), Fraction(len(zeros), math.prod(inst.box.sides)))
    epsilon = min(Fraction(1, 1000), delta_i / 2)

    interval = measure_family(_checked(
        lambda fam: interval_hit_solver(alphas, inst.box, epsilon, delta_i, zeros, 0, fam),
        lambda out: certify.check_interval(out, alphas, inst.box.sides, epsilon, delta_i),
    ))
    proposition = measure_family(_checked(
        lambda fam: bracket_proposition_solver(inst, hits, fam),
        lambda out: certify.check_proposition(out, inst),
    ))
    dichotomy = measure_family(_checked(
        lambda fam: bracket_dichotomy(inst, hits, fam),
        lambda out: certify.check_dichotomy(out, inst),
    ))
    measurements = {"interval": interval, "proposition": proposition, "dichotomy": dichotomy}
    row = {"trial": index, "t": inst.t, "m": inst.m, "delta": scalars.format_scalar(inst.delta)}
    for name, measurement in measurements.items():
        row[name] = str(measurement.family) if measurement.family else "none"
        row[f"{name}_within_default"] = int(measurement.within_default)
    passed = all(m.family is not None for m in measurements.values()) and certify.check_witnesses(inst, hits)
    return TrialOutcome(passed, row=row)


def weyl_consistency_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    t = int(rng.integers(1, 3))
    coefficients = tuple(_random_fraction(rng, 20) for _ in range(t))
    terms = {unit_vector(j, t): a for j, a in enumerate(coefficients)}
    g = MultiPolynomial(terms, t)
    box = BoxShape(tuple(int(v) for v in rng.integers(20, 201, size=t)))
    delta = Fraction(int(rng.integers(10, 46)), 100)
    K = min(math.ceil(1 / delta**2), 100)
    report = test_equidistribution(g, box, delta, K)
    row = {"trial": index, "t": t, "delta": scalars.format_scalar(delta), "verdict": report.verdict.value}
    if not report.fails:
        return TrialOutcome(True, row=row)

    B = DEFAULT_FAMILY.value(delta)
    gammas = [TorusVector((a,)) for a in coefficients]
    search = weyl_obstruction_search(gammas, K, [B / N for N in box.sides])
    stricter = Fraction((float(delta) + report.witness_magnitude) / 2).limit_denominator(10**6)
    monotone = stricter >= report.witness_magnitude or test_equidistribution(g, box, stricter, K).fails
    row["witness"] = report.witness[0]
    row["found"] = search.frequency[0] if search.found else ""
    return TrialOutcome(search.found and monotone, row=row)


def _canned_sequence(spec: NilGroupSpec, rng: np.random.Generator) -> NilSequence:
    arity = int(rng.integers(1, 3))
    elements = {}
    for index in index_set(arity, 2):
        values = [Fraction(int(rng.integers(-8, 9)), int(rng.integers(1, 5))) for _ in range(spec.dimension)]
        element = NilElement.from_coordinates(spec, values)
        if sum(index) >= 2 and spec.filtration == "lower-central":
            element = NilElement(spec, (0,) * spec.abelian_dim, element.z)
        elements[index] = element
    return NilSequence.from_taylor(spec, elements, arity)


def nilpotent_trial(item) -> TrialOutcome:
    index, seed = item
    rng = np.random.default_rng(seed)
    spec = NilGroupSpec.preset(("heisenberg", "heisenberg5", "free-step2-3")[index % 3])

    def element() -> NilElement:
        return NilElement.from_coordinates(
            spec, [Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 7))) for _ in range(spec.dimension)]
        )

    ok = True
    for _ in range(50):
        a, b, c = element(), element(), element()
        ok &= multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
        ok &= multiply(a, inverse(a)) == identity(spec)
        ok &= all(v == 0 for v in commutator(a, b).u)
        fractional, integral = frac_int_factor(a)
        ok &= multiply(fractional, integral) == a and integral.in_lattice()
        ok &= all(0 <= v < 1 for v in fractional.coordinates)

    g = _canned_sequence(spec, rng).normalize()
    lin, nonlin = linear_nonlinear_split(g)
    for n in BoxShape((3,) * g.arity).points():
        ok &= multiply(nonlin.evaluate(n), lin.evaluate(n)) == g.evaluate(n)
        ok &= nonlin.evaluate(n).in_G2()
    ok &= nonlin.evaluate((0,) * g.arity).is_identity()
    ok &= all(nonlin.evaluate(unit_vector(i, g.arity)).is_identity() for i in range(g.arity))

    k = [int(v) for v in rng.integers(-3, 4, size=spec.central_dim)]
    bilinear = bracket_bilinearity_check(spec, k, samples=10, seed=int(rng.integers(1 << 31)))
    ok &= bilinear.passed
    return TrialOutcome(bool(ok), row={"trial": index, "spec": spec.name, "arity": g.arity})


def counterexample_trial(item) -> TrialOutcome:
    """sqrt(2)(n_1 - 1) n_2 on [2] x [1000]: fails equidistribution, no small multiplier, small first side."""
    index, _ = item
    root2 = scalars.parse_scalar("sqrt(2)")
    g = MultiPolynomial({(1, 1): root2, (0, 1): scalars.mul(-1, root2)}, 2)
    box = BoxShape((2, 1000))
    delta = Fraction(3, 10)
    weyl = test_equidistribution(g, box, delta, 20)
    strict = BoundFamily(Fraction(1), 2)
    cap = strict.multiplier_cap(delta)
    scan = [q for q in range(1, cap + 1) if scalars.le(smoothness_norm(g.scale(q), box).value, strict.value(delta))]
    torus = torus_dichotomy(g, box, delta, strict, cutoff=20)
    spec = NilGroupSpec.preset("torus:1")
    sequence = NilSequence(spec, (g,), (), 2)
    nil = nil_dichotomy(sequence, box, delta, strict, cutoff=20)
    default = scalar_obstruction(g, box, delta, DEFAULT_FAMILY)
    passed = (
        weyl.fails
        and sum(weyl.witness) == 1
        and weyl.witness_magnitude >= 0.49
        and not scan
        and torus.outcome is Outcome.SMALL_SIDE
        and torus.small_side == 1
        and nil.verdict is NilVerdictKind.SMALL_SIDE
    )
    return TrialOutcome(passed, row={
        "trial": index,
        "weyl_magnitude": weyl.witness_magnitude,
        "multipliers_within_family": len(scan),
        "torus": torus.outcome.value,
        "nil": nil.verdict.value,
        "default_family_multiplier": default.multiplier if default else "",
    })


TRIALS: Dict[str, Callable] = {
    "taylor-lemma": taylor_trial,
    "schwartz-zippel": schwartz_zippel_trial,
    "vandermonde": vandermonde_trial,
    "torus-dichotomy": torus_dichotomy_trial,
    "bracket-ladder": bracket_ladder_trial,
    "weyl-consistency": weyl_consistency_trial,
    "nilpotent": nilpotent_trial,
    "counterexample": counterexample_trial,
}


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def _measured(name: str, rows: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    if name == "taylor-lemma":
        table = []
        for t in range(1, 4):
            for d in range(1, 5):
                c = conversion_constants(t, d)
                table.append({"t": t, "d": d, "r": c.multiplier, "kappa": c.kappa, "index_count": c.index_count})
        return {"conversion_constants": table}
    if name == "bracket-ladder":
        measured = {}
        for lemma in ("interval", "proposition", "dichotomy"):
            within = sum(r.get(f"{lemma}_within_default", 0) for r in rows)
            families = sorted({r[lemma] for r in rows if r.get(lemma) not in (None, "none")})
            measured[lemma] = {"within_default": within, "of": len(rows), "families": families}
        return measured
    if name == "vandermonde":
        return {"max_Q_tilde": max((r.get("Q_tilde", 0) for r in rows), default=0)}
    return {}


def run_suite(name: str, seed: int, trials: int, workers: Optional[int] = None) -> SuiteResult:
    if name not in TRIALS:
        raise ValidationError(f"unknown suite '{name}', expected one of {', '.join(SUITES)} or 'all'")
    count = 1 if name == "counterexample" else trials
    children = np.random.SeedSequence(seed).spawn(count)
    outcomes = WorkerPool(workers).map(TRIALS[name], list(enumerate(children)))
    statistics = RunStatistics()
    for outcome in outcomes:
        statistics.record(outcome.passed, outcome.inconclusive)
    rows = [o.row for o in outcomes]
    logger.info(f"Suite {name}: {statistics.passed}/{statistics.trials} passed")
    return SuiteResult(name, statistics, _measured(name, rows), rows)


def verify_suite(name: str, seed: int = 0, trials: int = 20, workers: Optional[int] = None) -> SuiteReport:
    """Run one suite, or every suite for ``all``."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    names = SUITES if name == "all" else (name,)
    results = [run_suite(n, seed, trials, workers) for n in names]
    return SuiteReport(seed, trials, results)
