"""
Independent certificate checkers.

Nothing here calls the solvers' own norm or evaluation routines. Polynomials
are evaluated term by term from their stored coefficients, binomial Taylor
coefficients are rebuilt from point values by Newton forward differences,
and circle norms are taken against mpmath.nint. A certificate passes only if
every stored inequality holds on the recomputed numbers.
"""

import itertools
import logging
import math
from fractions import Fraction
from typing import Any, Dict, Sequence, Tuple

import mpmath

logger = logging.getLogger(__name__)

# Relative slack for comparisons that involve real (rounded) data.
REAL_SLACK_BITS = 20


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def _add(a, b):
    if _is_exact(a) and _is_exact(b):
        return Fraction(a) + b
    return _real(a) + _real(b)


def _mul(a, b):
    if _is_exact(a) and _is_exact(b):
        return Fraction(a) * b
    return _real(a) * _real(b)


def _real(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def circle(x):
    """Distance to the nearest integer."""
    if _is_exact(x):
        x = Fraction(x)
        return abs(x - round(x))
    return abs(x - mpmath.nint(x))


def _slack(value) -> Any:
    if _is_exact(value):
        return Fraction(0)
    return mpmath.ldexp(max(abs(_real(value)), mpmath.mpf(1)), REAL_SLACK_BITS - mpmath.mp.prec)


def at_most(value, bound) -> bool:
    """value <= bound, allowing the rounding slack of real data."""
    if _is_exact(value) and _is_exact(bound):
        return Fraction(value) <= bound
    return _real(value) <= _real(bound) + _slack(value) + _slack(bound)


def close(a, b) -> bool:
    return at_most(a, b) and at_most(b, a)


def _falling(n: int, k: int) -> Fraction:
    value = Fraction(1)
    for j in range(k):
        value *= n - j
    return value / math.factorial(k)


def value_at(poly, point: Sequence[int]):
    """Evaluate a polynomial from its stored coefficients and basis tag."""
    binomial = getattr(poly.basis, "value", poly.basis) == "binom"
    total = Fraction(0)
    for index, coefficient in poly.coefficients.items():
        weight = Fraction(1)
        for n, k in zip(point, index):
            weight *= _falling(n, k) if binomial else Fraction(n) ** k
        total = _add(total, _mul(coefficient, weight))
    return total


def newton_coefficients(values, arity: int, degree: int) -> Dict[Tuple[int, ...], Any]:
    """alpha_j = sum_{i <= j} (-1)^{|j - i|} C(j, i) f(i) for |j| <= degree.

    ``values`` maps points of {0..degree}^t to f(point).
    """
    result = {}
    for j in itertools.product(range(degree + 1), repeat=arity):
        if sum(j) > degree:
            continue
        total = Fraction(0)
        for i in itertools.product(*(range(jk + 1) for jk in j)):
            sign = (-1) ** (sum(j) - sum(i))
            weight = sign * math.prod(math.comb(jk, ik) for jk, ik in zip(j, i))
            total = _add(total, _mul(weight, values[i]))
        result[j] = total
    return result


def taylor_from_values(evaluate, arity: int, degree: int) -> Dict[Tuple[int, ...], Any]:
    points = itertools.product(range(degree + 1), repeat=arity)
    values = {p: evaluate(p) for p in points}
    return newton_coefficients(values, arity, degree)


def smoothness_from_values(evaluate, arity: int, degree: int, sides: Sequence[int]) -> Tuple[Any, Dict]:
    """(sup over nonzero j of N^j ||alpha_j||, per-index values)."""
    coefficients = taylor_from_values(evaluate, arity, degree)
    per_index = {}
    best = Fraction(0)
    for j, alpha in coefficients.items():
        if sum(j) == 0:
            continue
        weighted = _mul(math.prod(n**k for n, k in zip(sides, j)), circle(alpha))
        per_index[j] = weighted
        if not at_most(weighted, best):
            best = weighted
    return best, per_index


def family_bound(family, delta) -> Fraction:
    return Fraction(family.A) / Fraction(delta) ** family.C


# ---------------------------------------------------------------------------
# Leibman certificates
# ---------------------------------------------------------------------------


def check_obstruction(cert, parts: Sequence, box) -> bool:
    """||q (frequency.g)||_{C-infinity} recomputed and compared with the stored bound."""
    if cert.multiplier == 0 or not any(cert.frequency):
        return False
    if len(cert.frequency) != len(parts) or tuple(cert.sides) != tuple(box.sides):
        return False
    B = family_bound(cert.family, cert.delta)
    if not close(cert.bound, B):
        return False
    if abs(cert.multiplier) > max(1, math.floor(B)):
        return False
    if len(parts) > 1 and max(abs(cert.multiplier * v) for v in cert.frequency) > max(1, math.floor(B)):
        return False

    degree = max(max((sum(i) for i in p.coefficients), default=0) for p in parts)
    arity = parts[0].arity

    def phase(point):
        total = Fraction(0)
        for eta, p in zip(cert.frequency, parts):
            if eta:
                total = _add(total, _mul(cert.multiplier * eta, value_at(p, point)))
        return total

    attained, per_index = smoothness_from_values(phase, arity, degree, box.sides)
    if not close(attained, cert.attained):
        logger.debug(f"Recomputed norm {attained} differs from stored {cert.attained}")
        return False
    for index, value in per_index.items():
        if not close(value, cert.per_index.get(tuple(index), Fraction(0))):
            return False
    return at_most(attained, cert.bound)


def check_lift(outcome, g, box) -> bool:
    if not outcome.certified or outcome.Q == 0:
        return False
    degree = max((sum(i) for i in g.coefficients), default=0)

    def phase(point):
        return _mul(outcome.Q, value_at(g, point))

    attained, _ = smoothness_from_values(phase, g.arity, degree, box.sides)
    constant = circle(phase((0,) * g.arity))
    return at_most(attained, outcome.bound) and at_most(constant, outcome.bound)


# ---------------------------------------------------------------------------
# Diophantine outcomes
# ---------------------------------------------------------------------------


def _dot(gamma, k) -> Any:
    total = Fraction(0)
    for x, kl in zip(gamma.entries, k):
        total = _add(total, _mul(int(kl), x))
    return total


def _bracket_value(inst, h):
    value = _add(inst.beta, Fraction(0))
    for a, x in zip(inst.alphas, h):
        value = _add(value, _mul(a, int(x)))
    for l, z in enumerate(inst.zeta):
        inner = Fraction(0)
        for g, x in zip(inst.gammas, h):
            inner = _add(inner, _mul(g.entries[l], int(x)))
        fractional = inner - math.floor(inner) if _is_exact(inner) else inner - mpmath.floor(inner)
        value = _add(value, _mul(z, fractional))
    return value


def check_witnesses(inst, witnesses) -> bool:
    """Every witness lies in the box and satisfies the display; there are enough of them."""
    threshold = 1 / (Fraction(inst.delta) * inst.scale)
    distinct = {tuple(h) for h in witnesses}
    for h in distinct:
        if any(abs(x) > N for x, N in zip(h, inst.box.sides)):
            return False
        if not at_most(circle(_bracket_value(inst, h)), threshold):
            return False
    return len(distinct) >= Fraction(inst.delta) * math.prod(inst.box.sides)


def check_interval(outcome, alphas: Sequence, sides: Sequence[int], epsilon, delta) -> bool:
    """||q alpha_j|| <= (q / q_j) epsilon B / N_j with q = prod q_j <= floor(B)^t."""
    if not outcome.certified:
        return False
    B = family_bound(outcome.family, delta)
    cap = max(1, math.floor(B))
    q = math.prod(outcome.factors)
    if q != outcome.q or q < 1 or q > cap ** len(sides):
        return False
    for qj, alpha, N in zip(outcome.factors, alphas, sides):
        if qj < 1 or qj > cap:
            return False
        bound = _mul(q // qj, _mul(epsilon, B / N))
        if not at_most(circle(_mul(q, alpha)), bound):
            return False
    return True


def check_proposition(outcome, inst) -> bool:
    """Either sup|zeta| <= B/N, or ||k.gamma_j|| <= B/N_j for a nonzero k."""
    branch = getattr(outcome.branch, "value", outcome.branch)
    B = family_bound(outcome.family, inst.delta)
    if branch == "SMALL_ZETA":
        sup = Fraction(0)
        for z in inst.zeta:
            if not at_most(abs(z), sup):
                sup = abs(z)
        return at_most(sup, B / inst.scale)
    if branch == "FREQUENCY":
        k = outcome.frequency
        if not k or not any(k):
            return False
        return all(
            at_most(circle(_dot(g, k)), B / N) for g, N in zip(inst.gammas, inst.box.sides)
        )
    return False


def check_dichotomy(outcome, inst) -> bool:
    """Branch SMALL_ZETA: 0 < r <= B and ||r zeta_l|| within the stored bounds; FREQUENCY as above."""
    branch = getattr(outcome.branch, "value", outcome.branch)
    B = family_bound(outcome.family, inst.delta)
    if branch == "SMALL_ZETA":
        r = outcome.multiplier
        if r is None or not 0 < r <= max(1, math.floor(B)):
            return False
        if len(outcome.bounds) != len(inst.zeta):
            return False
        return all(at_most(circle(_mul(r, z)), b) for z, b in zip(inst.zeta, outcome.bounds))
    if branch == "FREQUENCY":
        k = outcome.frequency
        if not k or not any(k):
            return False
        return all(
            at_most(circle(_dot(g, k)), B / N) for g, N in zip(inst.gammas, inst.box.sides)
        )
    return False
