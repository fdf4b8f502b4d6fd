"""
Run dispatch and report emission.

ExperimentRunner turns one validated ExperimentConfig into a RunReport.
The report body holds the config echo, the verdicts and certificates, the
measured bound families and the arithmetic budget; its SHA-256 digest over
canonical JSON is the replay check. Wall time stays outside the body.
"""

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from types import SimpleNamespace
from typing import Any, Callable, Dict, List, Optional

import mpmath

from ..config.settings import ExperimentConfig
from ..utils import formats, scalars
from ..utils.errors import ValidationError
from ..utils.statistics import RunStatistics
from . import certify
from .boxcover import progression_cover_audit
from .diophantine import (
    BoundFamily,
    Branch,
    as_torus_vectors,
    best_multiplier,
    bracket_dichotomy,
    bracket_proposition_solver,
    frequency_cutoff,
    interval_hit_solver,
    measure_family,
    weyl_obstruction_search,
)
from .leibman import ObstructionCertificate, Outcome, check_certificate, near_constant_lift, torus_dichotomy
from .nilpotent import NilVerdictKind, nil_dichotomy
from .polyalg import BoxShape, MultiPolynomial
from .suites import verify_suite
from .weyl import components, test_equidistribution
from .zeros import count_zeros

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


@dataclass
class RunReport:
    """Replayable result of one run."""

    body: Dict[str, Any]
    wall_time: float = 0.0
    inconclusive: bool = False
    failed: bool = False
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def digest(self) -> str:
        return hashlib.sha256(formats.canonical_json(self.body).encode("utf-8")).hexdigest()

    def to_document(self) -> Dict[str, Any]:
        return {"report": self.body, "digest": self.digest, "wall_time": round(self.wall_time, 3)}

    def summary_row(self) -> Dict[str, Any]:
        return {
            "command": self.body["command"],
            "verdict": self.body.get("verdict", ""),
            "inconclusive": int(self.inconclusive),
            "failed": int(self.failed),
            "digest": self.digest,
        }

    def write(self, output: Optional[str], output_format: str) -> None:
        path = Path(output) if output else None
        if output_format == "csv":
            formats.write_csv(self.rows or [self.summary_row()], path)
        else:
            formats.write_json(self.to_document(), path)


class ExperimentRunner:
    """Dispatches one configured run to the module operations."""

    def __init__(self, config: ExperimentConfig):
        """Initialize the runner.

        Args:
            config: Validated configuration of the run
        """
        self.config = config
        self.statistics = RunStatistics()
        scalars.set_precision(config.precision_bits)
        self.family = BoundFamily(*config.bound_pair)

        self._handlers: Dict[str, Callable[[], Dict[str, Any]]] = {
            "weyl": self._run_weyl,
            "dichotomy": self._run_dichotomy,
            "check": self._run_check,
            "dioph": self._run_dioph,
            "cover": self._run_cover,
            "zeros": self._run_zeros,
            "nil": self._run_nil,
            "verify": self._run_verify,
        }

        logger.info(f"ExperimentRunner initialized with config: {config}")

    def run(self) -> RunReport:
        """Execute the configured command and build its report."""
        start = time.perf_counter()
        outcome = self._handlers[self.config.subcommand]()

        body = {
            "version": REPORT_VERSION,
            "command": self.config.subcommand if not self.config.action else f"{self.config.subcommand} {self.config.action}",
            "config": self.config.echo(),
            "verdict": outcome.get("verdict"),
            "result": outcome.get("result"),
            "measured": outcome.get("measured"),
            "error_budget": {
                "precision_bits": mpmath.mp.prec,
                "real_slack_bits": certify.REAL_SLACK_BITS,
                **outcome.get("error_budget", {}),
            },
        }
        report = RunReport(
            body,
            wall_time=time.perf_counter() - start,
            inconclusive=outcome.get("inconclusive", False),
            failed=outcome.get("failed", False),
            rows=outcome.get("rows", []),
        )
        if self.config.subcommand != "verify":
            self.statistics.record(not report.failed, report.inconclusive)
        logger.info(f"Run finished: {body['command']} -> {body['verdict']} (digest {report.digest[:12]})")
        return report

    # -- inputs -------------------------------------------------------------

    def _require(self, name: str) -> Any:
        value = getattr(self.config, name)
        if value is None:
            raise ValidationError(f"'{self.config.subcommand}' needs --{name.replace('_', '-')}")
        return value

    def _box(self, symmetric: Optional[bool] = None) -> BoxShape:
        return BoxShape.parse(self._require("box"), self.config.symmetric if symmetric is None else symmetric)

    def _phase(self):
        return formats.load_polynomial(self._require("poly"))

    def _instance(self) -> Dict[str, Any]:
        document = formats.load_instance(self._require("instance"))
        document.setdefault("delta", self.config.delta)
        if self.config.epsilon is not None:
            document.setdefault("epsilon", self.config.epsilon)
        if "scale" not in document and "sides" in document:
            document["scale"] = str(min(document["sides"]))
        document.setdefault("beta", "0")
        return document

    @staticmethod
    def _hits(document: Dict[str, Any]):
        hits = document.get("hits")
        return [tuple(h) for h in hits] if hits else None

    # -- weyl / dichotomy ---------------------------------------------------

    def _run_weyl(self) -> Dict[str, Any]:
        report = test_equidistribution(self._phase(), self._box(), self.config.delta_value, self.config.cutoff)
        spectrum = report.spectrum.to_document()["spectrum"]
        return {
            "verdict": report.verdict.value,
            "result": report.to_document(include_spectrum=True),
            "rows": spectrum,
            "error_budget": {"weyl_sum": report.spectrum.error_budget},
        }

    def _run_dichotomy(self) -> Dict[str, Any]:
        g, box, delta = self._phase(), self._box(), self.config.delta_value
        if self.config.epsilon is not None:
            if isinstance(g, tuple):
                raise ValidationError("the near-constancy lift takes a single polynomial, not a vector phase")
            lift = near_constant_lift(
                g, box, self.config.epsilon_value, delta, family=self.family,
                density_limit=self.config.density_limit, seed=self.config.seed,
            )
            replay = {
                "kind": "lift",
                "poly": [formats.format_polynomial(g)],
                "box": list(box.sides),
                "symmetric": box.symmetric,
                "outcome": lift.to_document(),
            }
            return {
                "verdict": "LIFTED" if lift.certified else Outcome.INCONCLUSIVE.value,
                "result": {**lift.to_document(), "replay": replay},
                "inconclusive": not lift.certified,
            }

        report = torus_dichotomy(
            g, box, delta, self.family, self.config.cutoff,
            exhaustive_limit=self.config.exhaustive_limit,
        )
        result = report.to_document()
        if report.certificate is not None:
            result["replay"] = {
                "kind": "obstruction",
                "poly": [formats.format_polynomial(p) for p in components(g)],
                "box": list(box.sides),
                "symmetric": box.symmetric,
                "certificate": report.certificate.to_document(),
            }
        return {
            "verdict": report.outcome.value,
            "result": result,
            "inconclusive": report.outcome is Outcome.INCONCLUSIVE,
        }

    # -- check --------------------------------------------------------------

    def _replay_document(self) -> Dict[str, Any]:
        path = self._require("certificate")
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"cannot read certificate {path}: {e}")
        if "report" in document:
            document = (document["report"].get("result") or {}).get("replay")
        if not isinstance(document, dict) or "kind" not in document:
            raise ValidationError(f"{path} holds no replayable certificate")
        return document

    def _run_check(self) -> Dict[str, Any]:
        document = self._replay_document()
        kind = document["kind"]
        parse = scalars.parse_scalar
        try:
            if kind in ("obstruction", "lift"):
                parts = [formats.parse_polynomials(text)[0] for text in document["poly"]]
                box = BoxShape(tuple(document["box"]), bool(document.get("symmetric", False)))
                if kind == "obstruction":
                    cert = ObstructionCertificate.from_document(document["certificate"])
                    passed = check_certificate(cert, tuple(parts) if len(parts) > 1 else parts[0], box)
                else:
                    out = document["outcome"]
                    lift = SimpleNamespace(certified=out["certified"], Q=int(out["Q"]), bound=parse(out["bound"]))
                    passed = certify.check_lift(lift, parts[0], box)
            elif kind == "interval":
                inst, out = document["instance"], document["outcome"]
                outcome = SimpleNamespace(
                    certified=out["certified"], q=int(out["q"]),
                    factors=tuple(int(v) for v in out["factors"]), family=_family(out["family"]),
                )
                passed = certify.check_interval(
                    outcome, [parse(a) for a in inst["alphas"]], inst["sides"],
                    parse(inst["epsilon"]), scalars.parameter(inst["delta"]),
                )
            elif kind in ("proposition", "dichotomy"):
                inst = formats.bracket_instance(document["instance"])
                out = document["outcome"]
                outcome = SimpleNamespace(
                    branch=out["branch"],
                    family=_family(out["family"]),
                    frequency=tuple(out["frequency"]) if out.get("frequency") else None,
                    multiplier=out.get("multiplier"),
                    bounds=tuple(parse(b) for b in out.get("bounds", [])),
                )
                check = certify.check_proposition if kind == "proposition" else certify.check_dichotomy
                passed = check(outcome, inst)
            else:
                raise ValidationError(f"unknown certificate kind '{kind}'")
        except (KeyError, TypeError) as e:
            raise ValidationError(f"malformed {kind} certificate: missing or invalid {e}")

        logger.info(f"Certificate of kind {kind}: {'PASSED' if passed else 'FAILED'}")
        return {
            "verdict": "PASSED" if passed else "FAILED",
            "result": {"kind": kind, "passed": passed},
            "failed": not passed,
        }

    # -- dioph --------------------------------------------------------------

    def _run_dioph(self) -> Dict[str, Any]:
        action = self.config.action
        if action == "best-multiplier":
            alpha = scalars.parse_scalar(self._require("alpha"))
            result = best_multiplier(alpha, self._require("Q"), self.config.exhaustive_limit)
            return {
                "verdict": "FOUND",
                "result": {"q": result.q, "value": scalars.format_scalar(result.value), "method": result.method},
            }

        document = self._instance()
        if action == "interval":
            return self._run_interval(document)

        inst = formats.bracket_instance(document)
        hits = self._hits(document)
        if action == "obstruction":
            B = self.family.value(inst.delta)
            K = self.config.cutoff or frequency_cutoff(inst.m, B)
            search = weyl_obstruction_search(as_torus_vectors(inst.gammas), K, [B / N for N in inst.box.sides])
            return {
                "verdict": "FOUND" if search.found else Outcome.INCONCLUSIVE.value,
                "result": search.to_document(),
                "inconclusive": not search.found,
            }

        options = dict(
            grid_constant=self.config.grid_constant_value,
            density_limit=self.config.density_limit,
            seed=self.config.seed,
        )
        if action == "proposition":
            solve = lambda family: bracket_proposition_solver(inst, hits, family, **options)
            check = lambda out: certify.check_proposition(out, inst)
        else:
            solve = lambda family: bracket_dichotomy(inst, hits, family, **options)
            check = lambda out: certify.check_dichotomy(out, inst)

        outcome = solve(self.family)
        verified = outcome.certified and check(outcome)
        measured = measure_family(lambda family: _if_verified(solve(family), check))
        result = outcome.to_document()
        result["verified"] = verified
        result["replay"] = {"kind": action, "instance": inst.to_document(), "outcome": outcome.to_document()}
        return {
            "verdict": outcome.branch.value,
            "result": result,
            "measured": measured.to_document(),
            "inconclusive": outcome.branch is Branch.INCONCLUSIVE,
            "failed": outcome.certified and not verified,
        }

    def _run_interval(self, document: Dict[str, Any]) -> Dict[str, Any]:
        try:
            alphas = [scalars.parse_scalar(a) for a in document["alphas"]]
            sides = tuple(int(n) for n in document["sides"])
            epsilon = scalars.parameter(document["epsilon"])
            delta = scalars.parameter(document["delta"])
            center = scalars.parse_scalar(str(document.get("center", "0")))
        except KeyError as e:
            raise ValidationError(f"interval instance is missing the field {e}")
        box = BoxShape(sides, symmetric=True)
        hits = self._hits(document)

        def solve(family: BoundFamily):
            return interval_hit_solver(alphas, box, epsilon, delta, hits, center, family,
                                       density_limit=self.config.density_limit, seed=self.config.seed)

        def check(out) -> bool:
            return certify.check_interval(out, alphas, sides, epsilon, delta)

        outcome = solve(self.family)
        verified = outcome.certified and check(outcome)
        measured = measure_family(lambda family: _if_verified(solve(family), check))
        instance = {
            "alphas": [scalars.format_scalar(a) for a in alphas],
            "sides": list(sides),
            "epsilon": scalars.format_scalar(epsilon),
            "delta": scalars.format_scalar(delta),
            "center": scalars.format_scalar(center),
        }
        result = outcome.to_document()
        result["verified"] = verified
        result["replay"] = {"kind": "interval", "instance": instance, "outcome": outcome.to_document()}
        return {
            "verdict": "CERTIFIED" if outcome.certified else Outcome.INCONCLUSIVE.value,
            "result": result,
            "measured": measured.to_document(),
            "inconclusive": not outcome.certified,
            "failed": outcome.certified and not verified,
        }

    # -- cover / zeros / nil / verify ----------------------------------------

    def _run_cover(self) -> Dict[str, Any]:
        cover = progression_cover_audit(
            self._phase(), self._require("N"), self._require("L"), self.config.delta_value,
            cutoff=self.config.cutoff,
            cover_constant=self.config.cover_constant_value,
            seed=self.config.seed,
            offset_samples=self.config.offset_samples,
            workers=self.config.workers,
        )
        return {
            "verdict": "MEETS_QUARTER_DELTA" if cover.meets_quarter_delta else "BELOW_QUARTER_DELTA",
            "result": cover.to_document(),
            "rows": [row.to_row() for row in cover.rows],
        }

    def _run_zeros(self) -> Dict[str, Any]:
        f = self._phase()
        if not isinstance(f, MultiPolynomial):
            raise ValidationError("zero counting takes a single polynomial")
        counted = count_zeros(f, self._require("L"))
        return {"verdict": "WITHIN_BOUND" if counted.within_bound else "EXCEEDS_BOUND", "result": counted.to_document(),
                "failed": not counted.within_bound}

    def _run_nil(self) -> Dict[str, Any]:
        spec = formats.load_group_spec(self._require("spec"))
        g = formats.load_sequence(self._require("seq"), spec)
        verdict = nil_dichotomy(
            g, self._box(), self.config.delta_value, self.family, self.config.cutoff,
            vertical_samples=self.config.vertical_samples, seed=self.config.seed,
        )
        return {
            "verdict": verdict.verdict.value,
            "result": {"spec": spec.to_document(), "sequence": g.to_document(), **verdict.to_document()},
            "inconclusive": verdict.verdict is NilVerdictKind.INCONCLUSIVE,
        }

    def _run_verify(self) -> Dict[str, Any]:
        report = verify_suite(self.config.suite, self.config.seed, self.config.trials, self.config.workers)
        for result in report.results:
            self.statistics.merge(result.statistics)
        return {
            "verdict": "ALL_PASSED" if report.passed else "FAILURES",
            "result": report.to_document(),
            "rows": report.table(),
            "inconclusive": report.inconclusive > 0,
            "failed": not report.passed,
        }


def _family(document: Dict[str, Any]) -> BoundFamily:
    return BoundFamily(Fraction(document["A"]), int(document["C"]))


def _if_verified(outcome, check):
    return outcome if outcome.certified and check(outcome) else None
