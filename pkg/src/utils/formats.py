"""
Text formats read and written by the command line.

Polynomial literal (one or more blocks; several blocks form a vector phase)::

    # comment
    poly t=2 d=2 basis=mono { (1,1): "sqrt(2)", (0,1): "-sqrt(2)" }

Instance file (``key = value`` lines, or a JSON object)::

    beta = 0
    alphas = 1/6
    zeta = 1/4
    gammas = 1/3            # one vector per coordinate j, separated by ';'
    sides = 40
    delta = 1/8
    scale = 40
    center = 0              # interval instances only
    epsilon = 1/100         # interval instances only
    hit = 3                 # optional witness, repeatable

Group spec file (or a preset name such as ``heisenberg`` or ``torus:2``)::

    name = heisenberg
    abelian = 2
    central = 1
    bracket = 0 0 1 1       # k i j coeff, repeatable

Sequence file, Taylor elements in Mal'cev coordinates::

    element (0) = 0, 0, 0
    element (1) = sqrt(2), 0, 0
"""

import csv
import io
import json
import logging
import re
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import scalars
from .errors import ValidationError

logger = logging.getLogger(__name__)

_BLOCK = re.compile(r"poly\s+([^{]*)\{([^}]*)\}", re.S)
_TERM = re.compile(r"\(\s*([-\d,\s]*)\)\s*:\s*\"([^\"]*)\"")
_ELEMENT = re.compile(r"^element\s*\(\s*([\d,\s]*)\)\s*=\s*(.+)$")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def _read(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e}")


def _index(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(" ", "").split(",") if v != "")
    except ValueError:
        raise ValidationError(f"bad multi-index '({text})'")


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


def parse_polynomials(text: str):
    """All polynomial blocks of a literal, in order."""
    from ..core.polyalg import Basis, MultiPolynomial

    text = _strip_comments(text)
    blocks = _BLOCK.findall(text)
    if not blocks:
        raise ValidationError("no 'poly ... { ... }' block found")
    result = []
    for attributes, body in blocks:
        attrs = dict(part.split("=", 1) for part in attributes.split() if "=" in part)
        try:
            arity = int(attrs["t"])
            declared = int(attrs["d"])
        except (KeyError, ValueError):
            raise ValidationError(f"poly block needs integer t= and d=, got '{attributes.strip()}'")
        basis_name = attrs.get("basis", "mono")
        try:
            basis = Basis(basis_name)
        except ValueError:
            raise ValidationError(f"basis must be 'mono' or 'binom', got '{basis_name}'")
        terms = {}
        for index_text, value in _TERM.findall(body):
            index = _index(index_text)
            if index in terms:
                raise ValidationError(f"index {index} appears twice")
            terms[index] = scalars.parse_scalar(value)
        leftover = _TERM.sub("", body).replace(",", "").strip()
        if leftover:
            raise ValidationError(f"cannot parse polynomial terms near '{leftover[:30]}'")
        poly = MultiPolynomial(terms, arity, basis)
        if poly.degree != declared and not (poly.is_zero() and declared == 0):
            raise ValidationError(f"declared degree d={declared} but the polynomial has degree {poly.degree}")
        result.append(poly)
    if len({p.arity for p in result}) != 1:
        raise ValidationError("all polynomial blocks must share the same t")
    return result


def load_polynomial(path: Union[str, Path]):
    """A MultiPolynomial, or a tuple of them when the file holds several blocks."""
    blocks = parse_polynomials(_read(path))
    logger.debug(f"Loaded {len(blocks)} polynomial block(s) from {path}")
    return blocks[0] if len(blocks) == 1 else tuple(blocks)


def format_polynomial(poly) -> str:
    terms = ", ".join(
        f"({','.join(str(i) for i in index)}): \"{scalars.format_scalar(value)}\""
        for index, value in poly.coefficients.items()
    )
    return f"poly t={poly.arity} d={poly.degree} basis={poly.basis.value} {{ {terms} }}"


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def _key_values(text: str) -> Tuple[Dict[str, str], List[str]]:
    values: Dict[str, str] = {}
    hits: List[str] = []
    for number, line in enumerate(_strip_comments(text).splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {number}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "hit":
            hits.append(value)
        else:
            values[key] = value
    return values, hits


def _scalar_list(text: str) -> List[Any]:
    return [scalars.parse_scalar(v) for v in text.split(",") if v.strip()]


def load_instance(path: Union[str, Path]) -> Dict[str, Any]:
    """Parsed instance fields; ``hits`` is None when the file lists no witnesses."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"invalid JSON instance {path}: {e}")
        document.setdefault("hits", None)
        return document

    values, hits = _key_values(text)
    document: Dict[str, Any] = {}
    for key, value in values.items():
        if key in ("alphas", "zeta"):
            document[key] = [scalars.format_scalar(v) for v in _scalar_list(value)]
        elif key == "gammas":
            document[key] = [
                [scalars.format_scalar(v) for v in _scalar_list(vector)] for vector in value.split(";")
            ]
        elif key == "sides":
            document[key] = [int(v) for v in value.split(",")]
        else:
            document[key] = value
    document["hits"] = [list(_index(h)) for h in hits] if hits else None
    return document


def bracket_instance(document: Dict[str, Any]):
    from ..core.diophantine import BracketInstance

    try:
        return BracketInstance.from_document(document)
    except KeyError as e:
        raise ValidationError(f"instance is missing the field {e}")


# ---------------------------------------------------------------------------
# Group specs and sequences
# ---------------------------------------------------------------------------


def load_group_spec(source: str):
    """A preset name or a spec file."""
    from ..core.nilpotent import NilGroupSpec

    if not Path(source).is_file():
        return NilGroupSpec.preset(source)
    values, _ = _key_values(_read(source))
    brackets = []
    for line in _strip_comments(_read(source)).splitlines():
        key, _, value = line.partition("=")
        if key.strip() == "bracket":
            try:
                brackets.append(tuple(int(v) for v in value.split()))
            except ValueError:
                raise ValidationError(f"bracket terms are four integers 'k i j coeff', got '{value.strip()}'")
            if len(brackets[-1]) != 4:
                raise ValidationError(f"bracket terms are four integers 'k i j coeff', got '{value.strip()}'")
    if "preset" in values:
        return NilGroupSpec.preset(values["preset"])
    try:
        return NilGroupSpec(
            values.get("name", Path(source).stem),
            int(values["abelian"]),
            int(values.get("central", 0)),
            tuple(brackets),
        )
    except (KeyError, ValueError) as e:
        raise ValidationError(f"group spec {source} needs integer 'abelian' and 'central' fields: {e}")


def parse_sequence(text: str, spec):
    from ..core.nilpotent import NilElement, NilSequence

    elements = {}
    for number, line in enumerate(_strip_comments(text).splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        match = _ELEMENT.match(line)
        if not match:
            raise ValidationError(f"line {number}: expected 'element (j,..) = c1, c2, ...', got '{line}'")
        index = _index(match.group(1))
        elements[index] = NilElement.from_coordinates(spec, _scalar_list(match.group(2)))
    if not elements:
        raise ValidationError("sequence file lists no elements")
    arities = {len(i) for i in elements}
    if len(arities) != 1:
        raise ValidationError("all element indices must have the same length")
    return NilSequence.from_taylor(spec, elements, arities.pop())


def load_sequence(path: Union[str, Path], spec):
    return parse_sequence(_read(path), spec)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def canonical_json(document: Any) -> str:
    """Key-sorted compact JSON, the form digests are taken over."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def write_json(document: Any, path: Optional[Union[str, Path]] = None) -> str:
    text = json.dumps(document, sort_keys=True, indent=2) + "\n"
    _emit(text, path)
    return text


def write_csv(rows: Sequence[Dict[str, Any]], path: Optional[Union[str, Path]] = None, columns: Optional[Iterable[str]] = None) -> str:
    columns = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    text = buffer.getvalue()
    _emit(text, path)
    return text


def _emit(text: str, path: Optional[Union[str, Path]]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        logger.info(f"Report written to {target}")
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise
