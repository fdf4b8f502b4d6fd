import json
from fractions import Fraction

import mpmath
import pytest

from src.core.nilpotent import NilGroupSpec
from src.core.polyalg import Basis, MultiPolynomial
from src.utils import formats
from src.utils.errors import ValidationError

COUNTEREXAMPLE = """
# the two-variable counterexample
poly t=2 d=2 basis=mono { (1,1): "sqrt(2)", (0,1): "-sqrt(2)" }
"""

INSTANCE = """
beta = 0
alphas = 1/6
zeta = 1/4
gammas = 1/3
sides = 40
delta = 1/8
scale = 40
hit = 3
hit = -3
"""


class TestPolynomials:
    def test_parse_literal(self):
        (f,) = formats.parse_polynomials(COUNTEREXAMPLE)
        assert f.arity == 2 and f.degree == 2
        assert f.basis is Basis.MONOMIAL
        assert abs(f.coefficient((1, 1)) - mpmath.sqrt(2)) < mpmath.mpf(10) ** -30
        assert f.coefficient((0, 1)) == -f.coefficient((1, 1))

    def test_several_blocks_form_a_vector_phase(self, tmp_path):
        path = tmp_path / "phase.txt"
        path.write_text('poly t=1 d=1 { (1): "1/3" }\npoly t=1 d=1 { (1): "1/2" }\n', encoding="utf-8")
        phase = formats.load_polynomial(path)
        assert isinstance(phase, tuple) and len(phase) == 2
        assert phase[1].coefficient((1,)) == Fraction(1, 2)

    def test_format_reads_back(self):
        f = MultiPolynomial({(2, 0): Fraction(1, 3), (0, 1): 5}, 2)
        assert formats.parse_polynomials(formats.format_polynomial(f)) == [f]

    @pytest.mark.parametrize(
        "text",
        [
            "nothing here",
            'poly t=1 { (1): "1" }',
            'poly t=1 d=2 { (1): "1" }',
            'poly t=1 d=1 basis=chebyshev { (1): "1" }',
            'poly t=1 d=1 { (1): "1", (1): "2" }',
            'poly t=1 d=1 { (1): "pi" }',
            'poly t=1 d=1 { (1): "1" }\npoly t=2 d=1 { (1,0): "1" }',
        ],
    )
    def test_rejects_malformed_literals(self, text):
        with pytest.raises(ValidationError):
            formats.parse_polynomials(text)


class TestInstances:
    def test_key_value_instance(self, tmp_path):
        path = tmp_path / "inst.txt"
        path.write_text(INSTANCE, encoding="utf-8")
        document = formats.load_instance(path)
        assert document["alphas"] == ["1/6"]
        assert document["gammas"] == [["1/3"]]
        assert document["sides"] == [40]
        assert document["hits"] == [[3], [-3]]
        inst = formats.bracket_instance(document)
        assert inst.delta == Fraction(1, 8)
        assert inst.box.symmetric

    def test_json_instance(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(json.dumps({"alphas": ["1/6"], "sides": [40]}), encoding="utf-8")
        document = formats.load_instance(path)
        assert document["hits"] is None
        with pytest.raises(ValidationError):
            formats.bracket_instance(document)

    def test_line_without_value(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("beta 0\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            formats.load_instance(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            formats.load_instance(tmp_path / "absent.txt")


class TestGroups:
    def test_preset_name(self):
        assert formats.load_group_spec("heisenberg") == NilGroupSpec.preset("heisenberg")

    def test_spec_file(self, tmp_path):
        path = tmp_path / "h.spec"
        path.write_text("name = h\nabelian = 2\ncentral = 1\nbracket = 0 0 1 1\n", encoding="utf-8")
        spec = formats.load_group_spec(str(path))
        assert spec.dimension == 3
        assert spec.bracket == ((0, 0, 1, 1),)

    def test_bracket_terms_have_four_integers(self, tmp_path):
        path = tmp_path / "h.spec"
        path.write_text("abelian = 2\ncentral = 1\nbracket = 0 0 1\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            formats.load_group_spec(str(path))

    def test_sequence(self):
        spec = NilGroupSpec.preset("heisenberg")
        g = formats.parse_sequence("element (1) = 1/2, 1/3, 0\nelement (2) = 0, 0, 1/5\n", spec)
        assert g.evaluate((2,)).coordinates == (1, Fraction(2, 3), Fraction(11, 30))

    def test_sequence_indices_share_arity(self):
        spec = NilGroupSpec.preset("heisenberg")
        with pytest.raises(ValidationError):
            formats.parse_sequence("element (1) = 1, 0, 0\nelement (0, 1) = 0, 1, 0\n", spec)
        with pytest.raises(ValidationError):
            formats.parse_sequence("# empty\n", spec)


class TestOutput:
    def test_canonical_json_is_sorted_and_compact(self):
        assert formats.canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'

    def test_write_csv(self, tmp_path):
        path = tmp_path / "out" / "rows.csv"
        text = formats.write_csv([{"q": 1, "verdict": "FAILS"}, {"q": 2, "verdict": "EQUIDISTRIBUTED"}], path)
        assert text == "q,verdict\n1,FAILS\n2,EQUIDISTRIBUTED\n"
        assert path.read_text(encoding="utf-8") == text

    def test_write_json_to_stdout(self, capsys):
        formats.write_json({"verdict": "FAILS"})
        assert json.loads(capsys.readouterr().out) == {"verdict": "FAILS"}
