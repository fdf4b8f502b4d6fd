import json

import pytest

from main import build_parser, load_config, main
from src.utils.errors import EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_VALIDATION, ValidationError

INSTANCE = """
beta = 0
alphas = 1/6
zeta = 1/4
gammas = 1/3
sides = 40
delta = 1/8
scale = 40
"""


@pytest.fixture
def diagonal(tmp_path):
    path = tmp_path / "diagonal.txt"
    path.write_text('poly t=2 d=1 { (1,0): "1", (0,1): "-1" }\n', encoding="utf-8")
    return path


@pytest.fixture
def instance(tmp_path):
    path = tmp_path / "bracket.txt"
    path.write_text(INSTANCE, encoding="utf-8")
    return path


def read_report(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_zeros_report(tmp_path, diagonal):
    out = tmp_path / "zeros.json"
    assert main(["zeros", "--poly", str(diagonal), "--L", "10", "--out", str(out)]) == EXIT_OK
    document = read_report(out)
    assert document["report"]["verdict"] == "WITHIN_BOUND"
    assert document["report"]["command"] == "zeros"
    assert "log_level" not in document["report"]["config"]


def test_reports_replay_to_the_same_digest(tmp_path, diagonal):
    digests = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        main(["zeros", "--poly", str(diagonal), "--L", "10", "--out", str(out)])
        digests.append(read_report(out)["digest"])
    assert digests[0] == digests[1]


def test_csv_output(tmp_path, diagonal):
    out = tmp_path / "zeros.csv"
    main(["zeros", "--poly", str(diagonal), "--L", "10", "--format", "csv", "--out", str(out)])
    header = out.read_text(encoding="utf-8").splitlines()[0]
    assert header == "command,verdict,inconclusive,failed,digest"


@pytest.mark.parametrize(
    "argv",
    [
        ["plot"],
        ["zeros", "--L", "10"],
        ["weyl", "--poly", "missing.txt", "--box", "10", "--delta", "0.6"],
        ["zeros", "--poly", "missing.txt", "--L", "10"],
        ["verify", "--suite", "ladder"],
    ],
)
def test_usage_and_validation_errors_exit_three(argv):
    assert main(argv) == EXIT_VALIDATION


def test_config_file_overrides_flags(tmp_path, diagonal):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"L": 4}), encoding="utf-8")
    loaded = load_config(["zeros", "--poly", str(diagonal), "--L", "10", "--config", str(config)])
    assert loaded.L == 4


def test_parser_rejects_with_validation_error():
    with pytest.raises(ValidationError):
        build_parser().parse_args(["dioph", "solve"])


def test_inconclusive_exit_code_only_under_strict(tmp_path, instance):
    argv = ["dioph", "dichotomy", "--instance", str(instance), "--bound", "1,0", "--out", str(tmp_path / "r.json")]
    assert main(argv) == EXIT_OK
    assert read_report(tmp_path / "r.json")["report"]["verdict"] == "INCONCLUSIVE"
    assert main(argv + ["--strict"]) == EXIT_INCONCLUSIVE


def test_certificate_replay(tmp_path, instance):
    out = tmp_path / "dichotomy.json"
    assert main(["dioph", "dichotomy", "--instance", str(instance), "--bound", "1,1", "--out", str(out)]) == EXIT_OK
    assert read_report(out)["report"]["verdict"] == "FREQUENCY"

    checked = tmp_path / "check.json"
    assert main(["check", "--certificate", str(out), "--out", str(checked)]) == EXIT_OK
    assert read_report(checked)["report"]["result"] == {"kind": "dichotomy", "passed": True}


def test_tampered_certificate_fails(tmp_path, instance):
    out = tmp_path / "dichotomy.json"
    main(["dioph", "dichotomy", "--instance", str(instance), "--bound", "1,1", "--out", str(out)])
    document = read_report(out)
    document["report"]["result"]["replay"]["outcome"]["frequency"] = [2]
    out.write_text(json.dumps(document), encoding="utf-8")
    assert main(["check", "--certificate", str(out), "--out", str(tmp_path / "check.json")]) == EXIT_FAILURE
