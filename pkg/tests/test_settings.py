import json
from fractions import Fraction

import pytest

from src.config.settings import ExperimentConfig
from src.utils.errors import ValidationError


def test_defaults_are_valid():
    config = ExperimentConfig()
    assert config.subcommand == "verify"
    assert config.delta_value == Fraction(3, 10)
    assert config.bound_pair == (Fraction(10), 3)
    assert config.grid_constant_value == Fraction(1, 40)


@pytest.mark.parametrize(
    "overrides",
    [
        {"delta": "0.5"},
        {"delta": "0"},
        {"delta": "abc"},
        {"subcommand": "plot"},
        {"subcommand": "dioph"},
        {"subcommand": "dioph", "action": "solve"},
        {"bound": "10"},
        {"bound": "10,x"},
        {"bound": "0,2"},
        {"trials": 0},
        {"precision_bits": 64},
        {"grid_constant": "2"},
        {"output_format": "xml"},
        {"epsilon": "-1/10"},
        {"cutoff": 0},
        {"workers": 0},
    ],
)
def test_invalid_settings_rejected(overrides):
    with pytest.raises(ValidationError):
        ExperimentConfig(**overrides)


def test_validation_error_is_a_value_error():
    with pytest.raises(ValueError):
        ExperimentConfig(delta="3/5")


def test_file_values_override_base(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"delta": "1/8", "seed": 7, "colour": "red"}), encoding="utf-8")
    base = ExperimentConfig(subcommand="weyl", box="10", seed=1)
    config = ExperimentConfig.from_file(path, base)
    assert config.subcommand == "weyl"
    assert config.box == "10"
    assert config.delta_value == Fraction(1, 8)
    assert config.seed == 7


def test_missing_or_broken_file(tmp_path):
    with pytest.raises(ValidationError):
        ExperimentConfig.from_file(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{delta", encoding="utf-8")
    with pytest.raises(ValidationError):
        ExperimentConfig.from_file(broken)


def test_save_and_reload(tmp_path):
    config = ExperimentConfig(subcommand="zeros", poly="f.txt", L=12)
    path = tmp_path / "nested" / "saved.json"
    config.save_to_file(path)
    assert ExperimentConfig.from_file(path) == config


def test_update_settings_revalidates():
    config = ExperimentConfig()
    config.update_settings(seed=3)
    assert config.seed == 3
    with pytest.raises(ValidationError):
        config.update_settings(trials=0)


def test_echo_omits_paths_and_logging():
    echo = ExperimentConfig(output="out.json", log_file="run.log", workers=2).echo()
    for key in ("log_level", "log_file", "output", "workers"):
        assert key not in echo
    assert echo["delta"] == "0.3"


def test_lift_accepts_densities_up_to_one():
    config = ExperimentConfig(subcommand="dichotomy", delta="1/2", epsilon="1/1000")
    assert config.delta_value == Fraction(1, 2)
    with pytest.raises(ValidationError):
        ExperimentConfig(subcommand="dichotomy", delta="3/2", epsilon="1/1000")
    with pytest.raises(ValidationError):
        ExperimentConfig(subcommand="dichotomy", delta="1/2")
