import pytest

from src.core.suites import SUITES, verify_suite
from src.utils.errors import ValidationError


@pytest.mark.parametrize("name", ["taylor-lemma", "schwartz-zippel", "vandermonde", "nilpotent"])
def test_identity_suites_pass(name):
    report = verify_suite(name, seed=1, trials=3, workers=1)
    assert report.passed
    assert report.results[0].statistics.trials == 3


def test_counterexample_runs_once():
    report = verify_suite("counterexample", seed=0, trials=5, workers=1)
    (result,) = report.results
    assert result.statistics.trials == 1
    assert result.passed
    row = result.rows[0]
    assert row["torus"] == "SMALL_SIDE"
    assert row["multipliers_within_family"] == 0


def test_same_seed_same_rows():
    first = verify_suite("schwartz-zippel", seed=11, trials=4, workers=1)
    second = verify_suite("schwartz-zippel", seed=11, trials=4, workers=1)
    assert first.results[0].rows == second.results[0].rows
    assert first.to_document() == second.to_document()


def test_taylor_suite_measures_conversion_constants():
    (result,) = verify_suite("taylor-lemma", seed=0, trials=1, workers=1).results
    table = result.measured["conversion_constants"]
    assert len(table) == 12
    assert {row["t"] for row in table} == {1, 2, 3}


def test_table_has_one_row_per_suite():
    report = verify_suite("vandermonde", seed=2, trials=2, workers=1)
    assert [row["suite"] for row in report.table()] == ["vandermonde"]
    assert "max_Q_tilde" in report.results[0].measured


def test_unknown_suite_and_trial_count():
    with pytest.raises(ValidationError):
        verify_suite("ladder", trials=1)
    with pytest.raises(ValidationError):
        verify_suite(SUITES[0], trials=0)


def test_torus_dichotomy_suite_uses_the_default_cutoff():
    (result,) = verify_suite("torus-dichotomy", seed=5, trials=2, workers=1).results
    assert result.passed
    assert [row["cutoff"] for row in result.rows] == [12, 12]
