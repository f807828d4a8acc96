import csv
import json
from fractions import Fraction
from pathlib import Path

import jsonschema
import pytest

from newtonheight.config import DEFAULTS
from newtonheight.report import (
    KNAPP_COLUMNS,
    SHELL_COLUMNS,
    analyze,
    calculate_digest,
    verify_decay,
    verify_integrability,
    verify_knapp,
    write_csv,
    write_tables,
)
from tests.cases import CORPUS

SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "report_schema.json").read_text())


@pytest.mark.parametrize("expression, h, nu, pc_prime", CORPUS)
def test_report_matches_schema(expression, h, nu, pc_prime):
    payload = analyze(expression).to_dict()
    jsonschema.validate(payload, SCHEMA)
    assert payload["heightData"]["h"] == h
    assert payload["heightData"]["nu"] == nu
    assert payload["criticalExponents"]["restrictionPcPrime"] == pc_prime
    assert "timestamp" in payload


def test_perturbed_parabola_report():
    payload = analyze("(x2-x1^2)^2+x1^5", timestamp=False).to_dict()
    assert payload["polynomial"] == str(analyze("x2^2 - 2*x1^2*x2 + x1^4 + x1^5").polynomial)
    assert payload["distance"] == "4/3"
    assert payload["adaptedness"]["adapted"] is False
    assert payload["rootJet"] == [{"coefficient": "1", "exponent": 2}]
    assert payload["rHeight"] == "4/3"
    assert payload["singularityClass"] == "A(4)"
    assert payload["augmentedPolyhedron"]["intersection"] == ["-2/3", "7/3"]
    assert [check["clusterSize"] for check in payload["clusterIdentityCheck"]] == [2]


def test_linearly_adaptable_report_has_no_augmented_polyhedron():
    payload = analyze("x1^2*x2^2", timestamp=False).to_dict()
    assert payload["augmentedPolyhedron"] is None
    assert payload["rHeight"] is None
    assert payload["rootJet"] == []


def test_digest_ignores_timestamp():
    stamped = analyze("x1^4+x2^2").to_dict()
    bare = analyze("x1^4+x2^2", timestamp=False).to_dict()
    assert "timestamp" not in bare
    assert stamped["digest"] == bare["digest"] == calculate_digest(stamped)
    assert analyze("x1^4+x2^2", timestamp=False).to_json() == analyze("x1^4+x2^2", timestamp=False).to_json()


def test_digest_changes_with_input():
    assert analyze("x1^4+x2^2").to_dict()["digest"] != analyze("x1^6+x2^2").to_dict()["digest"]


def test_write_csv(tmp_path):
    rows = [{"k": 4, "term": 0.5, "extra": "dropped"}, {"k": 5, "term": 0.25, "extra": "dropped"}]
    path = write_csv(tmp_path / "shells.csv", SHELL_COLUMNS, rows)
    with open(path, newline="") as handle:
        read = list(csv.DictReader(handle))
    assert read == [{"k": "4", "term": "0.5"}, {"k": "5", "term": "0.25"}]


def test_knapp_summary_tables(tmp_path):
    report = analyze("(x2-x1^2)^4", timestamp=False)
    config = dict(DEFAULTS, knapp_samples=10_000)
    summary = verify_knapp(report, config, "horizontal", range(4, 12))
    assert summary.passed
    assert summary.expected["lowerBoundPcPrime"] == "8"
    assert summary.observed["c1"] == pytest.approx(1.0)
    assert abs(summary.observed["growth"]) < 1e-9

    files = write_tables(summary, tmp_path / "out")
    assert files == [str(tmp_path / "out" / "knapp.csv")]
    with open(files[0], newline="") as handle:
        reader = csv.DictReader(handle)
        assert reader.fieldnames == KNAPP_COLUMNS
        assert len(list(reader)) == 8
    assert summary.to_dict()["files"] == files


def test_integrability_summary_records_prediction():
    report = analyze("x1^4+x2^2", timestamp=False)
    config = dict(DEFAULTS, sublevel_grid=256, eps_min=2.0**-12)
    summary = verify_integrability(report, config, "4/3")
    assert summary.expected == {"convergent": False, "boundary": True, "h": "4/3"}
    assert summary.observed["p"] == str(Fraction(4, 3))
    assert not summary.inconclusive
    assert summary.passed == (summary.observed["numericTrend"] != "convergent")


def test_decay_summary_checks_the_fitted_log_power():
    report = analyze("x1^2+x2^2", timestamp=False)
    summary = verify_decay(report, dict(DEFAULTS, threads=1))
    assert summary.passed
    assert summary.expected == {"slope": "-1", "logPower": 0}
    assert summary.observed["fixedLogPower"] == 0
    assert summary.observed["logPower"] < 0.5
    assert summary.observed["jointSlope"] == pytest.approx(-1.0, abs=0.05)
