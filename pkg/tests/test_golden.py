"""
Golden summaries of the analysis report for every bundled model

Set DELAYIDENT_UPDATE_GOLDEN=1 to rewrite the files from the current code.
"""

import json
import os
from pathlib import Path

import pytest

from pipeline.identifiability_pipeline import IdentifiabilityPipeline

pytestmark = pytest.mark.integration

GOLDEN = Path(__file__).parent / "golden"


def summarize(report) -> dict:
    """The stable part of a report: verdict, notes, and the nominal equilibrium"""
    nominal = report.samples[0].equilibria[0] if report.samples[0].equilibria else None
    return {
        "dimensions": report.model.dimensions,
        "verdict": report.verdict.value,
        "verdict_notes": report.verdict_notes,
        "equilibria_per_sample": [len(s.equilibria) for s in report.samples],
        "nominal": None
        if nominal is None
        else {
            "x_e": [round(v, 6) for v in nominal.equilibrium["x_e"]],
            "rank_passed": nominal.rank_passed,
            "injective": nominal.injective,
            "entangled": nominal.injectivity["entangled"],
        },
    }


@pytest.mark.parametrize(
    "name",
    [
        "four_state",
        pytest.param("four_state_params", marks=pytest.mark.slow),
        "linear",
        "no_equilibrium",
        "product",
        "unexcited",
    ],
)
def test_report_matches_golden(name, model_named, quick_config):
    """Two sampled points plus the nominal one, quick rank sweep"""
    report = IdentifiabilityPipeline(quick_config).analyze(model_named(f"{name}.model"))
    actual = summarize(report)
    path = GOLDEN / f"{name}.json"
    if os.getenv("DELAYIDENT_UPDATE_GOLDEN") == "1":
        path.write_text(json.dumps(actual, indent=2) + "\n", encoding="utf-8")

    expected = json.loads(path.read_text(encoding="utf-8"))
    nominal, expected_nominal = actual.pop("nominal"), expected.pop("nominal")
    assert actual == expected
    if expected_nominal is None:
        assert nominal is None
        return
    assert nominal["x_e"] == pytest.approx(expected_nominal.pop("x_e"), abs=1e-5)
    nominal.pop("x_e")
    assert nominal == expected_nominal
