"""
Integration tests for the identifiability pipeline
"""

import json

import numpy as np
import pytest

from pipeline.identifiability_pipeline import IdentifiabilityPipeline, sample_seeds
from pipeline.report_models import (
    LOCAL_DOWNGRADE_NOTE,
    SUFFICIENT_ONLY_NOTE,
    SWITCH_TIMES_NOTE,
    Verdict,
)
from tools.errors import SimulationError
from tools.model_ir_tool import ParameterPoint
from tools.model_parser_tool import parse_model_file

pytestmark = pytest.mark.integration


class TestAnalyze:
    """Verdicts on the bundled models"""

    def test_four_state_identifiable(self, model_named, quick_config):
        """Parameter-free model passes at every sampled point"""
        report = IdentifiabilityPipeline(quick_config).analyze(model_named("four_state.model"))
        assert report.verdict is Verdict.IDENTIFIABLE
        assert report.verdict_notes == []
        assert len(report.samples) == 3
        assert report.samples[0].seed is None
        for sample in report.samples:
            (block,) = sample.equilibria
            assert block.rank_passed
            assert block.rank["per_z"][0]["rank"] == 4
            u1 = sample.point["u_bar"][0]
            np.testing.assert_allclose(block.equilibrium["x_e"], [0, 0, -u1, 0], atol=1e-9)

    def test_product_inconclusive(self, model_named, quick_config):
        """Rank passes but only p1*p2 is visible"""
        report = IdentifiabilityPipeline(quick_config).analyze(model_named("product.model"))
        assert report.verdict is Verdict.INCONCLUSIVE
        assert "not locally injective" in report.verdict_notes[0]
        assert SUFFICIENT_ONLY_NOTE in report.verdict_notes
        block = report.samples[0].equilibria[0]
        assert block.rank_passed
        assert not block.injective
        assert block.injectivity["entangled"] == ["p1", "p2"]

    def test_unexcited_inconclusive(self, model_named, quick_config):
        """B = 0 fails the rank test everywhere"""
        report = IdentifiabilityPipeline(quick_config).analyze(model_named("unexcited.model"))
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.verdict_notes[0].startswith("rank condition not met")
        assert SUFFICIENT_ONLY_NOTE in report.verdict_notes

    def test_no_equilibrium_inconclusive(self, model_named, quick_config):
        """x' = x^2 + 1 never rests"""
        report = IdentifiabilityPipeline(quick_config).analyze(model_named("no_equilibrium.model"))
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.verdict_notes[0].startswith("no equilibrium found")
        assert report.samples[0].notes == ["no equilibrium found"]
        assert report.samples[0].attempts

    def test_non_identity_output_unsupported(self, quick_config):
        """Only full-state outputs are analyzed"""
        model = parse_model_file("[states]\nx, y\n[equations]\ndx = -x\ndy = -y\n[output]\n1, 1\n")
        report = IdentifiabilityPipeline(quick_config).analyze(model)
        assert report.verdict is Verdict.UNSUPPORTED
        assert report.violations[0]["code"] == "output-map"
        assert report.samples == []

    @pytest.mark.slow
    def test_four_state_params_locally_identifiable(self, model_named):
        """Thirteen parameters recovered locally"""
        from config import RankConfig, RunConfig, SamplingConfig

        config = RunConfig(sampling=SamplingConfig(n_samples=1), rank=RankConfig(n_random=2))
        report = IdentifiabilityPipeline(config).analyze(model_named("four_state_params.model"))
        assert report.verdict is Verdict.LOCALLY_IDENTIFIABLE
        assert LOCAL_DOWNGRADE_NOTE in report.verdict_notes

    def test_deterministic(self, model_named, quick_config):
        """Same config, same report apart from the timestamp"""
        model = model_named("product.model")
        first = IdentifiabilityPipeline(quick_config).analyze(model)
        second = IdentifiabilityPipeline(quick_config).analyze(model)
        assert first.model_dump(exclude={"generated_at"}) == second.model_dump(
            exclude={"generated_at"}
        )

    def test_report_is_json(self, model_named, quick_config):
        """The report serializes with seeds and the effective config"""
        report = IdentifiabilityPipeline(quick_config).analyze(model_named("linear.model"))
        data = json.loads(report.to_json())
        assert data["verdict"] == Verdict.IDENTIFIABLE.value
        assert data["seeds"]["samples"] == sample_seeds(quick_config.sampling.seed, 2)
        assert data["config"]["sampling"]["n_samples"] == 2
        assert len(data["z_samples"]) == 4

    def test_scaling_attached_to_nominal_point(self, model_named, quick_config):
        """Only the nominal sample carries the eps experiment"""
        config = quick_config.model_copy(
            update={"simulation": quick_config.simulation.model_copy(update={"scaling": True})}
        )
        report = IdentifiabilityPipeline(config).analyze(model_named("linear.model"))
        scaling = report.samples[0].equilibria[0].scaling
        assert scaling["eps"] == [1e-1, 1e-2, 1e-3]
        assert SWITCH_TIMES_NOTE in scaling["notes"]
        assert report.samples[1].equilibria[0].scaling is None


class TestSampleSeeds:
    """Tests for per-draw seed derivation"""

    def test_stable_and_distinct(self):
        """Derived seeds repeat for the same base and differ from each other"""
        seeds = sample_seeds(7, 5)
        assert seeds == sample_seeds(7, 5)
        assert len(set(seeds)) == 5
        assert sample_seeds(7, 0) == []


class TestLinearizeAndSimulate:
    """Tests for the single-point entry points"""

    def test_linearize_four_state(self, model_named):
        """One equilibrium, five A matrices and one B matrix"""
        report = IdentifiabilityPipeline().linearize(model_named("four_state.model"))
        assert report.outcome == "linearized"
        (model,) = report.linear_models
        assert len(model["A"]) == 5
        assert len(model["B"]) == 1

    def test_linearize_without_equilibrium(self, model_named):
        """The outcome names the failure"""
        report = IdentifiabilityPipeline().linearize(model_named("no_equilibrium.model"))
        assert report.outcome == "no equilibrium found"
        assert report.linear_models == []

    def test_simulate_from_equilibrium(self, model_named, quick_config):
        """The run starts at x_e and covers [0, T]"""
        trajectory, eq = IdentifiabilityPipeline(quick_config).simulate(model_named("linear.model"))
        assert eq.x_e == pytest.approx((3.0,))
        assert trajectory.x[0, 0] == pytest.approx(3.0)
        assert not trajectory.truncated
        assert trajectory.T == pytest.approx(2.0)

    def test_simulate_without_equilibrium(self, model_named, quick_config):
        """Nothing to start from"""
        with pytest.raises(SimulationError):
            IdentifiabilityPipeline(quick_config).simulate(model_named("no_equilibrium.model"))

    def test_nominal_scaling_linear_model(self, model_named, quick_config):
        """Linear models have slope one and no remainder"""
        report = IdentifiabilityPipeline(quick_config).nominal_scaling(model_named("linear.model"))
        assert report.slope_deviation == pytest.approx(1.0, abs=1e-6)


class TestScalingFailure:
    """A failed experiment is recorded, not raised"""

    def test_error_recorded_in_block(self, mocker, model_named, quick_config):
        """The verdict still comes from the rank and injectivity stages"""
        mocker.patch.object(
            IdentifiabilityPipeline,
            "scaling",
            side_effect=SimulationError("perturbation has zero norm"),
        )
        config = quick_config.model_copy(
            update={"simulation": quick_config.simulation.model_copy(update={"scaling": True})}
        )
        report = IdentifiabilityPipeline(config).analyze(model_named("linear.model"))
        scaling = report.samples[0].equilibria[0].scaling
        assert scaling["error"] == "perturbation has zero norm"
        assert report.verdict is Verdict.IDENTIFIABLE


class TestInvalidSamples:
    """Points that fail validation are reported as such"""

    def test_analyze_point_records_violations(self, model_named, quick_config):
        """Out-of-order delays are listed on the sample block"""
        model = model_named("four_state.model")
        point = model.nominal
        bad = ParameterPoint(
            p_s=point.p_s, tau=(0.5, 1.6, 1.5, 2.0), nu=point.nu, u_bar=point.u_bar
        )
        block = IdentifiabilityPipeline(quick_config).analyze_point(model.spec, bad, 1)
        assert [v["code"] for v in block.violations] == ["delay-order"]
        assert block.equilibria == [] and block.attempts == []
        assert not block.outcome().valid

    def test_unsatisfiable_boxes(self, quick_config):
        """Boxes that always break the delay ordering leave only the nominal point valid"""
        model = parse_model_file(
            "[states]\nx\n[inputs]\nu = 1\n[delays]\nstate a = 0.5 in [1.2, 1.3]\n"
            "state b = 1.0 in [0.9, 1.1]\n[equations]\n"
            "dx = -x + 0.1*delay(x, a) + 0.1*delay(x, b) + u\n"
        )
        report = IdentifiabilityPipeline(quick_config).analyze(model)
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.verdict_notes == ["parameter point failed validation at sample(s) [1, 2]"]
        assert report.samples[0].violations == []
        assert report.samples[1].violations[0]["code"] == "sampling"
        assert report.samples[2].seed == sample_seeds(quick_config.sampling.seed, 2)[1]
