"""
Identifiability Pipeline - Orchestrates equilibrium, linearization, rank test,
coefficient-map injectivity and simulation checks for one model file
"""

import logging
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import TOOL_VERSION, RunConfig
from tools.dde_sim_tool import ScalingReport, Trajectory, scaling_experiment, simulate_nonlinear
from tools.equilibrium_tool import EquilibriumSearch, search_equilibria
from tools.errors import (
    DelayIdentError,
    DomainError,
    SimulationError,
    UnsupportedModelError,
)
from tools.injectivity_tool import (
    coeff_map_jacobian,
    coefficient_labels,
    injectivity_verdict,
)
from tools.linearization_tool import LinearDelayModel, linearize
from tools.model_ir_tool import (
    EquilibriumPoint,
    ModelFile,
    ModelSpec,
    ParameterPoint,
    sample_point,
    validate,
)
from tools.rank_test_tool import sweep_rank, z_samples_for
from tools.signals_tool import InputSignal, make_square_pulse

from .report_models import (
    SWITCH_TIMES_NOTE,
    AnalysisReport,
    EquilibriumBlock,
    LinearizationReport,
    ModelDigest,
    SampleBlock,
    Verdict,
    composite_verdict,
)

logger = logging.getLogger(__name__)


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _rejected_draw(index: int, seed: int) -> SampleBlock:
    message = "no draw from the declared boxes satisfies the delay ordering"
    return SampleBlock(
        index=index,
        seed=seed,
        point={},
        violations=[{"code": "sampling", "message": message}],
        notes=[message],
    )


def model_digest(spec: ModelSpec) -> ModelDigest:
    return ModelDigest(
        source_sha256=spec.source_digest,
        dimensions=spec.dimensions(),
        state_names=list(spec.state_names),
        input_names=list(spec.input_names),
        param_names=list(spec.param_names),
        tau_names=list(spec.tau_names),
        nu_names=list(spec.nu_names),
    )


def sample_seeds(seed: int, count: int) -> List[int]:
    """Independent per-draw seeds derived from one base seed"""
    if count == 0:
        return []
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


class IdentifiabilityPipeline:
    """
    Runs the analysis stages in order for the nominal point and every
    sampled parameter point, and assembles the report.
    """

    def __init__(self, config: Optional[RunConfig] = None):
        """
        Initialize the pipeline.

        Args:
            config: Effective run configuration (defaults if omitted)
        """
        self.config = config or RunConfig()
        self.z_samples = z_samples_for(self.config.rank)

    # stages

    def perturbation_signal(self, spec: ModelSpec) -> InputSignal:
        sim = self.config.simulation
        if sim.input == "square":
            return make_square_pulse(spec.k, sim.T, sim.amplitude)
        return InputSignal.constant([sim.amplitude] * spec.k)

    def analyze_equilibrium(
        self,
        spec: ModelSpec,
        point: ParameterPoint,
        eq: EquilibriumPoint,
        index: int,
        with_scaling: bool = False,
    ) -> EquilibriumBlock:
        block = EquilibriumBlock(index=index, equilibrium=eq.to_dict())
        try:
            model = linearize(spec, point, eq)
        except DomainError as exc:
            block.notes.append(f"linearization failed: {exc}")
            return block
        block.linear_model = model.to_dict()

        verdict = sweep_rank(model, self.z_samples, self.config.rank.rel_tol)
        block.rank = verdict.to_dict()
        block.rank_passed = verdict.identifiable

        jac = coeff_map_jacobian(spec, point, eq, self.config.injectivity, self.config.solver)
        report = injectivity_verdict(
            jac,
            self.config.injectivity.rel_tol,
            param_names=spec.param_names,
            labels=coefficient_labels(spec),
            probe=point,
        )
        block.injectivity = report.to_dict()
        block.injective = report.locally_injective
        if report.entangled:
            block.notes.append(f"entangled parameters: {', '.join(report.entangled)}")

        if with_scaling:
            block.scaling = self._scaling(spec, point, eq, model)
        return block

    def _scaling(
        self, spec: ModelSpec, point: ParameterPoint, eq: EquilibriumPoint, model: LinearDelayModel
    ) -> Dict:
        sim = self.config.simulation
        try:
            report = self.scaling(spec, point, eq, model)
        except DelayIdentError as exc:
            logger.warning("scaling experiment failed: %s", exc)
            return {"error": str(exc), "T": sim.T, "h": sim.h}
        data = report.to_dict()
        data["notes"].append(SWITCH_TIMES_NOTE)
        return data

    def scaling(
        self, spec: ModelSpec, point: ParameterPoint, eq: EquilibriumPoint, model: LinearDelayModel
    ) -> ScalingReport:
        sim = self.config.simulation
        return scaling_experiment(
            spec,
            point,
            eq,
            model,
            self.perturbation_signal(spec),
            sim.eps_list,
            sim.T,
            sim.h,
        )

    def analyze_point(
        self,
        spec: ModelSpec,
        point: ParameterPoint,
        index: int,
        seed: Optional[int] = None,
        with_scaling: bool = False,
    ) -> SampleBlock:
        block = SampleBlock(index=index, seed=seed, point=point.to_dict())
        violations = validate(spec, point)
        if violations:
            block.violations = [{"code": v.code, "message": v.message} for v in violations]
            block.notes += [v.message for v in violations]
            return block

        search = search_equilibria(spec, point, self.config.solver)
        block.attempts = [a.to_dict() for a in search.attempts]
        if not search.found:
            block.notes.append("no equilibrium found")
            return block
        for eq_index, eq in enumerate(search.equilibria):
            block.equilibria.append(
                self.analyze_equilibrium(spec, point, eq, eq_index, with_scaling)
            )
        return block

    # entry points

    def analyze(self, model: ModelFile) -> AnalysisReport:
        """Full analysis: nominal point plus the configured number of sampled points"""
        spec = model.spec
        sampling = self.config.sampling
        seeds = sample_seeds(sampling.seed, sampling.n_samples)

        report = AnalysisReport(
            tool_version=TOOL_VERSION,
            generated_at=_timestamp(),
            model=model_digest(spec),
            verdict=Verdict.INCONCLUSIVE,
            z_samples=[[z.real, z.imag] for z in self.z_samples],
            seeds={
                "sampling": sampling.seed,
                "samples": seeds,
                "solver": self.config.solver.seed,
                "rank": self.config.rank.seed,
            },
            config=self.config.echo(),
        )

        violations = validate(spec, model.nominal)
        if violations:
            report.violations = [{"code": v.code, "message": v.message} for v in violations]
            report.verdict, report.verdict_notes = composite_verdict(spec.p, [], unsupported=True)
            return report

        points: List[Tuple[Optional[ParameterPoint], Optional[int]]] = [(model.nominal, None)]
        for seed in seeds:
            try:
                points.append((sample_point(model, np.random.default_rng(seed)), seed))
            except UnsupportedModelError as exc:
                logger.warning("sample with seed %d rejected: %s", seed, exc)
                points.append((None, seed))

        for index, (point, seed) in enumerate(points):
            if point is None:
                report.samples.append(_rejected_draw(index, seed))
                continue
            logger.info("analyzing sample %d of %d", index + 1, len(points))
            report.samples.append(
                self.analyze_point(
                    spec,
                    point,
                    index,
                    seed,
                    with_scaling=self.config.simulation.scaling and index == 0,
                )
            )

        report.verdict, report.verdict_notes = composite_verdict(
            spec.p, [s.outcome() for s in report.samples]
        )
        return report

    def linearize(self, model: ModelFile) -> LinearizationReport:
        """Equilibria and coefficient matrices at the nominal point only"""
        spec, point = model.spec, model.nominal
        report = LinearizationReport(
            tool_version=TOOL_VERSION,
            generated_at=_timestamp(),
            model=model_digest(spec),
            point=point.to_dict(),
            outcome="linearized",
        )
        violations = validate(spec, point)
        if violations:
            report.outcome = "unsupported"
            report.notes = [v.message for v in violations]
            return report

        search: EquilibriumSearch = search_equilibria(spec, point, self.config.solver)
        report.attempts = [a.to_dict() for a in search.attempts]
        if not search.found:
            report.outcome = "no equilibrium found"
            return report
        for eq in search.equilibria:
            try:
                report.linear_models.append(linearize(spec, point, eq).to_dict())
            except DomainError as exc:
                report.notes.append(f"equilibrium {list(eq.x_e)}: {exc}")
        return report

    def simulate(
        self, model: ModelFile, eq: Optional[EquilibriumPoint] = None
    ) -> Tuple[Trajectory, EquilibriumPoint]:
        """Nominal point from its first equilibrium with u = u_bar + the configured perturbation"""
        spec, point = model.spec, model.nominal
        if eq is None:
            search = search_equilibria(spec, point, self.config.solver)
            if not search.found:
                raise SimulationError("no equilibrium found to start the simulation from")
            eq = search.equilibria[0]
        sim = self.config.simulation
        u = self.perturbation_signal(spec).offset(point.u_bar)
        return simulate_nonlinear(spec, point, eq.x_e, u, sim.T, sim.h), eq

    def nominal_scaling(self, model: ModelFile) -> ScalingReport:
        """eps-scaling experiment at the first equilibrium of the nominal point"""
        spec, point = model.spec, model.nominal
        search = search_equilibria(spec, point, self.config.solver)
        if not search.found:
            raise SimulationError("no equilibrium found for the scaling experiment")
        eq = search.equilibria[0]
        return self.scaling(spec, point, eq, linearize(spec, point, eq))
