"""
Report models and the composite verdict
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field


class Verdict(str, Enum):
    IDENTIFIABLE = "identifiable (structural, sampled)"
    LOCALLY_IDENTIFIABLE = "locally identifiable"
    INCONCLUSIVE = "inconclusive"
    UNSUPPORTED = "unsupported"


LOCAL_DOWNGRADE_NOTE = (
    "parameter identifiability is certified locally by a full column rank "
    "coefficient-map Jacobian at each sampled point; global uniqueness is not checked"
)
SUFFICIENT_ONLY_NOTE = (
    "the rank condition is sufficient only; failing it does not show the model "
    "is unidentifiable"
)
SWITCH_TIMES_NOTE = (
    "square-pulse inputs use incommensurable switch times as a heuristic for a "
    "sufficiently rich identifying input"
)


@dataclass(frozen=True)
class SampleOutcome:
    """What the verdict logic needs from one parameter point"""

    equilibrium_found: bool
    rank_passed: bool
    injective: bool
    valid: bool = True


def composite_verdict(
    n_params: int, outcomes: Sequence[SampleOutcome], unsupported: bool = False
) -> Tuple[Verdict, List[str]]:
    """Four-valued verdict from per-sample results; never upgrades local to global"""
    if unsupported:
        return Verdict.UNSUPPORTED, ["model or parameter point failed validation"]
    if not outcomes:
        return Verdict.INCONCLUSIVE, ["no parameter points were analyzed"]

    notes: List[str] = []
    invalid = [i for i, o in enumerate(outcomes) if not o.valid]
    if invalid:
        notes.append(f"parameter point failed validation at sample(s) {invalid}")
        return Verdict.INCONCLUSIVE, notes

    missing = [i for i, o in enumerate(outcomes) if not o.equilibrium_found]
    if missing:
        notes.append(f"no equilibrium found at sample(s) {missing}")
        return Verdict.INCONCLUSIVE, notes

    failed = [i for i, o in enumerate(outcomes) if not o.rank_passed]
    if failed:
        notes.append(f"rank condition not met at sample(s) {failed}")
        notes.append(SUFFICIENT_ONLY_NOTE)
        return Verdict.INCONCLUSIVE, notes

    if n_params == 0:
        return Verdict.IDENTIFIABLE, notes

    entangled = [i for i, o in enumerate(outcomes) if not o.injective]
    if entangled:
        notes.append(f"coefficient map not locally injective at sample(s) {entangled}")
        notes.append(SUFFICIENT_ONLY_NOTE)
        return Verdict.INCONCLUSIVE, notes

    notes.append(LOCAL_DOWNGRADE_NOTE)
    return Verdict.LOCALLY_IDENTIFIABLE, notes


class ModelDigest(BaseModel):
    source_sha256: str
    dimensions: Dict[str, int]
    state_names: List[str]
    input_names: List[str]
    param_names: List[str]
    tau_names: List[str]
    nu_names: List[str]


class EquilibriumBlock(BaseModel):
    """Everything computed at one equilibrium of one parameter point"""

    index: int
    equilibrium: Dict[str, Any]
    linear_model: Optional[Dict[str, Any]] = None
    rank: Optional[Dict[str, Any]] = None
    injectivity: Optional[Dict[str, Any]] = None
    scaling: Optional[Dict[str, Any]] = None
    rank_passed: bool = False
    injective: bool = False
    notes: List[str] = Field(default_factory=list)


class SampleBlock(BaseModel):
    index: int
    seed: Optional[int] = Field(None, description="Seed of the draw; None for the nominal point")
    point: Dict[str, List[float]]
    equilibria: List[EquilibriumBlock] = Field(default_factory=list)
    attempts: List[Dict[str, Any]] = Field(default_factory=list)
    violations: List[Dict[str, str]] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    def outcome(self) -> SampleOutcome:
        """A sample passes when any of its equilibria passes"""
        return SampleOutcome(
            equilibrium_found=bool(self.equilibria),
            rank_passed=any(e.rank_passed for e in self.equilibria),
            injective=any(e.rank_passed and e.injective for e in self.equilibria),
            valid=not self.violations,
        )


class AnalysisReport(BaseModel):
    tool_version: str
    generated_at: str
    model: ModelDigest
    verdict: Verdict
    verdict_notes: List[str] = Field(default_factory=list)
    violations: List[Dict[str, str]] = Field(default_factory=list)
    samples: List[SampleBlock] = Field(default_factory=list)
    z_samples: List[List[float]] = Field(default_factory=list)
    seeds: Dict[str, Any] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


class LinearizationReport(BaseModel):
    """Output of the linearize command"""

    tool_version: str
    generated_at: str
    model: ModelDigest
    point: Dict[str, List[float]]
    outcome: str
    linear_models: List[Dict[str, Any]] = Field(default_factory=list)
    attempts: List[Dict[str, Any]] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)
