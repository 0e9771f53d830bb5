"""
Configuration for the delay-system identifiability toolkit
Environment-backed defaults plus the typed run configuration
"""

import logging
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

# Load environment variables
load_dotenv()


# Logging Configuration
class LogConfig:
    """Logging settings"""

    LEVEL = os.getenv("DELAYIDENT_LOG_LEVEL", "WARNING")
    FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


# Analysis defaults that may be overridden from the environment
class AnalysisDefaults:
    """Defaults shared by the CLI and the pipeline"""

    SEED = int(os.getenv("DELAYIDENT_SEED", "0"))

    # Random parameter points drawn for the structural verdict
    STRUCTURAL_SAMPLES = int(os.getenv("DELAYIDENT_SAMPLES", "5"))

    # Pseudo-random z values added after the fixed witnesses 2 and 1+i
    RANDOM_Z_SAMPLES = 14

    RANK_REL_TOL = 1e-10
    INJECTIVITY_REL_TOL = 1e-6

    EPS_LIST = (1e-1, 3e-2, 1e-2, 3e-3)


TOOL_VERSION = "0.1.0"


def configure_logging(level: Optional[str] = None) -> None:
    """Route library logging through rich, once per process"""
    from rich.logging import RichHandler

    logging.basicConfig(
        level=(level or LogConfig.LEVEL).upper(),
        format="%(message)s",
        datefmt=LogConfig.DATE_FORMAT,
        handlers=[RichHandler(rich_tracebacks=False, show_path=False)],
        force=True,
    )


# Typed run configuration


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SolverConfig(_Section):
    """Damped Newton multi-start settings for the equilibrium search"""

    tol_residual: float = Field(1e-12, gt=0)
    max_iters: int = Field(100, ge=1)
    n_starts: int = Field(8, ge=1)
    # one interval for every coordinate, or one per coordinate
    start_box: List[Tuple[float, float]] = Field(default_factory=lambda: [(-2.0, 2.0)])
    damping: float = Field(0.5, gt=0, lt=1)
    max_backtracks: int = Field(30, ge=1)
    seed: int = AnalysisDefaults.SEED
    distinct_tol: float = Field(1e-6, gt=0)

    @field_validator("start_box")
    @classmethod
    def _ordered_box(cls, value):
        if not value or any(lo > hi for lo, hi in value):
            raise ValueError("start_box intervals must satisfy lo <= hi")
        return value

    def box_for(self, n: int) -> List[Tuple[float, float]]:
        if len(self.start_box) == 1:
            return list(self.start_box) * n
        if len(self.start_box) != n:
            raise ValueError(f"start_box has {len(self.start_box)} intervals, model has {n} states")
        return list(self.start_box)


class RankConfig(_Section):
    rel_tol: float = Field(AnalysisDefaults.RANK_REL_TOL, gt=0, lt=1)
    n_random: int = Field(AnalysisDefaults.RANDOM_Z_SAMPLES, ge=0)
    seed: int = AnalysisDefaults.SEED
    extra_z: List[complex] = Field(default_factory=list)
    radius: Tuple[float, float] = (0.5, 3.0)
    arg_margin: float = Field(0.1, ge=0, lt=3.14)


class SamplingConfig(_Section):
    """Random parameter points for the structural (sampled) verdict"""

    n_samples: int = Field(AnalysisDefaults.STRUCTURAL_SAMPLES, ge=0)
    seed: int = AnalysisDefaults.SEED


class InjectivityConfig(_Section):
    rel_tol: float = Field(AnalysisDefaults.INJECTIVITY_REL_TOL, gt=0, lt=1)
    fd_step: float = Field(1e-6, gt=0)


class SimulationConfig(_Section):
    T: float = Field(10.0, gt=0)
    h: float = Field(1e-3, gt=0)
    eps_list: List[float] = Field(default_factory=lambda: list(AnalysisDefaults.EPS_LIST))
    input: Literal["square", "constant"] = "square"
    amplitude: float = 1.0
    scaling: bool = False

    @field_validator("eps_list")
    @classmethod
    def _eps_decreasing(cls, value):
        if len(value) < 3:
            raise ValueError("eps_list needs at least 3 values")
        if any(e <= 0 for e in value):
            raise ValueError("eps values must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("eps values must be strictly decreasing")
        return value


class RunConfig(_Section):
    solver: SolverConfig = Field(default_factory=SolverConfig)
    rank: RankConfig = Field(default_factory=RankConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    injectivity: InjectivityConfig = Field(default_factory=InjectivityConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)

    def echo(self) -> Dict:
        """JSON-ready dump with complex numbers written as [re, im]"""
        data = self.model_dump()
        data["rank"]["extra_z"] = [[z.real, z.imag] for z in self.rank.extra_z]
        return data


def _parse_value(text: str) -> Union[str, List[str]]:
    text = text.strip()
    if "," in text:
        return [part.strip() for part in text.split(",") if part.strip()]
    return text


def _coerce(section: str, key: str, raw) -> object:
    """Config files are untyped text; shape the few structured fields here"""
    if key == "start_box":
        values = [float(v) for v in (raw if isinstance(raw, list) else raw.split())]
        if len(values) % 2:
            raise ValueError("start_box needs lo, hi pairs")
        return [(values[i], values[i + 1]) for i in range(0, len(values), 2)]
    if key == "radius":
        return tuple(float(v) for v in raw)
    if key == "extra_z":
        items = raw if isinstance(raw, list) else [raw]
        return [complex(item.replace(" ", "").replace("i", "j")) for item in items]
    if key == "eps_list":
        items = raw if isinstance(raw, list) else [raw]
        return [float(item) for item in items]
    return raw


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict] = None
) -> RunConfig:
    """Read a sectioned config file, apply CLI overrides, validate

    Raises ConfigError with every schema violation.
    """
    from tools.errors import ConfigError, Diagnostic
    from tools.model_parser_tool import read_sections

    data: Dict[str, Dict] = {}
    if path is not None:
        source = Path(path).read_text(encoding="utf-8")
        diagnostics: List[Diagnostic] = []
        for section in read_sections(source, diagnostics):
            entries = data.setdefault(section.name, {})
            for line in section.lines:
                if "=" not in line.text:
                    diagnostics.append(
                        Diagnostic("syntax", "config entries read 'key = value'", line.span)
                    )
                    continue
                key, value = line.text.split("=", 1)
                try:
                    entries[key.strip()] = _coerce(section.name, key.strip(), _parse_value(value))
                except ValueError as exc:
                    diagnostics.append(Diagnostic("syntax", str(exc), line.span))
        if diagnostics:
            raise ConfigError("; ".join(d.render(source) for d in diagnostics))

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        data.setdefault(section, {})[key] = value

    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc}") from None
