"""
Pytest configuration for the pipeline and CLI tests
"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from config import RankConfig, RunConfig, SamplingConfig, SimulationConfig  # noqa: E402
from tools.model_parser_tool import parse_model_file  # noqa: E402

MODELS = ROOT / "models"


def load(name: str):
    return parse_model_file((MODELS / name).read_text(encoding="utf-8"))


@pytest.fixture
def models_dir():
    return MODELS


@pytest.fixture
def quick_config():
    """Two random parameter points and a short simulation horizon"""
    return RunConfig(
        sampling=SamplingConfig(n_samples=2),
        rank=RankConfig(n_random=2),
        simulation=SimulationConfig(T=2.0, h=0.01, eps_list=[1e-1, 1e-2, 1e-3]),
    )


@pytest.fixture
def model_named():
    """Load a bundled model by file name"""
    return load
