"""
Pytest configuration and shared fixtures
"""

import sys
from pathlib import Path

import pytest

# Project root on the path so ``tools`` and ``config`` import as packages
ROOT = Path(__file__).parent.parent.parent
sys.path.insert(0, str(ROOT))

from tools.model_parser_tool import parse_model_file  # noqa: E402

MODELS = ROOT / "models"


def load(name: str):
    return parse_model_file((MODELS / name).read_text(encoding="utf-8"))


@pytest.fixture
def four_state():
    """Four-state delay model, no parameters, u_bar = (1, 0)"""
    return load("four_state.model")


@pytest.fixture
def four_state_params():
    """Four-state delay model with thirteen parameters, u_bar = (1, 0.5)"""
    return load("four_state_params.model")


@pytest.fixture
def linear_model():
    """dx/dt = -x + u with u_bar = 3"""
    return load("linear.model")


@pytest.fixture
def unexcited_model():
    """Two states, input multiplied by zero"""
    return load("unexcited.model")


@pytest.fixture
def product_model():
    """dx/dt = p1*p2*x + u"""
    return load("product.model")


@pytest.fixture
def no_equilibrium_model():
    """dx/dt = x^2 + 1"""
    return load("no_equilibrium.model")


@pytest.fixture
def delayed_decay():
    """dx/dt = -x(t - 1), used against the method-of-steps closed form"""
    return parse_model_file(
        "[states]\nx\n[delays]\nstate tau = 1\n[equations]\ndx = -delay(x, tau)\n"
    )


def pytest_configure(config):
    """Configure pytest with custom settings"""
    config.addinivalue_line("markers", "unit: mark test as a unit test (fast)")
    config.addinivalue_line(
        "markers", "integration: mark test as an end-to-end test over bundled models"
    )
    config.addinivalue_line("markers", "slow: mark test as slow running")


def pytest_collection_modifyitems(config, items):
    """Modify test collection to add markers automatically"""
    for item in items:
        # Add 'unit' marker to tests that don't have 'integration' marker
        if "integration" not in item.keywords and "slow" not in item.keywords:
            item.add_marker(pytest.mark.unit)
