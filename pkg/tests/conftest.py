import numpy as np
import pytest

from invexreg.models import mlp_init, synth_affine, synth_classification, synth_mlp

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def affine():
    return synth_affine(20, 50, 7)


@pytest.fixture(scope="session")
def sigmoid():
    return synth_classification(64, 8, 42)


@pytest.fixture(scope="session")
def mlp():
    return synth_mlp(32, 4, 8, 3)


@pytest.fixture(scope="session")
def bundled(affine, sigmoid, mlp):
    """name -> (map, start x0) for the three bundled models."""
    return {
        "affine": (affine, np.zeros(affine.input_dim)),
        "sigmoid": (sigmoid, np.zeros(sigmoid.input_dim)),
        "mlp": (mlp, mlp_init(mlp, 3)),
    }


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
