import numpy as np
import pytest

from qec.color_code import build_layout, build_memory_circuit


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def d3_layout():
    return build_layout(3)


@pytest.fixture(scope="session")
def d3_circuit(d3_layout):
    return build_memory_circuit(d3_layout, 1)


@pytest.fixture(scope="session")
def d5_layout():
    return build_layout(5)
