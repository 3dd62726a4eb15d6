import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from optcert.mesh import build_uniform  # noqa: E402


@pytest.fixture(scope="session")
def mesh4():
    return build_uniform(4)


@pytest.fixture(scope="session")
def mesh8():
    return build_uniform(8)


@pytest.fixture(scope="session")
def mesh16():
    return build_uniform(16)


@pytest.fixture(scope="session")
def mesh32():
    return build_uniform(32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def A1(x):
    return 2.0 * np.sin(2.0 * np.pi * x[:, 0]) * np.sin(2.0 * np.pi * x[:, 1])
