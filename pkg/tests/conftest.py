import zlib

import numpy as np
import pytest

from equiscreen.scenario import canonical_scenario


@pytest.fixture(scope="session")
def s1():
    return canonical_scenario("s1")


@pytest.fixture(scope="session")
def s1_product():
    return canonical_scenario("s1_product")


@pytest.fixture(scope="session")
def s1_flat():
    return canonical_scenario("s1_flat")


@pytest.fixture()
def rng(request):
    # per-test stream, stable across runs and independent of execution order
    seed = zlib.crc32(request.node.name.encode())
    return np.random.default_rng(seed)
