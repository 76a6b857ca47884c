import numpy as np
import pytest

import support


@pytest.fixture
def table1():
    return support.table1_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
