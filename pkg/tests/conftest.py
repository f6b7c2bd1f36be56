import numpy as np
import pytest

from scmavlc import fixtures
from scmavlc.model import CodebookSet, SystemParams, build_factor_graph


@pytest.fixture
def ls_j3():
    return fixtures.load("ls-j3")


@pytest.fixture
def dr_j3():
    return fixtures.load("dr-j3")


@pytest.fixture
def ls_j6():
    return fixtures.load("ls-j6")


@pytest.fixture
def binary_set():
    """One user, one resource, symbols {0, 0.3}."""
    params = SystemParams(K=1, J=1, M=2, N=1, sigma2=0.01, varsigma2=0.0, Pe=1.0)
    graph = build_factor_graph(1, 1, 1)
    return CodebookSet(params, graph, [np.array([[0.0, 0.3]])])
