import numpy as np
import pytest

from fieldnet import build_farmer_graph, build_king_graph, rothamsted_layout


@pytest.fixture(scope="session")
def layout():
    return rothamsted_layout()


@pytest.fixture(scope="session")
def king(layout):
    return build_king_graph(layout)


@pytest.fixture(scope="session")
def farmer(layout):
    return build_farmer_graph(layout)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def equi_design(rng, n=84, m=21):
    from fieldnet import Design

    return Design(rng.permutation(np.arange(n) % m) + 1, m)
