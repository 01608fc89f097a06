import pytest

from chain_disks import ChainModel, reconstruct_E, solve_curve
from chain_disks.verify import sample_model


@pytest.fixture(scope="session")
def cubic():
    return ChainModel.cubic_three(H=6)


@pytest.fixture(scope="session")
def cubic_curve(cubic):
    return solve_curve(cubic)


@pytest.fixture(scope="session")
def cubic_E(cubic_curve):
    return reconstruct_E(cubic_curve)


@pytest.fixture(scope="session")
def num_curve(cubic):
    return solve_curve(sample_model(cubic))


@pytest.fixture(scope="session")
def num_E(num_curve):
    return reconstruct_E(num_curve)


@pytest.fixture(scope="session")
def gaussian():
    return ChainModel.build([["1"], ["3"], ["1"]], ["1", "1"], H=6)


@pytest.fixture(scope="session")
def two_chain():
    return ChainModel.build([["2", "g1"], ["1", "g2"]], ["1"], H=6)
