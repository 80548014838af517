import numpy as np
import pytest

from rmestab.sampler import SamplerConfig, sample_fcs


def combined_se(*estimates):
    return float(np.sqrt(sum(e.se ** 2 for e in estimates)))


@pytest.fixture(scope="session")
def seir_fcs():
    return sample_fcs("seir", config=SamplerConfig(10_000, seed=7))


@pytest.fixture(scope="session")
def lorenz_fcs():
    return sample_fcs("lorenz", config=SamplerConfig(10_000, seed=11))
