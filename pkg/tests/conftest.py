import numpy as np
import pytest

from procunc import channels as ch
from procunc import tester as tst


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mub_povms():
    return ch.computational_povm(2), ch.fourier_povm(2)


@pytest.fixture(scope="session")
def mub_state_testers(mub_povms):
    z, x = mub_povms
    return tst.state_tester(z, "Z"), tst.state_tester(x, "X")


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return g @ g.conj().T


def random_herm(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + g.conj().T) / 2
