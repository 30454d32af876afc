import math

import numpy as np
import pytest

from gkpmod import hilbert, modular


@pytest.fixture(scope="session")
def space500():
    return hilbert.FockSpace(500)


@pytest.fixture(scope="session")
def space300():
    return hilbert.FockSpace(300)


@pytest.fixture(scope="session")
def space200():
    return hilbert.FockSpace(200)


@pytest.fixture(scope="session")
def vac500(space500):
    return hilbert.vacuum(space500)


@pytest.fixture(scope="session")
def prep3():
    return modular.AncillaPrep(math.sqrt(3.0))


@pytest.fixture(scope="session")
def engine3(prep3, space500):
    return modular.get_engine(prep3, space500, 20)


def mc_stderr(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    return float(samples.std(ddof=1) / math.sqrt(len(samples)))
