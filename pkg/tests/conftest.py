from __future__ import annotations

import numpy as np
import pytest

from cartanlab import models


@pytest.fixture(scope="session")
def circle():
    return models.counterexample_s1()


@pytest.fixture(scope="session")
def torus():
    return models.flat_torus()


@pytest.fixture(scope="session")
def sphere():
    return models.sphere2()


@pytest.fixture(scope="session")
def hyperbolic():
    return models.hyperbolic2()


@pytest.fixture(scope="session")
def euclid():
    return models.euclidean2()


@pytest.fixture(scope="session")
def ellipsoid():
    return models.ellipsoid2()


@pytest.fixture(scope="session")
def so3_action():
    return models.so3_r3_model()


@pytest.fixture(scope="session")
def translations2():
    return models.translations_model(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
