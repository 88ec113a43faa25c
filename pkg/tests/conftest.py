import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("vectrans", deadline=None, max_examples=25)
settings.load_profile("vectrans")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
