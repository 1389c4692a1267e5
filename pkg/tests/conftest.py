import math

import pytest
from hypothesis import settings

from spinmech.elastic_modes import DIAMOND, REFERENCE_PLATE, fundamental_compression_mode

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def reference_mode():
    return fundamental_compression_mode(REFERENCE_PLATE, DIAMOND, gamma_m=TWO_PI * 83.0)
