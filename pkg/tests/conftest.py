import pytest

from planted.core import RandomStream


@pytest.fixture
def rng():
    return RandomStream(20240817)
