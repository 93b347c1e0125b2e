import numpy as np
import pytest

from eqforge.signals import ImpulseResponse

RATE = 16000


def make_ir(samples, rate=RATE) -> ImpulseResponse:
    return ImpulseResponse(np.asarray(samples, dtype=np.float64), rate)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)
