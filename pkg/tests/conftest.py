import pytest

from newtonheight.oscillatory import CutoffSpec
from newtonheight.parser import parse_polynomial


@pytest.fixture
def parse():
    return parse_polynomial


@pytest.fixture
def perturbed_parabola():
    return parse_polynomial("(x2-x1^2)^2+x1^5")


@pytest.fixture
def cutoff():
    return CutoffSpec(0.5)
