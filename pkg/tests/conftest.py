import numpy as np
import pytest

from tools.hermitian import AlmostComplexStructure
from utils.utils import parse_structure_tuple


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def s47():
    """s4.7 + R2: df^1 = f^{23}, df^2 = f^{36}, df^3 = -f^{26}."""
    return parse_structure_tuple("(f^{23}, f^{36}, -f^{26}, 0, 0, 0)", name="s4.7+R2")


@pytest.fixture
def perp_J():
    """J f_1 = f_6, J f_2 = f_3, J f_4 = f_5."""
    return AlmostComplexStructure.from_pairs(6, [(0, 5, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).matrix


def random_spd(rng, n):
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)
