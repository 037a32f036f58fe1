import numpy as np
import pytest

from palatini_routh.etalinalg import SignatureMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[2, 3, 4], ids=lambda m: f"m{m}")
def eta(request):
    return SignatureMatrix.lorentzian(request.param)
