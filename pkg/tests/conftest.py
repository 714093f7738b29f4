import numpy as np
import pytest

from xvasensi.engine import ModelParams


def one_economy(r0=0.02, a=0.1, b=0.03, sigma_r=0.01, gamma0=(), alpha=(), delta=(), nu=()):
    return ModelParams(r0=[r0], a=[a], b=[b], sigma_r=[sigma_r], fx0=[], sigma_fx=[],
                       gamma0=list(gamma0), alpha=list(alpha), delta=list(delta), nu=list(nu))


@pytest.fixture
def small_params():
    return ModelParams(r0=[0.02, 0.015], a=[0.15, 0.2], b=[0.03, 0.025], sigma_r=[0.01, 0.012],
                       fx0=[1.1], sigma_fx=[0.1], gamma0=[0.05, 0.1], alpha=[0.06, 0.1],
                       delta=[0.5, 0.4], nu=[0.05, 0.08])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
