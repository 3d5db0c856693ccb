import numpy as np
import pytest

from dyncap.coefficients import ModelParams
from dyncap.regularization import RegularizedModel


@pytest.fixture(scope="session")
def ref_params():
    """Admissible reference exponents (pass all layers for n = 1 and n = 3)."""
    return ModelParams(mu=5.7, lam=6.0, gamma=5.6, t_m=2.0,
                       beta1=5.5, beta2=5.5)


@pytest.fixture(scope="session")
def ref_model(ref_params):
    return RegularizedModel(ref_params, 0.05)


@pytest.fixture(scope="session")
def entropy_params():
    """Low-exponent bundle used by the entropy cross-checks."""
    return ModelParams(mu=3.5, lam=3.0, gamma=3.0, t_m=2.0,
                       beta1=3.0, beta2=3.0)


def const_fn(value):
    return lambda x: np.full_like(np.asarray(x, dtype=float), float(value))
