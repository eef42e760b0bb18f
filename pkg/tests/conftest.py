import warnings

import numpy as np
import pytest

from sindyquad.control import case_a, case_b, case_c, holdout_diamond
from sindyquad.dynamics import QuadParams
from sindyquad.evaluate import lambda_sweep
from sindyquad.integrate import rollout
from sindyquad.sindy import OptimizerConfig, discover, finite_difference, truth_model


@pytest.fixture(scope="session")
def params():
    return QuadParams()


@pytest.fixture(scope="session")
def train_c():
    return rollout(case_c(), dt=0.05, steps=1000)


@pytest.fixture(scope="session")
def holdout():
    return rollout(holdout_diamond(), dt=0.05, steps=1000)


@pytest.fixture(scope="session")
def fitted(train_c):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return discover(train_c, optimizer=OptimizerConfig(name="sr3", lam=0.45))


@pytest.fixture(scope="session")
def truth():
    return truth_model()


@pytest.fixture(scope="session")
def sweep_c(train_c, holdout):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return lambda_sweep(finite_difference(train_c, align="midpoint"), holdout,
                            test_case=holdout_diamond())


@pytest.fixture(scope="session")
def rollouts_ab():
    return {"A": (case_a(), rollout(case_a())), "B": (case_b(), rollout(case_b()))}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
