import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kappaosc import KappaContext

settings.register_profile(
    "repo", deadline=None, max_examples=60, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def vectors(bound: float = 1.0):
    comp = st.floats(-bound, bound, allow_nan=False, allow_infinity=False)
    return st.tuples(comp, comp, comp).map(np.array)


kappas = st.sampled_from([0.5, 1.0, 3.0, 10.0])
masses = st.floats(0.0, 3.0, allow_nan=False)


@pytest.fixture
def ctx1():
    return KappaContext(kappa=1.0, m0=1.0)
