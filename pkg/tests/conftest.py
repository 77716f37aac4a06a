import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from polykex.mpoly import MonomialOrder, Poly

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_poly(q, n, D, terms):
    return Poly.from_terms(MonomialOrder(n, D), q, terms)


@pytest.fixture
def toy_psi():
    """The three-variable triangular map over F_5 used as a running example."""
    q = 5
    return [
        make_poly(q, 3, 2, {(2, 0, 0): 3, (1, 0, 0): 1, (0, 0, 0): 4}),
        make_poly(q, 3, 2, {(0, 2, 0): 1, (1, 1, 0): 2, (1, 0, 0): 4, (0, 1, 0): 1, (0, 0, 0): 3}),
        make_poly(q, 3, 2, {(2, 0, 0): 4, (0, 0, 2): 2, (1, 0, 1): 1, (0, 1, 1): 3, (0, 0, 0): 1}),
    ]
