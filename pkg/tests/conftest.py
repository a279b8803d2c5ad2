import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from simplexsched.topology import InterferenceGraph, build_named_graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return InterferenceGraph.from_edges(n, [p for p, keep in zip(pairs, mask) if keep])


@pytest.fixture
def star7():
    return build_named_graph("star", 7)


@pytest.fixture
def ring6():
    return build_named_graph("ring", 6)


@pytest.fixture
def path3():
    return build_named_graph("path", 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
