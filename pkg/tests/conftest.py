import numpy as np
import pytest
from hypothesis import strategies as st

from alphaproj import make_distribution


def dist_strategy(min_size=2, max_size=6, full_support=False):
    """Probability vectors over labels "1".."n" built from bounded weights."""
    lo = 0.01 if full_support else 0.0

    @st.composite
    def build(draw):
        n = draw(st.integers(min_size, max_size))
        w = draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n))
        if sum(w) <= 0:
            w[0] = 1.0
        return make_distribution([str(i + 1) for i in range(n)], w, normalize=True)

    return build()


@st.composite
def dist_tuple(draw, k=2, full_support=False):
    """``k`` distributions over one common alphabet."""
    n = draw(st.integers(2, 6))
    lo = 0.01 if full_support else 0.0
    out = []
    for _ in range(k):
        w = draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n))
        if sum(w) <= 0:
            w[0] = 1.0
        out.append(make_distribution([str(i + 1) for i in range(n)], w, normalize=True))
    return tuple(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
