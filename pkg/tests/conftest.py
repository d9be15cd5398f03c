from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from supershift.space import SparseVec, arithmetic

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

rationals = st.fractions(min_value=-9, max_value=9, max_denominator=9)
nonzero_rationals = rationals.filter(lambda q: q != 0)


@st.composite
def sparse_vecs(draw, max_index=8, nonzero=True, min_index=1):
    idx = draw(st.sets(st.integers(min_index, max_index), min_size=1 if nonzero else 0, max_size=max_index))
    return SparseVec({n: draw(nonzero_rationals) for n in idx})


@pytest.fixture(autouse=True)
def exact_mode():
    with arithmetic("exact"):
        yield


@pytest.fixture
def float_mode():
    with arithmetic("float"):
        yield


def q(a, b=1):
    return Fraction(a, b)
