from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from supershift.shiftops import (
    GeometricTail,
    OperatorSeries,
    apply_series,
    apply_shift,
    apply_shift_pow,
    apply_to_basis_closed_form,
    counterexample_a,
    counterexample_b,
    series_norm_bracket,
)
from supershift.space import ConstantOne, Geometric, SparseVec, basis

from conftest import nonzero_rationals, sparse_vecs

F = Fraction
G = Geometric(F(1, 2), F(1, 2))
ONE = ConstantOne()
weights = st.sampled_from([ONE, G, Geometric(F(1, 3), F(1, 3))])


def test_shift_examples():
    assert apply_shift(G, basis(1)) == SparseVec()
    assert apply_shift(G, basis(3)) == basis(2) * F(1, 8)
    assert apply_shift(ONE, basis(2) + basis(5)) == basis(1) + basis(4)


def test_shift_pow_examples():
    x = SparseVec({2: 3, 4: -1})
    assert apply_shift_pow(G, x, 0) == x
    assert apply_shift_pow(ONE, basis(3), 2) == basis(1)
    assert apply_shift_pow(G, basis(3), 2) == basis(1) * F(1, 32)
    with pytest.raises(ValueError):
        apply_shift_pow(G, x, -1)


def test_series_examples():
    x = SparseVec({1: 2, 3: F(-1, 2), 6: 7})
    assert apply_series(OperatorSeries(basis(1), ONE), x) == apply_shift(ONE, x)
    T = OperatorSeries(SparseVec.from_dense([1, F(1, 2)]), G)
    assert apply_series(T, basis(3)) == SparseVec({2: F(1, 8), 1: F(1, 64)})
    assert apply_series(T, SparseVec()) == SparseVec()


def test_closed_form_examples():
    T = OperatorSeries(SparseVec.from_dense([1, F(1, 2)]), G)
    assert apply_to_basis_closed_form(T, 2) == SparseVec({1: F(1, 64), 2: F(1, 8)})
    assert apply_to_basis_closed_form(OperatorSeries(basis(1), ONE), 1) == basis(1)
    assert apply_to_basis_closed_form(OperatorSeries(SparseVec(), G), 4) == SparseVec()


def test_bracket_examples():
    T = OperatorSeries(SparseVec.from_dense([1, F(1, 2), F(1, 4)]), ONE)
    assert series_norm_bracket(T, 3) == (F(7, 4), F(7, 4))
    assert series_norm_bracket(OperatorSeries(basis(1), G), 1) == (G.w(1), 1)
    assert series_norm_bracket(OperatorSeries(SparseVec(), ONE), 3) == (0, 0)


def test_counterexample_examples():
    assert counterexample_a(basis(3)) == basis(2)
    assert counterexample_b(basis(3)) == SparseVec()
    assert counterexample_b(basis(2)) == basis(1)
    x = basis(2) + basis(3) + basis(4)
    assert counterexample_a(x) + counterexample_b(x) == apply_shift(ONE, x)


@given(weights, sparse_vecs(max_index=10))
def test_nilpotent_on_finite_support(w, x):
    for k in (x.max_support(), x.max_support() + 3):
        assert apply_shift_pow(w, x, k) == SparseVec()


@given(weights, sparse_vecs(max_index=5), sparse_vecs(max_index=12))
def test_support_drop(w, lam, x):
    out = apply_series(OperatorSeries(lam, w), x)
    if x.max_support() > lam.min_support() and out:
        assert out.max_support() <= x.max_support() - lam.min_support()


@given(st.sampled_from([G, Geometric(F(1, 3), F(1, 3))]), sparse_vecs(max_index=12))
def test_shift_contraction(w, x):
    assert apply_shift(w, x).norm1() <= w.total_sum * x.norm1()


@given(weights, sparse_vecs(max_index=8))
def test_injectivity_witness(w, lam):
    assert apply_series(OperatorSeries(lam, w), basis(lam.max_support() + 1))


@given(weights, sparse_vecs(max_index=6), st.integers(1, 30))
def test_closed_form_agrees_with_series(w, lam, N):
    T = OperatorSeries(lam, w)
    assert apply_to_basis_closed_form(T, N) == apply_series(T, basis(N + 1))


@given(weights, sparse_vecs(max_index=5), sparse_vecs(max_index=10), sparse_vecs(max_index=10), nonzero_rationals)
def test_linearity(w, lam, x, y, a):
    T = OperatorSeries(lam, w)
    assert apply_series(T, x * a + y) == apply_series(T, x) * a + apply_series(T, y)


@given(sparse_vecs(max_index=12))
def test_isometry_bracket_collapses(lam):
    lower, upper = series_norm_bracket(OperatorSeries(lam, ONE), lam.max_support())
    assert lower == upper == lam.norm1()


@given(sparse_vecs(max_index=10))
def test_counterexamples_sum_to_shift(x):
    assert counterexample_a(x) + counterexample_b(x) == apply_shift(ONE, x)


def test_tail_acts_beyond_its_start():
    tail = GeometricTail(F(1, 2), 3)
    T = OperatorSeries(basis(1), ONE, tail)
    # coefficients 1, 0, 1, 1/2, ... acting on e_5
    assert apply_series(T, basis(5)) == SparseVec({4: 1, 2: 1, 1: F(1, 2)})
    assert T.lambda_norm1() == 3
    with pytest.raises(ValueError):
        OperatorSeries(basis(4), ONE, GeometricTail(F(1, 2), 2))


def test_series_json_round_trip():
    T = OperatorSeries(SparseVec.from_dense([1, F(-1, 3)]), G, GeometricTail(F(1, 4), 5, 2))
    assert OperatorSeries.from_json(T.to_json()) == T
