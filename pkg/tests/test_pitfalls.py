import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from qnnlab import pitfalls as pf


def separable_through_origin(ds):
    """LP oracle: is there w with w.x >= 1 on positives and w.x <= -1 on negatives?"""
    x, y = ds.arrays()
    sign = np.where(y == 1, -1.0, 1.0)
    res = linprog(np.zeros(2), A_ub=sign[:, None] * x, b_ub=-np.ones(len(y)), bounds=[(None, None)] * 2)
    return res.status == 0


def test_literal_small_case():
    ds = pf.make_dataset(5, 2, literal=True)
    assert ds.points == ((-5, 2), (5, -1), (5, -2), (-5, 4))
    assert ds.labels == (1, 1, 0, 0)


def test_dataset_shape():
    ds = pf.make_dataset(10, 8)
    assert len(ds) == 16 and sum(ds.labels) == 8
    with pytest.raises(ValueError):
        pf.make_dataset(2, 4)
    with pytest.raises(ValueError):
        pf.make_dataset(5, 1)


def test_zero_weight_predicts_all_positive():
    assert pf.zero_one_loss((0, 0), pf.make_dataset(5, 4)) == Fraction(1, 2)


@pytest.mark.parametrize("w,expected", [((0.1, 0.9), (0, 1)), ((0.5, 0.5), (0, 0)), ((-0.8, 0.2), (-1, 0))])
def test_projection(w, expected):
    assert pf.project_to_ternary(w) == expected


def test_projection_rejects_out_of_range():
    with pytest.raises(ValueError):
        pf.project_to_ternary((1.5, 0))


def test_loss_table():
    best, table = pf.brute_force_ternary(pf.make_dataset(5, 4))
    assert len(table) == 9
    assert table[(0, 1)] == Fraction(3, 4) and table[(0, 0)] == Fraction(1, 2)
    assert best == (1, 0) and table[best] == Fraction(1, 4)


def test_loss_by_hand():
    # oracle: count sign errors with H+(0) = 1 directly on the point list
    ds = pf.make_dataset(7, 5)
    for w in itertools.product((-1, 0, 1), repeat=2):
        wrong = sum(int(w[0] * a + w[1] * b >= 0) != y for (a, b), y in zip(ds.points, ds.labels))
        assert pf.zero_one_loss(w, ds) == Fraction(wrong, 10)


def test_continuous_sample_inside_cone():
    for D in (5.0, 100.0):
        for w1, w2 in pf.continuous_optimal_sample(D, 200, seed=1):
            assert D / 2 < w2 / w1 < D and 0 < w1 <= 1 and w2 == 1.0


def test_continuous_sample_deterministic():
    assert pf.continuous_optimal_sample(6, 5, 3) == pf.continuous_optimal_sample(6, 5, 3)


def test_two_points_per_class_has_no_gap():
    rep = pf.projection_gap_experiment(5, 2)
    assert rep.passed and all(r.gap == 0 for r in rep.rows)


def test_small_D_is_report_only():
    with pytest.warns(UserWarning):
        rep = pf.projection_gap_experiment(3, 8)
    assert rep.report_only and rep.checks == {} and rep.passed


def test_literal_dataset_not_separable():
    for N in (2, 4, 8):
        ds = pf.make_dataset(5, N, literal=True)
        assert not separable_through_origin(ds)
        assert min(pf.zero_one_loss(w, ds) for w in pf.continuous_optimal_sample(5, 20, 0)) > 0


@pytest.mark.parametrize("D,N", list(itertools.product((5, 10, 100), (2, 4, 8, 64))))
def test_gap_matrix(D, N):
    ds = pf.make_dataset(D, N)
    assert separable_through_origin(ds)
    rep = pf.projection_gap_experiment(D, N)
    assert rep.passed
    assert rep.rows[0].projected_loss == 1 - Fraction(1, N) and rep.rows[0].best_loss == Fraction(1, N)


@given(st.floats(4.01, 1e3), st.integers(2, 40))
def test_gap_formula(D, N):
    rep = pf.projection_gap_experiment(D, N, count=4, seed=N)
    assert rep.rows[0].gap == 1 - Fraction(2, N)
