from fractions import Fraction

import pytest

from nckey.simplex import maximize


def test_basic_lp():
    # max x+y st x <= 1, y <= 2
    res = maximize([1, 1], [[1, 0], [0, 1]], [1, 2])
    assert res.value == 3
    assert res.x == (1, 2)


def test_shared_resource():
    # max 2x+3y st x+y <= 100, 6x+3y <= 360, x+2y <= 120; optimum at (40, 40)
    res = maximize([2, 3], [[1, 1], [6, 3], [1, 2]], [100, 360, 120])
    assert res.x == (40, 40)
    assert res.value == 200


def test_fractional_optimum_exact():
    # max t st t <= x, t <= y, 2x + y <= 1, x + 2y <= 1  -> t = 1/3
    c = [0, 0, 1]
    rows = [[-1, 0, 1], [0, -1, 1], [2, 1, 0], [1, 2, 0]]
    res = maximize(c, rows, [0, 0, 1, 1])
    assert res.value == Fraction(1, 3)


def test_degenerate_rhs_terminates():
    # degenerate zero rows exercise Bland's rule
    res = maximize([1], [[1], [1], [2]], [0, 0, 5])
    assert res.value == 0


def test_duality_certificate():
    c = [3, 5]
    rows = [[1, 0], [0, 2], [3, 2]]
    b = [4, 12, 18]
    res = maximize(c, rows, b)
    assert res.value == 36
    # dual feasibility: y >= 0 and A^T y >= c
    assert all(y >= 0 for y in res.dual)
    for j in range(2):
        assert sum(rows[i][j] * res.dual[i] for i in range(3)) >= c[j]
    # strong duality: b . y == value
    assert sum(bi * yi for bi, yi in zip(b, res.dual)) == res.value


def test_unbounded_detected():
    with pytest.raises(ValueError):
        maximize([1, 0], [[0, 1]], [1])


def test_rejects_negative_rhs():
    with pytest.raises(ValueError):
        maximize([1], [[1]], [-1])
