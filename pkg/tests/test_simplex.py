from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from bellforge.simplex import nonneg_solution


def test_simple_feasible_and_infeasible():
    sol = nonneg_solution([[1, 1], [1, -1]], [3, 1])
    assert sol == [2, 1]
    assert nonneg_solution([[1, 1]], [-1]) is None
    assert nonneg_solution([], []) == []


def test_exact_rationals():
    sol = nonneg_solution([[3, 0], [0, 7]], [1, 2])
    assert sol == [Fraction(1, 3), Fraction(2, 7)]


def test_degenerate_system_terminates():
    # redundant rows and a zero right-hand side
    M = [[1, 1, 0], [1, 1, 0], [0, 0, 1]]
    assert nonneg_solution(M, [0, 0, 0]) == [0, 0, 0]
    with pytest.raises(ValueError):
        nonneg_solution(M, [1])


def test_agrees_with_floating_lp():
    rng = np.random.default_rng(8)
    for _ in range(200):
        rows, cols = rng.integers(1, 5), rng.integers(1, 7)
        M = rng.integers(-2, 3, (rows, cols))
        b = rng.integers(-3, 4, rows)
        sol = nonneg_solution(M.tolist(), b.tolist())
        lp = linprog(np.zeros(cols), A_eq=M, b_eq=b, bounds=[(0, None)] * cols, method="highs")
        assert (sol is not None) == (lp.status == 0)
        if sol is not None:
            assert all(c >= 0 for c in sol)
            assert [sum(M[r][k] * sol[k] for k in range(cols)) for r in range(rows)] == b.tolist()
