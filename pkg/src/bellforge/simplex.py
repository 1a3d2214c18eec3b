"""Exact rational feasibility: find ``c >= 0`` with ``M c = b``.

Phase-one simplex on a dense Fraction tableau with Bland's rule, so it
always terminates and the returned vertex is deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def nonneg_solution(M: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Return a non-negative exact solution of ``M c = b`` or ``None``.

    ``M`` is a list of rows (one per equation).  Entries may be ints or
    Fractions.
    """
    rows = len(M)
    cols = len(M[0]) if rows else 0
    if len(b) != rows:
        raise ValueError("right-hand side length does not match the number of rows")
    if rows == 0:
        return [Fraction(0)] * cols

    # tableau: original columns, one artificial per row, rhs
    width = cols + rows
    T = []
    for r in range(rows):
        sign = -1 if b[r] < 0 else 1
        row = [Fraction(sign * v) for v in M[r]]
        row += [Fraction(1) if k == r else Fraction(0) for k in range(rows)]
        row.append(Fraction(sign * b[r]))
        T.append(row)
    basis = [cols + r for r in range(rows)]

    # objective: minimize the sum of artificials; reduced costs in row form
    obj = [Fraction(0)] * (width + 1)
    for r in range(rows):
        for k in range(width + 1):
            obj[k] -= T[r][k]
    for r in range(rows):
        obj[cols + r] = Fraction(0)

    while True:
        entering = next((k for k in range(width) if obj[k] < 0), None)
        if entering is None:
            break
        best = None
        for r in range(rows):
            a = T[r][entering]
            if a > 0:
                ratio = T[r][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:  # unbounded phase one cannot happen; the objective is bounded below by 0
            raise ArithmeticError("phase-one simplex reported an unbounded ray")
        _pivot(T, obj, best[1], entering)
        basis[best[1]] = entering

    if obj[-1] != 0:  # -sum(artificials) at optimum
        return None
    solution = [Fraction(0)] * cols
    for r, var in enumerate(basis):
        if var < cols:
            solution[var] = T[r][-1]
    return solution


def _pivot(T, obj, r, k):
    piv = T[r][k]
    row = T[r]
    if piv != 1:
        row[:] = [v / piv for v in row]
    for rr, other in enumerate(T):
        if rr != r and other[k]:
            f = other[k]
            other[:] = [a - f * c for a, c in zip(other, row)]
    if obj[k]:
        f = obj[k]
        obj[:] = [a - f * c for a, c in zip(obj, row)]
