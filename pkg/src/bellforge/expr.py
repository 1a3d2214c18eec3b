"""Exact bilinear Bell-CH expressions.

An expression over variables ``x_0..x_{m-1}`` (bounded by ``A``) and
``y_0..y_{n-1}`` (bounded by ``B``) reads, in algebraic form::

    B * sum_i cx[i] x_i + A * sum_j cy[j] y_j + sum_ij c[i][j] x_i y_j + const * A * B

and the same coefficients in probability form multiply ``P(x_i)``,
``P(y_j)``, ``P(x_i, y_j)`` and ``1``.  The inequality in both cases is
``expr <= 0``.

Indices are 0-based throughout the API; rendered variable names are
1-based (``x1`` is index 0).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np


class Form(str, enum.Enum):
    ALGEBRAIC = "algebraic"
    PROBABILITY = "probability"


class Party(str, enum.Enum):
    X = "X"
    Y = "Y"


class Bound(str, enum.Enum):
    ZERO = "ZERO"
    BOUND = "BOUND"


class ExpressionError(ValueError):
    """Raised on shape, index or form mismatches."""


def to_fraction(value) -> Fraction:
    """Convert ints, Fractions and rational strings ("-1", "1/2") exactly.

    Floats are rejected so that no rounded value sneaks into stored
    coefficients.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot store {value!r} ({type(value).__name__}) as an exact coefficient")


def _frac_tuple(values) -> tuple[Fraction, ...]:
    return tuple(to_fraction(v) for v in values)


@dataclass(frozen=True)
class BellExpression:
    joint: tuple[tuple[Fraction, ...], ...]
    marg_x: tuple[Fraction, ...]
    marg_y: tuple[Fraction, ...]
    const_term: Fraction = Fraction(0)
    form_tag: Form = Form.ALGEBRAIC

    def __post_init__(self):
        joint = tuple(_frac_tuple(row) for row in self.joint)
        marg_x = _frac_tuple(self.marg_x)
        marg_y = _frac_tuple(self.marg_y)
        m, n = len(marg_x), len(marg_y)
        if m < 1 or n < 1:
            raise ExpressionError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
        if len(joint) != m:
            raise ExpressionError(f"joint has {len(joint)} rows but marg_x has {m} entries (axis x)")
        for i, row in enumerate(joint):
            if len(row) != n:
                raise ExpressionError(
                    f"joint row {i} has {len(row)} entries but marg_y has {n} (axis y)")
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "marg_x", marg_x)
        object.__setattr__(self, "marg_y", marg_y)
        object.__setattr__(self, "const_term", to_fraction(self.const_term))
        object.__setattr__(self, "form_tag", Form(self.form_tag))

    @classmethod
    def from_coeffs(cls, joint, marg_x, marg_y, const=0, form=Form.ALGEBRAIC) -> "BellExpression":
        return cls(tuple(tuple(r) for r in joint), tuple(marg_x), tuple(marg_y), const, form)

    @classmethod
    def zeros(cls, m: int, n: int, form=Form.ALGEBRAIC) -> "BellExpression":
        return cls(((0,) * n,) * m, (0,) * m, (0,) * n, 0, form)

    @property
    def m(self) -> int:
        return len(self.marg_x)

    @property
    def n(self) -> int:
        return len(self.marg_y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def key(self) -> tuple:
        """Hashable coefficient tuple (form excluded)."""
        return (self.joint, self.marg_x, self.marg_y, self.const_term)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """Float copies ``(joint, marg_x, marg_y, const)`` for numeric work."""
        joint = np.array([[float(c) for c in row] for row in self.joint])
        return (joint, np.array([float(c) for c in self.marg_x]),
                np.array([float(c) for c in self.marg_y]), float(self.const_term))

    def column(self, party: Party, index: int) -> tuple[Fraction, ...]:
        """Joint coefficients multiplying the given variable.

        For a y variable this is the column over x; for an x variable the
        row over y.
        """
        party = Party(party)
        _check_index(self, party, index)
        if party is Party.Y:
            return tuple(row[index] for row in self.joint)
        return self.joint[index]

    def variables(self) -> list[tuple[Party, int]]:
        return [(Party.X, i) for i in range(self.m)] + [(Party.Y, j) for j in range(self.n)]

    def _replace(self, joint=None, marg_x=None, marg_y=None, const=None, form=None):
        return BellExpression(
            self.joint if joint is None else joint,
            self.marg_x if marg_x is None else marg_x,
            self.marg_y if marg_y is None else marg_y,
            self.const_term if const is None else const,
            self.form_tag if form is None else form,
        )

    def __neg__(self) -> "BellExpression":
        return self.scale(-1)

    def scale(self, factor) -> "BellExpression":
        f = to_fraction(factor)
        return self._replace(
            tuple(tuple(f * c for c in row) for row in self.joint),
            tuple(f * c for c in self.marg_x),
            tuple(f * c for c in self.marg_y),
            f * self.const_term,
        )

    def __add__(self, other: "BellExpression") -> "BellExpression":
        if not isinstance(other, BellExpression):
            return NotImplemented
        if other.shape != self.shape:
            raise ExpressionError(f"shape mismatch {self.shape} vs {other.shape}")
        if other.form_tag is not self.form_tag:
            raise ExpressionError("cannot add expressions of different forms")
        return self._replace(
            tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.joint, other.joint)),
            tuple(a + b for a, b in zip(self.marg_x, other.marg_x)),
            tuple(a + b for a, b in zip(self.marg_y, other.marg_y)),
            self.const_term + other.const_term,
        )

    def __sub__(self, other: "BellExpression") -> "BellExpression":
        if not isinstance(other, BellExpression):
            return NotImplemented
        return self + (-other)

    def is_zero(self) -> bool:
        return (not any(self.marg_x) and not any(self.marg_y) and not self.const_term
                and not any(any(row) for row in self.joint))

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class BoxPoint:
    """A point of the box ``[0, A]^m x [0, B]^n``."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    A: float = 1.0
    B: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(self.xs))
        object.__setattr__(self, "ys", tuple(self.ys))
        if not self.A > 0 or not self.B > 0:
            raise ExpressionError(f"bounds must be positive, got A={self.A}, B={self.B}")
        for name, vals, bound in (("x", self.xs, self.A), ("y", self.ys, self.B)):
            for k, v in enumerate(vals):
                if not 0 <= v <= bound:
                    raise ExpressionError(f"{name}{k + 1}={v} outside [0, {bound}]")


def _check_index(expr: BellExpression, party: Party, index: int) -> None:
    size = expr.m if party is Party.X else expr.n
    if not 0 <= index < size:
        raise ExpressionError(f"{party.value} index {index} out of range 0..{size - 1}")


def _require_form(expr: BellExpression, form: Form, op: str) -> None:
    if expr.form_tag is not form:
        raise ExpressionError(f"{op} needs {form.value} form, got {expr.form_tag.value}")


def evaluate(expr: BellExpression, point: BoxPoint) -> float:
    _require_form(expr, Form.ALGEBRAIC, "evaluate")
    if len(point.xs) != expr.m:
        raise ExpressionError(f"axis x: point has {len(point.xs)} entries, expression has m={expr.m}")
    if len(point.ys) != expr.n:
        raise ExpressionError(f"axis y: point has {len(point.ys)} entries, expression has n={expr.n}")
    joint, cx, cy, c0 = expr.arrays
    xs = np.asarray(point.xs, dtype=float)
    ys = np.asarray(point.ys, dtype=float)
    A, B = float(point.A), float(point.B)
    return float(B * cx @ xs + A * cy @ ys + xs @ joint @ ys + c0 * A * B)


def evaluate_exact(expr: BellExpression, xs: Sequence, ys: Sequence, A=1, B=1) -> Fraction:
    """Rational evaluation at a rational point (no box check)."""
    A, B = to_fraction(A), to_fraction(B)
    xs = [to_fraction(v) for v in xs]
    ys = [to_fraction(v) for v in ys]
    total = expr.const_term * A * B
    total += B * sum(c * x for c, x in zip(expr.marg_x, xs))
    total += A * sum(c * y for c, y in zip(expr.marg_y, ys))
    for row, x in zip(expr.joint, xs):
        if x:
            total += x * sum(c * y for c, y in zip(row, ys))
    return total


def probability_value(expr: BellExpression, px, py, pxy) -> float:
    """Value of a probability-form expression on single and joint probabilities."""
    _require_form(expr, Form.PROBABILITY, "probability_value")
    px, py, pxy = np.asarray(px, float), np.asarray(py, float), np.asarray(pxy, float)
    if px.shape != (expr.m,) or py.shape != (expr.n,) or pxy.shape != expr.shape:
        raise ExpressionError(
            f"probability table shape ({px.shape}, {py.shape}, {pxy.shape}) does not match {expr.shape}")
    joint, cx, cy, c0 = expr.arrays
    return float(cx @ px + cy @ py + np.sum(joint * pxy) + c0)


def substitute_bound(expr: BellExpression, party: Party, index: int, value: Bound) -> BellExpression:
    """Pin one variable to 0 or to its bound, folding it into the other coefficients.

    The shape is kept; the pinned variable's joint row/column and marginal
    become zero.
    """
    _require_form(expr, Form.ALGEBRAIC, "substitute_bound")
    party, value = Party(party), Bound(value)
    _check_index(expr, party, index)
    joint = [list(row) for row in expr.joint]
    marg_x, marg_y = list(expr.marg_x), list(expr.marg_y)
    const = expr.const_term
    if party is Party.X:
        if value is Bound.BOUND:
            for j in range(expr.n):
                marg_y[j] += joint[index][j]
            const += marg_x[index]
        joint[index] = [Fraction(0)] * expr.n
        marg_x[index] = Fraction(0)
    else:
        if value is Bound.BOUND:
            for i in range(expr.m):
                marg_x[i] += joint[i][index]
            const += marg_y[index]
        for i in range(expr.m):
            joint[i][index] = Fraction(0)
        marg_y[index] = Fraction(0)
    return expr._replace(joint, marg_x, marg_y, const)


def split_branches(expr: BellExpression, party: Party, index: int) -> tuple[BellExpression, BellExpression]:
    """``(hi, lo)``: the expression with the variable at its bound and at zero.

    Since the expression is affine in any single variable, it never exceeds
    ``max(hi, lo)`` on the box.
    """
    return (substitute_bound(expr, party, index, Bound.BOUND),
            substitute_bound(expr, party, index, Bound.ZERO))


def affine_flip(expr: BellExpression, party: Party, index: int) -> BellExpression:
    """Substitute ``v -> bound - v`` for one variable (an involution)."""
    _require_form(expr, Form.ALGEBRAIC, "affine_flip")
    party = Party(party)
    _check_index(expr, party, index)
    joint = [list(row) for row in expr.joint]
    marg_x, marg_y = list(expr.marg_x), list(expr.marg_y)
    const = expr.const_term
    if party is Party.X:
        const += marg_x[index]
        marg_x[index] = -marg_x[index]
        for j in range(expr.n):
            marg_y[j] += joint[index][j]
            joint[index][j] = -joint[index][j]
    else:
        const += marg_y[index]
        marg_y[index] = -marg_y[index]
        for i in range(expr.m):
            marg_x[i] += joint[i][index]
            joint[i][index] = -joint[i][index]
    return expr._replace(joint, marg_x, marg_y, const)


def _check_perm(perm, size: int, axis: str) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(size)):
        raise ExpressionError(f"axis {axis}: {perm} is not a permutation of 0..{size - 1}")
    return perm


def relabel(expr: BellExpression, perm_x=None, perm_y=None) -> BellExpression:
    """Permute variable labels: new ``x_i`` is old ``x_{perm_x[i]}``.

    Evaluating the result at ``(xs, ys)`` equals evaluating the original at
    the point with ``xs'[perm_x[i]] = xs[i]``.
    """
    px = _check_perm(range(expr.m) if perm_x is None else perm_x, expr.m, "x")
    py = _check_perm(range(expr.n) if perm_y is None else perm_y, expr.n, "y")
    joint = tuple(tuple(expr.joint[px[i]][py[j]] for j in range(expr.n)) for i in range(expr.m))
    return expr._replace(joint, tuple(expr.marg_x[p] for p in px), tuple(expr.marg_y[p] for p in py))


def transpose(expr: BellExpression) -> BellExpression:
    """Swap the roles of the two parties (and of A and B)."""
    joint = tuple(tuple(expr.joint[i][j] for i in range(expr.m)) for j in range(expr.n))
    return expr._replace(joint, expr.marg_y, expr.marg_x)


def gen_ikk(k: int) -> BellExpression:
    """The ``I_kk`` family, valid for every ``k >= 2``.

    Joint part ``sum_{j<=k} sum_{i<=k+1-j} x_i y_j - sum_{i=2..k} x_i y_{k+2-i}``
    (1-based), marginals ``-(k-i) x_i B`` for ``i < k`` and ``-A y_1``.
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 2:
        raise ExpressionError(f"gen_ikk needs an integer k >= 2, got {k!r}")
    k = int(k)
    joint = [[0] * k for _ in range(k)]
    for j in range(1, k + 1):
        for i in range(1, k + 2 - j):
            joint[i - 1][j - 1] += 1
    for i in range(2, k + 1):
        joint[i - 1][k + 2 - i - 1] -= 1
    marg_x = [-(k - i) for i in range(1, k + 1)]
    marg_y = [-1] + [0] * (k - 1)
    return BellExpression.from_coeffs(joint, marg_x, marg_y)


_BUILTINS = {
    "I2222": (
        [[1, 1], [1, -1]],
        [-1, 0], [-1, 0], Form.ALGEBRAIC),
    "I3322_SYM": (
        [[0, 1, 1], [1, -1, 1], [1, 1, -1]],
        [-1, -1, 0], [-1, -1, 0], Form.ALGEBRAIC),
    "I5322": (
        [[1, -1, 1], [0, 1, 1], [1, 1, 0], [1, 0, -1], [-1, 1, -1]],
        [-1, -1, -1, 0, 0], [-1, -1, 0], Form.ALGEBRAIC),
    "CH_PROB": (
        [[1, 1], [1, -1]],
        [-1, 0], [-1, 0], Form.PROBABILITY),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str) -> BellExpression:
    try:
        joint, mx, my, form = _BUILTINS[name]
    except KeyError:
        raise ExpressionError(f"unknown builtin {name!r}; known: {', '.join(BUILTIN_NAMES)}") from None
    return BellExpression.from_coeffs(joint, mx, my, 0, form)


def to_probability_form(expr: BellExpression) -> BellExpression:
    """Reinterpret coefficients under ``x_i / A -> P(x_i)``, ``y_j / B -> P(y_j)``.

    Dividing the algebraic form by ``A * B`` leaves every coefficient in
    place, so only the tag changes.
    """
    if expr.form_tag is Form.PROBABILITY:
        raise ExpressionError("expression is already in probability form")
    return expr._replace(form=Form.PROBABILITY)


def to_algebraic_form(expr: BellExpression) -> BellExpression:
    if expr.form_tag is Form.ALGEBRAIC:
        raise ExpressionError("expression is already in algebraic form")
    return expr._replace(form=Form.ALGEBRAIC)


def as_probability(expr: BellExpression) -> BellExpression:
    """Probability form, converting if needed."""
    return expr if expr.form_tag is Form.PROBABILITY else to_probability_form(expr)


def _fmt_coeff(c: Fraction, first: bool) -> tuple[str, str]:
    sign = "-" if c < 0 else ("" if first else "+")
    mag = abs(c)
    return sign, ("" if mag == 1 else f"{mag}*")


def render(expr: BellExpression) -> str:
    """Human-readable polynomial, e.g. ``x1*y1 + x1*y2 - x1*B - A*y1``."""
    prob = expr.form_tag is Form.PROBABILITY
    terms: list[tuple[Fraction, str]] = []
    for i, row in enumerate(expr.joint):
        for j, c in enumerate(row):
            if c:
                terms.append((c, f"P(x{i + 1},y{j + 1})" if prob else f"x{i + 1}*y{j + 1}"))
    for i, c in enumerate(expr.marg_x):
        if c:
            terms.append((c, f"P(x{i + 1})" if prob else f"x{i + 1}*B"))
    for j, c in enumerate(expr.marg_y):
        if c:
            terms.append((c, f"P(y{j + 1})" if prob else f"A*y{j + 1}"))
    if expr.const_term:
        terms.append((expr.const_term, "1" if prob else "A*B"))
    if not terms:
        return "0"
    out = []
    for k, (c, name) in enumerate(terms):
        sign, mag = _fmt_coeff(c, k == 0)
        if prob and name == "1":
            mag, name = f"{abs(c)}", ""
        piece = f"{mag}{name}"
        out.append(f"{sign}{piece}" if k == 0 else f"{sign} {piece}")
    return " ".join(out)
