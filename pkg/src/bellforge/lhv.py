"""Local hidden-variable side: exact vertex bounds, finite LHV models,
and the rearrangement/Jensen bound chains as executable functions.

Validity lemma used by :func:`is_valid_bellch`: substituting
``x_i = A u_i``, ``y_j = B v_j`` turns the algebraic form into
``A*B * F(u, v)`` with ``u, v`` in the unit box and ``F`` independent of
``A, B``.  The sign of the maximum therefore does not depend on the
(positive) bounds, and checking ``A = B = 1`` decides validity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .expr import BellExpression, BoxPoint, ExpressionError, Form, evaluate, gen_ikk, builtin, to_fraction

MAX_ENUMERATION = 24


class EnumerationGuardError(ExpressionError):
    pass


@dataclass(frozen=True)
class DeterministicStrategy:
    """A vertex of the box: ``x_i = bits_x[i] * A``, ``y_j = bits_y[j] * B``."""

    bits_x: tuple[int, ...]
    bits_y: tuple[int, ...]

    def __str__(self):
        xs = ",".join("A" if b else "0" for b in self.bits_x)
        ys = ",".join("B" if b else "0" for b in self.bits_y)
        return f"({xs}|{ys})"

    def point(self, A=1.0, B=1.0) -> BoxPoint:
        return BoxPoint(tuple(b * A for b in self.bits_x), tuple(b * B for b in self.bits_y), A, B)


def vertex_max(expr: BellExpression, A=1, B=1) -> tuple[Fraction, DeterministicStrategy]:
    """Exact maximum of the algebraic form over all ``2**(m+n)`` box vertices.

    The x vertices are enumerated in lexicographic order; for each the best
    y vertex follows coordinate-wise because the form is linear in ``y``
    (a y bit is set only when it strictly helps).  Ties resolve to the
    lexicographically smallest ``(bits_x, bits_y)``.
    """
    if expr.form_tag is not Form.ALGEBRAIC:
        raise ExpressionError("vertex_max needs algebraic form")
    if expr.m + expr.n > MAX_ENUMERATION:
        raise EnumerationGuardError(
            f"m+n = {expr.m + expr.n} exceeds the enumeration guard of {MAX_ENUMERATION}")
    A, B = to_fraction(A), to_fraction(B)
    best = None
    best_bits = None
    for bits_x in itertools.product((0, 1), repeat=expr.m):
        base = expr.const_term + sum(c for c, b in zip(expr.marg_x, bits_x) if b)
        bits_y = []
        total = base
        for j in range(expr.n):
            slope = expr.marg_y[j] + sum(expr.joint[i][j] for i in range(expr.m) if bits_x[i])
            if slope > 0:
                total += slope
                bits_y.append(1)
            else:
                bits_y.append(0)
        if best is None or total > best:
            best = total
            best_bits = (bits_x, tuple(bits_y))
    return best * A * B, DeterministicStrategy(*best_bits)


def vertex_max_bruteforce(expr: BellExpression, A=1, B=1) -> Fraction:
    """Plain enumeration of every vertex; independent check of :func:`vertex_max`."""
    from .expr import evaluate_exact
    A, B = to_fraction(A), to_fraction(B)
    return max(
        evaluate_exact(expr, [b * A for b in bx], [b * B for b in by], A, B)
        for bx in itertools.product((0, 1), repeat=expr.m)
        for by in itertools.product((0, 1), repeat=expr.n))


def is_valid_bellch(expr: BellExpression) -> bool:
    value, _ = vertex_max(expr, 1, 1)
    return value <= 0


@dataclass(frozen=True)
class LHVModel:
    weights: np.ndarray
    px: np.ndarray
    py: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, float)
        px = np.atleast_2d(np.asarray(self.px, float))
        py = np.atleast_2d(np.asarray(self.py, float))
        if w.ndim != 1 or px.shape[0] != w.size or py.shape[0] != w.size:
            raise ExpressionError("weights, px and py must agree on the number of hidden states")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ExpressionError("weights must be non-negative and sum to 1")
        if np.any((px < 0) | (px > 1)) or np.any((py < 0) | (py > 1)):
            raise ExpressionError("response probabilities must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "py", py)

    @property
    def m(self) -> int:
        return self.px.shape[1]

    @property
    def n(self) -> int:
        return self.py.shape[1]

    def table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Observable ``(P(x_i), P(y_j), P(x_i, y_j))`` with factorized joints."""
        w = self.weights
        return w @ self.px, w @ self.py, np.einsum("l,li,lj->ij", w, self.px, self.py)


def sample_lhv(m: int, n: int, L: int, seed: int) -> LHVModel:
    """Random model: flat-Dirichlet weights, uniform response probabilities."""
    if L < 1:
        raise ExpressionError("need at least one hidden state")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(L)) if L > 1 else np.ones(1)
    return LHVModel(weights, rng.uniform(0, 1, (L, m)), rng.uniform(0, 1, (L, n)))


def lhv_value(expr: BellExpression, model: LHVModel) -> float:
    if expr.form_tag is not Form.PROBABILITY:
        raise ExpressionError("lhv_value needs probability form")
    if (model.m, model.n) != expr.shape:
        raise ExpressionError(f"model shape {(model.m, model.n)} does not match {expr.shape}")
    joint, cx, cy, c0 = expr.arrays
    per_state = model.px @ cx + model.py @ cy + np.einsum("li,ij,lj->l", model.px, joint, model.py)
    return float(model.weights @ per_state + c0)


def step(x):
    """Heaviside step with ``step(0) = 1/2``; exact for Fractions."""
    if x > 0:
        return Fraction(1) if isinstance(x, Fraction) else 1.0
    if x < 0:
        return Fraction(0) if isinstance(x, Fraction) else 0.0
    return Fraction(1, 2) if isinstance(x, Fraction) else 0.5


# --- rearrangement machinery -------------------------------------------------

def sorted_pairing_sum(xs, ys) -> float:
    """Largest pairing sum: both sequences sorted the same way."""
    return float(np.dot(np.sort(xs), np.sort(ys)))


def reversed_pairing_sum(xs, ys) -> float:
    """Smallest pairing sum: sequences sorted in opposite orders."""
    return float(np.dot(np.sort(xs), np.sort(ys)[::-1]))


def extremes(values) -> tuple[float, float, int, int]:
    """``(max, min, argmax, argmin)`` with first-index tie-breaking."""
    values = list(values)
    hi = max(range(len(values)), key=lambda k: (values[k], -k))
    lo = min(range(len(values)), key=lambda k: (values[k], k))
    return values[hi], values[lo], hi, lo


def i2_zero(xs, ys) -> float:
    """Reversed sum minus unordered sum for two pairs, via max/min extraction."""
    x_hi, x_lo, _, _ = extremes(xs)
    y_hi, y_lo, _, _ = extremes(ys)
    return -(xs[0] * ys[0] + xs[1] * ys[1]) + x_hi * y_lo + x_lo * y_hi


def i2_zero_closed(xs, ys) -> float:
    """Same quantity as :func:`i2_zero` through ``-(d + |d|)/2``."""
    d = (xs[0] - xs[1]) * (ys[0] - ys[1])
    return -0.5 * (d + abs(d))


def i2_zero_step(xs, ys):
    """Same quantity written with step functions; exact for Fractions."""
    dx, dy = xs[0] - xs[1], ys[0] - ys[1]
    return -dx * dy * (step(dx) * step(dy) + step(-dx) * step(-dy))


def i3_zero(xs, ys) -> float:
    """Three-element reversed sum minus unordered sum via max, min and middle terms."""
    x_hi, x_lo, _, _ = extremes(xs)
    y_hi, y_lo, _, _ = extremes(ys)
    x_mid = xs[0] + xs[1] + xs[2] - x_hi - x_lo
    y_mid = ys[0] + ys[1] + ys[2] - y_hi - y_lo
    return -(xs[0] * ys[0] + xs[1] * ys[1] + xs[2] * ys[2]) + x_hi * y_lo + x_lo * y_hi + x_mid * y_mid


_K2 = builtin("I2222")
_K3 = builtin("I3322_SYM")


def rearrangement_bounds(kind: str, point: BoxPoint) -> tuple[float, float]:
    """``(I, I0)`` for ``kind`` ``"K2"`` (2x2) or ``"K3"`` (symmetric 3x3).

    ``I <= I0 <= 0`` holds on the whole box.
    """
    kind = kind.upper()
    if kind == "K2":
        expr, zero = _K2, i2_zero
    elif kind == "K3":
        expr, zero = _K3, i3_zero
    else:
        raise ExpressionError(f"unknown rearrangement kind {kind!r}")
    size = expr.m
    if len(point.xs) != size or len(point.ys) != size:
        raise ExpressionError(f"{kind} needs a {size}x{size} point, got {len(point.xs)}x{len(point.ys)}")
    return evaluate(expr, point), zero(point.xs, point.ys)


def ch_zero_lhv(model: LHVModel) -> float:
    """Hidden-state average of the two-setting rearrangement bound on a 2x2 model."""
    if (model.m, model.n) != (2, 2):
        raise ExpressionError("needs a 2x2 model")
    d = (model.px[:, 0] - model.px[:, 1]) * (model.py[:, 0] - model.py[:, 1])
    return float(model.weights @ (-0.5 * (d + np.abs(d))))


def correlation_e(pxy) -> float:
    """``P(x1,y1) - P(x1,y2) - P(x2,y1) + P(x2,y2)``."""
    return float(pxy[0, 0] - pxy[0, 1] - pxy[1, 0] + pxy[1, 1])


def jensen_bound(pxy) -> float:
    """``-(E + |E|)/2``: upper bound on the CH value from observable joints."""
    e = correlation_e(pxy)
    return -0.5 * (e + abs(e))


def known_valid() -> dict[str, BellExpression]:
    """Named algebraic inequalities known to be valid (used by checks)."""
    d = {name: builtin(name) for name in ("I2222", "I3322_SYM", "I5322")}
    for k in range(2, 7):
        d[f"I{k}{k}"] = gen_ikk(k)
    return d
