from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellforge.expr import (BellExpression, Bound, BoxPoint, ExpressionError, Form, Party, affine_flip, builtin,
                            evaluate, evaluate_exact, gen_ikk, relabel, render, split_branches, substitute_bound,
                            to_algebraic_form, to_fraction, to_probability_form, transpose)
from bellforge.lhv import vertex_max

I2 = builtin("I2222")


def rand_expr(rng, m, n, lo=-3, hi=3):
    return BellExpression.from_coeffs(rng.integers(lo, hi + 1, (m, n)).tolist(),
                                      rng.integers(lo, hi + 1, m).tolist(),
                                      rng.integers(lo, hi + 1, n).tolist(),
                                      int(rng.integers(lo, hi + 1)))


def rand_point(rng, m, n):
    A, B = rng.uniform(0.2, 3, 2)
    return BoxPoint(tuple(rng.uniform(0, A, m)), tuple(rng.uniform(0, B, n)), A, B)


def test_builtin_coefficients():
    assert I2.joint == ((1, 1), (1, -1))
    assert I2.marg_x == (-1, 0) and I2.marg_y == (-1, 0)
    i5 = builtin("I5322")
    assert i5.shape == (5, 3)
    assert i5.marg_x == (-1, -1, -1, 0, 0) and i5.marg_y == (-1, -1, 0)
    assert builtin("CH_PROB").form_tag is Form.PROBABILITY
    with pytest.raises(ExpressionError):
        builtin("I9999")


def test_coefficients_are_fractions():
    e = BellExpression.from_coeffs([["1/2", 1]], ["-3/4"], [0, "2"])
    assert all(isinstance(c, Fraction) for row in e.joint for c in row)
    assert e.joint[0][0] == Fraction(1, 2)
    with pytest.raises(TypeError):
        to_fraction(0.5)


def test_dimension_errors_name_the_axis():
    with pytest.raises(ExpressionError, match="marg_x"):
        BellExpression.from_coeffs([[1, 1]], [0, 0], [0, 0])
    with pytest.raises(ExpressionError, match="x"):
        evaluate(I2, BoxPoint((0.0,), (0.0, 0.0)))


def test_evaluate_examples():
    assert evaluate(I2, BoxPoint((1.0, 0.0), (1.0, 0.0))) == -1
    assert evaluate(I2, BoxPoint((0.0, 0.0), (0.0, 0.0))) == 0
    assert evaluate(builtin("I3322_SYM"), BoxPoint((1.0,) * 3, (1.0,) * 3)) == 0


def test_box_point_rejects_outside():
    with pytest.raises(ExpressionError):
        BoxPoint((1.5,), (0.0,), A=1.0, B=1.0)


def test_substitute_bound_on_two_setting_member():
    hi = substitute_bound(gen_ikk(2), Party.Y, 1, Bound.BOUND)
    lo = substitute_bound(gen_ikk(2), Party.Y, 1, Bound.ZERO)
    # (x1 + x2) y1 - x2 B - A y1  and  (x1 + x2) y1 - x1 B - A y1
    assert hi == BellExpression.from_coeffs([[1, 0], [1, 0]], [0, -1], [-1, 0])
    assert lo == BellExpression.from_coeffs([[1, 0], [1, 0]], [-1, 0], [-1, 0])
    assert split_branches(gen_ikk(2), Party.Y, 1) == (hi, lo)
    with pytest.raises(ExpressionError):
        substitute_bound(I2, Party.X, 2, Bound.ZERO)


def test_transformations_commute_with_evaluate():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        m, n = rng.integers(1, 5, 2)
        e = rand_expr(rng, m, n)
        pt = rand_point(rng, m, n)
        base = evaluate(e, pt)
        party = Party.X if rng.random() < 0.5 else Party.Y
        idx = int(rng.integers(0, m if party is Party.X else n))
        xs, ys = list(pt.xs), list(pt.ys)

        # pinned coordinate
        bound = Bound.BOUND if rng.random() < 0.5 else Bound.ZERO
        pinned_xs, pinned_ys = list(xs), list(ys)
        value = (pt.A if party is Party.X else pt.B) if bound is Bound.BOUND else 0.0
        (pinned_xs if party is Party.X else pinned_ys)[idx] = value
        sub = substitute_bound(e, party, idx, bound)
        assert evaluate(sub, pt) == pytest.approx(evaluate(e, BoxPoint(tuple(pinned_xs), tuple(pinned_ys), pt.A, pt.B)),
                                                  abs=1e-12)

        # flipped coordinate
        fx, fy = list(xs), list(ys)
        if party is Party.X:
            fx[idx] = pt.A - fx[idx]
        else:
            fy[idx] = pt.B - fy[idx]
        flipped = affine_flip(e, party, idx)
        assert evaluate(flipped, pt) == pytest.approx(evaluate(e, BoxPoint(tuple(fx), tuple(fy), pt.A, pt.B)),
                                                      abs=1e-12)

        # relabelled coordinates
        px, py = rng.permutation(m), rng.permutation(n)
        r = relabel(e, px.tolist(), py.tolist())
        moved = BoxPoint(tuple(xs[k] for k in px), tuple(ys[k] for k in py), pt.A, pt.B)
        assert evaluate(r, moved) == pytest.approx(base, abs=1e-12)


def test_affine_flip_involution_and_vertex_max():
    rng = np.random.default_rng(3)
    for _ in range(100):
        e = rand_expr(rng, 3, 2)
        f = affine_flip(e, Party.Y, 1)
        assert affine_flip(f, Party.Y, 1) == e
        assert vertex_max(f)[0] == vertex_max(e)[0]


def test_symmetric_three_setting_from_family_member():
    e = gen_ikk(3)
    e = affine_flip(e, Party.X, 0)
    e = affine_flip(e, Party.Y, 1)
    e = affine_flip(e, Party.Y, 2)
    e = relabel(e, [2, 1, 0], [2, 1, 0])
    assert e == builtin("I3322_SYM")


def test_relabel_identity_and_double_swap():
    e = builtin("I5322")
    assert relabel(e, list(range(5)), list(range(3))) == e
    swap = [1, 0, 2, 3, 4]
    assert relabel(relabel(e, swap), swap) == e
    s = relabel(I2, [1, 0], [1, 0])
    assert vertex_max(s)[0] == vertex_max(I2)[0]
    with pytest.raises(ExpressionError):
        relabel(I2, [0, 0])


def test_gen_ikk_expansions():
    assert gen_ikk(2) == I2
    # (x1+x2+x3)y1 + (x1+x2)y2 + x1y3 - x2y3 - x3y2 - (2x1+x2)B - Ay1
    want = BellExpression.from_coeffs([[1, 1, 1], [1, 1, -1], [1, -1, 0]], [-2, -1, 0], [-1, 0, 0])
    assert gen_ikk(3) == want
    with pytest.raises(ExpressionError):
        gen_ikk(1)


def test_probability_form_round_trip():
    p = to_probability_form(I2)
    assert p.form_tag is Form.PROBABILITY
    assert p.joint == I2.joint
    assert p == builtin("CH_PROB")
    assert to_algebraic_form(p) == I2
    with pytest.raises(ExpressionError):
        to_probability_form(p)
    with pytest.raises(ExpressionError):
        evaluate(p, BoxPoint((0.0, 0.0), (0.0, 0.0)))


def test_transpose_swaps_roles():
    e = builtin("I5322")
    t = transpose(e)
    assert t.shape == (3, 5)
    assert transpose(t) == e
    assert vertex_max(t)[0] == vertex_max(e)[0]


def test_render():
    assert render(gen_ikk(2)) == "x1*y1 + x1*y2 + x2*y1 - x2*y2 - x1*B - A*y1"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=4, max_size=4), st.integers(-4, 4),
       st.lists(st.fractions(0, 1, max_denominator=7), min_size=4, max_size=4))
def test_exact_and_float_evaluation_agree(coeffs, c0, pt):
    e = BellExpression.from_coeffs([coeffs[:2]], [coeffs[2]], [coeffs[3], 0], c0)
    exact = evaluate_exact(e, [pt[0]], pt[1:3], 1, 1)
    approx = evaluate(e, BoxPoint((float(pt[0]),), (float(pt[1]), float(pt[2]))))
    assert float(exact) == pytest.approx(approx, abs=1e-12)
