from fractions import Fraction

import numpy as np
import pytest

from bellforge.expr import BellExpression, BoxPoint, builtin, evaluate, gen_ikk, to_probability_form
from bellforge.lhv import (MAX_ENUMERATION, DeterministicStrategy, EnumerationGuardError, LHVModel, ch_zero_lhv,
                           correlation_e, extremes, i2_zero, i2_zero_closed, i2_zero_step, i3_zero, is_valid_bellch,
                           jensen_bound, known_valid, lhv_value, rearrangement_bounds, reversed_pairing_sum,
                           sample_lhv, sorted_pairing_sum, step, vertex_max, vertex_max_bruteforce)

FLIPPED = BellExpression.from_coeffs([[1, 1], [1, 1]], [-1, 0], [-1, 0])


@pytest.mark.parametrize("name", sorted(known_valid()))
def test_vertex_max_is_zero_for_known_inequalities(name):
    e = known_valid()[name]
    value, strategy = vertex_max(e)
    assert value == 0 and isinstance(value, Fraction)
    assert vertex_max_bruteforce(e) == 0
    assert is_valid_bellch(e)


def test_vertex_max_strategy_and_ties():
    value, strategy = vertex_max(builtin("I2222"))
    assert (value, strategy) == (0, DeterministicStrategy((0, 0), (0, 0)))
    value, strategy = vertex_max(FLIPPED)
    assert value == 2 and str(strategy) == "(A,A|B,B)"
    assert not is_valid_bellch(FLIPPED)


def test_vertex_max_scales_with_bounds():
    e = FLIPPED
    assert vertex_max(e, 2, 3)[0] == 6 * vertex_max(e)[0]
    assert vertex_max(e, Fraction(1, 2), 1)[0] == 1


def test_random_expressions_match_bruteforce():
    rng = np.random.default_rng(5)
    for _ in range(200):
        m, n = rng.integers(1, 5, 2)
        e = BellExpression.from_coeffs(rng.integers(-3, 4, (m, n)).tolist(), rng.integers(-3, 4, m).tolist(),
                                       rng.integers(-3, 4, n).tolist(), int(rng.integers(-2, 3)))
        value, strategy = vertex_max(e)
        assert value == vertex_max_bruteforce(e)
        pt = strategy.point()
        assert evaluate(e, pt) == pytest.approx(float(value))


def test_enumeration_guard():
    big = BellExpression.zeros(13, MAX_ENUMERATION - 12)
    with pytest.raises(EnumerationGuardError):
        vertex_max(big)


def test_vertex_optimality_on_interior_points():
    rng = np.random.default_rng(9)
    for name in ("I2222", "I3322_SYM", "I5322"):
        e = builtin(name)
        bound = float(vertex_max(e)[0])
        for _ in range(1000):
            pt = BoxPoint(tuple(rng.uniform(0, 1, e.m)), tuple(rng.uniform(0, 1, e.n)))
            assert evaluate(e, pt) <= bound + 1e-12


def test_lhv_value_examples():
    ch = builtin("CH_PROB")
    det = LHVModel(np.ones(1), [[1.0, 0.0]], [[1.0, 0.0]])
    assert lhv_value(ch, det) == pytest.approx(-1)
    half = LHVModel(np.array([0.3, 0.7]), np.full((2, 2), 0.5), np.full((2, 2), 0.5))
    assert lhv_value(ch, half) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        lhv_value(builtin("I2222"), det)


def test_lhv_model_validation():
    with pytest.raises(ValueError):
        LHVModel(np.array([0.5, 0.6]), np.zeros((2, 1)), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        LHVModel(np.ones(1), [[1.2]], [[0.0]])
    with pytest.raises(ValueError):
        sample_lhv(2, 2, 0, 1)


def test_sample_lhv_is_deterministic():
    a, b = sample_lhv(3, 2, 4, 17), sample_lhv(3, 2, 4, 17)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.px, b.px)
    assert np.array_equal(sample_lhv(2, 2, 1, 99).weights, [1.0])


def test_valid_inequalities_hold_on_random_models():
    rng = np.random.default_rng(2)
    for e in known_valid().values():
        p = to_probability_form(e)
        for _ in range(200):
            model = sample_lhv(e.m, e.n, int(rng.integers(1, 6)), int(rng.integers(2 ** 32)))
            assert lhv_value(p, model) <= 1e-12


def test_step():
    assert step(3.5) == 1 and step(0) == 0.5 and step(-2) == 0
    assert step(Fraction(0)) == Fraction(1, 2)
    for x in (Fraction(-3, 7), Fraction(0), Fraction(5, 2)):
        assert x * step(x) == (x + abs(x)) / 2
    rng = np.random.default_rng(0)
    for x in rng.normal(size=100):
        assert abs(x * step(x) - (x + abs(x)) / 2) <= 1e-15


def test_pairing_sums_and_extremes():
    xs, ys = [3.0, 1.0, 2.0], [0.5, 2.0, 1.0]
    assert sorted_pairing_sum(xs, ys) == 1 * 0.5 + 2 * 1 + 3 * 2
    assert reversed_pairing_sum(xs, ys) == 1 * 2 + 2 * 1 + 3 * 0.5
    assert extremes([2, 5, 5, 1, 1]) == (5, 1, 1, 3)


def test_rearrangement_examples():
    assert rearrangement_bounds("K2", BoxPoint((1.0, 0.0), (1.0, 0.0))) == (-1, -1)
    _, zero = rearrangement_bounds("K2", BoxPoint((0.4, 0.4), (0.9, 0.1)))
    assert zero == pytest.approx(0, abs=1e-15)
    assert rearrangement_bounds("K3", BoxPoint((1.0,) * 3, (1.0,) * 3)) == (0, 0)
    with pytest.raises(ValueError):
        rearrangement_bounds("K3", BoxPoint((1.0,) * 2, (1.0,) * 2))


def test_zero_forms_agree():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        xs, ys = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
        assert i2_zero(xs, ys) == pytest.approx(i2_zero_closed(xs, ys), abs=1e-12)
        assert i2_zero(xs, ys) == pytest.approx(i2_zero_step(xs, ys), abs=1e-12)
    # exact, including a tie
    xs, ys = [Fraction(1, 3), Fraction(1, 3)], [Fraction(1), Fraction(0)]
    assert i2_zero_step(xs, ys) == 0 == i2_zero_closed(xs, ys)
    x3, y3 = [0.2, 0.9, 0.5], [0.7, 0.1, 0.4]
    assert i3_zero(x3, y3) == pytest.approx(reversed_pairing_sum(x3, y3) - float(np.dot(x3, y3)))


def test_jensen_chain_pieces():
    model = sample_lhv(2, 2, 5, 3)
    pxy = model.table()[2]
    e = correlation_e(pxy)
    assert jensen_bound(pxy) == pytest.approx(-(e + abs(e)) / 2)
    assert lhv_value(builtin("CH_PROB"), model) <= ch_zero_lhv(model) + 1e-12 <= jensen_bound(pxy) + 2e-12
