"""Dual / hyper-dual arithmetic against analytic derivative rules."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contractopt.hyperdual import (
    Dual,
    HyperDual,
    exp,
    log,
    maximum,
    powr,
    sigmoid,
    sqrt,
    tanh,
)


def hd(x):
    """Seed both tangent slots so f' = fu = fv and f'' = fuv for unary maps."""
    return HyperDual(x, 1.0, 1.0, 0.0)


UNARY_CASES = [
    # (function, value, f, f', f'')
    (exp, 0.7, math.exp(0.7), math.exp(0.7), math.exp(0.7)),
    (log, 2.0, math.log(2.0), 0.5, -0.25),
    (sqrt, 4.0, 2.0, 0.25, -1.0 / 32.0),
    (tanh, 0.3, math.tanh(0.3), 1 - math.tanh(0.3) ** 2,
     -2 * math.tanh(0.3) * (1 - math.tanh(0.3) ** 2)),
]


@pytest.mark.parametrize("fn,x,f,d1,d2", UNARY_CASES)
def test_unary_propagation(fn, x, f, d1, d2):
    out = fn(hd(x))
    assert out.f == pytest.approx(f, rel=1e-14)
    assert out.fu == pytest.approx(d1, rel=1e-14)
    assert out.fv == pytest.approx(d1, rel=1e-14)
    assert out.fuv == pytest.approx(d2, rel=1e-13)


def test_sigmoid_derivatives():
    s = 1.0 / (1.0 + math.exp(-0.4))
    out = sigmoid(hd(0.4))
    assert out.f == pytest.approx(s)
    assert out.fu == pytest.approx(s * (1 - s))
    assert out.fuv == pytest.approx(s * (1 - s) * (1 - 2 * s))


def test_pow_real_exponent():
    out = powr(hd(2.0), 1.7)
    assert out.f == pytest.approx(2.0**1.7)
    assert out.fu == pytest.approx(1.7 * 2.0**0.7)
    assert out.fuv == pytest.approx(1.7 * 0.7 * 2.0**-0.3)


def test_product_cross_derivative():
    # f(x, y) = x*y with x in the u slot and y in the v slot: d2f/dxdy = 1
    x = HyperDual(3.0, 1.0, 0.0, 0.0)
    y = HyperDual(5.0, 0.0, 1.0, 0.0)
    out = x * y
    assert out.f == 15.0
    assert out.fu == 5.0
    assert out.fv == 3.0
    assert out.fuv == 1.0


def test_quotient_rule():
    x = HyperDual(1.2, 1.0, 1.0, 0.0)
    out = (x * x + 1.0) / x  # f = x + 1/x, f' = 1 - 1/x^2, f'' = 2/x^3
    assert out.f == pytest.approx(1.2 + 1 / 1.2)
    assert out.fu == pytest.approx(1 - 1.2**-2)
    assert out.fuv == pytest.approx(2 * 1.2**-3)


def test_constants_have_zero_tangents():
    out = hd(1.0) * 3.0 + 2.0 - 1.0
    assert (out.fu, out.fv, out.fuv) == (3.0, 3.0, 0.0)
    rout = 2.0 / hd(2.0)
    assert rout.f == pytest.approx(1.0)
    assert rout.fu == pytest.approx(-0.5)


def test_plain_value_matches_zero_tangent_evaluation():
    def f(x):
        return sigmoid(x * x - 1.0) * exp(0.5 * x)

    plain = f(0.8)
    lifted = f(HyperDual(0.8))
    assert plain == lifted.f


@given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
@settings(max_examples=200, deadline=None)
def test_mul_div_roundtrip(a, b):
    x = HyperDual(a, 1.0, 0.5, 0.0)
    denom = HyperDual(b, 0.25, 1.0, 0.0) + 10.0  # keep away from zero
    back = (x * denom) / denom
    assert back.f == pytest.approx(x.f, abs=1e-10)
    assert back.fu == pytest.approx(x.fu, abs=1e-10)
    assert back.fv == pytest.approx(x.fv, abs=1e-10)
    assert back.fuv == pytest.approx(x.fuv, abs=1e-9)


@given(st.floats(0.1, 5.0))
@settings(max_examples=100, deadline=None)
def test_exp_log_inverse(x):
    out = log(exp(hd(x)))
    assert out.f == pytest.approx(x, rel=1e-12)
    assert out.fu == pytest.approx(1.0, rel=1e-11)
    assert abs(out.fuv) <= 1e-10


class TestClamp:
    def test_clamped_branch_zeroes_tangents(self):
        out = maximum(hd(0.5), 1.0)
        assert out.f == 1.0
        assert (out.fu, out.fv, out.fuv) == (0.0, 0.0, 0.0)

    def test_unclamped_branch_passes_through(self):
        out = maximum(hd(2.0), 1.0)
        assert (out.f, out.fu, out.fv, out.fuv) == (2.0, 1.0, 1.0, 0.0)

    def test_tie_uses_unclamped_branch(self):
        # value equal to the constant keeps the incoming derivative
        out = maximum(hd(1.0), 1.0)
        assert out.f == 1.0
        assert out.fu == 1.0

    def test_dual_array_components(self):
        x = Dual(np.array([0.0, 2.0]), np.array([1.0, 1.0]))
        out = maximum(x, 1.0)
        np.testing.assert_array_equal(out.f, [1.0, 2.0])
        np.testing.assert_array_equal(out.df, [0.0, 1.0])

    def test_plain_inputs(self):
        assert maximum(0.3, 1.0) == 1.0
        np.testing.assert_array_equal(maximum(np.array([0.3, 3.0]), 1.0), [1.0, 3.0])


class TestArrayBroadcast:
    def test_array_constant_promotes_components(self):
        z = np.array([1.0, -1.0, 2.0])
        x = Dual(0.5, 1.0)
        out = (x + z) * 2.0
        np.testing.assert_array_equal(out.f, [3.0, -1.0, 5.0])
        assert out.df == 2.0  # derivative independent of the draws

    def test_left_numpy_operand_defers_to_dual(self):
        z = np.array([1.0, 2.0])
        out = z + Dual(1.0, 1.0)
        assert isinstance(out, Dual)
        np.testing.assert_array_equal(out.f, [2.0, 3.0])

    def test_mixing_dual_and_hyperdual_raises(self):
        with pytest.raises(TypeError):
            Dual(1.0, 1.0) + HyperDual(1.0)


def test_dual_first_order_chain():
    x = Dual(0.9, 1.0)
    out = sqrt(exp(x) + 1.0)
    e = math.exp(0.9)
    assert out.f == pytest.approx(math.sqrt(e + 1))
    assert out.df == pytest.approx(e / (2 * math.sqrt(e + 1)))
