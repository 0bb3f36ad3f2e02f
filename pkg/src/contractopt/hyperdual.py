"""Forward-mode scalar arithmetic: first-order duals and second-order hyper-duals.

``HyperDual`` carries a value, two first directional derivatives (the u- and
v-slots) and the cross second derivative, propagated exactly through
arithmetic and the elementary functions below.  ``Dual`` is the cheaper
single-tangent variant used for plain gradients.

Components may be Python floats or numpy arrays (one entry per Monte Carlo
sample); arithmetic broadcasts transparently.  Mixing ``Dual`` and
``HyperDual`` operands in one expression is an error.
"""

from __future__ import annotations

import math

import numpy as np

_NUMERIC = (int, float, np.ndarray, np.floating, np.integer)


def _exp(x):
    return math.exp(x) if isinstance(x, float) else np.exp(x)


def _log(x):
    return math.log(x) if isinstance(x, float) else np.log(x)


def _sqrt(x):
    return math.sqrt(x) if isinstance(x, float) else np.sqrt(x)


def _tanh(x):
    return math.tanh(x) if isinstance(x, float) else np.tanh(x)


def _sigmoid_raw(x):
    # Overflow-safe in both tails.
    if isinstance(x, np.ndarray):
        e = np.exp(-np.abs(x))
        return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    if x >= 0.0:
        e = math.exp(-x)
        return 1.0 / (1.0 + e)
    e = math.exp(x)
    return e / (1.0 + e)


def _pow_raw(x, p):
    return np.power(x, p) if isinstance(x, np.ndarray) else math.pow(x, p)


class Dual:
    """First-order forward-mode number f + df*eps."""

    __slots__ = ("f", "df")
    __array_ufunc__ = None  # keep numpy from broadcasting over Dual objects

    def __init__(self, f, df=0.0):
        self.f = f
        self.df = df

    def __repr__(self):
        return f"Dual({self.f!r}, {self.df!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.f + other.f, self.df + other.df)
        if isinstance(other, _NUMERIC):
            return Dual(self.f + other, self.df)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.f - other.f, self.df - other.df)
        if isinstance(other, _NUMERIC):
            return Dual(self.f - other, self.df)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _NUMERIC):
            return Dual(other - self.f, -self.df)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.f * other.f, self.df * other.f + self.f * other.df)
        if isinstance(other, _NUMERIC):
            return Dual(self.f * other, self.df * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return self * other._reciprocal()
        if isinstance(other, _NUMERIC):
            return Dual(self.f / other, self.df / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _NUMERIC):
            return self._reciprocal() * other
        return NotImplemented

    def __neg__(self):
        return Dual(-self.f, -self.df)

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            return NotImplemented
        return Dual(_pow_raw(self.f, p), p * _pow_raw(self.f, p - 1) * self.df)

    def _reciprocal(self):
        inv = 1.0 / self.f
        return Dual(inv, -inv * inv * self.df)

    def _chain(self, val, d1):
        return Dual(val, d1 * self.df)


class HyperDual:
    """Second-order forward-mode number with two tangent slots and their cross term."""

    __slots__ = ("f", "fu", "fv", "fuv")
    __array_ufunc__ = None

    def __init__(self, f, fu=0.0, fv=0.0, fuv=0.0):
        self.f = f
        self.fu = fu
        self.fv = fv
        self.fuv = fuv

    def __repr__(self):
        return f"HyperDual({self.f!r}, {self.fu!r}, {self.fv!r}, {self.fuv!r})"

    def __add__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(
                self.f + other.f, self.fu + other.fu,
                self.fv + other.fv, self.fuv + other.fuv,
            )
        if isinstance(other, _NUMERIC):
            return HyperDual(self.f + other, self.fu, self.fv, self.fuv)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(
                self.f - other.f, self.fu - other.fu,
                self.fv - other.fv, self.fuv - other.fuv,
            )
        if isinstance(other, _NUMERIC):
            return HyperDual(self.f - other, self.fu, self.fv, self.fuv)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _NUMERIC):
            return HyperDual(other - self.f, -self.fu, -self.fv, -self.fuv)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(
                self.f * other.f,
                self.fu * other.f + self.f * other.fu,
                self.fv * other.f + self.f * other.fv,
                self.fuv * other.f + self.fu * other.fv
                + self.fv * other.fu + self.f * other.fuv,
            )
        if isinstance(other, _NUMERIC):
            return HyperDual(
                self.f * other, self.fu * other, self.fv * other, self.fuv * other
            )
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, HyperDual):
            return self * other._reciprocal()
        if isinstance(other, _NUMERIC):
            return HyperDual(
                self.f / other, self.fu / other, self.fv / other, self.fuv / other
            )
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _NUMERIC):
            return self._reciprocal() * other
        return NotImplemented

    def __neg__(self):
        return HyperDual(-self.f, -self.fu, -self.fv, -self.fuv)

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            return NotImplemented
        val = _pow_raw(self.f, p)
        d1 = p * _pow_raw(self.f, p - 1)
        d2 = p * (p - 1) * _pow_raw(self.f, p - 2)
        return self._chain(val, d1, d2)

    def _reciprocal(self):
        inv = 1.0 / self.f
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def _chain(self, val, d1, d2):
        # Second-order chain rule for a unary map with derivatives d1, d2 at f.
        return HyperDual(
            val, d1 * self.fu, d1 * self.fv, d1 * self.fuv + d2 * self.fu * self.fv
        )


def exp(x):
    if isinstance(x, Dual):
        e = _exp(x.f)
        return x._chain(e, e)
    if isinstance(x, HyperDual):
        e = _exp(x.f)
        return x._chain(e, e, e)
    return _exp(x)


def log(x):
    if isinstance(x, Dual):
        return x._chain(_log(x.f), 1.0 / x.f)
    if isinstance(x, HyperDual):
        return x._chain(_log(x.f), 1.0 / x.f, -1.0 / (x.f * x.f))
    return _log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = _sqrt(x.f)
        return x._chain(s, 0.5 / s)
    if isinstance(x, HyperDual):
        s = _sqrt(x.f)
        return x._chain(s, 0.5 / s, -0.25 / (s * x.f))
    return _sqrt(x)


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x))."""
    if isinstance(x, Dual):
        s = _sigmoid_raw(x.f)
        return x._chain(s, s * (1.0 - s))
    if isinstance(x, HyperDual):
        s = _sigmoid_raw(x.f)
        d1 = s * (1.0 - s)
        return x._chain(s, d1, d1 * (1.0 - 2.0 * s))
    return _sigmoid_raw(x)


def tanh(x):
    if isinstance(x, Dual):
        th = _tanh(x.f)
        return x._chain(th, 1.0 - th * th)
    if isinstance(x, HyperDual):
        th = _tanh(x.f)
        d1 = 1.0 - th * th
        return x._chain(th, d1, -2.0 * th * d1)
    return _tanh(x)


def powr(x, p):
    """x ** p for a real constant exponent p."""
    if isinstance(x, (Dual, HyperDual)):
        return x ** p
    return _pow_raw(x, p)


def maximum(x, c):
    """max(x, c) against a plain constant c.

    Tangents pass through unchanged where the value is >= c (ties included:
    the kink uses the unclamped branch) and are zeroed on the clamped side.
    """
    if isinstance(x, Dual):
        if isinstance(x.f, np.ndarray):
            keep = x.f >= c
            return Dual(np.where(keep, x.f, c), np.where(keep, x.df, 0.0))
        return x if x.f >= c else Dual(float(c), 0.0)
    if isinstance(x, HyperDual):
        if isinstance(x.f, np.ndarray):
            keep = x.f >= c
            return HyperDual(
                np.where(keep, x.f, c),
                np.where(keep, x.fu, 0.0),
                np.where(keep, x.fv, 0.0),
                np.where(keep, x.fuv, 0.0),
            )
        return x if x.f >= c else HyperDual(float(c))
    if isinstance(x, np.ndarray):
        return np.maximum(x, c)
    return x if x >= c else c
