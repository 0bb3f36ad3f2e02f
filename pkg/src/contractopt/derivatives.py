"""Gradients, Hessian-vector products and mixed contractions of sample averages.

Every operation evaluates a scalar objective ``fn(a, t, z)`` where ``a`` and
``t`` are lists of scalars (floats, ``Dual`` or ``HyperDual``) and ``z`` is a
list of per-sample draw columns (or ``None`` for analytic objectives).  The
sample mean is taken in a fixed deterministic order, so repeated calls are
bitwise identical.  Derivatives are exact: one forward pass per coordinate,
no Hessian is ever materialized.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericalDomainError
from .hyperdual import Dual, HyperDual

ScalarFn = Callable[[Sequence, Sequence, Optional[Sequence]], object]


def _z_columns(draws):
    if draws is None:
        return None
    return [draws[:, j] for j in range(draws.shape[1])]


def _call(fn, a, t, z, label: str):
    try:
        return fn(a, t, z)
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise NumericalDomainError(f"evaluation failed in {label}: {exc}") from exc


def _reduce(component, label: str):
    """Mean over the sample axis (or pass-through for sample-free scalars)."""
    if isinstance(component, np.ndarray):
        if not np.all(np.isfinite(component)):
            bad = int(np.argmin(np.isfinite(component)))
            raise NumericalDomainError(
                f"non-finite value in {label} at sample index {bad}"
            )
        return float(component.mean())
    value = float(component)
    if not np.isfinite(value):
        raise NumericalDomainError(f"non-finite value in {label}")
    return value


def eval_mean(fn: ScalarFn, a, t, draws=None) -> float:
    """Sample average of fn at plain float (a, t)."""
    a_plain = [float(x) for x in a]
    t_plain = [float(x) for x in t]
    result = _call(fn, a_plain, t_plain, _z_columns(draws), "objective value")
    return _reduce(result, "objective value")


def _tangent(result, cls, slot):
    if isinstance(result, cls):
        return getattr(result, slot)
    return 0.0  # objective does not depend on the lifted block


def grad_a(fn: ScalarFn, a, t, draws=None) -> np.ndarray:
    """Exact gradient of the sample average with respect to a."""
    z = _z_columns(draws)
    t_plain = [float(x) for x in t]
    a_vals = [float(x) for x in a]
    out = np.empty(len(a_vals))
    for i in range(len(a_vals)):
        a_lift = [Dual(x, 1.0 if j == i else 0.0) for j, x in enumerate(a_vals)]
        result = _call(fn, a_lift, t_plain, z, f"grad_a[{i}]")
        out[i] = _reduce(_tangent(result, Dual, "df"), f"grad_a[{i}]")
    return out


def grad_t(fn: ScalarFn, a, t, draws=None) -> np.ndarray:
    """Exact gradient of the sample average with respect to t."""
    z = _z_columns(draws)
    a_plain = [float(x) for x in a]
    t_vals = [float(x) for x in t]
    out = np.empty(len(t_vals))
    for j in range(len(t_vals)):
        t_lift = [Dual(x, 1.0 if k == j else 0.0) for k, x in enumerate(t_vals)]
        result = _call(fn, a_plain, t_lift, z, f"grad_t[{j}]")
        out[j] = _reduce(_tangent(result, Dual, "df"), f"grad_t[{j}]")
    return out


def hvp_aa(fn: ScalarFn, a, t, draws, v) -> np.ndarray:
    """Hessian-vector product (d^2/da^2 of the sample average) applied to v.

    Direction v rides in the v-slot while basis vectors sweep the u-slot;
    the cross derivative of pass i is row i of H v.
    """
    z = _z_columns(draws)
    t_plain = [float(x) for x in t]
    a_vals = [float(x) for x in a]
    v = np.asarray(v, dtype=float)
    out = np.empty(len(a_vals))
    for i in range(len(a_vals)):
        a_lift = [
            HyperDual(x, 1.0 if j == i else 0.0, float(v[j]), 0.0)
            for j, x in enumerate(a_vals)
        ]
        result = _call(fn, a_lift, t_plain, z, f"hvp_aa[{i}]")
        out[i] = _reduce(_tangent(result, HyperDual, "fuv"), f"hvp_aa[{i}]")
    return out


def mixed_hvp_ta(fn: ScalarFn, a, t, draws, v) -> np.ndarray:
    """Cross-block contraction d/dt (d/da of the sample average . v)."""
    z = _z_columns(draws)
    a_vals = [float(x) for x in a]
    t_vals = [float(x) for x in t]
    v = np.asarray(v, dtype=float)
    a_lift = [HyperDual(x, float(v[i]), 0.0, 0.0) for i, x in enumerate(a_vals)]
    out = np.empty(len(t_vals))
    for j in range(len(t_vals)):
        t_lift = [
            HyperDual(x, 0.0, 1.0 if k == j else 0.0, 0.0)
            for k, x in enumerate(t_vals)
        ]
        result = _call(fn, a_lift, t_lift, z, f"mixed_hvp_ta[{j}]")
        out[j] = _reduce(_tangent(result, HyperDual, "fuv"), f"mixed_hvp_ta[{j}]")
    return out
