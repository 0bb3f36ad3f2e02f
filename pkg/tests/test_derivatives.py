"""Sample-average gradient and HVP operations."""

import numpy as np
import pytest

from contractopt.derivatives import eval_mean, grad_a, grad_t, hvp_aa, mixed_hvp_ta
from contractopt.environments import make_env
from contractopt.errors import NumericalDomainError
from contractopt.hyperdual import log
from contractopt.qmc import make_payload


def test_grad_a_polynomial():
    fn = lambda a, t, z: a[0] * a[0] * a[1]
    np.testing.assert_allclose(grad_a(fn, [2.0, 3.0], [], None), [12.0, 4.0])


def test_grad_a_constant_is_zero():
    fn = lambda a, t, z: 42.0
    np.testing.assert_array_equal(grad_a(fn, [1.0, 2.0], [], None), [0.0, 0.0])


def test_grad_a_hm_analytic():
    # agent marginal utility b - c a at a=0, b=1, c=1
    env = make_env("hm", r=1.0, c=1.0, sigma=0.1)
    g = grad_a(env.f2, [0.0], [1.0], None)
    np.testing.assert_allclose(g, [1.0])


def test_grad_t_independent_is_zero():
    fn = lambda a, t, z: a[0] ** 2
    np.testing.assert_array_equal(grad_t(fn, [2.0], [1.0, 3.0], None), [0.0, 0.0])


def test_grad_t_hm_risk_term():
    env = make_env("hm", r=1.0, c=1.0, sigma=0.1)
    g = grad_t(env.f1, [0.0], [1.0], None)
    np.testing.assert_allclose(g, [-0.01])


def test_grad_t_linear_wage_equals_sample_mean():
    pay = make_payload(seed=4, dim=1, n=256, antithetic=False)
    from contractopt.qmc import NoiseKind

    draws = pay.draws((NoiseKind("normal"),))
    fn = lambda a, t, z: t[0] * z[0]
    g = grad_t(fn, [], [0.7], draws)
    assert g[0] == pytest.approx(float(draws[:, 0].mean()), abs=1e-15)


def test_hvp_diagonal():
    fn = lambda a, t, z: -0.5 * (2.0 * a[0] * a[0] + 4.0 * a[1] * a[1])
    out = hvp_aa(fn, [0.3, -0.2], [], None, [1.0, 1.0])
    np.testing.assert_allclose(out, [-2.0, -4.0])


def test_hvp_linear_fn_is_zero():
    fn = lambda a, t, z: 3.0 * a[0] - a[1]
    np.testing.assert_array_equal(hvp_aa(fn, [1.0, 1.0], [], None, [1.0, 2.0]), [0.0, 0.0])


def test_hvp_polynomial():
    # Hessian of a1^2 a2 at (2,3) is [[6,4],[4,0]]
    fn = lambda a, t, z: a[0] * a[0] * a[1]
    out = hvp_aa(fn, [2.0, 3.0], [], None, [1.0, 1.0])
    np.testing.assert_allclose(out, [10.0, 4.0])


def test_mixed_quadratic_coupling():
    fn = lambda a, t, z: -0.5 * (a[0] - t[0]) * (a[0] - t[0])
    out = mixed_hvp_ta(fn, [0.4], [1.1], None, [2.5])
    np.testing.assert_allclose(out, [2.5])


def test_mixed_separable_is_zero():
    fn = lambda a, t, z: a[0] ** 2 + log(t[0])
    np.testing.assert_array_equal(mixed_hvp_ta(fn, [1.0], [2.0], None, [1.0]), [0.0])


def test_mixed_hm_transfer_and_slope():
    # u2 with t = (s, b): grad_a u2 = b - c a, so the mixed block is (0, v)
    c = 1.0
    fn = lambda a, t, z: t[0] + t[1] * a[0] - 0.5 * c * a[0] * a[0]
    out = mixed_hvp_ta(fn, [0.5], [0.0, 1.0], None, [0.7])
    np.testing.assert_allclose(out, [0.0, 0.7])


def test_eval_mean_matches_manual_average():
    pay = make_payload(seed=8, dim=1, n=128, antithetic=True)
    from contractopt.qmc import NoiseKind

    draws = pay.draws((NoiseKind("logistic"),))
    fn = lambda a, t, z: a[0] + z[0] * z[0]
    got = eval_mean(fn, [2.0], [], draws)
    assert got == pytest.approx(2.0 + float((draws[:, 0] ** 2).mean()), abs=1e-14)


def test_nonfinite_sample_reports_index():
    z = np.zeros((4, 1))
    z[2, 0] = -1.0
    fn = lambda a, t, zz: log(a[0] + zz[0])  # log(0) at sample 2
    with np.errstate(divide="ignore"):
        with pytest.raises(NumericalDomainError, match="sample index 2"):
            eval_mean(fn, [1.0], [], z)


def test_nonfinite_scalar_raises():
    fn = lambda a, t, z: log(a[0])
    with pytest.raises(NumericalDomainError):
        grad_a(fn, [0.0], [], None)


def test_stacked_hvp_reproduces_fd_hessian_2x2():
    # basis-vector HVPs assembled into a matrix vs finite differences of grad_a
    fn = lambda a, t, z: a[0] ** 3 * a[1] + 0.5 * a[1] * a[1] * t[0]
    a0 = np.array([0.7, -0.4])
    t0 = [1.3]
    hess_ad = np.column_stack([
        hvp_aa(fn, a0, t0, None, [1.0, 0.0]),
        hvp_aa(fn, a0, t0, None, [0.0, 1.0]),
    ])
    step = 1e-5
    hess_fd = np.empty((2, 2))
    for j in range(2):
        hi, lo = a0.copy(), a0.copy()
        hi[j] += step
        lo[j] -= step
        hess_fd[:, j] = (grad_a(fn, hi, t0, None) - grad_a(fn, lo, t0, None)) / (2 * step)
    np.testing.assert_allclose(hess_ad, hess_fd, atol=1e-4)
    np.testing.assert_allclose(hess_ad, hess_ad.T, atol=1e-12)


def test_gradients_are_deterministic():
    env = make_env("hm", sampled=True)
    pay = make_payload(seed=1, dim=1, n=512, antithetic=True)
    draws = env.draws(pay)
    g1 = grad_a(env.f2, [0.4], [0.8], draws)
    g2 = grad_a(env.f2, [0.4], [0.8], draws)
    np.testing.assert_array_equal(g1, g2)
