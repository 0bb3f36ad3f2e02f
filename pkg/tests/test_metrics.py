"""Error metrics: definitions, homogeneity, absence semantics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contractopt.environments import make_env
from contractopt.metrics import EPS, Metrics, compute_metrics
from contractopt.qmc import held_out_batch


@pytest.fixture(scope="module")
def hm_setup():
    env = make_env("hm")
    return env, env.closed_form()


def test_exact_zeros_at_ground_truth(hm_setup):
    env, truth = hm_setup
    mets = compute_metrics(truth.a_star, truth.t_star, truth, env)
    assert mets.err_a == 0.0
    assert mets.err_t == 0.0
    assert mets.gap_u1 == 0.0
    assert mets.gap_u2 <= 1e-15


def test_doubling_action_gives_unit_error(hm_setup):
    env, truth = hm_setup
    mets = compute_metrics(2.0 * truth.a_star, truth.t_star, truth, env)
    assert mets.err_a == pytest.approx(1.0, rel=1e-9)


@given(st.floats(0.01, 50.0))
@settings(max_examples=50, deadline=None)
def test_error_scales_linearly_with_perturbation(k):
    env = make_env("hm")
    truth = env.closed_form()
    direction = np.array([0.3])
    base = compute_metrics(truth.a_star + direction, truth.t_star, truth, env).err_a
    scaled = compute_metrics(truth.a_star + k * direction, truth.t_star, truth, env).err_a
    assert scaled == pytest.approx(k * base, rel=1e-9)


def test_missing_truth_reports_absent_not_zero(hm_setup):
    env, truth = hm_setup
    mets = compute_metrics(truth.a_star, truth.t_star, None, env)
    assert mets == Metrics(None, None, None, None)


def test_metrics_nonnegative_at_random_points(hm_setup):
    env, truth = hm_setup
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=1)
        t = rng.normal(size=1)
        mets = compute_metrics(a, t, truth, env)
        assert all(v >= 0.0 for v in mets.as_tuple())


def test_gap_u2_uses_best_response_to_current_contract(hm_setup):
    env, truth = hm_setup
    # at the agent's exact best response, gap_u2 vanishes for any contract
    t = np.array([0.4])
    a = env.best_response(t)
    mets = compute_metrics(a, t, truth, env)
    assert mets.gap_u2 <= 1e-15
    assert mets.gap_u1 > 0.0


def test_sampled_metrics_on_held_out_batch():
    env = make_env("hm", sampled=True)
    truth = env.closed_form()
    held = held_out_batch(97, 1, 2048)
    mets = compute_metrics(truth.a_star, truth.t_star, truth, env, held)
    assert mets.gap_u1 <= 1e-12  # antithetic exactness keeps this at zero


def _fake_truth():
    from contractopt.environments import GroundTruth

    return GroundTruth(
        a_star=np.array([0.1]), t_star=np.array([0.5, 1.0]),
        u1_star=-0.2, u2_star=0.4, source="grid_search",
    )


def test_fine_best_response_on_nonlinear_env():
    # no closed-form inner solution: gap_u2 falls back to the fine solve
    from contractopt.metrics import best_response_for_metrics
    from contractopt.environments import eval_u

    env = make_env("logistic")
    held = held_out_batch(97, 1, 1024)
    t = np.array([0.5, 1.0])
    a_br = best_response_for_metrics(env, t, held)
    _, u2_br = eval_u(env, a_br, t, held)
    # no feasible action beats the fine best response on a dense probe grid
    probe = np.linspace(env.a_lower[0], env.a_upper[0], 301)
    draws = env.draws(held)
    vals = np.asarray(env.f2([probe[:, None]], list(t), [draws[:, 0]])).mean(axis=1)
    assert u2_br >= vals.max() - 1e-10
    mets = compute_metrics(np.array([0.0]), t, _fake_truth(), env, held)
    assert mets.gap_u2 >= 0.0


def test_eps_matches_reported_constant():
    assert EPS == 1e-12
