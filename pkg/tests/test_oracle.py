"""Nested grid-search oracle: best responses, optima, caching, CRN invariance."""

import numpy as np
import pytest

from contractopt.environments import Environment, eval_u, make_env
from contractopt.errors import InvalidConfigError
from contractopt.oracle import (
    GridSpec,
    best_response_on_grid,
    cache_key,
    cached_grid_search,
    default_grid,
    grid_search,
    load_cached,
    post_hoc_transfer,
    store_cached,
)
from contractopt.qmc import make_payload

SMALL_GRID = dict(contract_resolution=12, action_resolution=41, eval_batch_size=512)


class PeakedEnv(Environment):
    """u2 = -1/2 (a - a0)^2, u1 = -(t - 1)^2 + a; known argmaxes."""

    env_id = "peaked_test"

    def __init__(self, peak=0.5):
        super().__init__()
        self.analytic = True
        self.n = self.m = 1
        self.peak = peak
        self.a_lower, self.a_upper = np.array([-2.0]), np.array([2.0])
        self.t_lower, self.t_upper = np.array([0.0]), np.array([2.0])

    def f1(self, a, t, z):
        return -(t[0] - 1.0) * (t[0] - 1.0) + a[0]

    def f2(self, a, t, z):
        return -0.5 * (a[0] - self.peak) * (a[0] - self.peak)


class TestBestResponseOnGrid:
    def test_quadratic_peak_on_grid_is_exact(self):
        env = PeakedEnv(peak=0.5)
        grid = GridSpec(contract_box=((0.0, 2.0),), action_box=(-2.0, 2.0),
                        action_resolution=41)  # 0.5 lies on this grid
        a, u2 = best_response_on_grid(env, [1.0], grid, None)
        assert a == 0.5
        assert u2 == 0.0

    def test_off_grid_peak_snaps_to_nearest_cell(self):
        env = PeakedEnv(peak=0.512)
        grid = GridSpec(contract_box=((0.0, 2.0),), action_box=(-2.0, 2.0),
                        action_resolution=41)
        a, _ = best_response_on_grid(env, [1.0], grid, None)
        assert abs(a - 0.512) <= 4.0 / 40.0  # within one cell

    def test_tie_breaks_toward_smaller_action(self):
        env = PeakedEnv(peak=0.05)  # exactly between grid points 0.0 and 0.1
        grid = GridSpec(contract_box=((0.0, 2.0),), action_box=(-2.0, 2.0),
                        action_resolution=41)
        a, _ = best_response_on_grid(env, [1.0], grid, None)
        assert a == 0.0

    def test_logistic_defaults_bounded(self):
        env = make_env("logistic")
        grid = default_grid(env, **SMALL_GRID)
        pay = make_payload(1234, 1, 512, antithetic=True)
        a, _ = best_response_on_grid(env, [0.5, 1.0], grid, pay)
        assert env.a_lower[0] <= a <= env.a_upper[0]


class TestGridSearch:
    def test_hm_slope_grid_recovers_closed_form(self):
        env = make_env("hm")
        grid = GridSpec(contract_box=((0.0, 2.0),), action_box=(0.0, 2.0),
                        contract_resolution=401, action_resolution=2001)
        truth = grid_search(env, grid, seed=7)
        b_star = env.closed_form().t_star[0]
        assert abs(truth.t_star[0] - b_star) <= 2.5e-3  # half a cell

    @pytest.mark.parametrize("env_id,box,a_res", [
        # action grids chosen so every grid slope's best response lands on a
        # grid action; otherwise quantization of the response biases the
        # winning contract by a few cells (u1 grows with the action)
        ("insurance", (0.0, 1.0), 801),
        ("imperfect", (0.0, 2.0), 801),
    ])
    def test_other_linear_envs_agree_within_half_cell(self, env_id, box, a_res):
        env = make_env(env_id)
        grid = GridSpec(contract_box=(box,), action_box=(0.0, 2.0),
                        contract_resolution=401, action_resolution=a_res)
        truth = grid_search(env, grid, seed=7)
        b_star = env.closed_form().t_star[0]
        cell = (box[1] - box[0]) / 400
        assert abs(truth.t_star[0] - b_star) <= 0.5 * cell

    def test_crra_uses_tightened_box(self):
        env = make_env("crra_logistic")
        low, high = env.bounds_t()
        np.testing.assert_allclose(low, [env.w_min, 0.20])
        np.testing.assert_allclose(high, [3.0, 3.0])
        grid = default_grid(env, **SMALL_GRID)
        assert grid.contract_box == ((env.w_min, 3.0), (0.20, 3.0))

    def test_refining_contract_grid_does_not_lose_utility(self):
        # 100 -> 199 keeps the coarse grid nested inside the fine one
        env = make_env("poisson")
        coarse = default_grid(env, contract_resolution=100,
                              action_resolution=101, eval_batch_size=1024)
        fine = default_grid(env, contract_resolution=199,
                            action_resolution=101, eval_batch_size=1024)
        u_coarse = grid_search(env, coarse, seed=9).u1_star
        u_fine = grid_search(env, fine, seed=9).u1_star
        assert u_fine >= u_coarse

    def test_crn_invariance_bitwise(self):
        env = make_env("laplace_threshold")
        grid = default_grid(env, **SMALL_GRID)
        one = grid_search(env, grid, seed=4)
        two = grid_search(env, grid, seed=4)
        assert one.u1_star == two.u1_star
        np.testing.assert_array_equal(one.t_star, two.t_star)
        np.testing.assert_array_equal(one.a_star, two.a_star)

    def test_envelope_consistency_on_subgrid(self):
        env = make_env("logistic")
        grid = default_grid(env, contract_resolution=10,
                            action_resolution=41, eval_batch_size=512)
        truth = grid_search(env, grid, seed=1234)
        pay = make_payload(1234, 1, 512, antithetic=True)
        for lam in grid.contract_axes()[0]:
            for mu in grid.contract_axes()[1]:
                a, _ = best_response_on_grid(env, [lam, mu], grid, pay)
                u1, _ = eval_u(env, [a], [lam, mu], pay)
                assert truth.u1_star >= u1 - 1e-12

    def test_fast_path_matches_generic_evaluation(self):
        env = make_env("sqrt_logistic")
        grid = default_grid(env, **SMALL_GRID)
        pay = make_payload(1234, 1, 512, antithetic=True)
        fast = grid_search(env, grid, seed=1234)
        draws = env.draws(pay)
        tables = env.grid_tables(grid.action_grid(), draws)
        lam, mu = fast.t_star
        cache = env.grid_mu_cache(tables, mu)
        u2_rows = env.grid_u2_row(tables, cache, lam, mu)
        i = int(np.argmax(u2_rows))
        # generic per-point evaluation at the winning cell
        u1_ref, u2_ref = eval_u(env, [fast.a_star[0]], [lam, mu], pay)
        assert u2_rows[i] == pytest.approx(u2_ref, abs=1e-10)
        assert fast.u1_star == pytest.approx(u1_ref, abs=1e-10)

    def test_workers_do_not_change_result(self):
        env = make_env("poisson")
        grid = default_grid(env, **SMALL_GRID)
        seq = grid_search(env, grid, seed=3, workers=1)
        par = grid_search(env, grid, seed=3, workers=2)
        assert seq.u1_star == par.u1_star
        np.testing.assert_array_equal(seq.t_star, par.t_star)

    def test_refine_reports_converged_response(self):
        env = make_env("logistic")
        grid = default_grid(env, **SMALL_GRID)
        raw = grid_search(env, grid, seed=1234)
        polished = grid_search(env, grid, seed=1234, refine=True)
        np.testing.assert_array_equal(raw.t_star, polished.t_star)
        # the polished response cannot report a better u2 than its own optimum
        assert polished.u2_star >= raw.u2_star - 1e-12

    def test_contract_box_must_match_env(self):
        env = make_env("logistic")
        grid = GridSpec(contract_box=((0.0, 1.0),), action_box=(-1.0, 1.0))
        with pytest.raises(InvalidConfigError):
            grid_search(env, grid, seed=0)


class TestTransferAndCache:
    def test_post_hoc_transfer_linear_matches_participation(self):
        env = make_env("hm")
        from contractopt.environments import participation_transfer

        slopes = np.array([0.9])
        assert post_hoc_transfer(env, slopes, 0.0, seed=5) == pytest.approx(
            participation_transfer(env, slopes, 0.0)
        )

    def test_post_hoc_transfer_sampled_uses_payload(self):
        env = make_env("hm", sampled=True)
        slopes = np.array([0.9])
        got = post_hoc_transfer(env, slopes, 0.0, seed=5, batch_size=1024)
        analytic = post_hoc_transfer(make_env("hm"), slopes, 0.0, seed=5)
        assert got == pytest.approx(analytic, abs=1e-12)  # antithetic exactness

    def test_cache_round_trip(self, tmp_path):
        env = make_env("poisson")
        grid = default_grid(env, **SMALL_GRID)
        path = tmp_path / "oracle_cache.txt"
        first = cached_grid_search(env, grid, seed=2, cache_path=path)
        key = cache_key(env, grid, 2)
        assert load_cached(path, key) is not None
        second = cached_grid_search(env, grid, seed=2, cache_path=path)
        assert first.u1_star == second.u1_star
        np.testing.assert_array_equal(first.t_star, second.t_star)

    def test_cache_key_sensitive_to_params(self):
        grid = default_grid(make_env("poisson"), **SMALL_GRID)
        k1 = cache_key(make_env("poisson"), grid, 2)
        k2 = cache_key(make_env("poisson", rho=1.5), grid, 2)
        assert k1 != k2

    def test_store_then_miss_on_other_key(self, tmp_path):
        env = make_env("poisson")
        grid = default_grid(env, **SMALL_GRID)
        path = tmp_path / "cache.txt"
        store_cached(path, "abc", env_truth())
        assert load_cached(path, "other") is None

    def test_lookup_by_env_identity(self, tmp_path):
        from contractopt.oracle import load_cached_for_env

        env = make_env("poisson")
        grid = default_grid(env, **SMALL_GRID)
        path = tmp_path / "cache.txt"
        truth = cached_grid_search(env, grid, seed=2, cache_path=path)
        hit = load_cached_for_env(path, make_env("poisson"))
        assert hit is not None and hit.u1_star == truth.u1_star
        assert load_cached_for_env(path, make_env("poisson", rho=2.0)) is None
        assert load_cached_for_env(path, make_env("logistic")) is None


def env_truth():
    from contractopt.environments import GroundTruth

    return GroundTruth(
        a_star=np.array([0.1]), t_star=np.array([0.2, 0.3]),
        u1_star=1.0, u2_star=-0.5, source="grid_search",
    )
