"""The acceptance suite behind ``contractopt validate``.

Each check returns a named pass/fail record with the measured quantity and
its tolerance; the CLI prints one line per check and exits nonzero on any
failure.  The same functions back the pytest acceptance module, so the CLI
and the test suite cannot drift apart.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cg import SpdOperator, conjugate_gradient
from .derivatives import eval_mean, grad_a, grad_t, hvp_aa
from .environments import (
    LINEAR_IDS,
    Environment,
    eval_u,
    make_env,
)
from .metrics import EPS
from .oracle import GridSpec, default_grid, grid_search
from .params import ParamVec, SolverConfig
from .qmc import make_payload, sobol_points
from .solver import hypergrad, outer_loop, random_init

NONLINEAR_BENCH_IDS = ("logistic", "sqrt_logistic", "laplace_threshold", "poisson")

LINEAR_DESK = SolverConfig(eta_out=1e-2, t_out=20000, init_seed=3)
NONLINEAR_DESK = SolverConfig(
    eta_out=1e-3, t_out=50000, batch_n=1024, init_seed=3, log_every=1000
)

# first/last rows of sobol_points(16, 8, seed=0), frozen from the direction table
_SOBOL_ROW0 = np.full(16, 0.5)
_SOBOL_ROW7 = np.array([
    0.1875, 0.3125, 0.9375, 0.4375, 0.5625, 0.3125, 0.4375, 0.9375,
    0.9375, 0.3125, 0.6875, 0.0625, 0.9375, 0.9375, 0.8125, 0.9375,
])


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class ValidationContext:
    """Heavy intermediates shared between checks (runs, oracle references)."""

    workers: int = 1
    linear_runs: dict = field(default_factory=dict)
    nonlinear_runs: dict = field(default_factory=dict)
    oracle_truths: dict = field(default_factory=dict)
    oracle_seconds: dict = field(default_factory=dict)


def _timed(name: str, fn) -> CheckResult:
    start = time.monotonic()
    passed, detail = fn()
    return CheckResult(name, passed, detail, time.monotonic() - start)


# ---------------------------------------------------------------------------
# Infrastructure sanity (exercised by fault-injection tests)
# ---------------------------------------------------------------------------

def check_sobol() -> CheckResult:
    def body():
        pts = sobol_points(1, 3, seed=0).ravel()
        ok = np.array_equal(pts, [0.5, 0.75, 0.25])
        block = sobol_points(16, 8, seed=0)
        ok = ok and np.array_equal(block[0], _SOBOL_ROW0)
        ok = ok and np.array_equal(block[7], _SOBOL_ROW7)
        ok = ok and float(block.sum()) == 65.75
        return ok, "direction numbers reproduce the frozen reference points"

    return _timed("sobol", body)


# ---------------------------------------------------------------------------
# Closed-form recovery (analytic and sampled)
# ---------------------------------------------------------------------------

def run_linear_desk(env_id: str, sampled: bool = False, cfg: SolverConfig = LINEAR_DESK):
    env = make_env(env_id, sampled=sampled)
    truth = env.closed_form()
    t0, a0 = random_init(env, cfg.init_seed)
    result = outer_loop(env, t0, a0, cfg, truth=truth)
    return env, truth, result


def check_recovery_analytic(env_id: str, ctx: ValidationContext | None = None) -> CheckResult:
    def body():
        env, truth, result = run_linear_desk(env_id)
        if ctx is not None:
            ctx.linear_runs[env_id] = (env, truth, result)
        last = result.trace.last()
        ok = (
            last.err_t <= 1e-2 and last.err_a <= 1e-2 and last.gap_u1 <= 1e-3
        )
        return ok, (
            f"err_t={last.err_t:.2e} (<=1e-2) err_a={last.err_a:.2e} (<=1e-2) "
            f"gap_u1={last.gap_u1:.2e} (<=1e-3)"
        )

    return _timed(f"recovery-analytic[{env_id}]", body)


def check_recovery_sampled(ctx: ValidationContext | None = None) -> CheckResult:
    def body():
        env, truth, result = run_linear_desk("hm", sampled=True)
        if ctx is not None:
            ctx.linear_runs["hm_sampled"] = (env, truth, result)
        last = result.trace.last()
        ok = last.err_t <= 2e-2 and last.gap_u1 <= 5e-3
        return ok, (
            f"sampled HM: err_t={last.err_t:.2e} (<=2e-2) "
            f"gap_u1={last.gap_u1:.2e} (<=5e-3)"
        )

    return _timed("recovery-sampled-hm", body)


# ---------------------------------------------------------------------------
# Hypergradient oracle
# ---------------------------------------------------------------------------

class _ToyBilinear(Environment):
    """u2 = -1/2 (a - t)^2, u1 = a t; hand-derived hypergradient is a + t."""

    env_id = "toy_bilinear"

    def __init__(self):
        super().__init__()
        self.analytic = True
        self.n = self.m = 1
        inf = np.array([np.inf])
        self.a_lower, self.a_upper = -inf, inf
        self.t_lower, self.t_upper = -inf, inf

    def f1(self, a, t, z):
        return a[0] * t[0]

    def f2(self, a, t, z):
        return -0.5 * (a[0] - t[0]) * (a[0] - t[0])


def toy_hypergrad_deviation(lam: float, t_val: float = 1.0) -> float:
    env = _ToyBilinear()
    t = ParamVec.make([t_val], env.t_lower, env.t_upper, "contract")
    a = ParamVec.make([t_val], env.a_lower, env.a_upper, "agent")
    cfg = SolverConfig(lam=lam, eps_cg=1e-14)
    result = hypergrad(env, a, t, None, cfg)
    return abs(float(result.h[0]) - 2.0 * t_val)


def hm_fd_hypergrad_error(lam: float = 1e-6, b_val: float = 0.7, delta: float = 1e-4) -> float:
    """Alg-3 output vs central differences of b -> u1(a*(b), b) on analytic HM."""
    env = make_env("hm")

    def outer_value(b):
        a = env.best_response([b])  # re-solve the inner problem exactly
        u1, _ = eval_u(env, a, [b])
        return u1

    fd = (outer_value(b_val + delta) - outer_value(b_val - delta)) / (2 * delta)
    a_star = env.best_response([b_val])
    t = ParamVec.make([b_val], env.t_lower, env.t_upper, "contract")
    a = ParamVec.make(a_star, env.a_lower, env.a_upper, "agent")
    hg = hypergrad(env, a, t, None, SolverConfig(lam=lam))
    return abs(float(hg.h[0]) - fd) / (abs(fd) + EPS)


def check_hypergrad_oracle() -> CheckResult:
    def body():
        dev0 = toy_hypergrad_deviation(0.0)
        dev4 = toy_hypergrad_deviation(1e-4)
        fd_err = hm_fd_hypergrad_error()
        ok = dev0 <= 1e-10 and dev4 <= 2e-4 and fd_err <= 1e-3
        return ok, (
            f"toy lam=0 dev={dev0:.2e} (<=1e-10), lam=1e-4 dev={dev4:.2e} (<=2e-4), "
            f"HM fd rel err={fd_err:.2e} (<=1e-3)"
        )

    return _timed("hypergradient-oracle", body)


# ---------------------------------------------------------------------------
# Conjugate gradient correctness
# ---------------------------------------------------------------------------

def random_spd(n: int, rng) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return m.T @ m + np.eye(n)


def check_cg_correctness() -> CheckResult:
    def body():
        rng = np.random.default_rng(42)
        details = []
        ok = True
        for n in (2, 8, 50):
            a_mat = random_spd(n, rng)
            b = rng.standard_normal(n)
            op = SpdOperator(apply=lambda v, a_mat=a_mat: a_mat @ v, n=n)
            report = conjugate_gradient(op, b, max_iters=10 * n, tol=1e-10)
            direct = np.linalg.solve(a_mat, b)
            rel = np.linalg.norm(report.solution - direct) / np.linalg.norm(direct)
            ok = ok and rel <= 1e-6
            details.append(f"n={n} rel={rel:.2e}")
        # A-norm error monotonicity on n=8
        a_mat = random_spd(8, rng)
        b = rng.standard_normal(8)
        direct = np.linalg.solve(a_mat, b)
        iterates = []
        conjugate_gradient(
            SpdOperator(apply=lambda v: a_mat @ v, n=8), b,
            max_iters=8, tol=0.0, on_iterate=iterates.append,
        )
        energies = [
            float(np.sqrt((x - direct) @ a_mat @ (x - direct))) for x in iterates
        ]
        mono = all(b2 <= a2 + 1e-12 for a2, b2 in zip(energies, energies[1:]))
        ok = ok and mono
        details.append(f"A-norm monotone={mono}")
        return ok, "; ".join(details) + " (<=1e-6)"

    return _timed("cg-correctness", body)


# ---------------------------------------------------------------------------
# Gradient / HVP suite
# ---------------------------------------------------------------------------

def _random_point(env: Environment, rng) -> tuple[np.ndarray, np.ndarray]:
    def draw(lower, upper, size):
        lower = np.asarray(lower, float)
        upper = np.asarray(upper, float)
        out = np.empty(size)
        for i in range(size):
            lo, hi = lower[i], upper[i]
            if np.isfinite(lo) and np.isfinite(hi):
                width = hi - lo
                out[i] = rng.uniform(lo + 0.15 * width, hi - 0.15 * width)
            else:
                out[i] = rng.standard_normal()
        return out

    a = draw(env.a_lower, env.a_upper, env.n)
    t = draw(env.t_lower, env.t_upper, env.m)
    return a, t


def _fd_grad(fn, x, other, draws, wrt_first: bool, step: float = 1e-5):
    x = np.asarray(x, float)
    out = np.empty(len(x))
    for i in range(len(x)):
        hi, lo = x.copy(), x.copy()
        hi[i] += step
        lo[i] -= step
        if wrt_first:
            out[i] = (eval_mean(fn, hi, other, draws) - eval_mean(fn, lo, other, draws)) / (2 * step)
        else:
            out[i] = (eval_mean(fn, other, hi, draws) - eval_mean(fn, other, lo, draws)) / (2 * step)
    return out


def gradient_suite_errors(env: Environment, points: int = 10, seed: int = 5):
    """Max relative errors (grad, hvp) and max symmetry defect over random points."""
    rng = np.random.default_rng(seed)
    payload = None
    if not env.analytic:
        payload = make_payload(11, len(env.noise), 1024, antithetic=True)
    draws = env.draws(payload)
    worst_grad = 0.0
    worst_hvp = 0.0
    worst_sym = 0.0
    for _ in range(points):
        a, t = _random_point(env, rng)
        for fn in (env.f1, env.f2):
            g_ad = grad_a(fn, a, t, draws)
            g_fd = _fd_grad(fn, a, t, draws, wrt_first=True)
            worst_grad = max(
                worst_grad,
                np.linalg.norm(g_ad - g_fd) / (np.linalg.norm(g_fd) + EPS),
            )
            h_ad = grad_t(fn, a, t, draws)
            h_fd = _fd_grad(fn, t, a, draws, wrt_first=False)
            worst_grad = max(
                worst_grad,
                np.linalg.norm(h_ad - h_fd) / (np.linalg.norm(h_fd) + EPS),
            )
        v = rng.standard_normal(env.n)
        w = rng.standard_normal(env.n)
        hv = hvp_aa(env.f2, a, t, draws, v)
        step = 1e-5
        g_hi = grad_a(env.f2, a + step * v, t, draws)
        g_lo = grad_a(env.f2, a - step * v, t, draws)
        hv_fd = (g_hi - g_lo) / (2 * step)
        worst_hvp = max(
            worst_hvp, np.linalg.norm(hv - hv_fd) / (np.linalg.norm(hv_fd) + EPS)
        )
        hw = hvp_aa(env.f2, a, t, draws, w)
        worst_sym = max(worst_sym, abs(float(v @ hw) - float(w @ hv)))
    return worst_grad, worst_hvp, worst_sym


def check_derivative_suite() -> CheckResult:
    def body():
        env_ids = list(LINEAR_IDS) + list(NONLINEAR_BENCH_IDS) + ["crra_logistic"]
        worst = {"grad": 0.0, "hvp": 0.0, "sym": 0.0}
        for env_id in env_ids:
            for sampled in ((False, True) if env_id in LINEAR_IDS else (True,)):
                env = make_env(env_id, sampled=sampled)
                g, h, s = gradient_suite_errors(env)
                worst["grad"] = max(worst["grad"], g)
                worst["hvp"] = max(worst["hvp"], h)
                worst["sym"] = max(worst["sym"], s)
        ok = (
            worst["grad"] <= 1e-5 and worst["hvp"] <= 1e-4 and worst["sym"] <= 1e-10
        )
        return ok, (
            f"grad rel={worst['grad']:.2e} (<=1e-5) hvp rel={worst['hvp']:.2e} "
            f"(<=1e-4) symmetry={worst['sym']:.2e} (<=1e-10)"
        )

    return _timed("derivative-suite", body)


# ---------------------------------------------------------------------------
# CRN determinism
# ---------------------------------------------------------------------------

def check_crn_determinism(tmp_dir=None) -> CheckResult:
    def body():
        import shutil
        import tempfile
        from pathlib import Path

        from .cli import run_single

        env = make_env("hm", sampled=True)
        truth = env.closed_form()
        cfg = SolverConfig(eta_out=1e-2, t_out=2000, init_seed=3, log_every=100)
        own_tmp = tmp_dir is None
        base = Path(tempfile.mkdtemp(prefix="contractopt_p6_")) if own_tmp else Path(tmp_dir)
        try:
            run_single(env, cfg, base / "run1", truth=truth)
            run_single(env, cfg, base / "run2", truth=truth)
            b1 = (base / "run1" / "trace.csv").read_bytes()
            b2 = (base / "run2" / "trace.csv").read_bytes()
        finally:
            if own_tmp:
                shutil.rmtree(base, ignore_errors=True)
        ok = b1 == b2 and len(b1) > 0
        return ok, f"two sampled HM traces identical ({len(b1)} bytes)"

    return _timed("crn-determinism", body)


# ---------------------------------------------------------------------------
# Oracle sanity
# ---------------------------------------------------------------------------

def check_oracle_linear_sanity() -> CheckResult:
    def body():
        env = make_env("hm")
        grid = GridSpec(
            contract_box=((0.0, 2.0),),
            action_box=(0.0, 2.0),
            contract_resolution=401,
            action_resolution=2001,
        )
        truth = grid_search(env, grid, seed=1234)
        b_star = env.closed_form().t_star[0]
        err = abs(float(truth.t_star[0]) - b_star)
        ok = err <= 2.5e-3
        return ok, f"|b_grid - b*|={err:.2e} (<=2.5e-3, half cell)"

    return _timed("oracle-linear-sanity", body)


def oracle_reference(env_id: str, ctx: ValidationContext) -> tuple:
    """Refined grid-search reference, cached in the context."""
    if env_id not in ctx.oracle_truths:
        env = make_env(env_id)
        grid = default_grid(env)
        start = time.monotonic()
        truth = grid_search(env, grid, seed=1234, workers=ctx.workers, refine=True)
        ctx.oracle_seconds[env_id] = time.monotonic() - start
        ctx.oracle_truths[env_id] = truth
    return ctx.oracle_truths[env_id], ctx.oracle_seconds[env_id]


def check_oracle_runtime(ctx: ValidationContext) -> CheckResult:
    def body():
        _, seconds = oracle_reference("logistic", ctx)
        ok = seconds <= 600.0
        return ok, (
            f"logistic oracle 100x100x200 @ 8192 took {seconds:.0f}s (<=600s, "
            f"workers={ctx.workers})"
        )

    return _timed("oracle-runtime", body)


# ---------------------------------------------------------------------------
# Utility consistency on nonlinear environments
# ---------------------------------------------------------------------------

def run_nonlinear_desk(env_id: str, cfg: SolverConfig = NONLINEAR_DESK):
    from .qmc import held_out_batch

    env = make_env(env_id)
    t0, a0 = random_init(env, cfg.init_seed)
    result = outer_loop(env, t0, a0, cfg)
    held = held_out_batch(cfg.eval_seed, len(env.noise), cfg.eval_size)
    u1, u2 = eval_u(env, result.a.values, result.t.values, held)
    return env, result, u1, u2


def check_utility_consistency(env_id: str, ctx: ValidationContext) -> CheckResult:
    def body():
        truth, _ = oracle_reference(env_id, ctx)
        env, result, u1_solver, _ = run_nonlinear_desk(env_id)
        ctx.nonlinear_runs[env_id] = (env, result)
        deficit = truth.u1_star - u1_solver
        tol = 0.02 * (abs(truth.u1_star) + EPS)
        ok = deficit <= tol
        return ok, (
            f"u1_oracle={truth.u1_star:.6f} u1_solver={u1_solver:.6f} "
            f"deficit={deficit:.2e} (<= {tol:.2e}); no err_t assertion"
        )

    return _timed(f"utility-consistency[{env_id}]", body)


# ---------------------------------------------------------------------------
# Feasibility and fixed points
# ---------------------------------------------------------------------------

def closed_form_hypergrad_norm(env_id: str, lam: float = 1e-6) -> float:
    env = make_env(env_id)
    truth = env.closed_form()
    t = ParamVec.make(truth.t_star, env.t_lower, env.t_upper, "contract")
    a = ParamVec.make(truth.a_star, env.a_lower, env.a_upper, "agent")
    hg = hypergrad(env, a, t, None, SolverConfig(lam=lam))
    return float(np.linalg.norm(hg.h))


def check_feasibility_fixed_points(ctx: ValidationContext) -> CheckResult:
    def body():
        feasible = True
        for env, _truth, result in ctx.linear_runs.values():
            feasible = feasible and result.t.feasible() and result.a.feasible()
        for env, result in ctx.nonlinear_runs.values():
            feasible = feasible and result.t.feasible() and result.a.feasible()
        worst = 0.0
        for env_id in LINEAR_IDS:
            worst = max(worst, closed_form_hypergrad_norm(env_id))
        ok = feasible and worst <= 1e-3
        return ok, (
            f"bounds feasible={feasible}; max ||hypergrad|| at closed-form optima "
            f"= {worst:.2e} (<=1e-3, lam=1e-6)"
        )

    return _timed("feasibility-fixed-points", body)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def run_all_checks(workers: int = 1) -> list[CheckResult]:
    ctx = ValidationContext(workers=workers)
    results = [check_sobol()]
    for env_id in LINEAR_IDS:
        results.append(check_recovery_analytic(env_id, ctx))
    results.append(check_recovery_sampled(ctx))
    results.append(check_hypergrad_oracle())
    results.append(check_cg_correctness())
    results.append(check_derivative_suite())
    results.append(check_crn_determinism())
    results.append(check_oracle_linear_sanity())
    results.append(check_oracle_runtime(ctx))
    for env_id in NONLINEAR_BENCH_IDS:
        results.append(check_utility_consistency(env_id, ctx))
    results.append(check_feasibility_fixed_points(ctx))
    return results


def print_report(results: list[CheckResult]) -> None:
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  [{r.seconds:7.1f}s]  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    if failed:
        print(f"\n{len(failed)} check(s) failed: {', '.join(failed)} ({total:.0f}s total)")
    else:
        print(f"\nall {len(results)} checks passed ({total:.0f}s total)")
