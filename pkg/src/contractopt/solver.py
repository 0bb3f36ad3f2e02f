"""The bilevel loop: inner ascent with CRN, implicit-differentiation
hypergradients via HVP + CG, and bound-aware contract updates.

One outer step builds (or refreshes) the common-random-number payload, runs
warm-started gradient ascent on the agent objective, assembles the
hypergradient by solving the damped SPD system matrix-free, then takes a
projected active-set step on the contract.  Metrics are logged on a fixed
held-out batch so reported trajectories reflect parameter changes rather
than sampling noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cg import CgReport, conjugate_gradient, damped
from .derivatives import grad_a, grad_t, hvp_aa, mixed_hvp_ta
from .environments import Environment, GroundTruth, eval_u
from .errors import CurvatureError
from .metrics import Metrics, compute_metrics
from .params import ParamVec, SolverConfig
from .qmc import held_out_batch, make_payload, refresh


@dataclass(frozen=True)
class InnerResult:
    a: ParamVec
    iterations: int
    grad_norm: float


@dataclass(frozen=True)
class HypergradResult:
    h: np.ndarray
    cg: CgReport
    retried: bool


@dataclass(frozen=True)
class TraceRow:
    step: int
    u1: float
    u2: float
    err_a: float | None
    err_t: float | None
    gap_u1: float | None
    gap_u2: float | None
    hgrad_norm: float
    inner_iters: int
    cg_iters: int
    cg_converged: bool


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        self.rows.append(row)

    def last(self) -> TraceRow | None:
        return self.rows[-1] if self.rows else None


@dataclass(frozen=True)
class OuterResult:
    t: ParamVec
    a: ParamVec
    trace: RunTrace


def inner_ascent(
    env: Environment,
    a0: ParamVec,
    t: ParamVec,
    payload,
    cfg: SolverConfig,
) -> InnerResult:
    """Projected gradient ascent on the agent objective with a fixed payload.

    Stops at stationarity ||g_a|| <= eps_in or after t_in iterations; an
    already-stationary start returns unchanged after one gradient check.
    """
    draws = env.draws(payload)
    a = a0
    steps = 0
    g_norm = np.inf
    for _ in range(cfg.t_in):
        g = grad_a(env.f2, a.values, t.values, draws)
        g_norm = float(np.linalg.norm(g))
        if g_norm <= cfg.eps_in:
            break
        a = a.with_values(a.values + cfg.eta_in * g)
        steps += 1
    return InnerResult(a=a, iterations=steps, grad_norm=g_norm)


def hypergrad(
    env: Environment,
    a_tilde: ParamVec,
    t: ParamVec,
    payload,
    cfg: SolverConfig,
) -> HypergradResult:
    """Implicit-differentiation hypergradient at an approximate best response.

    Solves (-H_aa + lam I) v = -grad_a u1 by CG, forms the mixed contraction
    grad_t(grad_a u2 . v), and returns grad_t u1 minus that term.  A detected
    curvature failure is retried once with the damping scaled by 10.
    """
    draws = env.draws(payload)
    a_vals, t_vals = a_tilde.values, t.values
    g_a = grad_a(env.f1, a_vals, t_vals, draws)
    g_t = grad_t(env.f1, a_vals, t_vals, draws)

    def h_aa(v):
        return hvp_aa(env.f2, a_vals, t_vals, draws, v)

    retried = False
    try:
        report = conjugate_gradient(
            damped(h_aa, cfg.lam, env.n), -g_a, cfg.t_cg, cfg.eps_cg
        )
    except CurvatureError:
        retried = True
        report = conjugate_gradient(
            damped(h_aa, cfg.lam * 10.0, env.n), -g_a, cfg.t_cg, cfg.eps_cg
        )
    mixed = mixed_hvp_ta(env.f2, a_vals, t_vals, draws, report.solution)
    h = g_t - mixed
    if cfg.clip_norm is not None:
        norm = float(np.linalg.norm(h))
        if norm > cfg.clip_norm:
            h = h * (cfg.clip_norm / norm)
    return HypergradResult(h=h, cg=report, retried=retried)


def update_contract(t: ParamVec, h: np.ndarray, cfg: SolverConfig) -> ParamVec:
    """Gradient step, then active-set clamp, then box projection.

    Coordinates sitting on a bound with the gradient pushing outward stay
    clamped; an inward gradient releases them.
    """
    stepped = t.values + cfg.eta_out * np.asarray(h, dtype=float)
    clamp_up = (t.values >= t.upper) & (np.asarray(h) > 0.0)
    clamp_dn = (t.values <= t.lower) & (np.asarray(h) < 0.0)
    vals = np.where(clamp_up, t.upper, np.where(clamp_dn, t.lower, stepped))
    return t.with_values(vals)


def random_init(env: Environment, seed: int) -> tuple[ParamVec, ParamVec]:
    """Standard-normal initialization of both blocks, projected into bounds."""
    rng = np.random.default_rng(seed)
    a = ParamVec.make(rng.standard_normal(env.n), *env.bounds_a(), block="agent")
    t = ParamVec.make(rng.standard_normal(env.m), *env.bounds_t(), block="contract")
    return t, a


def outer_loop(
    env: Environment,
    t0: ParamVec,
    a0: ParamVec,
    cfg: SolverConfig,
    truth: GroundTruth | None = None,
    on_row: Optional[Callable[[TraceRow], None]] = None,
) -> OuterResult:
    """Run the principal's outer loop and log held-out metrics periodically.

    The inner solve is warm-started from the previous approximate best
    response; the CRN payload is refreshed every ``refresh_r`` steps.  Trace
    rows stream through ``on_row`` as they are produced, so partial traces
    survive a mid-run failure.
    """
    trace = RunTrace()
    t, a = t0, a0
    if cfg.t_out == 0:
        return OuterResult(t=t, a=a, trace=trace)

    dim = len(env.noise)
    if env.analytic:
        payload = None
        held = None
    else:
        payload = make_payload(cfg.train_seed, dim, cfg.batch_n, cfg.antithetic)
        held = held_out_batch(cfg.eval_seed, dim, cfg.eval_size)

    for k in range(cfg.t_out):
        if payload is not None:
            payload = refresh(payload, k, cfg.refresh_r)
        inner = inner_ascent(env, a, t, payload, cfg)
        hg = hypergrad(env, inner.a, t, payload, cfg)
        t = update_contract(t, hg.h, cfg)
        a = inner.a
        step = k + 1
        if step % cfg.log_every == 0 or step == cfg.t_out:
            row = _log_row(env, a, t, truth, held, step, inner, hg)
            trace.append(row)
            if on_row is not None:
                on_row(row)
    return OuterResult(t=t, a=a, trace=trace)


def _log_row(env, a, t, truth, held, step, inner: InnerResult, hg: HypergradResult):
    u1, u2 = eval_u(env, a.values, t.values, held)
    mets: Metrics = compute_metrics(a.values, t.values, truth, env, held)
    return TraceRow(
        step=step,
        u1=u1,
        u2=u2,
        err_a=mets.err_a,
        err_t=mets.err_t,
        gap_u1=mets.gap_u1,
        gap_u2=mets.gap_u2,
        hgrad_norm=float(np.linalg.norm(hg.h)),
        inner_iters=inner.iterations,
        cg_iters=hg.cg.iterations,
        cg_converged=hg.cg.converged,
    )
