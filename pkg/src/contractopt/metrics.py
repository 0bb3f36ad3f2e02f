"""The four benchmark error metrics, evaluated on the fixed held-out batch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environments import Environment, GroundTruth, eval_u
from .qmc import CrnPayload

EPS = 1e-12


@dataclass(frozen=True)
class Metrics:
    """Relative action/contract errors and normalized utility gaps.

    Fields are None when no ground truth is available; they are never
    silently reported as zero.
    """

    err_a: float | None
    err_t: float | None
    gap_u1: float | None
    gap_u2: float | None

    def as_tuple(self):
        return (self.err_a, self.err_t, self.gap_u1, self.gap_u2)


ABSENT = Metrics(None, None, None, None)


_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


def _u2_at(env, a_scalar, t_vals, draws) -> float:
    res = env.f2([a_scalar], [float(x) for x in t_vals], None if draws is None else
                 [draws[:, j] for j in range(draws.shape[1])])
    if isinstance(res, np.ndarray):
        return float(res.mean())
    return float(res)


def _fine_best_response(env, t_vals, payload) -> np.ndarray:
    """Dense scan plus golden-section polish for 1-D agent problems."""
    if env.n != 1:
        raise NotImplementedError(
            "fine inner solve is only defined for 1-D agent actions"
        )
    draws = env.draws(payload)
    lo, hi = float(env.a_lower[0]), float(env.a_upper[0])
    grid = np.linspace(lo, hi, 513)
    if draws is None:
        profile = np.asarray(env.f2([grid], [float(x) for x in t_vals], None))
    else:
        cols = [draws[:, j] for j in range(draws.shape[1])]
        profile = np.asarray(env.f2([grid[:, None]], [float(x) for x in t_vals], cols))
        profile = profile.mean(axis=1)
    i = int(np.argmax(profile))
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, len(grid) - 1)]
    x1 = right - _GOLDEN * (right - left)
    x2 = left + _GOLDEN * (right - left)
    f1 = _u2_at(env, x1, t_vals, draws)
    f2 = _u2_at(env, x2, t_vals, draws)
    for _ in range(60):
        if right - left < 1e-10:
            break
        if f1 >= f2:
            right, x2, f2 = x2, x1, f1
            x1 = right - _GOLDEN * (right - left)
            f1 = _u2_at(env, x1, t_vals, draws)
        else:
            left, x1, f1 = x1, x2, f2
            x2 = left + _GOLDEN * (right - left)
            f2 = _u2_at(env, x2, t_vals, draws)
    return np.array([0.5 * (left + right)])


def best_response_for_metrics(env, t_vals, payload) -> np.ndarray:
    resp = env.best_response(t_vals)
    if resp is not None:
        return resp
    return _fine_best_response(env, t_vals, payload)


def compute_metrics(
    a_vals,
    t_vals,
    truth: GroundTruth | None,
    env: Environment,
    held_out: CrnPayload | None = None,
) -> Metrics:
    """err_a, err_t, gap_u1, gap_u2 against a ground-truth reference.

    All utilities are evaluated on the held-out payload (or analytically);
    gap_u2 compares against the best response to the *current* contract.
    """
    if truth is None:
        return ABSENT
    a_vals = np.asarray(a_vals, dtype=float)
    t_vals = np.asarray(t_vals, dtype=float)
    u1_here, u2_here = eval_u(env, a_vals, t_vals, held_out)

    err_a = float(
        np.linalg.norm(a_vals - truth.a_star) / (np.linalg.norm(truth.a_star) + EPS)
    )
    err_t = float(
        np.linalg.norm(t_vals - truth.t_star) / (np.linalg.norm(truth.t_star) + EPS)
    )

    u1_star, _ = eval_u(env, truth.a_star, truth.t_star, held_out)
    gap_u1 = abs(u1_star - u1_here) / (abs(u1_star) + EPS)

    a_br = best_response_for_metrics(env, t_vals, held_out)
    _, u2_br = eval_u(env, a_br, t_vals, held_out)
    gap_u2 = abs(u2_br - u2_here) / (abs(u2_br) + EPS)

    return Metrics(err_a=err_a, err_t=err_t, gap_u1=float(gap_u1), gap_u2=float(gap_u2))
