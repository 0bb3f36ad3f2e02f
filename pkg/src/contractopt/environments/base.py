"""Environment contract: utilities, bounds, noise and ground-truth hooks.

An environment exposes two scalar objectives ``f1`` (principal) and ``f2``
(agent) with the uniform signature ``(a, t, z)``.  Analytic environments
return closed-form expectations and ignore ``z``; sampled environments
return per-sample utilities that are averaged over a CRN payload.  Both
forms are written with the generic arithmetic in :mod:`contractopt.hyperdual`
so the same code path serves plain evaluation, gradients and HVPs.

Environments are immutable after construction and safe to share; anything
that needs a parameter variation clones a fresh instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..derivatives import eval_mean
from ..errors import InvalidConfigError
from ..qmc import CrnPayload, NoiseKind


@dataclass(frozen=True)
class GroundTruth:
    """Reference optimum, either from closed forms or from grid search."""

    a_star: np.ndarray
    t_star: np.ndarray
    u1_star: float
    u2_star: float
    source: str  # "closed_form" | "grid_search"


class Environment:
    """Base class; concrete environments fill in the fields and objectives."""

    env_id: str = ""
    transfer_sign: float = 1.0  # how the fixed transfer enters the agent utility

    def __init__(self):
        self.analytic: bool = False
        self.n: int = 0
        self.m: int = 0
        self.params: dict = {}
        self.noise: tuple[NoiseKind, ...] = ()
        self.a_lower = self.a_upper = None
        self.t_lower = self.t_upper = None
        self.u_res: float = 0.0
        self.wage_floor: float | None = None

    # objectives -----------------------------------------------------------
    def f1(self, a, t, z):
        raise NotImplementedError

    def f2(self, a, t, z):
        raise NotImplementedError

    # optional hooks ---------------------------------------------------------
    def closed_form(self) -> GroundTruth:
        raise InvalidConfigError(
            f"environment {self.env_id!r} has no closed-form optimum"
        )

    def best_response(self, t) -> np.ndarray | None:
        """Analytic inner maximizer a*(t) where one exists."""
        return None

    def clone(self, **overrides) -> "Environment":
        kwargs = dict(self.params)
        kwargs.update(overrides)
        kwargs.update(self._clone_extra())
        return type(self)(**kwargs)

    def _clone_extra(self) -> dict:
        return {}

    def draws(self, payload: CrnPayload | None):
        if self.analytic or payload is None:
            return None
        return payload.draws(self.noise)

    def bounds_a(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a_lower, self.a_upper

    def bounds_t(self) -> tuple[np.ndarray, np.ndarray]:
        return self.t_lower, self.t_upper

    def _check_dims(self, a, t):
        if len(a) != self.n or len(t) != self.m:
            raise InvalidConfigError(
                f"{self.env_id}: expected dims (n={self.n}, m={self.m}), "
                f"got ({len(a)}, {len(t)})"
            )


def eval_u(env: Environment, a, t, payload: CrnPayload | None = None):
    """Expected (u1, u2) at (a, t): closed forms or fixed-order sample means."""
    env._check_dims(a, t)
    z = env.draws(payload)
    u1 = eval_mean(env.f1, a, t, z)
    u2 = eval_mean(env.f2, a, t, z)
    return u1, u2


def participation_transfer(
    env: Environment,
    slopes,
    u_res: float | None = None,
    payload: CrnPayload | None = None,
) -> float:
    """Fixed transfer making the agent's utility equal the reservation level.

    Evaluated at the environment's best response to the given slopes, with
    the transfer itself zeroed out; the sign convention follows how the
    transfer enters the agent utility (a premium enters negatively).  Sampled
    environments evaluate the utility on the supplied payload.
    """
    if u_res is None:
        u_res = env.u_res
    a_resp = env.best_response(slopes)
    if a_resp is None:
        raise InvalidConfigError(
            f"environment {env.env_id!r} has no analytic best response; "
            "transfer must be computed against a numerical inner solve"
        )
    zeroed = env.clone(s=0.0)
    if not zeroed.analytic and payload is None:
        raise InvalidConfigError(
            "sampled environment needs a payload to evaluate the transfer"
        )
    _, base = eval_u(zeroed, a_resp, slopes, payload)
    if env.transfer_sign > 0:
        return u_res - base
    return base - u_res
