"""Nonlinear signal environments: sigmoidal wage schedules without closed forms.

All four families share the wage rule w(x) = lam + mu * sigmoid((x - a0)/s),
hard-floored at w_min, and the principal objective E[X - w(X)].  They differ
in the outcome process and the agent's utility over wages.  Contract vectors
are (lam, mu) and contract boxes keep the floor inactive (lam >= w_min,
mu >= 0), which the fast grid-evaluation path relies on.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidConfigError
from ..hyperdual import _sigmoid_raw, exp, log, maximum, powr, sigmoid, sqrt
from ..qmc import NoiseKind
from .base import Environment

_BOX_WIDTH = 8.0
_ACTION_HALF_WIDTH = 6.0  # in units of the signal scale


class SigmoidWageEnv(Environment):
    """Common structure of the sigmoid-wage families."""

    DEFAULTS: dict = {}
    noise_tag = "logistic"

    def __init__(self, **overrides):
        super().__init__()
        unknown = set(overrides) - set(self.DEFAULTS)
        if unknown:
            raise InvalidConfigError(
                f"{self.env_id}: unknown parameter(s) {sorted(unknown)}"
            )
        self.params = {**self.DEFAULTS, **overrides}
        p = self.params
        self.c = p["c"]
        self.s_scale = p["s"]
        self.w_min = p["w_min"]
        self.a0 = p["a0"]
        if not self.w_min > 0:
            raise InvalidConfigError(f"{self.env_id}: w_min must be > 0")
        if not self.s_scale > 0:
            raise InvalidConfigError(f"{self.env_id}: s must be > 0")
        if not p.get("rho", 1.0) > 0:
            raise InvalidConfigError(f"{self.env_id}: rho must be > 0")
        self.analytic = False
        self.wage_floor = self.w_min
        self.n, self.m = 1, 2
        self.noise = (NoiseKind(self.noise_tag, 0.0, 1.0),)
        self.t_lower, self.t_upper = self._contract_box()
        self.a_lower, self.a_upper = self._action_box()
        self._extra_setup()

    def _extra_setup(self):
        pass

    def _contract_box(self):
        low = np.array([self.w_min, 0.0])
        high = np.array([self.w_min + _BOX_WIDTH, _BOX_WIDTH])
        return low, high

    def _action_box(self):
        half = _ACTION_HALF_WIDTH * self.s_scale
        return np.array([self.a0 - half]), np.array([self.a0 + half])

    # outcome / wage ---------------------------------------------------------
    def outcome(self, a, z):
        return a + self.s_scale * z

    def wage(self, x, t):
        raw = t[0] + t[1] * sigmoid((x - self.a0) / self.s_scale)
        return maximum(raw, self.w_min)

    def wage_utility(self, w):
        raise NotImplementedError

    # objectives -------------------------------------------------------------
    def f1(self, a, t, z):
        x = self.outcome(a[0], z[0])
        return x - self.wage(x, t)

    def f2(self, a, t, z):
        x = self.outcome(a[0], z[0])
        return self.wage_utility(self.wage(x, t)) - 0.5 * self.c * (a[0] * a[0])

    # fast grid evaluation ----------------------------------------------------
    # Valid only while the wage floor is inactive, i.e. the contract grid
    # keeps lam >= w_min and mu >= 0; the oracle checks this before use.
    def grid_tables(self, a_grid: np.ndarray, draws: np.ndarray) -> dict:
        z = draws[:, 0]
        x = np.asarray(self.outcome(a_grid[:, None], z[None, :]))
        s = _sigmoid_raw((x - self.a0) / self.s_scale)
        return {
            "a": a_grid,
            "S": s,
            "EX": x.mean(axis=1),
            "ES": s.mean(axis=1),
            "cost": 0.5 * self.c * a_grid**2,
        }

    def grid_mu_cache(self, tables: dict, mu: float) -> dict:
        # the scratch buffer is reused across the lam sweep to avoid
        # re-allocating action x sample arrays ten thousand times
        return {"P": mu * tables["S"], "W": np.empty_like(tables["S"])}

    def grid_u2_row(self, tables, mu_cache, lam: float, mu: float) -> np.ndarray:
        raise NotImplementedError

    def grid_u1_row(self, tables, lam: float, mu: float) -> np.ndarray:
        return tables["EX"] - lam - mu * tables["ES"]


class LogisticSqrtWage(SigmoidWageEnv):
    """Logistic signal, sqrt wage utility, main-figure parameterization."""

    env_id = "logistic"
    noise_tag = "logistic"
    DEFAULTS = {"c": 0.25, "s": 1.0, "w_min": 0.25, "a0": 0.0}

    def wage_utility(self, w):
        return sqrt(w)

    def grid_u2_row(self, tables, mu_cache, lam, mu):
        w = mu_cache["W"]
        np.add(mu_cache["P"], lam, out=w)
        np.sqrt(w, out=w)
        return w.mean(axis=1) - tables["cost"]


class SqrtLogistic(LogisticSqrtWage):
    """Same family at the square-root-wage figure defaults."""

    env_id = "sqrt_logistic"
    DEFAULTS = {"c": 0.3, "s": 1.0, "w_min": 0.2, "a0": 0.0}


class CrraLogistic(SigmoidWageEnv):
    """Logistic signal with CRRA wage utility; uses a tightened contract box."""

    env_id = "crra_logistic"
    noise_tag = "logistic"
    DEFAULTS = {"c": 0.3, "s": 1.0, "w_min": 0.2, "a0": 0.0, "gamma": 1.2}

    def _extra_setup(self):
        self.gamma = self.params["gamma"]

    def _contract_box(self):
        return np.array([self.w_min, 0.20]), np.array([3.0, 3.0])

    def wage_utility(self, w):
        if self.gamma == 1.0:
            return log(w)
        return powr(w, 1.0 - self.gamma) / (1.0 - self.gamma)

    def grid_u2_row(self, tables, mu_cache, lam, mu):
        w = mu_cache["W"]
        np.add(mu_cache["P"], lam, out=w)
        np.log(w, out=w)
        if self.gamma == 1.0:
            return w.mean(axis=1) - tables["cost"]
        w *= 1.0 - self.gamma
        np.exp(w, out=w)
        return w.mean(axis=1) / (1.0 - self.gamma) - tables["cost"]


class LaplaceThreshold(SigmoidWageEnv):
    """Laplace signal with a thresholded (sigmoid) wage utility."""

    env_id = "laplace_threshold"
    noise_tag = "laplace"
    DEFAULTS = {"c": 0.3, "s": 1.0, "w_min": 0.2, "a0": 0.0, "rho": 1.25, "theta": 0.0}

    def _extra_setup(self):
        self.rho = self.params["rho"]
        self.theta = self.params["theta"]

    def wage_utility(self, w):
        return sigmoid(self.rho * (w - self.theta))

    def grid_mu_cache(self, tables, mu):
        return {"E": np.exp(-self.rho * mu * tables["S"]),
                "W": np.empty_like(tables["S"])}

    def grid_u2_row(self, tables, mu_cache, lam, mu):
        # sigmoid(rho (lam + mu S - theta)) = 1 / (1 + e^{-rho(lam-theta)} e^{-rho mu S})
        k = np.exp(-self.rho * (lam - self.theta))
        w = mu_cache["W"]
        np.multiply(mu_cache["E"], k, out=w)
        w += 1.0
        np.reciprocal(w, out=w)
        return w.mean(axis=1) - tables["cost"]


class PoissonMeanExp(SigmoidWageEnv):
    """Counts with mean exp(a), normal-approximated, CARA agent over wages."""

    env_id = "poisson"
    noise_tag = "normal"
    DEFAULTS = {"c": 0.3, "s": 1.0, "w_min": 0.2, "a0": 0.0, "rho": 1.0}

    def _extra_setup(self):
        self.rho = self.params["rho"]

    def _action_box(self):
        # The reparameterized outcome makes the window scale-free.
        return np.array([self.a0 - 6.0]), np.array([self.a0 + 6.0])

    def outcome(self, a, z):
        mean = exp(a)
        return mean + exp(0.5 * a) * z

    def wage_utility(self, w):
        return -exp(-self.rho * w)

    def grid_mu_cache(self, tables, mu):
        # mean over draws of exp(-rho mu S); lam factors out of the CARA utility
        return np.exp(-self.rho * mu * tables["S"]).mean(axis=1)

    def grid_u2_row(self, tables, mu_cache, lam, mu):
        return -np.exp(-self.rho * lam) * mu_cache - tables["cost"]


def floored_fraction(env: SigmoidWageEnv, a, t, payload) -> float:
    """Diagnostic: share of samples whose raw wage fell below the floor."""
    draws = payload.draws(env.noise)
    x = np.asarray(env.outcome(float(a[0]), draws[:, 0]))
    raw = float(t[0]) + float(t[1]) * _sigmoid_raw((x - env.a0) / env.s_scale)
    return float(np.mean(raw < env.w_min))


NONLINEAR_ENVS = {
    cls.env_id: cls
    for cls in (
        LogisticSqrtWage,
        SqrtLogistic,
        CrraLogistic,
        LaplaceThreshold,
        PoissonMeanExp,
    )
}
