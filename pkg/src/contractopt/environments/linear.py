"""The six linear CARA-Normal benchmark environments with closed-form optima.

Every environment is available in two modes sharing one parameter record:

* analytic (default): ``f1``/``f2`` are the certainty-equivalent expectations,
  no sampling involved;
* sampled: ``f1``/``f2`` are per-draw utilities whose noise enters only
  through the realized linear outcome, so antithetic batches reproduce the
  analytic values exactly.

Contract vectors hold incentive slopes only.  The fixed transfer ``s`` is a
parameter (default 0); the optimal transfer is pinned down post hoc by the
participation constraint, see :func:`~contractopt.environments.base.participation_transfer`.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidConfigError
from ..qmc import NoiseKind
from .base import Environment, GroundTruth

_STD_NORMAL = NoiseKind("normal", 0.0, 1.0)


def _full(size, value):
    return np.full(size, value, dtype=float)


class LinearEnv(Environment):
    """Shared scaffolding: parameter merging, infinite boxes, mode flag."""

    DEFAULTS: dict = {}
    SCALE_PARAMS: tuple = ("sigma",)  # must be strictly positive

    def __init__(self, sampled: bool = False, **overrides):
        super().__init__()
        unknown = set(overrides) - set(self.DEFAULTS)
        if unknown:
            raise InvalidConfigError(
                f"{self.env_id}: unknown parameter(s) {sorted(unknown)}"
            )
        self.params = {**self.DEFAULTS, **overrides}
        for name in self.SCALE_PARAMS:
            if not np.all(np.asarray(self.params[name], float) > 0):
                raise InvalidConfigError(
                    f"{self.env_id}: {name} must be strictly positive"
                )
        self.sampled = bool(sampled)
        self.analytic = not self.sampled
        self.u_res = float(self.params.get("u_res", 0.0))
        self._setup()
        self.a_lower = _full(self.n, -np.inf)
        self.a_upper = _full(self.n, np.inf)
        self.t_lower = _full(self.m, -np.inf)
        self.t_upper = _full(self.m, np.inf)

    def _clone_extra(self):
        return {"sampled": self.sampled}

    def _setup(self):
        raise NotImplementedError

    def f1(self, a, t, z):
        if self.analytic:
            return self.u1_expectation(a, t)
        return self.phi1(a, t, z)

    def f2(self, a, t, z):
        if self.analytic:
            return self.u2_expectation(a, t)
        return self.phi2(a, t, z)


class HolmstromMilgrom(LinearEnv):
    """Output y = a + eps, linear pay w = s + b y, CARA agent, quadratic cost."""

    env_id = "hm"
    DEFAULTS = {"r": 1.0, "c": 1.0, "sigma": 0.1, "s": 0.0, "u_res": 0.0}

    def _setup(self):
        p = self.params
        self.r, self.c, self.sigma, self.s = p["r"], p["c"], p["sigma"], p["s"]
        self.n, self.m = 1, 1
        self.noise = (_STD_NORMAL,)

    def u1_expectation(self, a, t):
        b = t[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return a[0] - risk - 0.5 * self.c * (a[0] * a[0])

    def u2_expectation(self, a, t):
        b = t[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return self.s + b * a[0] - risk - 0.5 * self.c * (a[0] * a[0])

    def phi1(self, a, t, z):
        b = t[0]
        y = a[0] + self.sigma * z[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return y - risk - 0.5 * self.c * (a[0] * a[0])

    def phi2(self, a, t, z):
        b = t[0]
        y = a[0] + self.sigma * z[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return self.s + b * y - risk - 0.5 * self.c * (a[0] * a[0])

    def best_response(self, t):
        return np.array([float(t[0]) / self.c])

    def closed_form(self):
        b = 1.0 / (1.0 + self.r * self.c * self.sigma**2)
        a = b / self.c
        t_star = np.array([b])
        a_star = np.array([a])
        return GroundTruth(
            a_star=a_star,
            t_star=t_star,
            u1_star=float(self.u1_expectation(a_star, t_star)),
            u2_star=float(self.u2_expectation(a_star, t_star)),
            source="closed_form",
        )


class InsurancePrevention(LinearEnv):
    """Self-protection: loss (ell - a) + eps, indemnity b * loss, premium s."""

    env_id = "insurance"
    DEFAULTS = {"r": 1.0, "c": 1.0, "sigma": 1.0, "ell": 1.0, "s": 0.0, "u_res": 0.0}
    transfer_sign = -1.0  # the premium is paid by the agent

    def _setup(self):
        p = self.params
        self.r, self.c, self.sigma = p["r"], p["c"], p["sigma"]
        self.ell, self.s = p["ell"], p["s"]
        self.n, self.m = 1, 1
        self.noise = (_STD_NORMAL,)

    def u1_expectation(self, a, t):
        b = t[0]
        keep = 1.0 - b
        risk = 0.5 * self.r * self.sigma**2 * (keep * keep)
        return -(self.ell - a[0]) - risk - 0.5 * self.c * (a[0] * a[0])

    def u2_expectation(self, a, t):
        b = t[0]
        keep = 1.0 - b
        risk = 0.5 * self.r * self.sigma**2 * (keep * keep)
        return -keep * (self.ell - a[0]) - self.s - risk - 0.5 * self.c * (a[0] * a[0])

    def phi1(self, a, t, z):
        b = t[0]
        keep = 1.0 - b
        loss = (self.ell - a[0]) + self.sigma * z[0]
        risk = 0.5 * self.r * self.sigma**2 * (keep * keep)
        return -loss - risk - 0.5 * self.c * (a[0] * a[0])

    def phi2(self, a, t, z):
        b = t[0]
        keep = 1.0 - b
        loss = (self.ell - a[0]) + self.sigma * z[0]
        risk = 0.5 * self.r * self.sigma**2 * (keep * keep)
        return -keep * loss - self.s - risk - 0.5 * self.c * (a[0] * a[0])

    def best_response(self, t):
        return np.array([(1.0 - float(t[0])) / self.c])

    def closed_form(self):
        denom = 1.0 + self.r * self.c * self.sigma**2
        b = self.r * self.c * self.sigma**2 / denom
        a = 1.0 / (self.c * denom)
        t_star = np.array([b])
        a_star = np.array([a])
        return GroundTruth(
            a_star=a_star,
            t_star=t_star,
            u1_star=float(self.u1_expectation(a_star, t_star)),
            u2_star=float(self.u2_expectation(a_star, t_star)),
            source="closed_form",
        )


class ImperfectMeasurement(LinearEnv):
    """Pay on a noisy signal alpha*a + eps while output is worth v per unit effort."""

    env_id = "imperfect"
    DEFAULTS = {
        "r": 1.0, "c": 1.0, "sigma": 1.0, "alpha": 1.0, "v": 1.0,
        "s": 0.0, "u_res": 0.0,
    }

    def _setup(self):
        p = self.params
        self.r, self.c, self.sigma = p["r"], p["c"], p["sigma"]
        self.alpha, self.v, self.s = p["alpha"], p["v"], p["s"]
        self.n, self.m = 1, 1
        self.noise = (_STD_NORMAL,)

    def u1_expectation(self, a, t):
        b = t[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return self.v * a[0] - risk - 0.5 * self.c * (a[0] * a[0])

    def u2_expectation(self, a, t):
        b = t[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return self.s + b * (self.alpha * a[0]) - risk - 0.5 * self.c * (a[0] * a[0])

    def phi1(self, a, t, z):
        # The surplus form carries no sampled term; kept per-draw for CRN parity.
        return self.u1_expectation(a, t) + 0.0 * z[0]

    def phi2(self, a, t, z):
        b = t[0]
        signal = self.alpha * a[0] + self.sigma * z[0]
        risk = 0.5 * self.r * self.sigma**2 * (b * b)
        return self.s + b * signal - risk - 0.5 * self.c * (a[0] * a[0])

    def best_response(self, t):
        return np.array([self.alpha * float(t[0]) / self.c])

    def closed_form(self):
        b = self.v * self.alpha / (self.v * self.alpha**2 + self.r * self.c * self.sigma**2)
        a = self.alpha * b / self.c
        t_star = np.array([b])
        a_star = np.array([a])
        return GroundTruth(
            a_star=a_star,
            t_star=t_star,
            u1_star=float(self.u1_expectation(a_star, t_star)),
            u2_star=float(self.u2_expectation(a_star, t_star)),
            source="closed_form",
        )


class RelativePerformance(LinearEnv):
    """Peer benchmark: w = s + b*y_own + d*y_peer with a common shock.

    The appendix prints only the optimum; the mean-variance utilities used
    here are verified against it by dense search in the test suite.
    """

    env_id = "relative"
    SCALE_PARAMS = ("sigma", "tau")
    DEFAULTS = {
        "r": 1.0, "c": 1.0, "sigma": 0.2, "tau": 0.2, "v": 1.0,
        "a_peer": 0.1, "s": 0.0, "u_res": 0.0,
    }

    def _setup(self):
        p = self.params
        self.r, self.c, self.sigma, self.tau = p["r"], p["c"], p["sigma"], p["tau"]
        self.v, self.a_peer, self.s = p["v"], p["a_peer"], p["s"]
        self.n, self.m = 1, 2
        # z0: common shock, z1/z2: idiosyncratic noise (own, peer)
        self.noise = (_STD_NORMAL, _STD_NORMAL, _STD_NORMAL)

    def _risk_premium(self, b, d):
        own_idio = (b * b + d * d) * self.sigma**2
        common = self.tau**2 * ((b + d) * (b + d))
        return 0.5 * self.r * (own_idio + common)

    def u1_expectation(self, a, t):
        b, d = t[0], t[1]
        return self.v * a[0] - self._risk_premium(b, d) - 0.5 * self.c * (a[0] * a[0])

    def u2_expectation(self, a, t):
        b, d = t[0], t[1]
        pay = self.s + b * a[0] + d * self.a_peer
        return pay - self._risk_premium(b, d) - 0.5 * self.c * (a[0] * a[0])

    def phi1(self, a, t, z):
        b, d = t[0], t[1]
        y_own = a[0] + self.tau * z[0] + self.sigma * z[1]
        return self.v * y_own - self._risk_premium(b, d) - 0.5 * self.c * (a[0] * a[0])

    def phi2(self, a, t, z):
        b, d = t[0], t[1]
        y_own = a[0] + self.tau * z[0] + self.sigma * z[1]
        y_peer = self.a_peer + self.tau * z[0] + self.sigma * z[2]
        pay = self.s + b * y_own + d * y_peer
        return pay - self._risk_premium(b, d) - 0.5 * self.c * (a[0] * a[0])

    def best_response(self, t):
        return np.array([float(t[0]) / self.c])

    def closed_form(self):
        s2, t2 = self.sigma**2, self.tau**2
        sigma_eff2 = s2 * (s2 + 2.0 * t2) / (s2 + t2)
        b = self.v / (self.v + self.r * self.c * sigma_eff2)
        d = -b * t2 / (s2 + t2)
        a = b / self.c
        t_star = np.array([b, d])
        a_star = np.array([a])
        return GroundTruth(
            a_star=a_star,
            t_star=t_star,
            u1_star=float(self.u1_expectation(a_star, t_star)),
            u2_star=float(self.u2_expectation(a_star, t_star)),
            source="closed_form",
        )


class SeparableMultitask(LinearEnv):
    """K independent tasks, one signal and one slope per task."""

    env_id = "multitask"
    DEFAULTS = {
        "r": 1.0, "c": 1.0, "sigma": 0.2, "v": 1.0, "k": 3,
        "s": 0.0, "u_res": 0.0,
    }

    def _setup(self):
        p = self.params
        k = int(p["k"])
        if k < 1:
            raise InvalidConfigError(f"multitask needs k >= 1, got {k}")
        self.k = k
        self.r, self.s = p["r"], p["s"]
        # scalars broadcast over tasks; sequences give per-task heterogeneity
        self.c_vec = np.broadcast_to(np.asarray(p["c"], float), (k,)).copy()
        self.sigma_vec = np.broadcast_to(np.asarray(p["sigma"], float), (k,)).copy()
        self.v_vec = np.broadcast_to(np.asarray(p["v"], float), (k,)).copy()
        self.n = self.m = k
        self.noise = (_STD_NORMAL,) * k

    def _terms(self, a, t, y=None):
        pay = self.s
        value = 0.0
        penalty = 0.0
        for i in range(self.k):
            obs = a[i] if y is None else y[i]
            pay = pay + t[i] * obs
            value = value + self.v_vec[i] * obs
            penalty = penalty + (
                0.5 * self.r * self.sigma_vec[i] ** 2 * (t[i] * t[i])
                + 0.5 * self.c_vec[i] * (a[i] * a[i])
            )
        return pay, value, penalty

    def u1_expectation(self, a, t):
        _, value, penalty = self._terms(a, t)
        return value - penalty

    def u2_expectation(self, a, t):
        pay, _, penalty = self._terms(a, t)
        return pay - penalty

    def phi1(self, a, t, z):
        y = [a[i] + self.sigma_vec[i] * z[i] for i in range(self.k)]
        _, value, penalty = self._terms(a, t, y)
        return value - penalty

    def phi2(self, a, t, z):
        y = [a[i] + self.sigma_vec[i] * z[i] for i in range(self.k)]
        pay, _, penalty = self._terms(a, t, y)
        return pay - penalty

    def best_response(self, t):
        return np.array([float(t[i]) / self.c_vec[i] for i in range(self.k)])

    def closed_form(self):
        b = self.v_vec / (self.v_vec + self.r * self.c_vec * self.sigma_vec**2)
        a = b / self.c_vec
        return GroundTruth(
            a_star=a,
            t_star=b,
            u1_star=float(self.u1_expectation(a, b)),
            u2_star=float(self.u2_expectation(a, b)),
            source="closed_form",
        )


class TwoSignals(LinearEnv):
    """One action observed through two independent noisy signals."""

    env_id = "two_signals"
    SCALE_PARAMS = ("sigma1", "sigma2")
    DEFAULTS = {
        "r": 1.0, "c": 1.0, "sigma1": 1.0, "sigma2": 1.0, "v": 1.0,
        "s": 0.0, "u_res": 0.0,
    }

    def _setup(self):
        p = self.params
        self.r, self.c, self.v, self.s = p["r"], p["c"], p["v"], p["s"]
        self.sigma1, self.sigma2 = p["sigma1"], p["sigma2"]
        self.n, self.m = 1, 2
        self.noise = (_STD_NORMAL, _STD_NORMAL)

    def _risk(self, b1, b2):
        return 0.5 * self.r * (
            self.sigma1**2 * (b1 * b1) + self.sigma2**2 * (b2 * b2)
        )

    def u1_expectation(self, a, t):
        return self.v * a[0] - self._risk(t[0], t[1]) - 0.5 * self.c * (a[0] * a[0])

    def u2_expectation(self, a, t):
        pay = self.s + (t[0] + t[1]) * a[0]
        return pay - self._risk(t[0], t[1]) - 0.5 * self.c * (a[0] * a[0])

    def phi1(self, a, t, z):
        return self.u1_expectation(a, t) + 0.0 * z[0]

    def phi2(self, a, t, z):
        y1 = a[0] + self.sigma1 * z[0]
        y2 = a[0] + self.sigma2 * z[1]
        pay = self.s + t[0] * y1 + t[1] * y2
        return pay - self._risk(t[0], t[1]) - 0.5 * self.c * (a[0] * a[0])

    def best_response(self, t):
        return np.array([(float(t[0]) + float(t[1])) / self.c])

    def closed_form(self):
        prec1, prec2 = self.sigma1**-2, self.sigma2**-2
        sigma_eff2 = 1.0 / (prec1 + prec2)
        beta = self.v / (self.v + self.r * self.c * sigma_eff2)
        b1 = beta * prec1 / (prec1 + prec2)
        b2 = beta * prec2 / (prec1 + prec2)
        a = beta / self.c
        t_star = np.array([b1, b2])
        a_star = np.array([a])
        return GroundTruth(
            a_star=a_star,
            t_star=t_star,
            u1_star=float(self.u1_expectation(a_star, t_star)),
            u2_star=float(self.u2_expectation(a_star, t_star)),
            source="closed_form",
        )


LINEAR_ENVS = {
    cls.env_id: cls
    for cls in (
        HolmstromMilgrom,
        InsurancePrevention,
        ImperfectMeasurement,
        RelativePerformance,
        SeparableMultitask,
        TwoSignals,
    )
}
