"""Parameter vectors with box bounds and the solver hyperparameter record."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfigError


@dataclass(frozen=True)
class ParamVec:
    """A named block of decision variables kept inside its box at all times."""

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    block: str  # "agent" | "contract"

    @staticmethod
    def make(values, lower, upper, block: str) -> "ParamVec":
        values = np.asarray(values, dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if not (lower.shape == upper.shape == values.shape):
            raise InvalidConfigError("ParamVec values and bounds must share a shape")
        if np.any(lower > upper):
            raise InvalidConfigError("ParamVec lower bound exceeds upper bound")
        return ParamVec(np.clip(values, lower, upper), lower, upper, block)

    def with_values(self, values) -> "ParamVec":
        """Return a copy holding ``values`` projected into the box."""
        projected = np.clip(np.asarray(values, dtype=float), self.lower, self.upper)
        return replace(self, values=projected)

    def feasible(self) -> bool:
        return bool(
            np.all(self.values >= self.lower) and np.all(self.values <= self.upper)
        )


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the bilevel loop; defaults follow the benchmark setup."""

    eta_in: float = 5e-3
    t_in: int = 50
    eps_in: float = 1e-4
    eta_out: float = 1e-3
    t_out: int = 20000
    t_cg: int = 20
    lam: float = 1e-4
    eps_cg: float = 1e-10
    batch_n: int = 1024
    refresh_r: int = 100
    antithetic: bool = True
    clip_norm: float | None = None
    eval_seed: int = 97
    train_seed: int = 7
    eval_size: int = 8192
    init_seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        positive = {
            "eta_in": self.eta_in,
            "eps_in": self.eps_in,
            "eta_out": self.eta_out,
            "eps_cg": self.eps_cg,
        }
        for name, value in positive.items():
            if not value > 0:
                raise InvalidConfigError(f"{name} must be > 0, got {value}")
        at_least_one = {
            "t_in": self.t_in,
            "t_cg": self.t_cg,
            "batch_n": self.batch_n,
            "refresh_r": self.refresh_r,
            "eval_size": self.eval_size,
            "log_every": self.log_every,
        }
        for name, value in at_least_one.items():
            if value < 1:
                raise InvalidConfigError(f"{name} must be >= 1, got {value}")
        if self.t_out < 0:
            raise InvalidConfigError(f"t_out must be >= 0, got {self.t_out}")
        if self.lam < 0:
            raise InvalidConfigError(f"lam must be >= 0, got {self.lam}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise InvalidConfigError(f"clip_norm must be > 0, got {self.clip_norm}")
