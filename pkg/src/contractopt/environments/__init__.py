"""Benchmark environment registry."""

from __future__ import annotations

from ..errors import InvalidConfigError
from .base import Environment, GroundTruth, eval_u, participation_transfer
from .linear import LINEAR_ENVS
from .nonlinear import NONLINEAR_ENVS, SigmoidWageEnv, floored_fraction

ENV_CLASSES = {**LINEAR_ENVS, **NONLINEAR_ENVS}
LINEAR_IDS = tuple(LINEAR_ENVS)
NONLINEAR_IDS = tuple(NONLINEAR_ENVS)
ENV_IDS = tuple(ENV_CLASSES)


def make_env(env_id: str, sampled: bool = False, **params) -> Environment:
    """Build an environment by id with optional parameter overrides.

    ``sampled`` switches the linear environments from their analytic
    expectations to Monte Carlo per-draw utilities; nonlinear environments
    are always sampled.
    """
    cls = ENV_CLASSES.get(env_id)
    if cls is None:
        raise InvalidConfigError(
            f"unknown environment id {env_id!r}; known: {', '.join(ENV_IDS)}"
        )
    if env_id in LINEAR_ENVS:
        return cls(sampled=sampled, **params)
    # nonlinear utilities only exist as sample averages
    return cls(**params)


__all__ = [
    "ENV_CLASSES",
    "ENV_IDS",
    "Environment",
    "GroundTruth",
    "LINEAR_IDS",
    "NONLINEAR_IDS",
    "SigmoidWageEnv",
    "eval_u",
    "floored_fraction",
    "make_env",
    "participation_transfer",
]
