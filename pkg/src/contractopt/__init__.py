"""contractopt: bilevel max-max solver and benchmark harness for
principal-agent contract design.

Hypergradients are computed by implicit differentiation of the agent's
first-order conditions, combining matrix-free Hessian-vector products with
conjugate gradients; sample-average objectives reuse one Sobol QMC payload
per outer step (common random numbers) with antithetic pairing.
"""

from .cg import CgReport, SpdOperator, conjugate_gradient, damped
from .derivatives import eval_mean, grad_a, grad_t, hvp_aa, mixed_hvp_ta
from .environments import (
    ENV_IDS,
    Environment,
    GroundTruth,
    eval_u,
    make_env,
    participation_transfer,
)
from .errors import (
    ConfigFileError,
    ContractOptError,
    CurvatureError,
    InvalidConfigError,
    NumericalDomainError,
    UnsupportedDimensionError,
)
from .hyperdual import Dual, HyperDual
from .metrics import Metrics, compute_metrics
from .oracle import GridSpec, best_response_on_grid, default_grid, grid_search
from .params import ParamVec, SolverConfig
from .qmc import (
    CrnPayload,
    NoiseKind,
    held_out_batch,
    make_payload,
    refresh,
    sobol_points,
    transform,
)
from .solver import (
    HypergradResult,
    InnerResult,
    OuterResult,
    RunTrace,
    TraceRow,
    hypergrad,
    inner_ascent,
    outer_loop,
    random_init,
    update_contract,
)

__version__ = "0.1.0"

__all__ = [
    "CgReport",
    "ConfigFileError",
    "ContractOptError",
    "CrnPayload",
    "CurvatureError",
    "Dual",
    "ENV_IDS",
    "Environment",
    "GridSpec",
    "GroundTruth",
    "HyperDual",
    "HypergradResult",
    "InnerResult",
    "InvalidConfigError",
    "Metrics",
    "NoiseKind",
    "NumericalDomainError",
    "OuterResult",
    "ParamVec",
    "RunTrace",
    "SolverConfig",
    "SpdOperator",
    "TraceRow",
    "UnsupportedDimensionError",
    "best_response_on_grid",
    "compute_metrics",
    "conjugate_gradient",
    "damped",
    "default_grid",
    "eval_mean",
    "eval_u",
    "grad_a",
    "grad_t",
    "grid_search",
    "held_out_batch",
    "hvp_aa",
    "hypergrad",
    "inner_ascent",
    "make_env",
    "make_payload",
    "mixed_hvp_ta",
    "outer_loop",
    "participation_transfer",
    "random_init",
    "refresh",
    "sobol_points",
    "transform",
    "update_contract",
]
