"""Matrix-free conjugate gradient for symmetric positive definite operators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CurvatureError, NumericalDomainError


@dataclass(frozen=True)
class SpdOperator:
    """A linear operator given only by its action on vectors."""

    apply: Callable[[np.ndarray], np.ndarray]
    n: int


@dataclass(frozen=True)
class CgReport:
    solution: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool


def damped(op_hvp: Callable[[np.ndarray], np.ndarray], lam: float, n: int) -> SpdOperator:
    """Turn a concave-side Hessian action H_aa into the SPD map v -> -H_aa v + lam v."""

    def apply(v: np.ndarray) -> np.ndarray:
        return -np.asarray(op_hvp(v)) + lam * v

    return SpdOperator(apply=apply, n=n)


def conjugate_gradient(
    op: SpdOperator,
    b: np.ndarray,
    max_iters: int,
    tol: float,
    x0: np.ndarray | None = None,
    on_iterate=None,
) -> CgReport:
    """Solve op(v) = b by conjugate gradient.

    Starts from zero (or the optional warm start), checks sqrt(<r,r>) <= tol
    before every iteration, and runs at most ``max_iters`` iterations.  The
    returned solution is the iterate with the smallest observed residual.

    Raises CurvatureError when a search direction has non-positive curvature
    (the operator is not positive definite on the explored subspace) and
    NumericalDomainError on non-finite intermediates.
    """
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise NumericalDomainError("CG right-hand side is not finite")
    v = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - op.apply(v)
    p = r.copy()
    rho = float(r @ r)

    best_v = v.copy()
    best_rho = rho
    iterations = 0
    for _ in range(max_iters):
        if np.sqrt(rho) <= tol:
            break
        q = op.apply(p)
        pq = float(p @ q)
        if not np.isfinite(pq):
            raise NumericalDomainError(
                f"non-finite curvature at CG iteration {iterations + 1}"
            )
        if pq <= 0.0:
            raise CurvatureError(iterations + 1, pq)
        alpha = rho / pq
        v = v + alpha * p
        r = r - alpha * q
        rho_new = float(r @ r)
        beta = rho_new / rho
        p = r + beta * p
        rho = rho_new
        iterations += 1
        if on_iterate is not None:
            on_iterate(v.copy())
        if rho <= best_rho:
            best_rho = rho
            best_v = v.copy()

    final_norm = float(np.sqrt(best_rho))
    return CgReport(
        solution=best_v,
        iterations=iterations,
        final_residual_norm=final_norm,
        converged=final_norm <= tol,
    )
