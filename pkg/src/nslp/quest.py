"""Feasibility recovery: pseudo-projection of a point onto the current
polytope via a simultaneous Fejer relaxation process."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lp import DenseLP, NonStationaryLP, advance, max_violation, snapshot


class MalformedProblemError(ValueError):
    """A violated constraint row has a zero normal, so it can never be met."""


@dataclass(frozen=True)
class FejerConfig:
    relaxation: float = 1.0
    tolerance: float = 1e-9
    max_iterations: int = 1_000_000
    refresh_every: int = 1000

    def __post_init__(self):
        if not 0.0 < self.relaxation < 2.0:
            raise ValueError(f"relaxation must lie in (0, 2), got {self.relaxation}")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be nonnegative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.refresh_every < 1:
            raise ValueError("refresh_every must be >= 1")


class QuestResult(NamedTuple):
    z: np.ndarray
    iterations: int
    residual: float


def fejer_step(lp: DenseLP, x: np.ndarray, relaxation: float = 1.0) -> np.ndarray:
    """One simultaneous Fejer map application.

    Moves x by ``relaxation`` times the mean of the projections onto the
    violated half-spaces (constraint rows plus the nonnegativity bounds,
    treated as additional half-spaces). A feasible x is a fixed point.
    """
    if not 0.0 < relaxation < 2.0:
        raise ValueError(f"relaxation must lie in (0, 2), got {relaxation}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (lp.n,):
        raise ValueError(f"point has length {x.shape}, expected {lp.n}")
    residuals = lp.A @ x - lp.b
    viol_rows = residuals > 0.0
    viol_bounds = x < 0.0
    count = int(viol_rows.sum()) + int(viol_bounds.sum())
    if count == 0:
        return x
    correction = np.zeros_like(x)
    if viol_rows.any():
        rows = lp.A[viol_rows]
        norms2 = np.einsum("ij,ij->i", rows, rows)
        if np.any(norms2 == 0.0):
            raise MalformedProblemError("violated constraint row has zero norm")
        correction += rows.T @ (-residuals[viol_rows] / norms2)
    if viol_bounds.any():
        # half-space -x_j <= 0 has unit normal; its term is -x_j * e_j
        correction[viol_bounds] -= x[viol_bounds]
    return x + relaxation * (correction / count)


def pseudo_project(
    problem: NonStationaryLP,
    start: np.ndarray,
    cfg: FejerConfig = FejerConfig(),
    clock: int = 0,
) -> QuestResult:
    """Iterate the Fejer map until the residual drops to ``cfg.tolerance``.

    Every ``cfg.refresh_every`` iterations the clock advances one unit and
    the problem snapshot is re-read, so drift during the recovery is part
    of the process; the map self-corrects toward the moving polytope.
    Returns the last iterate with its residual if the budget runs out
    (non-convergence is reported, not raised).
    """
    if clock < 0:
        raise ValueError("clock must be nonnegative")
    x = np.array(start, dtype=np.float64)
    k = int(clock)
    lp = snapshot(problem, k)
    if x.shape != (lp.n,):
        raise ValueError(f"start has length {x.shape}, expected {lp.n}")
    for it in range(cfg.max_iterations):
        if it > 0 and it % cfg.refresh_every == 0:
            lp = advance(problem, lp, k)
            k += 1
        residual = max_violation(lp, x)
        if residual <= cfg.tolerance:
            return QuestResult(x, it, residual)
        x = fejer_step(lp, x, cfg.relaxation)
    return QuestResult(x, cfg.max_iterations, max_violation(lp, x))
