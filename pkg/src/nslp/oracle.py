"""Desk-scale ground truth: a dense two-phase simplex solver and a
brute-force Euclidean projection, used by tests and trace gap columns."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lp import DenseLP, max_violation

_TOL = 1e-9
_SIZE_LIMIT = 500
_MAX_PIVOTS = 200_000


@dataclass(frozen=True)
class SimplexResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    x_opt: np.ndarray | None = None
    value: float | None = None
    iterations: int = 0

    def __post_init__(self):
        if (self.x_opt is None) != (self.value is None):
            raise ValueError("x_opt and value must be present together")
        if self.status == "optimal" and self.x_opt is None:
            raise ValueError("optimal result requires a certificate point")


def solve_simplex(lp: DenseLP) -> SimplexResult:
    """Dense two-phase simplex with Bland's rule on max <c,x>, Ax <= b, x >= 0.

    Bland's entering/leaving rule makes cycling impossible, at the cost of
    speed; acceptable at the enforced desk scale (m, n <= 500).
    """
    if lp.m > _SIZE_LIMIT or lp.n > _SIZE_LIMIT:
        raise ValueError(f"solver is desk-scale only (m, n <= {_SIZE_LIMIT})")
    m, n = lp.m, lp.n

    neg = lp.b < 0.0
    n_art = int(neg.sum())
    # columns: n structural, m slacks, n_art artificials
    T = np.hstack([lp.A, np.eye(m)])
    rhs = lp.b.copy()
    T[neg] *= -1.0
    rhs[neg] *= -1.0
    if n_art:
        art_cols = np.zeros((m, n_art))
        art_cols[np.nonzero(neg)[0], np.arange(n_art)] = 1.0
        T = np.hstack([T, art_cols])
    basis = np.where(neg, 0, n + np.arange(m)).astype(np.int64)
    basis[neg] = n + m + np.arange(n_art)

    pivots = 0

    def run_phase(cost: np.ndarray) -> tuple[str, int]:
        nonlocal T, rhs, basis, pivots
        while True:
            red = cost - cost[basis] @ T
            red[basis] = 0.0
            entering = -1
            for j in range(T.shape[1]):  # Bland: lowest improving index
                if red[j] < -_TOL:
                    entering = j
                    break
            if entering < 0:
                return "optimal", pivots
            col = T[:, entering]
            rows = np.nonzero(col > _TOL)[0]
            if len(rows) == 0:
                return "unbounded", pivots
            ratios = rhs[rows] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + _TOL]
            leaving = tied[np.argmin(basis[tied])]  # Bland: lowest basic index
            _pivot(T, rhs, basis, leaving, entering)
            pivots += 1
            if pivots > _MAX_PIVOTS:
                raise RuntimeError("pivot budget exceeded")

    if n_art:
        phase1_cost = np.zeros(T.shape[1])
        phase1_cost[n + m:] = 1.0
        run_phase(phase1_cost)  # bounded below by zero, never unbounded
        if phase1_cost[basis] @ rhs > 1e-7:
            return SimplexResult("infeasible", iterations=pivots)
        # drive residual artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n + m:
                sub = np.abs(T[r, : n + m])
                j = int(np.argmax(sub))
                if sub[j] > _TOL:
                    _pivot(T, rhs, basis, r, j)
                    pivots += 1
                else:
                    keep[r] = False
        T, rhs, basis = T[keep], rhs[keep], basis[keep]
        T = T[:, : n + m]

    phase2_cost = np.concatenate([-lp.c, np.zeros(T.shape[1] - n)])
    status, _ = run_phase(phase2_cost)
    if status == "unbounded":
        return SimplexResult("unbounded", iterations=pivots)
    x_full = np.zeros(T.shape[1])
    x_full[basis] = rhs
    x = np.maximum(x_full[:n], 0.0)  # clamp pivot dust on active bounds
    if max_violation(lp, x) > 1e-9:
        raise RuntimeError("simplex terminated with an infeasible certificate")
    return SimplexResult("optimal", x, float(np.dot(lp.c, x)), pivots)


def _pivot(T: np.ndarray, rhs: np.ndarray, basis: np.ndarray, r: int, j: int) -> None:
    piv = T[r, j]
    T[r] /= piv
    rhs[r] /= piv
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    rhs -= col * rhs[r]
    basis[r] = j


def project_bruteforce(lp: DenseLP, x: np.ndarray) -> np.ndarray:
    """Euclidean projection of x onto {y : Ay <= b, y >= 0} by enumerating
    active constraint subsets of size <= n.

    Every projection is the affine projection onto some independent active
    subset, so the enumeration is exhaustive. Combinatorial in (m + n);
    guarded to n <= 10, m <= 50 and intended for much smaller instances.
    """
    x = np.asarray(x, dtype=np.float64)
    if lp.n > 10 or lp.m > 50:
        raise ValueError("projection oracle is desk-scale only (n <= 10, m <= 50)")
    if x.shape != (lp.n,):
        raise ValueError("point has wrong dimension")
    if max_violation(lp, x) == 0.0:
        return x.copy()

    n = lp.n
    G_all = np.vstack([lp.A, -np.eye(n)])
    h_all = np.concatenate([lp.b, np.zeros(n)])
    best = None
    best_d2 = np.inf
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(len(h_all)), k):
            G = G_all[list(subset)]
            h = h_all[list(subset)]
            gram = G @ G.T
            lam, *_ = np.linalg.lstsq(gram, G @ x - h, rcond=None)
            y = x - G.T @ lam
            if np.max(np.abs(G @ y - h)) > 1e-8:
                continue  # inconsistent subset
            if max_violation(lp, y) > 1e-9:
                continue
            d2 = float(np.dot(y - x, y - x))
            if d2 < best_d2 - 1e-12:
                best, best_d2 = y, d2
            elif best is not None and abs(d2 - best_d2) <= 1e-12:
                if tuple(y) < tuple(best):  # deterministic tie break
                    best = y
    if best is None:
        raise ValueError("feasible region appears empty")
    return best
