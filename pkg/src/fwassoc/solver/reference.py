"""Projected-gradient reference solver and exhaustive binary enumeration.

Used to validate the Frank-Wolfe solver; it shares only the objective and
gradient formulas with it, never the direction or step logic.
"""
import itertools
import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import ConvergenceError
from .problem import LOAD_EPSILON, LineObjective, gradient, objective, objective_binary

ENUMERATION_LIMIT = 4096
NUMERICAL_FLOOR = 1e-5


def project_simplex(v):
    """Euclidean projection of every row (last axis) onto the unit simplex.

    Sort-based algorithm of Held, Wolfe and Crowder, vectorised over rows.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class ReferenceSolution:
    x: np.ndarray
    objective: float
    iterations: int
    stationarity: float
    wall_time: float
    enumeration_optimum: float | None = None


def stationarity(x, g):
    """First-order stationarity ``max |x - P(x + g)|`` over the polytope."""
    return float(np.max(np.abs(x - project_simplex(x + g))))


def reference_solve(
    p,
    tolerance=1e-7,
    max_iter=200_000,
    step0=1.0,
    eps=LOAD_EPSILON,
    objective_target=None,
    cross_check=True,
):
    """Projected gradient ascent with Armijo backtracking along the arc.

    Each iteration tries ``t = min(2 t_prev, step0)`` and halves it until
    ``f(P(x + t g)) >= f(x) + <g, P(x + t g) - x> / 2`` (sufficient increase
    with the projected step). Stops when the stationarity measure drops
    below ``tolerance``. Instances with at most 4096 binary assignments are
    also checked against exhaustive enumeration.
    """
    t0 = time.perf_counter()
    x = np.full(p.shape, 1.0 / p.shape[-1])
    f = objective(x, p, eps, check=False)
    t = step0
    res = np.inf
    for k in range(1, max_iter + 1):
        g = gradient(x, p, eps)
        res = stationarity(x, g)
        if res <= tolerance:
            break
        if objective_target is not None and f >= objective_target:
            break
        t = min(2.0 * t, step0)
        while True:
            x_new = project_simplex(x + t * g)
            step = x_new - x
            gain = LineObjective(x, step, p, eps).delta(1.0)
            if gain >= 0.5 * np.sum(g * step):
                break
            t *= 0.5
            if t < 1e-14:
                break
        if t < 1e-14:
            # no resolvable ascent left at double precision
            if res > NUMERICAL_FLOOR:
                raise ConvergenceError(f"projected gradient stalled at residual {res:.3g}")
            break
        x, f = x_new, f + gain
    else:
        raise ConvergenceError(
            f"reference solver did not reach stationarity {tolerance:g} "
            f"(residual {res:.3g}) in {max_iter} iterations"
        )
    f = objective(x, p, eps, check=False)
    sol = ReferenceSolution(x, f, k, res, time.perf_counter() - t0)
    if cross_check and binary_assignment_count(p) <= ENUMERATION_LIMIT:
        best, _ = enumerate_binary(p)
        sol.enumeration_optimum = best
        if f < best - 1e-9 * max(1.0, abs(best)):
            raise ConvergenceError(
                f"relaxed optimum {f!r} below best binary assignment {best!r}"
            )
    return sol


def binary_assignment_count(p):
    horizon, n_users, n_bs = p.shape
    return n_bs ** (n_users * horizon)


def enumerate_binary(p):
    """Best binary association by brute force; returns (value, indices)."""
    horizon, n_users, n_bs = p.shape
    if binary_assignment_count(p) > 10 * ENUMERATION_LIMIT:
        raise ValueError("instance too large for exhaustive enumeration")
    best, best_idx = -np.inf, None
    for combo in itertools.product(range(n_bs), repeat=n_users * horizon):
        idx = np.array(combo).reshape(horizon, n_users)
        val = objective_binary(idx, p)
        if val > best:
            best, best_idx = val, idx
    return best, best_idx


class ProjectedGradientSolver(BaseEstimator):
    """Estimator wrapper around :func:`reference_solve`."""

    def __init__(self, tolerance=1e-7, max_iter=200_000, cross_check=True):
        self.tolerance = tolerance
        self.max_iter = max_iter
        self.cross_check = cross_check

    def fit(self, problem, y=None):
        sol = reference_solve(
            problem, self.tolerance, self.max_iter, cross_check=self.cross_check
        )
        self.solution_ = sol
        self.x_ = sol.x
        self.objective_ = sol.objective
        self.n_iter_ = sol.iterations
        return self
