"""Frank-Wolfe solver for the association MPC.

The linear maximisation oracle over the product of per-(user, slot)
simplices is a row-wise argmax, and the step size comes from a backtracking
line search on a local curvature estimate ``M``: each iteration starts from
``beta * M_prev``, proposes ``a = min(1, h / (M ||d||^2))`` and multiplies
``M`` by ``delta`` until the sufficient-increase bound

    f(x + a d) >= f(x) + a h - a^2 M ||d||^2 / 2

holds, where ``h = <grad f(x), d>`` is the Frank-Wolfe gap.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import check_simplex_rows
from ..rng import as_generator
from .problem import LOAD_EPSILON, LineObjective, MpcProblem, gradient, objective

logger = logging.getLogger(__name__)

CURVATURE_LIMIT = 1e30


@dataclass(frozen=True)
class SolverConfig:
    gap_tolerance: float | None = None  # None -> 1e-6 * U * H
    max_iterations: int = 500
    btls_beta: float = 0.9
    btls_delta: float = 2.0
    load_epsilon: float = LOAD_EPSILON
    init: str = "uniform"  # or "random"
    initial_curvature: float = 1.0
    objective_target: float | None = None  # optional early stop

    def __post_init__(self):
        if not 0 < self.btls_beta < 1 < self.btls_delta:
            raise ValueError("require 0 < btls_beta < 1 < btls_delta")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.init not in ("uniform", "random"):
            raise ValueError("init must be 'uniform' or 'random'")

    def tolerance_for(self, p):
        if self.gap_tolerance is not None:
            return self.gap_tolerance
        _, n_users, _ = p.shape
        return 1e-6 * n_users * p.horizon


@dataclass
class FwState:
    iterate: np.ndarray
    gap: float
    curvature_estimate: float
    iteration: int
    objective: float


@dataclass
class FwSolution:
    x: np.ndarray
    gap: float
    iterations: int
    objective: float
    converged: bool
    wall_time: float = 0.0
    message: str = ""
    objectives: list = field(default_factory=list, repr=False)
    gaps: list = field(default_factory=list, repr=False)


def fw_direction(grad):
    """Vertex maximising ``<s, grad>``: one-hot at the row argmax (first on ties)."""
    grad = np.asarray(grad)
    s = np.zeros_like(grad, dtype=np.float64)
    np.put_along_axis(s, np.argmax(grad, axis=-1)[..., None], 1.0, axis=-1)
    return s


def fw_gap(d, grad):
    return float(np.sum(d * grad))


def btls_step(state, d, p, cfg, line=None, dnorm2=None):
    """Backtracking step size; returns ``(alpha, M, delta_f)``.

    ``line`` evaluates ``f(x + a d) - f(x)``; it defaults to a
    :class:`LineObjective` built from ``state.iterate`` and ``d``.
    Raises ``FloatingPointError`` if the curvature estimate overflows, which
    only happens at non-smooth points of the clamped load term.
    """
    h = state.gap
    if not h > 0:
        raise ValueError("line search needs a positive gap")
    if line is None:
        line = LineObjective(state.iterate, d, p, cfg.load_epsilon)
    if dnorm2 is None:
        dnorm2 = float(np.sum(d * d))
    m = cfg.btls_beta * state.curvature_estimate
    while True:
        alpha = min(1.0, h / (m * dnorm2))
        gain = line.delta(alpha)
        if gain >= alpha * h - 0.5 * alpha * alpha * m * dnorm2:
            return alpha, m, gain
        m *= cfg.btls_delta
        if m > CURVATURE_LIMIT or not np.isfinite(gain):
            raise FloatingPointError(
                f"curvature estimate exceeded {CURVATURE_LIMIT:g} at iteration {state.iteration}"
            )


def _initial_point(p, cfg, rng):
    shape = p.shape
    if cfg.init == "uniform":
        return np.full(shape, 1.0 / shape[-1])
    rng = as_generator(rng)
    return rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])


class _Iterate:
    """FW iterate with incrementally maintained loads and switching terms.

    Because every FW direction is ``s - x`` with ``s`` one-hot per row, the
    update ``x <- (1 - a) x + a s`` lets loads, ``<x, ln c>``, the switching
    differences ``D = x[n] - x[n-1]`` and ``||D||^2`` be refreshed with one
    dense scaling plus O(H U) scatters.
    """

    REFRESH = 64

    def __init__(self, x, p, eps):
        self.p, self.eps = p, eps
        self.horizon, self.n_users, self.n_bs = p.shape
        self.base = p.log_rates - 1.0
        self.prev_idx = np.argmax(p.prev_assoc, axis=-1)
        self.h_idx = np.arange(self.horizon)[:, None]
        self.u_idx = np.arange(self.n_users)[None, :]
        self.x = x
        self.refresh()

    def refresh(self):
        x, p = self.x, self.p
        self.loads = x.sum(axis=1)
        self.xc = float(np.vdot(x, p.log_rates))
        if p.eta != 0.0:
            self.D = np.empty_like(x)
            self.D[0] = x[0] - p.prev_assoc
            self.D[1:] = x[1:] - x[:-1]
            self.dd = float(np.vdot(self.D, self.D))

    def gradient(self):
        g = self.base - np.log(np.maximum(self.loads, self.eps))[:, None, :]
        eta = self.p.eta
        if eta != 0.0:
            g += eta * self.D
            g[:-1] -= eta * self.D[1:]
        return g

    def _prev_choice(self, j):
        """Index of the vertex in the previous slot (prev_assoc for n = 0)."""
        jp = np.empty_like(j)
        jp[0] = self.prev_idx
        jp[1:] = j[:-1]
        return jp

    def direction(self, g):
        """Vertex indices, FW gap, ||d||^2 and the line-search model."""
        j = np.argmax(g, axis=-1)
        h_idx, u_idx = self.h_idx, self.u_idx
        x = self.x
        gap = float(g[h_idx, u_idx, j].sum() - np.vdot(x, g))
        dnorm2 = float(np.vdot(x, x) - 2.0 * x[h_idx, u_idx, j].sum() + self.horizon * self.n_users)
        counts = np.zeros((self.horizon, self.n_bs))
        np.add.at(counts, (np.broadcast_to(h_idx, j.shape), j), 1.0)
        lin = float(self.p.log_rates[h_idx, u_idx, j].sum() - self.xc)
        quad1 = quad2 = 0.0
        if self.p.eta != 0.0:
            jp = self._prev_choice(j)
            # <D, Ds> with Ds[n] = s[n] - s[n-1] (s[-1] = prev_assoc)
            d_on = self.D[h_idx, u_idx, j]
            d_off = self.D[h_idx, u_idx, jp]
            moved = j != jp
            d_ds = float(np.sum(np.where(moved, d_on - d_off, 0.0)))
            ds_ds = 2.0 * float(np.count_nonzero(moved))
            self._ds = (j, jp, moved)
            self._d_dd = d_ds - self.dd
            self._dd_dd = ds_ds - 2.0 * d_ds + self.dd
            quad1 = self.p.eta * self._d_dd
            quad2 = 0.5 * self.p.eta * self._dd_dd
        self._step = (j, counts, lin)
        line = LineObjective.from_parts(self.loads, counts - self.loads, lin, quad1, quad2, self.eps)
        return gap, dnorm2, line

    def update(self, alpha, k):
        j, counts, lin = self._step
        h_idx, u_idx = self.h_idx, self.u_idx
        self.x *= 1.0 - alpha
        self.x[h_idx, u_idx, j] += alpha
        self.loads = (1.0 - alpha) * self.loads + alpha * counts
        self.xc += alpha * lin
        if self.p.eta != 0.0:
            jj, jp, moved = self._ds
            self.dd += 2.0 * alpha * self._d_dd + alpha * alpha * self._dd_dd
            self.D *= 1.0 - alpha
            hm, um = np.nonzero(moved)
            self.D[hm, um, jj[hm, um]] += alpha
            self.D[hm, um, jp[hm, um]] -= alpha
        if (k + 1) % self.REFRESH == 0:
            self.refresh()


def solve_mpc(p, cfg=SolverConfig(), rng=None, x0=None, record=False):
    """Maximise the MPC objective over the relaxed association polytope."""
    t0 = time.perf_counter()
    tol = cfg.tolerance_for(p)
    if x0 is None:
        x = _initial_point(p, cfg, rng)
    else:
        x = np.array(check_simplex_rows(x0), dtype=np.float64)
    f = objective(x, p, cfg.load_epsilon, check=False)
    it = _Iterate(x, p, cfg.load_epsilon)
    state = FwState(it.x, np.inf, cfg.initial_curvature, 0, f)
    objectives, gaps = [f], []
    converged, message = False, "max_iterations reached"
    k = 0
    while True:
        g = it.gradient()
        gap, dnorm2, line = it.direction(g)
        state.gap, state.iteration = gap, k
        if record:
            gaps.append(gap)
        if gap <= tol:
            converged, message = True, "gap below tolerance"
            break
        if cfg.objective_target is not None and state.objective >= cfg.objective_target:
            converged, message = True, "objective target reached"
            break
        if k >= cfg.max_iterations:
            break
        try:
            alpha, m, gain = btls_step(state, None, p, cfg, line=line, dnorm2=dnorm2)
        except FloatingPointError as exc:
            message = f"step rejected: {exc}"
            logger.warning(message)
            break
        it.update(alpha, k)
        state.curvature_estimate = m
        state.objective += gain
        if record:
            objectives.append(state.objective)
        k += 1
    np.clip(it.x, 0.0, 1.0, out=it.x)
    return FwSolution(
        x=it.x,
        gap=float(state.gap),
        iterations=k,
        objective=objective(it.x, p, cfg.load_epsilon, check=False),
        converged=converged,
        wall_time=time.perf_counter() - t0,
        message=message,
        objectives=objectives,
        gaps=gaps,
    )


def round_association(x, prev_assoc=None, atol=1e-12):
    """One-hot rounding at the row argmax.

    Ties keep the BS used in the previous slot when it is among the maxima
    (``prev_assoc`` for the first slot, the rounded slot before otherwise).
    Remaining ties go, user by user, to the tied BS with the fewest users
    rounded so far in that slot, then to the lowest index. Symmetric
    instances (e.g. equal rates) otherwise collapse onto one BS.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    horizon, n_users, n_bs = x.shape
    out = np.zeros_like(x)
    prev_idx = None if prev_assoc is None else np.argmax(prev_assoc, axis=-1)
    rows = np.arange(n_users)
    for n in range(horizon):
        row_max = x[n].max(axis=-1, keepdims=True)
        tied = x[n] >= row_max - atol
        idx = np.argmax(tied, axis=-1)
        open_tie = tied.sum(axis=-1) > 1
        if prev_idx is not None:
            keep = tied[rows, prev_idx]
            idx = np.where(keep, prev_idx, idx)
            open_tie &= ~keep
        if open_tie.any():
            loads = np.bincount(idx[~open_tie], minlength=n_bs)
            for i in np.flatnonzero(open_tie):
                cand = np.flatnonzero(tied[i])
                idx[i] = cand[np.argmin(loads[cand])]
                loads[idx[i]] += 1
        out[n, rows, idx] = 1.0
        prev_idx = idx
    return out[0] if squeeze else out


class FrankWolfeSolver(BaseEstimator):
    """Estimator wrapper around :func:`solve_mpc`.

    ``fit(problem)`` stores ``x_``, ``objective_``, ``gap_``, ``n_iter_`` and
    ``converged_``; ``predict`` returns the rounded binary association.
    """

    def __init__(
        self,
        gap_tolerance=None,
        max_iter=500,
        beta=0.9,
        delta=2.0,
        load_epsilon=LOAD_EPSILON,
        init="uniform",
        random_state=None,
    ):
        self.gap_tolerance = gap_tolerance
        self.max_iter = max_iter
        self.beta = beta
        self.delta = delta
        self.load_epsilon = load_epsilon
        self.init = init
        self.random_state = random_state

    def config(self, **overrides):
        kw = dict(
            gap_tolerance=self.gap_tolerance,
            max_iterations=self.max_iter,
            btls_beta=self.beta,
            btls_delta=self.delta,
            load_epsilon=self.load_epsilon,
            init=self.init,
        )
        kw.update(overrides)
        return SolverConfig(**kw)

    def solve(self, problem, **overrides):
        if not isinstance(problem, MpcProblem):
            raise TypeError("expected an MpcProblem")
        return solve_mpc(problem, self.config(**overrides), rng=self.random_state)

    def fit(self, problem, y=None):
        sol = self.solve(problem)
        self.solution_ = sol
        self.x_ = sol.x
        self.objective_ = sol.objective
        self.gap_ = sol.gap
        self.n_iter_ = sol.iterations
        self.converged_ = sol.converged
        self.prev_assoc_ = problem.prev_assoc
        return self

    def predict(self, problem=None):
        x = self.x_ if problem is None else self.solve(problem).x
        prev = self.prev_assoc_ if problem is None else problem.prev_assoc
        return round_association(x, prev)
